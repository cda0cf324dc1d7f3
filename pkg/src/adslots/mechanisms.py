"""Price-setting mechanisms and the greedy first-price mechanism."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import Bidder, Instance, Number, pad_instance
from .scheduling import EMPTY_SCHEDULE, Schedule, build_schedule, max_additional_clicks

ZERO = Fraction(0)


@dataclass(frozen=True)
class BlockMember:
    bidder: str
    clicks: Fraction
    spend: Fraction


@dataclass(frozen=True)
class PriceBlock:
    price: Fraction
    members: tuple[BlockMember, ...]
    slots: tuple[int, ...]  # 1-based slot numbers
    threshold: Optional[tuple[str, Fraction]] = None  # (bidder, reduced budget)

    @property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(m.bidder for m in self.members)


@dataclass(frozen=True)
class Outcome:
    mechanism: str
    bidders: tuple[str, ...]
    clicks: dict[str, Fraction]
    prices: dict[str, Fraction]
    blocks: tuple[PriceBlock, ...] = ()
    schedule: Optional[Schedule] = field(default=None, compare=False)

    @property
    def revenue(self) -> Fraction:
        return sum((self.prices[i] * self.clicks[i] for i in self.bidders), ZERO)

    def spend(self, bidder_id: str) -> Fraction:
        return self.prices[bidder_id] * self.clicks[bidder_id]

    def block_of(self, bidder_id: str) -> int:
        for j, block in enumerate(self.blocks):
            if bidder_id in block.member_ids:
                return j
        raise KeyError(bidder_id)

    def block_prices(self) -> list[Fraction]:
        return [b.price for b in self.blocks]


@dataclass(frozen=True)
class PriceBlockResult:
    price: Fraction
    size: int  # largest prefix attaining the price
    clicks: tuple[Fraction, ...]  # for the first ``size`` budgets


def find_price_block(budgets: Sequence[Fraction], supplies: Sequence[Fraction]) -> PriceBlockResult:
    """Uniform price at which the largest budgets pack a prefix of slots exactly.

    ``budgets`` must be sorted nonincreasing and no longer than ``supplies``.
    The price is the largest ratio of prefix budget to prefix supply, and the
    block is the longest prefix attaining it.
    """
    n = len(budgets)
    if any(a < b for a, b in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be sorted nonincreasing")
    if n > len(supplies):
        raise ValueError("more bidders than slots")
    if n == 0:
        return PriceBlockResult(ZERO, 0, ())
    if all(d == 0 for d in supplies[:n]):
        return PriceBlockResult(ZERO, n, (ZERO,) * n)

    price = None
    size = 0
    sum_b = sum_d = ZERO
    for ell in range(1, n + 1):
        sum_b += budgets[ell - 1]
        sum_d += supplies[ell - 1]
        r = sum_b / sum_d  # sum_d > 0 because slot 1 is positive
        if price is None or r >= price:
            price, size = r, ell
    if price == 0:
        return PriceBlockResult(ZERO, n, (ZERO,) * n)
    return PriceBlockResult(price, size, tuple(B / price for B in budgets[:size]))


def threshold_budget(
    others: Sequence[Fraction],
    target_bid: Number,
    supplies: Sequence[Fraction],
    declared: Number = math.inf,
) -> Fraction:
    """Largest budget for a newcomer that keeps the block price at or below ``target_bid``.

    ``others`` are the budgets already active (any order); the newcomer needs
    x + (l-1 largest others) <= target_bid * (D_1 + ... + D_l) for every
    l <= len(others) + 1. Returns min(declared, that bound), never negative.
    """
    top = sorted(others, reverse=True)
    if target_bid == math.inf:
        return Fraction(declared) if declared != math.inf else declared
    bound = None
    sum_d = sum_b = ZERO
    for ell in range(1, len(top) + 2):
        if ell <= len(supplies):
            sum_d += supplies[ell - 1]
        cand = target_bid * sum_d - sum_b
        bound = cand if bound is None or cand < bound else bound
        if ell <= len(top):
            sum_b += top[ell - 1]
    if declared < bound:
        bound = declared
    return max(ZERO, bound)


def _by_budget(bidders: Sequence[Bidder], budgets: dict[str, Fraction]) -> list[Bidder]:
    return sorted(bidders, key=lambda b: (-budgets[b.id], b.rank))


def _schedule_block(block: PriceBlock, slots: Sequence[Fraction]) -> Schedule:
    pairs = [(m.bidder, m.clicks) for m in block.members if m.clicks > 0]
    if not pairs:
        return EMPTY_SCHEDULE
    first = block.slots[0]
    return build_schedule(pairs, slots[first - 1 : block.slots[-1]], first_slot=first)


def _assemble(name, inst, blocks, with_schedule) -> Outcome:
    clicks = {b.id: ZERO for b in inst.bidders}
    prices = {b.id: ZERO for b in inst.bidders}
    for block in blocks:
        for m in block.members:
            clicks[m.bidder] = m.clicks
            prices[m.bidder] = block.price
    schedule = None
    if with_schedule:
        schedule = EMPTY_SCHEDULE
        for block in blocks:
            schedule = schedule + _schedule_block(block, inst.slots)
    return Outcome(
        mechanism=name,
        bidders=tuple(b.id for b in inst.bidders),
        clicks=clicks,
        prices=prices,
        blocks=tuple(blocks),
        schedule=schedule,
    )


def _zero_block(bidders, slot_numbers) -> PriceBlock:
    members = tuple(BlockMember(b.id, ZERO, ZERO) for b in bidders)
    return PriceBlock(ZERO, members, tuple(slot_numbers))


def _priced_block(members_budgets, price, slot_numbers, threshold=None) -> PriceBlock:
    members = []
    for bid_id, budget in members_budgets:
        c = budget / price if price > 0 else ZERO
        members.append(BlockMember(bid_id, c, c * price))
    return PriceBlock(price, tuple(members), tuple(slot_numbers), threshold)


def ps_single_slot(inst: Instance, with_schedule: bool = True) -> Outcome:
    """Descending-price mechanism for a single slot with positive supply."""
    inst = pad_instance(inst)
    if inst.positive_slots != 1:
        raise ValueError("ps_single_slot needs exactly one slot with positive supply")
    D = inst.slots[0]
    order = inst.by_bid()
    n = len(order)

    k, total = n, ZERO
    running = ZERO
    for i, b in enumerate(order):
        running += b.budget
        next_bid = order[i + 1].max_cpc if i + 1 < n else ZERO
        if next_bid <= running / D:
            k, total = i + 1, running
            break
    price = min(total / D, order[k - 1].max_cpc)
    if price == 0:
        blocks = [_zero_block(order, range(1, n + 1))]
        return _assemble("ps-single", inst, blocks, with_schedule)

    budgets = [(b.id, b.budget) for b in order[: k - 1]]
    last = order[k - 1]
    spent_before = total - last.budget
    reduced = price * D - spent_before
    threshold = None
    if reduced < last.budget:
        threshold = (last.id, reduced)
    budgets.append((last.id, min(reduced, last.budget)))
    budgets.sort(key=lambda p: (-p[1], inst.bidder(p[0]).rank))
    blocks = [_priced_block(budgets, price, range(1, k + 1), threshold)]
    if k < n:
        blocks.append(_zero_block(order[k:], range(k + 1, n + 1)))
    return _assemble("ps-single", inst, blocks, with_schedule)


def ps_budgets_only(inst: Instance, with_schedule: bool = True) -> Outcome:
    """Multi-slot price setting that looks at budgets only (bids treated as unbounded)."""
    inst = pad_instance(inst)
    budgets = {b.id: b.budget for b in inst.bidders}
    remaining = _by_budget(inst.bidders, budgets)
    first = 1
    blocks = []
    while remaining:
        supplies = inst.slots[first - 1 :]
        res = find_price_block([budgets[b.id] for b in remaining], supplies)
        if res.price == 0:
            blocks.append(_zero_block(remaining, range(first, first + len(remaining))))
            break
        members = remaining[: res.size]
        blocks.append(
            _priced_block(
                [(b.id, b.budget) for b in members], res.price, range(first, first + res.size)
            )
        )
        remaining = remaining[res.size :]
        first += res.size
    return _assemble("budgets-only", inst, blocks, with_schedule)


def ps_general(inst: Instance, with_schedule: bool = True) -> Outcome:
    """The general price-setting mechanism with bids and budgets.

    Bidders are admitted in bid order until the block price would reach the
    next bid; the last admitted bidder's budget is cut back, if needed, so the
    price does not exceed her own bid. The block found is allocated and the
    process repeats on what is left.
    """
    inst = pad_instance(inst)
    remaining = inst.by_bid()
    first = 1
    blocks = []
    while remaining:
        supplies = inst.slots[first - 1 :]
        if all(d == 0 for d in supplies[: len(remaining)]):
            blocks.append(_zero_block(remaining, range(first, first + len(remaining))))
            break

        budgets = {b.id: b.budget for b in remaining}
        for k in range(1, len(remaining) + 1):
            active = remaining[:k]
            ranked = _by_budget(active, budgets)
            res = find_price_block([budgets[b.id] for b in ranked], supplies)
            next_bid = remaining[k].max_cpc if k < len(remaining) else ZERO
            if res.price >= next_bid:
                break

        newest = remaining[k - 1]
        threshold = None
        if res.price > newest.max_cpc:
            others = [budgets[b.id] for b in active[:-1]]
            reduced = threshold_budget(others, newest.max_cpc, supplies, newest.budget)
            budgets[newest.id] = reduced
            threshold = (newest.id, reduced)
            ranked = _by_budget(active, budgets)
            res = find_price_block([budgets[b.id] for b in ranked], supplies)

        if res.price == 0:
            blocks.append(_zero_block(remaining, range(first, first + len(remaining))))
            break
        members = ranked[: res.size]
        if threshold is not None and threshold[0] not in {b.id for b in members}:
            threshold = None
        blocks.append(
            _priced_block(
                [(b.id, budgets[b.id]) for b in members],
                res.price,
                range(first, first + res.size),
                threshold,
            )
        )
        taken = {b.id for b in members}
        remaining = [b for b in remaining if b.id not in taken]
        first += res.size
    return _assemble("ps", inst, blocks, with_schedule)


def gfp(inst: Instance, with_schedule: bool = True) -> Outcome:
    """Greedy first-price: in bid order, give each bidder as many clicks as fit at her bid."""
    inst = pad_instance(inst)
    committed: list[Fraction] = []
    clicks = {b.id: ZERO for b in inst.bidders}
    prices = {b.id: ZERO for b in inst.bidders}
    for b in inst.by_bid():
        if b.max_cpc == 0 or b.max_cpc == math.inf:
            # bid 0: nothing chargeable; infinite bid: budget buys no clicks
            continue
        c = max_additional_clicks(committed, inst.slots, b.budget / b.max_cpc)
        if c > 0:
            clicks[b.id] = c
            prices[b.id] = b.max_cpc
            committed.append(c)
    schedule = None
    if with_schedule:
        pairs = [(i, c) for i, c in clicks.items() if c > 0]
        schedule = build_schedule(pairs, inst.slots) if pairs else EMPTY_SCHEDULE
    return Outcome(
        mechanism="gfp",
        bidders=tuple(b.id for b in inst.bidders),
        clicks=clicks,
        prices=prices,
        schedule=schedule,
    )


MECHANISMS = {
    "ps": ps_general,
    "gfp": gfp,
    "ps-single": ps_single_slot,
    "budgets-only": ps_budgets_only,
}


def run_mechanism(name: str, inst: Instance, with_schedule: bool = True) -> Outcome:
    try:
        fn = MECHANISMS[name]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; pick one of {sorted(MECHANISMS)}")
    return fn(inst, with_schedule=with_schedule)
