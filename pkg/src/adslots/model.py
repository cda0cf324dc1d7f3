"""Domain types for offline ad slot scheduling.

Every quantity that takes part in a mechanism is a :class:`fractions.Fraction`.
An unbounded max-cpc is represented by ``math.inf``, which compares correctly
against fractions and sits above every rational.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence, Union

Number = Union[Fraction, float]  # float only ever means math.inf

INF = math.inf
DUMMY_PREFIX = "dummy-"


class ValidationError(ValueError):
    """Raised when an instance description breaks a model assumption."""


class NegativeBudget(ValidationError):
    pass


class NegativeBid(ValidationError):
    pass


class NegativeSupply(ValidationError):
    pass


class NonDecreasingPositiveSupply(ValidationError):
    pass


class ZeroSupplyBeforePositive(ValidationError):
    pass


class TooFewBidders(ValidationError):
    pass


class InvalidCtr(ValidationError):
    pass


class DuplicateBidderId(ValidationError):
    pass


class MalformedNumber(ValidationError):
    pass


def parse_rational(value: Any, *, allow_inf: bool = False) -> Number:
    """Parse ``value`` into an exact Fraction.

    Accepts ints, Fractions, decimal strings ("0.75"), ratio strings ("21/25")
    and, when ``allow_inf`` is set, "inf"/"infinity"/``math.inf``. Python
    floats are converted through their shortest repr, so ``0.1`` becomes 1/10.
    """
    if isinstance(value, bool):
        raise MalformedNumber(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            if allow_inf:
                return INF
            raise MalformedNumber("infinite value not allowed here")
        if math.isnan(value) or math.isinf(value):
            raise MalformedNumber(f"not a finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("inf", "+inf", "infinity", "+infinity", "∞"):
            if allow_inf:
                return INF
            raise MalformedNumber("infinite value not allowed here")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedNumber(f"cannot parse {value!r} as a rational") from exc
    raise MalformedNumber(f"cannot parse {value!r} as a rational")


def format_rational(value: Number) -> str:
    """Exact text form: "21/25", "3", or "inf"."""
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return str(Fraction(value))


def format_decimal(value: Number, precision: int = 2) -> str:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return f"{float(value):.{precision}f}"


@dataclass(frozen=True)
class Bidder:
    id: str
    budget: Fraction
    max_cpc: Number = INF
    ctr: Fraction = Fraction(1)
    rank: int = 0
    dummy: bool = False

    @property
    def key(self) -> "BidKey":
        return BidKey(self.max_cpc, self.rank)


@dataclass(frozen=True)
class BidKey:
    """A bid together with the bidder's position in the tie-breaking order."""

    bid: Number
    lex_rank: int

    def sort_key(self) -> tuple:
        # ascending sort on this key lists the strongest bid first
        return (-self.bid, self.lex_rank)


def compare_bids(a: BidKey, b: BidKey) -> int:
    """Return 1 if ``a`` beats ``b``, -1 if ``b`` beats ``a``, 0 if identical.

    Higher bids win; equal bids go to the lower lex rank.
    """
    if a.bid != b.bid:
        return 1 if a.bid > b.bid else -1
    if a.lex_rank != b.lex_rank:
        return 1 if a.lex_rank < b.lex_rank else -1
    return 0


@dataclass(frozen=True)
class Instance:
    bidders: tuple[Bidder, ...]
    slots: tuple[Fraction, ...]
    ctr_scaled: bool = field(default=False, compare=False)

    @property
    def n_bidders(self) -> int:
        return len(self.bidders)

    @property
    def positive_slots(self) -> int:
        return sum(1 for d in self.slots if d > 0)

    def bidder(self, bidder_id: str) -> Bidder:
        for b in self.bidders:
            if b.id == bidder_id:
                return b
        raise KeyError(bidder_id)

    def by_bid(self) -> list[Bidder]:
        """Bidders ordered strongest bid first."""
        return sorted(self.bidders, key=lambda b: b.key.sort_key())

    def with_bidder(self, bidder_id: str, **changes: Any) -> "Instance":
        """Copy of the instance with one bidder's fields replaced."""
        if "budget" in changes:
            changes["budget"] = parse_rational(changes["budget"])
        if "max_cpc" in changes:
            changes["max_cpc"] = parse_rational(changes["max_cpc"], allow_inf=True)
        bidders = tuple(
            replace(b, **changes) if b.id == bidder_id else b for b in self.bidders
        )
        return replace(self, bidders=bidders)

    def with_bids(self, bids: Mapping[str, Number]) -> "Instance":
        bidders = tuple(
            replace(b, max_cpc=bids[b.id]) if b.id in bids else b for b in self.bidders
        )
        return replace(self, bidders=bidders)


def _check_supplies(slots: Sequence[Fraction]) -> None:
    seen_zero = False
    prev = None
    for j, d in enumerate(slots, start=1):
        if d < 0:
            raise NegativeSupply(f"slot {j} has negative supply {d}")
        if d == 0:
            seen_zero = True
            continue
        if seen_zero:
            raise ZeroSupplyBeforePositive(
                f"slot {j} has positive supply after a zero-supply slot"
            )
        if prev is not None and d >= prev:
            raise NonDecreasingPositiveSupply(
                f"slot {j} supply {d} is not below slot {j - 1} supply {prev}"
            )
        prev = d


def validate_instance(raw: Mapping[str, Any] | Instance) -> Instance:
    """Build a checked :class:`Instance` from a plain mapping.

    ``raw`` looks like ``{"bidders": [{"id", "budget", "max_cpc", "ctr"}],
    "slots": [clicks, ...]}``. ``max_cpc`` defaults to infinity and ``ctr``
    to 1. Bidder ranks follow input order.
    """
    if isinstance(raw, Instance):
        raw = instance_to_dict(raw)
    try:
        raw_bidders = list(raw["bidders"])
        raw_slots = list(raw["slots"])
    except (KeyError, TypeError) as exc:
        raise ValidationError("instance needs 'bidders' and 'slots' lists") from exc

    slots = tuple(parse_rational(d) for d in raw_slots)
    _check_supplies(slots)

    bidders = []
    seen: set[str] = set()
    for pos, rb in enumerate(raw_bidders):
        if not isinstance(rb, Mapping):
            raise ValidationError(f"bidder #{pos + 1} is not a mapping")
        bid_id = str(rb.get("id", pos + 1))
        if bid_id in seen:
            raise DuplicateBidderId(f"duplicate bidder id {bid_id!r}")
        seen.add(bid_id)
        if "budget" not in rb:
            raise ValidationError(f"bidder {bid_id!r} has no budget")
        budget = parse_rational(rb["budget"], allow_inf=False)
        if budget < 0:
            raise NegativeBudget(f"bidder {bid_id!r} has negative budget {budget}")
        max_cpc = parse_rational(rb.get("max_cpc", "inf"), allow_inf=True)
        if max_cpc < 0:
            raise NegativeBid(f"bidder {bid_id!r} has negative max_cpc {max_cpc}")
        ctr = parse_rational(rb.get("ctr", 1))
        if ctr <= 0:
            raise InvalidCtr(f"bidder {bid_id!r} has non-positive ctr {ctr}")
        bidders.append(
            Bidder(
                id=bid_id,
                budget=budget,
                max_cpc=max_cpc,
                ctr=ctr,
                rank=int(rb.get("rank", pos)),
                dummy=bool(rb.get("dummy", False)),
            )
        )

    if not bidders or max(len(bidders), len(slots)) < 2:
        raise TooFewBidders("need at least two bidders once padded")
    return Instance(tuple(bidders), slots, ctr_scaled=bool(raw.get("ctr_scaled", False)))


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    """Serializable form; every number becomes an exact string."""
    out: dict[str, Any] = {
        "bidders": [
            {
                "id": b.id,
                "budget": format_rational(b.budget),
                "max_cpc": format_rational(b.max_cpc),
                "ctr": format_rational(b.ctr),
                "rank": b.rank,
                **({"dummy": True} if b.dummy else {}),
            }
            for b in inst.bidders
        ],
        "slots": [format_rational(d) for d in inst.slots],
    }
    if inst.ctr_scaled:
        out["ctr_scaled"] = True
    return out


def pad_instance(inst: Instance) -> Instance:
    """Square the instance with zero-budget, zero-bid bidders or zero-supply slots."""
    n, m = len(inst.bidders), len(inst.slots)
    if n == m:
        return inst
    if n > m:
        return replace(inst, slots=inst.slots + (Fraction(0),) * (n - m))
    taken = {b.id for b in inst.bidders}
    next_rank = max(b.rank for b in inst.bidders) + 1
    extra = []
    i = 1
    while len(extra) < m - n:
        bid_id = f"{DUMMY_PREFIX}{i}"
        i += 1
        if bid_id in taken:
            continue
        extra.append(
            Bidder(
                id=bid_id,
                budget=Fraction(0),
                max_cpc=Fraction(0),
                rank=next_rank + len(extra),
                dummy=True,
            )
        )
    return replace(inst, bidders=inst.bidders + tuple(extra))


def scale_by_ctr(inst: Instance) -> Instance:
    """Fold click-through rates into the bids (effective bid = bid * ctr).

    Mechanisms then work in slot-click units; :func:`click_units` maps their
    results back. Scaling an already scaled instance is a no-op.
    """
    if inst.ctr_scaled:
        return inst
    bidders = tuple(replace(b, max_cpc=b.max_cpc * b.ctr) for b in inst.bidders)
    return replace(inst, bidders=bidders, ctr_scaled=True)


def click_units(inst: Instance, bidder_id: str, slot_clicks: Fraction, price: Fraction):
    """Convert a slot-unit allocation into the bidder's own clicks and per-click price."""
    ctr = inst.bidder(bidder_id).ctr
    return slot_clicks * ctr, price / ctr


def shuffle_ranks(inst: Instance, seed: int) -> Instance:
    """Replace the tie-breaking order with a seeded random permutation."""
    rng = random.Random(seed)
    order = list(range(len(inst.bidders)))
    rng.shuffle(order)
    bidders = tuple(replace(b, rank=r) for b, r in zip(inst.bidders, order))
    return replace(inst, bidders=bidders)


def make_instance(
    budgets: Iterable[Any],
    slots: Iterable[Any],
    bids: Iterable[Any] | None = None,
    ids: Iterable[str] | None = None,
) -> Instance:
    """Shorthand used by tests and the generator."""
    budgets = list(budgets)
    bids = list(bids) if bids is not None else ["inf"] * len(budgets)
    ids = list(ids) if ids is not None else [str(i + 1) for i in range(len(budgets))]
    return validate_instance(
        {
            "bidders": [
                {"id": i, "budget": B, "max_cpc": b} for i, B, b in zip(ids, budgets, bids)
            ],
            "slots": list(slots),
        }
    )
