"""Verification harness: revenue oracle, truthfulness sweeps, equilibrium checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .mechanisms import Outcome, gfp, ps_general, ps_single_slot
from .model import Instance, Number, pad_instance
from .scheduling import audit_schedule

ZERO = Fraction(0)


class InstanceTooLarge(ValueError):
    pass


# -- revenue oracle -----------------------------------------------------------


@lru_cache(maxsize=None)
def _subset_bases(n: int):
    """Every nonsingular choice of n subset-indicator rows, with integer adjugate.

    Rows are the indicator vectors of the nonempty subsets of {0..n-1}.
    Returns (masks, det, adj) triples with det > 0 and M @ adj == det * I.
    """
    masks = list(range(1, 1 << n))
    rows = np.array([[(m >> i) & 1 for i in range(n)] for m in masks], dtype=np.int64)
    combos = np.array(list(itertools.combinations(range(len(masks)), n)), dtype=np.int64)
    mats = rows[combos]  # (N, n, n)
    dets = np.rint(np.linalg.det(mats.astype(float))).astype(np.int64)
    keep = dets != 0
    mats, combos, dets = mats[keep], combos[keep], dets[keep]
    adjs = np.rint(np.linalg.inv(mats.astype(float)) * dets[:, None, None]).astype(np.int64)
    check = mats @ adjs
    eye = np.eye(n, dtype=np.int64)[None] * dets[:, None, None]
    if not np.array_equal(check, eye):
        raise ArithmeticError("integer adjugate check failed")
    out = []
    for combo, det, adj in zip(combos, dets, adjs):
        sign = 1 if det > 0 else -1
        out.append(
            (
                tuple(masks[r] for r in combo),
                int(det) * sign,
                tuple(tuple(int(v) * sign for v in row) for row in adj),
            )
        )
    return tuple(out)


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out


def lp_revenue_oracle(inst: Instance, max_n: int = 5) -> tuple[Fraction, dict[str, Fraction]]:
    """Maximum of sum(bid_i * c_i) over feasible click vectors, by vertex enumeration.

    Feasible means 0 <= c_i <= budget_i / bid_i and, for every subset S of
    bidders, sum of c over S <= D_1 + ... + D_|S|. Each vertex is the solution
    of n tight constraints; all candidate bases are solved exactly and the best
    feasible one is returned with its click vector.
    """
    inst = pad_instance(inst)
    if any(b.max_cpc == math.inf for b in inst.bidders):
        raise ValueError("revenue oracle needs finite bids")
    live = [b for b in inst.bidders if b.max_cpc > 0]
    witness = {b.id: ZERO for b in inst.bidders}
    n = len(live)
    if n > max_n:
        raise InstanceTooLarge(f"{n} bidders with positive bids exceed the oracle bound {max_n}")
    if n == 0:
        return ZERO, witness

    supplies = list(inst.slots) + [ZERO] * max(0, n - len(inst.slots))
    F = [ZERO]
    for d in supplies[:n]:
        F.append(F[-1] + d)
    caps = [b.budget / b.max_cpc for b in live]
    bids = [b.max_cpc for b in live]
    L = _lcm_denominators(F + caps)
    FL = [int(f * L) for f in F]
    capL = [int(c * L) for c in caps]

    best_val: Optional[Fraction] = None
    best_y: Optional[tuple[int, ...]] = None
    best_det = 1
    for masks, det, adj in _subset_bases(n):
        options = []
        for mask in masks:
            size = bin(mask).count("1")
            if size == 1:
                i = mask.bit_length() - 1
                options.append((0, capL[i], FL[1]))
            else:
                options.append((FL[size],))
        for rhs in itertools.product(*options):
            y = [sum(a * r for a, r in zip(row, rhs)) for row in adj]
            if any(v < 0 or v > det * cap for v, cap in zip(y, capL)):
                continue
            # the largest subset sum of each size is the sum of the top values
            top = sorted(y, reverse=True)
            acc = 0
            ok = True
            for m, v in enumerate(top, start=1):
                acc += v
                if acc > det * FL[m]:
                    ok = False
                    break
            if not ok:
                continue
            val = sum((b * v for b, v in zip(bids, y)), ZERO) / det
            if best_val is None or val > best_val:
                best_val, best_y, best_det = val, tuple(y), det

    assert best_val is not None  # the origin is always a feasible vertex
    for b, v in zip(live, best_y):
        witness[b.id] = Fraction(v, best_det * L)
    return best_val / L, witness


def check_greedy_optimal(inst: Instance, max_n: int = 5) -> bool:
    """True iff the greedy first-price revenue equals the oracle optimum exactly."""
    best, _ = lp_revenue_oracle(inst, max_n=max_n)
    return gfp(inst, with_schedule=False).revenue == best


# -- outcome invariants ---------------------------------------------------------


def check_outcome(outcome: Outcome, inst: Instance, strict_descent: bool = False) -> list[str]:
    """Problems with an Outcome's pricing, budget and schedule invariants.

    Block prices must not increase. Exactly tied bids can produce two adjacent
    blocks at the same price, so strict descent is only demanded on request.
    """
    inst = pad_instance(inst)
    problems = []
    for b in inst.bidders:
        c, p = outcome.clicks[b.id], outcome.prices[b.id]
        if c < 0:
            problems.append(f"{b.id}: negative clicks")
        if c > 0 and p > b.max_cpc:
            problems.append(f"{b.id}: price {p} above bid {b.max_cpc}")
        if p * c > b.budget:
            problems.append(f"{b.id}: spend {p * c} above budget {b.budget}")
    prices = outcome.block_prices()
    for hi, lo in zip(prices, prices[1:]):
        if hi < lo or (strict_descent and hi == lo):
            problems.append(f"block prices not decreasing: {prices}")
            break
    for j, block in enumerate(outcome.blocks):
        supply = sum((inst.slots[s - 1] for s in block.slots), ZERO)
        got = sum((m.clicks for m in block.members), ZERO)
        thr = block.threshold[0] if block.threshold else None
        if block.price > 0:
            if got != supply:
                problems.append(f"block {j}: {got} clicks sold, supply {supply}")
            for m in block.members:
                if m.spend != block.price * m.clicks:
                    problems.append(f"block {j}: {m.bidder} spend mismatch")
                if m.bidder != thr and m.spend != inst.bidder(m.bidder).budget:
                    problems.append(f"block {j}: {m.bidder} does not exhaust budget")
        elif got != 0:
            problems.append(f"block {j}: free clicks at price 0")
    if outcome.schedule is not None:
        problems += audit_schedule(outcome.schedule, outcome.clicks, inst.slots)
    return problems


# -- truthfulness sweeps ---------------------------------------------------------


@dataclass
class MonotonicityReport:
    bidder: str
    parameter: str
    grid: list[Number]
    clicks: list[Fraction]
    violations: list[tuple[Number, Number, Fraction, Fraction]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def default_mechanism(inst: Instance) -> Callable[..., Outcome]:
    return ps_single_slot if inst.positive_slots == 1 else ps_general


def monotonicity_sweep(
    inst: Instance,
    bidder_id: str,
    parameter: str,
    grid: Sequence[Number],
    mechanism: Optional[Callable[..., Outcome]] = None,
) -> MonotonicityReport:
    """Clicks of one bidder as her declared bid or budget walks up ``grid``."""
    if parameter not in ("bid", "budget"):
        raise ValueError("parameter must be 'bid' or 'budget'")
    if any(a >= b for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    mechanism = mechanism or default_mechanism(inst)
    field_name = "max_cpc" if parameter == "bid" else "budget"
    clicks = []
    for value in grid:
        variant = inst.with_bidder(bidder_id, **{field_name: value})
        clicks.append(mechanism(variant, with_schedule=False).clicks[bidder_id])
    report = MonotonicityReport(bidder_id, parameter, list(grid), clicks)
    for i in range(len(grid) - 1):
        if clicks[i + 1] < clicks[i]:
            report.violations.append((grid[i], grid[i + 1], clicks[i], clicks[i + 1]))
    return report


# -- equilibrium of the greedy first-price mechanism ----------------------------


def equilibrium_bids(inst: Instance, eps_prime: Fraction, outcome: Optional[Outcome] = None) -> dict[str, Fraction]:
    """Bid min(max-cpc, block price + eps') for every bidder, from the truthful PS outcome."""
    inst = pad_instance(inst)
    outcome = outcome or ps_general(inst, with_schedule=False)
    bids = {}
    for b in inst.bidders:
        price = outcome.blocks[outcome.block_of(b.id)].price
        bids[b.id] = min(b.max_cpc, price + eps_prime)
    return bids


def price_scale(outcome: Outcome) -> Fraction:
    """Smallest gap between consecutive block prices (the last positive one against 0)."""
    prices = sorted({p for p in outcome.block_prices() if p > 0}, reverse=True)
    if not prices:
        return Fraction(1)
    gaps = [a - b for a, b in zip(prices, prices[1:])] + [prices[-1]]
    return min(gaps)


def ps_gfp_equivalence(inst: Instance, eps_prime: Fraction) -> Fraction:
    """Largest per-bidder click gap between truthful PS and GFP at equilibrium bids."""
    inst = pad_instance(inst)
    ps = ps_general(inst, with_schedule=False)
    bids = equilibrium_bids(inst, eps_prime, ps)
    greedy = gfp(inst.with_bids(bids), with_schedule=False)
    return max(abs(ps.clicks[i] - greedy.clicks[i]) for i in ps.bidders)


def equilibrium_epsilon(inst: Instance, eps_prime: Fraction) -> Fraction:
    """Bound on any unilateral click gain at the equilibrium bids.

    A deviator can only pick up clicks the others leave unsold in the blocks
    up to her own, plus whatever separates her from her PS allocation. Both
    terms are read off the two outcomes, not from deviations.
    """
    inst = pad_instance(inst)
    ps = ps_general(inst, with_schedule=False)
    bids = equilibrium_bids(inst, eps_prime, ps)
    greedy = gfp(inst.with_bids(bids), with_schedule=False)
    slack = ZERO
    supply = sold = ZERO
    for block in ps.blocks:
        supply += sum((inst.slots[s - 1] for s in block.slots), ZERO)
        sold += sum((greedy.clicks[m.bidder] for m in block.members), ZERO)
        slack = max(slack, supply - sold)
    gap = max(abs(ps.clicks[i] - greedy.clicks[i]) for i in ps.bidders)
    return slack + gap


SWEEP_POINTS = 10
INFEASIBLE = None  # utility of an outcome that breaks the bidder's true constraints


@dataclass
class NashReport:
    bids: dict[str, Fraction]
    budgets: dict[str, Fraction]
    baseline: dict[str, Optional[Fraction]]
    best_deviation: dict[str, Optional[tuple[Fraction, Fraction]]]
    gains: dict[str, Number]
    epsilon: Number

    @property
    def max_gain(self) -> Number:
        return max(self.gains.values(), default=ZERO)

    @property
    def ok(self) -> bool:
        return all(g <= self.epsilon for g in self.gains.values())


def _utility(outcome: Outcome, bidder, bid: Number, true_budget: Fraction):
    c = outcome.clicks[bidder.id]
    if c == 0:
        return ZERO
    if bid > bidder.max_cpc or bid * c > true_budget:
        return INFEASIBLE
    return c


def nash_gap(
    inst: Instance,
    bids: Mapping[str, Fraction],
    grids: Mapping[str, Iterable[tuple[Fraction, Fraction]]],
    epsilon: Number,
    budgets: Optional[Mapping[str, Fraction]] = None,
) -> NashReport:
    """Best unilateral click gain under GFP over the given (bid, budget) deviations.

    ``inst`` carries the true max-cpcs and budgets; ``bids``/``budgets`` are the
    declared profile (budgets default to the truth).
    """
    inst = pad_instance(inst)
    budgets = dict(budgets or {b.id: b.budget for b in inst.bidders})
    declared = inst.with_bids(bids)
    for bid_id, B in budgets.items():
        declared = declared.with_bidder(bid_id, budget=B)
    base = gfp(declared, with_schedule=False)

    baseline, best, gains = {}, {}, {}
    for b in inst.bidders:
        u0 = _utility(base, b, bids[b.id], b.budget)
        baseline[b.id] = u0
        top_gain: Number = ZERO
        top_dev = None
        for bid, budget in grids.get(b.id, ()):
            variant = declared.with_bidder(b.id, max_cpc=bid, budget=budget)
            u = _utility(gfp(variant, with_schedule=False), b, bid, b.budget)
            if u is INFEASIBLE:
                continue
            gain = math.inf if u0 is INFEASIBLE else max(ZERO, u - u0)
            if gain > top_gain:
                top_gain, top_dev = gain, (bid, budget)
        gains[b.id] = top_gain
        best[b.id] = top_dev
    return NashReport(dict(bids), budgets, baseline, best, gains, epsilon)


def deviation_grid(
    inst: Instance,
    bidder_id: str,
    bids: Mapping[str, Fraction],
    eps_prime: Fraction,
    outcome: Optional[Outcome] = None,
) -> list[tuple[Fraction, Fraction]]:
    """Adversarial (bid, budget) deviations for one bidder.

    Bids: 0, her max-cpc, every block price and every competitor's bid, each
    shifted by 0 and +-eps', +-eps'/2, plus an even sweep of SWEEP_POINTS
    bids. Budgets: the truth, half, zero, double.
    """
    inst = pad_instance(inst)
    outcome = outcome or ps_general(inst, with_schedule=False)
    me = inst.bidder(bidder_id)
    anchors = {ZERO} | set(outcome.block_prices()) | {v for v in bids.values()}
    if me.max_cpc != math.inf:
        anchors.add(me.max_cpc)
    shifts = (ZERO, eps_prime, -eps_prime, eps_prime / 2, -eps_prime / 2)
    bid_pts = {a + s for a in anchors for s in shifts if a + s >= 0}
    # plus an even sweep up to just past the highest anchor
    top = max(anchors) + eps_prime
    bid_pts |= {top * k / SWEEP_POINTS for k in range(1, SWEEP_POINTS + 1)}
    bid_pts = sorted(bid_pts)
    budget_pts = sorted({me.budget, me.budget / 2, ZERO, me.budget * 2})
    return [(b, B) for b in bid_pts for B in budget_pts]


def equilibrium_check(inst: Instance, eps_prime: Fraction) -> tuple[Fraction, Fraction, NashReport]:
    """(discrepancy, epsilon bound, Nash report) at the equilibrium bids for ``eps_prime``."""
    inst = pad_instance(inst)
    ps = ps_general(inst, with_schedule=False)
    bids = equilibrium_bids(inst, eps_prime, ps)
    eps = equilibrium_epsilon(inst, eps_prime)
    grids = {b.id: deviation_grid(inst, b.id, bids, eps_prime, ps) for b in inst.bidders}
    report = nash_gap(inst, bids, grids, eps)
    return ps_gfp_equivalence(inst, eps_prime), eps, report
