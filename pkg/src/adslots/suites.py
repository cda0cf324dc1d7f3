"""Seeded randomized property suites behind ``adslots verify``."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

from . import analysis
from .generate import random_instance, random_rational
from .mechanisms import gfp, ps_general
from .model import Instance, format_rational, instance_to_dict, pad_instance, validate_instance
from .scheduling import (
    Infeasible,
    audit_schedule,
    build_schedule,
    is_feasible,
    makespan,
)

ZERO = Fraction(0)
EPS_EXPONENTS = (1, 2, 3)


@dataclass
class CaseResult:
    suite: str
    index: int
    check: str
    passed: bool
    worst: Any
    replay: dict = field(default_factory=dict)


def monotonicity_grid(inst: Instance, bidder_id: str, parameter: str, rng: random.Random, size: int = 20):
    """Strictly increasing grid mixing critical points with random values."""
    inst = pad_instance(inst)
    others = [b for b in inst.bidders if b.id != bidder_id]
    if parameter == "bid":
        anchors = {b.max_cpc for b in others if b.max_cpc != float("inf")}
        anchors |= set(ps_general(inst, with_schedule=False).block_prices())
        hi = max([*anchors, Fraction(1)]) * 2
    else:
        anchors = {b.budget for b in others}
        hi = max([*anchors, Fraction(1)]) * 2
    anchors.add(ZERO)
    anchors = sorted(anchors)
    pts = set(rng.sample(anchors, min(len(anchors), size // 2)))
    while len(pts) < size:
        pts.add(Fraction(rng.randint(0, int(hi * 16)), 16))
    return sorted(pts)


def _instance_for(rng: random.Random, n_lo: int, n_hi: int, **kw) -> Instance:
    n = rng.randint(n_lo, n_hi)
    return random_instance(rng, n, n_slots=rng.randint(1, n), **kw)


def greedy_optimal_case(rng: random.Random, index: int) -> CaseResult:
    inst = _instance_for(rng, 2, 4)
    best, _ = analysis.lp_revenue_oracle(inst)
    got = gfp(inst, with_schedule=False).revenue
    return CaseResult(
        "greedy-optimal", index, "revenue(gfp) == oracle", got == best, abs(best - got),
        {"instance": instance_to_dict(inst)},
    )


def monotonicity_case(rng: random.Random, index: int) -> list[CaseResult]:
    inst = _instance_for(rng, 2, 5, inf_bid_prob=0.1, zero_budget_prob=0.15)
    bidder = rng.choice(inst.bidders).id
    out = []
    for parameter in ("bid", "budget"):
        grid = monotonicity_grid(inst, bidder, parameter, rng)
        report = analysis.monotonicity_sweep(inst, bidder, parameter, grid)
        out.append(
            CaseResult(
                "monotonicity", index, f"clicks nondecreasing in {parameter}", report.ok,
                len(report.violations),
                {
                    "instance": instance_to_dict(inst),
                    "bidder": bidder,
                    "parameter": parameter,
                    "grid": [format_rational(v) for v in grid],
                },
            )
        )
    return out


def nash_check(inst: Instance) -> tuple[bool, Fraction, list]:
    """Discrepancy and epsilon shrink with eps', and no deviation gains more than epsilon."""
    scale = analysis.price_scale(ps_general(inst, with_schedule=False))
    rows = []
    for k in EPS_EXPONENTS:
        disc, eps, report = analysis.equilibrium_check(inst, scale / 10**k)
        rows.append((disc, eps, report.max_gain))
    ok = all(gain <= eps for _, eps, gain in rows)
    ok &= all(a[0] >= b[0] and a[1] >= b[1] for a, b in zip(rows, rows[1:]))
    return ok, max(r[2] for r in rows), rows


def nash_case(rng: random.Random, index: int) -> CaseResult:
    inst = _instance_for(rng, 2, 4, inf_bid_prob=0.1)
    ok, worst, _ = nash_check(inst)
    return CaseResult("nash", index, "eps-Nash at equilibrium bids", ok, worst,
                      {"instance": instance_to_dict(inst)})


def random_click_case(rng: random.Random):
    """(clicks, supplies): random, sometimes rescaled to be exactly tight."""
    k = rng.randint(1, 5)
    positive = rng.randint(1, k)
    supplies = sorted({random_rational(rng, 100, 4, lo=1) for _ in range(positive)}, reverse=True)
    supplies += [ZERO] * (k + rng.randint(0, 2) - len(supplies))
    clicks = sorted((random_rational(rng, int(supplies[0]) + 10, 4) for _ in range(k)), reverse=True)
    if rng.random() < 0.4 and any(clicks):
        span = makespan(clicks, supplies)
        if span > 0:
            clicks = [c / span for c in clicks]
    return clicks, supplies


def schedule_check(clicks, supplies) -> tuple[bool, list[str]]:
    feasible = is_feasible(clicks, supplies)
    fits = makespan(clicks, supplies) <= 1
    keyed = [(f"b{i}", c) for i, c in enumerate(clicks)]
    try:
        schedule = build_schedule(keyed, supplies)
    except Infeasible:
        return (not feasible and not fits), []
    problems = audit_schedule(schedule, dict(keyed), supplies)
    return feasible and fits and not problems, problems


def schedule_case(rng: random.Random, index: int) -> list[CaseResult]:
    clicks, supplies = random_click_case(rng)
    ok, problems = schedule_check(clicks, supplies)
    out = [
        CaseResult(
            "schedule-audit", index, "feasible <=> schedulable <=> makespan<=1", ok, len(problems),
            {"clicks": [format_rational(c) for c in clicks],
             "supplies": [format_rational(d) for d in supplies]},
        )
    ]
    inst = _instance_for(rng, 2, 5, inf_bid_prob=0.1)
    for mech in (ps_general, gfp):
        outcome = mech(inst)
        problems = audit_schedule(outcome.schedule, outcome.clicks, pad_instance(inst).slots)
        out.append(
            CaseResult("schedule-audit", index, f"{outcome.mechanism} schedule audit", not problems,
                       len(problems), {"instance": instance_to_dict(inst), "mechanism": outcome.mechanism})
        )
    return out


SUITES: dict[str, Callable[[random.Random, int], Any]] = {
    "greedy-optimal": greedy_optimal_case,
    "monotonicity": monotonicity_case,
    "nash": nash_case,
    "schedule-audit": schedule_case,
}


def run_suite(name: str, count: int, seed: int) -> list[CaseResult]:
    names = list(SUITES) if name == "all" else [name]
    results: list[CaseResult] = []
    for suite in names:
        rng = random.Random(f"{suite}:{seed}")
        for i in range(count):
            res = SUITES[suite](rng, i)
            results.extend(res if isinstance(res, list) else [res])
    return results


def replay(doc: dict) -> CaseResult:
    """Re-run the check recorded in a failure document."""
    suite = doc["suite"]
    params = doc.get("replay", {})
    inst = validate_instance(params["instance"]) if "instance" in params else None
    if suite == "greedy-optimal":
        best, _ = analysis.lp_revenue_oracle(inst)
        got = gfp(inst, with_schedule=False).revenue
        return CaseResult(suite, 0, "revenue(gfp) == oracle", got == best, abs(best - got), params)
    if suite == "monotonicity":
        grid = [Fraction(v) for v in params["grid"]]
        report = analysis.monotonicity_sweep(inst, params["bidder"], params["parameter"], grid)
        return CaseResult(suite, 0, "clicks nondecreasing", report.ok, len(report.violations), params)
    if suite == "nash":
        ok, worst, _ = nash_check(inst)
        return CaseResult(suite, 0, "eps-Nash at equilibrium bids", ok, worst, params)
    if suite == "schedule-audit":
        if inst is not None:
            mech = {"ps": ps_general, "gfp": gfp}[params["mechanism"]]
            outcome = mech(inst)
            problems = audit_schedule(outcome.schedule, outcome.clicks, pad_instance(inst).slots)
            return CaseResult(suite, 0, "schedule audit", not problems, len(problems), params)
        clicks = [Fraction(c) for c in params["clicks"]]
        supplies = [Fraction(d) for d in params["supplies"]]
        ok, problems = schedule_check(clicks, supplies)
        return CaseResult(suite, 0, "feasible <=> schedulable", ok, len(problems), params)
    raise ValueError(f"unknown suite {suite!r}")
