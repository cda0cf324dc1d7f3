"""Command-line front end: ``adslots run | verify | gen``."""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import io as aio
from .analysis import equilibrium_bids
from .generate import random_instance
from .mechanisms import MECHANISMS, Outcome, run_mechanism
from .model import (
    Instance,
    ValidationError,
    click_units,
    format_decimal,
    format_rational,
    parse_rational,
    scale_by_ctr,
    shuffle_ranks,
)
from .suites import SUITES, run_suite, replay

PRECISION_ENV = "ADSLOTS_PRECISION"
EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    mechanism: str
    input: Path
    outcome: Optional[Path] = None
    schedule: Optional[Path] = None
    seed: Optional[int] = None
    eps_prime: Fraction = Fraction(1, 100)
    precision: int = 2
    equilibrium_bids: bool = False

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {sorted(MECHANISMS)}")
        if self.precision < 1:
            raise ValueError("precision must be at least 1")


def _show(value, precision: int) -> str:
    exact = format_rational(value)
    approx = format_decimal(value, precision)
    return exact if exact == approx else f"{exact} ({approx})"


def summarize(outcome: Outcome, inst: Instance, precision: int) -> str:
    lines = [f"mechanism: {outcome.mechanism}"]
    for j, block in enumerate(outcome.blocks, start=1):
        slots = ",".join(str(s) for s in block.slots)
        lines.append(f"block {j}: price {_show(block.price, precision)}  slots {slots}")
        for m in block.members:
            lines.append(f"  bidder {m.bidder}: clicks {_show(m.clicks, precision)}  spend {_show(m.spend, precision)}")
        if block.threshold:
            bid_id, reduced = block.threshold
            lines.append(f"  threshold bidder {bid_id}: reduced budget {_show(reduced, precision)}")
    if not outcome.blocks:
        for i in outcome.bidders:
            lines.append(
                f"bidder {i}: clicks {_show(outcome.clicks[i], precision)}  "
                f"price {_show(outcome.prices[i], precision)}"
            )
    if inst.ctr_scaled:
        lines.append("per-bidder clicks and prices in the bidder's own click units:")
        for i in outcome.bidders:
            c, p = click_units(inst, i, outcome.clicks[i], outcome.prices[i])
            lines.append(f"  bidder {i}: clicks {_show(c, precision)}  price {_show(p, precision)}")
    lines.append(f"revenue: {_show(outcome.revenue, precision)}")
    return "\n".join(lines)


def cmd_run(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        inst = aio.load_instance(config.input)
    except OSError as exc:
        print(f"error: cannot read {config.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, json.JSONDecodeError) as exc:
        print(f"error: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if config.seed is not None:
        inst = shuffle_ranks(inst, config.seed)
    if any(b.ctr != 1 for b in inst.bidders):
        inst = scale_by_ctr(inst)
    if config.equilibrium_bids:
        inst = inst.with_bids(equilibrium_bids(inst, config.eps_prime))
    try:
        outcome = run_mechanism(config.mechanism, inst)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    print(summarize(outcome, inst, config.precision), file=out)
    try:
        if config.outcome:
            config.outcome.write_text(aio.dumps_outcome(outcome, max(config.precision, 4)))
        if config.schedule:
            config.schedule.write_text(aio.dumps_schedule(outcome.schedule))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _worst(value) -> str:
    if value == float("inf"):
        return "inf"
    return format_rational(Fraction(value))


def cmd_verify(suite: str, seed: int, count: int, failures: Path, report: Optional[Path] = None,
               out=None) -> int:
    out = out or sys.stdout
    results = run_suite(suite, count, seed)
    table: dict[tuple[str, str], list] = {}
    for r in results:
        row = table.setdefault((r.suite, r.check), [0, 0, 0])
        row[0] += 1
        row[1] += r.passed
        row[2] = max(row[2], r.worst)
    print(f"{'suite':<16} {'check':<42} {'pass':>9}  worst", file=out)
    for (s, check), (n, ok, worst) in table.items():
        status = "PASS" if ok == n else "FAIL"
        print(f"{s:<16} {check:<42} {ok:>4}/{n:<4}  {_worst(worst)}  {status}", file=out)

    if report:
        lines = ["instance\tcheck\tresult\tworst"]
        for r in results:
            lines.append(f"{r.suite}-{r.index}\t{r.check}\t{'pass' if r.passed else 'fail'}\t{_worst(r.worst)}")
        report.write_text("\n".join(lines) + "\n")

    failed = [r for r in results if not r.passed]
    if not failed:
        return EXIT_OK
    failures.mkdir(parents=True, exist_ok=True)
    for r in failed:
        path = failures / f"{r.suite}-seed{seed}-{r.index}.json"
        path.write_text(json.dumps({"suite": r.suite, "check": r.check, "replay": r.replay}, indent=2) + "\n")
        print(f"failure written to {path}", file=out)
    return EXIT_INVALID


def cmd_replay(path: Path, out=None) -> int:
    out = out or sys.stdout
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    r = replay(doc)
    print(f"{r.suite}: {r.check}: {'pass' if r.passed else 'FAIL'} (worst {r.worst})", file=out)
    return EXIT_OK if r.passed else EXIT_INVALID


def cmd_gen(args, out=None) -> int:
    out = out or sys.stdout
    if args.n < 2:
        print("error: --n must be at least 2", file=sys.stderr)
        return EXIT_INVALID
    slots = args.n if args.slots is None else args.slots
    if args.zero_slots < 0 or args.zero_slots > slots or slots < 1:
        print("error: invalid slot counts", file=sys.stderr)
        return EXIT_INVALID
    rng = random.Random(args.seed)
    inst = random_instance(
        rng,
        args.n,
        n_slots=slots,
        zero_slots=args.zero_slots,
        max_supply=args.max_supply,
        max_budget=args.max_budget,
        max_bid=args.max_bid,
        denom=args.denom,
        inf_bid_prob=args.inf_bid_prob,
    )
    text = aio.dumps_instance(inst)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        out.write(text)
    return EXIT_OK


def _default_precision() -> int:
    try:
        return max(1, int(os.environ.get(PRECISION_ENV, "2")))
    except ValueError:
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adslots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a mechanism on an instance file")
    run.add_argument("--mechanism", choices=sorted(MECHANISMS), default="ps")
    run.add_argument("--input", required=True, type=Path)
    run.add_argument("--outcome", type=Path, help="write the outcome document here")
    run.add_argument("--schedule", type=Path, help="write the schedule table here")
    run.add_argument("--seed", type=int, help="shuffle the tie-breaking order with this seed")
    run.add_argument("--eps-prime", default="1/100", help="bid offset for --equilibrium-bids")
    run.add_argument("--equilibrium-bids", action="store_true",
                     help="replace bids by min(max-cpc, PS block price + eps')")
    run.add_argument("--precision", type=int, default=_default_precision())

    ver = sub.add_parser("verify", help="run a randomized property suite")
    ver.add_argument("suite", nargs="?", choices=[*SUITES, "all"], default="all")
    ver.add_argument("--count", type=int, default=100)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--failures", type=Path, default=Path("failures"))
    ver.add_argument("--report", type=Path, help="write a per-case TSV summary")
    ver.add_argument("--replay", type=Path, help="re-run a failure document instead")

    gen = sub.add_parser("gen", help="emit a random valid instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--slots", type=int)
    gen.add_argument("--zero-slots", type=int, default=0)
    gen.add_argument("--max-supply", type=int, default=100)
    gen.add_argument("--max-budget", type=int, default=100)
    gen.add_argument("--max-bid", type=int, default=5)
    gen.add_argument("--denom", type=int, default=4)
    gen.add_argument("--inf-bid-prob", type=float, default=0.0)
    gen.add_argument("--output", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            eps_prime = parse_rational(args.eps_prime)
            if eps_prime <= 0:
                raise ValueError("--eps-prime must be positive")
            config = RunConfig(
                mechanism=args.mechanism,
                input=args.input,
                outcome=args.outcome,
                schedule=args.schedule,
                seed=args.seed,
                eps_prime=eps_prime,
                precision=args.precision,
                equilibrium_bids=args.equilibrium_bids,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        return cmd_run(config)
    if args.command == "verify":
        if args.replay:
            return cmd_replay(args.replay)
        return cmd_verify(args.suite, args.seed, args.count, args.failures, args.report)
    return cmd_gen(args)


if __name__ == "__main__":
    sys.exit(main())
