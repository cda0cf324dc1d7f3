"""File formats: instance and outcome documents (JSON) and the schedule table (TSV)."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .mechanisms import BlockMember, Outcome, PriceBlock
from .model import Instance, format_decimal, format_rational, instance_to_dict, validate_instance
from .scheduling import Schedule, ScheduleEntry

PathLike = Union[str, Path]

SCHEDULE_HEADER = ("bidder", "slot", "start", "end")


def loads_instance(text: str) -> Instance:
    # floats in the document are taken at their written decimal value
    raw = json.loads(text, parse_float=Fraction)
    return validate_instance(raw)


def load_instance(path: PathLike) -> Instance:
    return loads_instance(Path(path).read_text())


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(dumps_instance(inst))


def _num(value: Fraction, precision: int) -> dict[str, str]:
    return {"exact": format_rational(value), "approx": format_decimal(value, precision)}


def outcome_to_dict(outcome: Outcome, precision: int = 4) -> dict[str, Any]:
    return {
        "mechanism": outcome.mechanism,
        "revenue": _num(outcome.revenue, precision),
        "bidders": [
            {
                "id": i,
                "clicks": _num(outcome.clicks[i], precision),
                "price": _num(outcome.prices[i], precision),
                "spend": _num(outcome.spend(i), precision),
            }
            for i in outcome.bidders
        ],
        "blocks": [
            {
                "price": _num(block.price, precision),
                "slots": list(block.slots),
                "members": [
                    {"id": m.bidder, "clicks": format_rational(m.clicks), "spend": format_rational(m.spend)}
                    for m in block.members
                ],
                "threshold": (
                    None
                    if block.threshold is None
                    else {"id": block.threshold[0], "reduced_budget": format_rational(block.threshold[1])}
                ),
            }
            for block in outcome.blocks
        ],
    }


def outcome_from_dict(doc: dict[str, Any]) -> Outcome:
    """Rebuild an Outcome (without its schedule) from :func:`outcome_to_dict` output."""
    bidders = tuple(b["id"] for b in doc["bidders"])
    clicks = {b["id"]: Fraction(b["clicks"]["exact"]) for b in doc["bidders"]}
    prices = {b["id"]: Fraction(b["price"]["exact"]) for b in doc["bidders"]}
    blocks = []
    for blk in doc["blocks"]:
        thr = blk.get("threshold")
        blocks.append(
            PriceBlock(
                price=Fraction(blk["price"]["exact"]),
                members=tuple(
                    BlockMember(m["id"], Fraction(m["clicks"]), Fraction(m["spend"]))
                    for m in blk["members"]
                ),
                slots=tuple(blk["slots"]),
                threshold=None if thr is None else (thr["id"], Fraction(thr["reduced_budget"])),
            )
        )
    return Outcome(doc["mechanism"], bidders, clicks, prices, tuple(blocks))


def dumps_outcome(outcome: Outcome, precision: int = 4) -> str:
    return json.dumps(outcome_to_dict(outcome, precision), indent=2) + "\n"


def dumps_schedule(schedule: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(SCHEDULE_HEADER)
    for e in schedule.entries:
        w.writerow((e.bidder, e.slot, format_rational(e.start), format_rational(e.end)))
    return buf.getvalue()


def loads_schedule(text: str) -> Schedule:
    rows = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(rows, None)
    if tuple(header or ()) != SCHEDULE_HEADER:
        raise ValueError(f"schedule table must start with {SCHEDULE_HEADER}")
    entries = [
        ScheduleEntry(bidder, int(slot), Fraction(a), Fraction(b))
        for bidder, slot, a, b in rows
    ]
    return Schedule(tuple(entries))
