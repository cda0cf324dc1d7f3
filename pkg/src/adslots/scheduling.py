"""Preemptive schedules of click totals onto slots over the unit interval.

Assigning clicks ``c`` to slots with supplies ``D`` is the related-machines
problem Q|pmtn|Cmax with job sizes ``c`` and machine speeds ``D``; it fits in
one time unit iff every prefix of the sorted ``c`` fits in the same prefix of
``D``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class SchedulingError(ValueError):
    pass


class UnsortedInput(SchedulingError):
    pass


class AllZeroSupply(SchedulingError):
    pass


class Infeasible(SchedulingError):
    pass


@dataclass(frozen=True)
class ScheduleEntry:
    bidder: Hashable
    slot: int  # 1-based slot number
    start: Fraction
    end: Fraction

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...]

    def clicks(self, supplies: Sequence[Fraction]) -> dict[Hashable, Fraction]:
        totals: dict[Hashable, Fraction] = defaultdict(Fraction)
        for e in self.entries:
            totals[e.bidder] += e.length * supplies[e.slot - 1]
        return dict(totals)

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.entries + other.entries)

    def __len__(self) -> int:
        return len(self.entries)


EMPTY_SCHEDULE = Schedule(())


def _check_sorted(c: Sequence[Fraction]) -> None:
    for a, b in zip(c, c[1:]):
        if a < b:
            raise UnsortedInput("click vector must be sorted nonincreasing")
    if c and c[-1] < 0:
        raise ValueError("click values must be nonnegative")


def is_feasible(c: Sequence[Fraction], supplies: Sequence[Fraction]) -> bool:
    """Prefix test: sum(c[:l]) <= sum(D[:l]) for every l."""
    _check_sorted(c)
    if len(c) > len(supplies):
        raise ValueError("more click values than slots")
    lhs = rhs = ZERO
    for ci, dj in zip(c, supplies):
        lhs += ci
        rhs += dj
        if lhs > rhs:
            return False
    return True


def makespan(c: Sequence[Fraction], supplies: Sequence[Fraction]) -> Fraction:
    """Shortest time in which a preemptive schedule can deliver ``c``."""
    _check_sorted(c)
    if len(c) > len(supplies):
        raise ValueError("more click values than slots")
    best = ZERO
    lhs = rhs = ZERO
    for ci, dj in zip(c, supplies):
        lhs += ci
        rhs += dj
        if rhs == 0:
            if lhs > 0:
                raise AllZeroSupply("positive clicks but no supply")
            continue
        best = max(best, lhs / rhs)
    return best


def max_additional_clicks(
    committed: Iterable[Fraction], supplies: Sequence[Fraction], cap=None
) -> Fraction:
    """Largest x such that ``committed + [x]`` stays feasible and x <= cap.

    A new value x sits in the top m for some m, so it needs
    x + (m-1 largest committed) <= D_1 + ... + D_m for every m.
    """
    top = sorted(committed, reverse=True)
    best = cap
    prefix_d = ZERO
    prefix_c = ZERO
    for m in range(1, len(top) + 2):
        if m <= len(supplies):
            prefix_d += supplies[m - 1]
        room = prefix_d - prefix_c
        if best is None or room < best:
            best = room
        if m <= len(top):
            prefix_c += top[m - 1]
    return max(ZERO, Fraction(best))


def _rotate(members, machines, speeds, start, end, out):
    """Give each of g equal-level jobs 1/g of [start, end) on each of g machines."""
    g = len(members)
    if g == 1:
        out.append((members[0], machines[0], start, end))
        return
    step = (end - start) / g
    for s in range(g):
        a = start + s * step
        b = end if s == g - 1 else a + step
        for i, job in enumerate(members):
            out.append((job, machines[(i + s) % g], a, b))


def _level_algorithm(jobs, speeds, out):
    """Event simulation of the level algorithm.

    ``jobs`` is a list of (key, work) sorted by work descending, all positive;
    ``speeds`` lists machine speeds (nonincreasing) with len >= len(jobs).
    Appends (key, machine_index, start, end) tuples to ``out`` and returns the
    completion time.
    """
    groups: list[list] = []  # [level, [keys]]
    for key, work in jobs:
        if groups and groups[-1][0] == work:
            groups[-1][1].append(key)
        else:
            groups.append([work, [key]])

    t = ZERO
    while groups:
        offset = 0
        layout = []
        for level, members in groups:
            idx = list(range(offset, offset + len(members)))
            offset += len(members)
            rate = sum((speeds[i] for i in idx), ZERO) / len(members)
            layout.append((idx, rate))

        dt = None
        for a in range(len(groups) - 1):
            ra, rb = layout[a][1], layout[a + 1][1]
            if ra > rb:
                cand = (groups[a][0] - groups[a + 1][0]) / (ra - rb)
                dt = cand if dt is None else min(dt, cand)
        last_rate = layout[-1][1]
        if last_rate > 0:
            cand = groups[-1][0] / last_rate
            dt = cand if dt is None else min(dt, cand)
        if dt is None:
            raise Infeasible("remaining work sits on zero-speed slots")

        for (level, members), (idx, rate) in zip(groups, layout):
            _rotate(members, idx, speeds, t, t + dt, out)
        t += dt

        merged: list[list] = []
        for (level, members), (idx, rate) in zip(groups, layout):
            level = level - rate * dt
            if level == 0:
                continue
            if merged and merged[-1][0] == level:
                merged[-1][1].extend(members)
            else:
                merged.append([level, list(members)])
        groups = merged
    return t


def _coalesce(raw):
    """Merge back-to-back intervals of the same (bidder, slot)."""
    by_pair = defaultdict(list)
    for key, slot, a, b in raw:
        by_pair[(key, slot)].append((a, b))
    out = []
    for (key, slot), spans in by_pair.items():
        spans.sort()
        cur_a, cur_b = spans[0]
        for a, b in spans[1:]:
            if a == cur_b:
                cur_b = b
            else:
                out.append(ScheduleEntry(key, slot, cur_a, cur_b))
                cur_a, cur_b = a, b
        out.append(ScheduleEntry(key, slot, cur_a, cur_b))
    out.sort(key=lambda e: (e.slot, e.start))
    return out


def build_schedule(
    clicks: Sequence[tuple[Hashable, Fraction]],
    supplies: Sequence[Fraction],
    first_slot: int = 1,
) -> Schedule:
    """Construct a feasible preemptive schedule delivering ``clicks``.

    ``clicks`` pairs a bidder key with its click total; ``supplies`` are the
    slots' click rates, numbered from ``first_slot``. The block is split at
    every tight prefix and each piece is scheduled by the level algorithm.
    Entries on zero-supply slots are dropped since they deliver nothing.
    """
    supplies = [Fraction(d) for d in supplies]
    order = sorted(range(len(clicks)), key=lambda i: -clicks[i][1])
    jobs = [(clicks[i][0], Fraction(clicks[i][1])) for i in order]
    values = [w for _, w in jobs]
    if any(w < 0 for w in values):
        raise ValueError("click values must be nonnegative")
    if len(jobs) > len(supplies):
        raise Infeasible("more bidders than slots")
    if not is_feasible(values, supplies):
        raise Infeasible("click vector violates a prefix supply bound")

    # split at tight prefixes
    cuts = [0]
    lhs = rhs = ZERO
    for ell, (w, d) in enumerate(zip(values, supplies), start=1):
        lhs += w
        rhs += d
        if lhs == rhs and lhs > 0 and ell < len(jobs):
            cuts.append(ell)
    cuts.append(len(jobs))

    raw = []
    for lo, hi in zip(cuts, cuts[1:]):
        piece = [(k, w) for k, w in jobs[lo:hi] if w > 0]
        if not piece:
            continue
        speeds = supplies[lo:] if hi == len(jobs) else supplies[lo:hi]
        local = []
        done = _level_algorithm(piece, speeds, local)
        if done > ONE:
            raise Infeasible(f"level algorithm needed time {done}")
        for key, m, a, b in local:
            if speeds[m] > 0:
                raw.append((key, lo + m + first_slot, a, b))
    return Schedule(tuple(_coalesce(raw)))


def audit_schedule(
    schedule: Schedule,
    expected: Mapping[Hashable, Fraction],
    supplies: Sequence[Fraction],
) -> list[str]:
    """Independently re-check a schedule; returns a list of problems (empty if sound)."""
    problems = []
    by_slot = defaultdict(list)
    by_bidder = defaultdict(list)
    totals: dict[Hashable, Fraction] = defaultdict(Fraction)
    for e in schedule.entries:
        if not (0 <= e.start < e.end <= 1):
            problems.append(f"bad interval {e}")
        if not 1 <= e.slot <= len(supplies):
            problems.append(f"unknown slot in {e}")
            continue
        by_slot[e.slot].append((e.start, e.end, e.bidder))
        by_bidder[e.bidder].append((e.start, e.end, e.slot))
        totals[e.bidder] += (e.end - e.start) * supplies[e.slot - 1]

    for label, groups in (("slot", by_slot), ("bidder", by_bidder)):
        for key, spans in groups.items():
            spans.sort(key=lambda s: (s[0], s[1]))
            for (a1, b1, o1), (a2, b2, o2) in zip(spans, spans[1:]):
                if a2 < b1:
                    problems.append(f"{label} {key}: overlap between {o1} and {o2} at {a2}")

    for key in set(expected) | set(totals):
        want = Fraction(expected.get(key, 0))
        got = totals.get(key, ZERO)
        if want != got:
            problems.append(f"bidder {key}: scheduled {got} clicks, expected {want}")
    return problems
