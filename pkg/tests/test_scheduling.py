from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from adslots.scheduling import (
    AllZeroSupply,
    Infeasible,
    Schedule,
    ScheduleEntry,
    UnsortedInput,
    audit_schedule,
    build_schedule,
    is_feasible,
    makespan,
    max_additional_clicks,
)


def keyed(clicks):
    return [(f"b{i + 1}", F(c)) for i, c in enumerate(clicks)]


def build_and_audit(clicks, supplies):
    pairs = keyed(clicks)
    schedule = build_schedule(pairs, supplies)
    assert audit_schedule(schedule, dict(pairs), supplies) == []
    return schedule


class TestFeasibility:
    @pytest.mark.parametrize(
        "c, d, ok",
        [
            ((80, 70), (100, 50), True),
            ((0, 0, 0), (5, 1, 0), True),
            ((120,), (100, 50), False),
            ((100, 60), (100, 50), False),
            ((75, 75), (100, 50), True),
        ],
    )
    def test_prefix_rule(self, c, d, ok):
        assert is_feasible([F(x) for x in c], [F(x) for x in d]) is ok

    def test_unsorted_rejected(self):
        with pytest.raises(UnsortedInput):
            is_feasible([F(1), F(2)], [F(5), F(4)])


class TestMakespan:
    def test_tight_block(self):
        assert makespan([F(80), F(70)], [F(100), F(50)]) == 1

    def test_hand_oracle(self):
        c, d = [F(50), F(10)], [F(100), F(50)]
        oracle = max(F(50, 100), F(60, 150))
        assert oracle == F(1, 2)
        assert makespan(c, d) == oracle

    def test_empty_work(self):
        assert makespan([F(0)], [F(100)]) == 0

    def test_zero_supply_prefix_skipped(self):
        assert makespan([F(0), F(0)], [F(0), F(0)]) == 0
        with pytest.raises(AllZeroSupply):
            makespan([F(1)], [F(0)])


class TestBuildSchedule:
    def test_fig1_first_block(self):
        s = build_and_audit([80, 70], [F(100), F(50)])
        # each bidder splits its time 3/5 : 2/5 between the two slots
        for bidder, slot1_time in (("b1", F(3, 5)), ("b2", F(2, 5))):
            time = {e.slot: F(0) for e in s.entries}
            for e in s.entries:
                if e.bidder == bidder:
                    time[e.slot] += e.length
            assert time == {1: slot1_time, 2: 1 - slot1_time}

    def test_fig1_second_block(self):
        s = build_and_audit([F(500, 21), F(25, 21)], [F(25), F(0)])
        lengths = {e.bidder: e.length for e in s.entries}
        assert lengths == {"b1": F(20, 21), "b2": F(1, 21)}
        assert {e.slot for e in s.entries} == {1}

    def test_full_occupancy(self):
        s = build_and_audit([F(7)], [F(7)])
        assert s.entries == (ScheduleEntry("b1", 1, F(0), F(1)),)

    def test_first_slot_offset(self):
        s = build_schedule(keyed([F(5)]), [F(10)], first_slot=3)
        assert {e.slot for e in s.entries} == {3}

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            build_schedule(keyed([120]), [F(100), F(50)])
        with pytest.raises(Infeasible):
            build_schedule(keyed([1, 1, 1]), [F(5), F(4)])

    def test_schedule_sum_and_clicks(self):
        a = Schedule((ScheduleEntry("x", 1, F(0), F(1, 2)),))
        b = Schedule((ScheduleEntry("y", 2, F(0), F(1)),))
        assert len(a + b) == 2
        assert (a + b).clicks([F(10), F(4)]) == {"x": 5, "y": 4}


class TestAudit:
    def test_detects_slot_overlap(self):
        s = Schedule((ScheduleEntry("a", 1, F(0), F(1, 2)), ScheduleEntry("b", 1, F(1, 4), F(1))))
        assert any("overlap" in p for p in audit_schedule(s, {"a": F(5), "b": F(15, 2)}, [F(10)]))

    def test_detects_bidder_in_two_slots(self):
        s = Schedule((ScheduleEntry("a", 1, F(0), F(1, 2)), ScheduleEntry("a", 2, F(0), F(1, 2))))
        assert any("bidder a" in p for p in audit_schedule(s, {"a": F(15, 2)}, [F(10), F(5)]))

    def test_detects_wrong_totals_and_bad_intervals(self):
        s = Schedule((ScheduleEntry("a", 1, F(0), F(1, 2)),))
        assert audit_schedule(s, {"a": F(6)}, [F(10)])
        assert audit_schedule(Schedule((ScheduleEntry("a", 1, F(1, 2), F(3, 2)),)), {"a": F(10)}, [F(10)])


def grid_max_additional(committed, supplies, cap, step=F(1, 100)):
    """Largest multiple of ``step`` that can be appended feasibly."""
    best = F(0)
    x = F(0)
    limit = sum(supplies) if cap is None else min(cap, sum(supplies))
    while x <= limit:
        if is_feasible(sorted([*committed, x], reverse=True), list(supplies) + [F(0)]):
            best = x
        x += step
    return best


class TestMaxAdditional:
    def test_empty(self):
        assert max_additional_clicks([], [F(100), F(50)]) == 100

    def test_cap_binds(self):
        assert max_additional_clicks([F(50)], [F(120)], cap=F(50)) == 50

    def test_supply_binds(self):
        assert max_additional_clicks([F(50)], [F(120)], cap=F(100)) == 70

    def test_grid_oracle(self):
        committed, supplies = [F(80), F(70)], [F(100), F(50), F(25)]
        assert grid_max_additional(committed, supplies, None) == 25
        assert max_additional_clicks(committed, supplies) == 25

    def test_more_committed_than_slots(self):
        assert max_additional_clicks([F(1), F(1)], [F(2)]) == 0


positive_supplies = st.lists(st.integers(1, 400), min_size=1, max_size=5, unique=True).map(
    lambda xs: sorted((F(x, 4) for x in xs), reverse=True)
)


@st.composite
def clicks_and_supplies(draw):
    supplies = draw(positive_supplies) + [F(0)] * draw(st.integers(0, 2))
    k = draw(st.integers(1, len(supplies)))
    clicks = sorted(
        (F(draw(st.integers(0, int(supplies[0] * 4) + 40)), 4) for _ in range(k)), reverse=True
    )
    if draw(st.booleans()) and any(clicks):
        span = makespan(clicks, supplies)
        clicks = [c / span for c in clicks]
    return clicks, supplies


@settings(max_examples=300, deadline=None)
@given(clicks_and_supplies())
def test_feasible_iff_schedulable_iff_makespan(case):
    clicks, supplies = case
    feasible = is_feasible(clicks, supplies)
    assert feasible == (makespan(clicks, supplies) <= 1)
    pairs = keyed(clicks)
    try:
        schedule = build_schedule(pairs, supplies)
    except Infeasible:
        assert not feasible
        return
    assert feasible
    assert audit_schedule(schedule, dict(pairs), supplies) == []


@settings(max_examples=200, deadline=None)
@given(clicks_and_supplies(), st.one_of(st.none(), st.integers(0, 200).map(lambda x: F(x, 2))))
def test_max_additional_is_maximal(case, cap):
    committed, supplies = case
    assume(is_feasible(committed, supplies))
    supplies = supplies + [F(0)]
    x = max_additional_clicks(committed, supplies, cap)
    assert is_feasible(sorted([*committed, x], reverse=True), supplies)
    assert cap is None or x <= cap
    delta = supplies[0] / 1000
    bigger = sorted([*committed, x + delta], reverse=True)
    assert not is_feasible(bigger, supplies) or (cap is not None and x + delta > cap)
