import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from adslots import io as aio
from adslots.model import (
    INF,
    BidKey,
    DuplicateBidderId,
    InvalidCtr,
    MalformedNumber,
    NegativeBid,
    NegativeBudget,
    NegativeSupply,
    NonDecreasingPositiveSupply,
    TooFewBidders,
    ValidationError,
    ZeroSupplyBeforePositive,
    click_units,
    compare_bids,
    format_rational,
    instance_to_dict,
    make_instance,
    pad_instance,
    parse_rational,
    scale_by_ctr,
    shuffle_ranks,
    validate_instance,
)


def raw(bidders, slots):
    return {"bidders": bidders, "slots": slots}


class TestParse:
    @pytest.mark.parametrize(
        "text, value",
        [("0.75", F(3, 4)), ("21/25", F(21, 25)), (3, F(3)), (0.1, F(1, 10)), (F(1, 3), F(1, 3))],
    )
    def test_values(self, text, value):
        assert parse_rational(text) == value

    def test_infinity_only_when_allowed(self):
        assert parse_rational("inf", allow_inf=True) == INF
        assert parse_rational(math.inf, allow_inf=True) == INF
        with pytest.raises(MalformedNumber):
            parse_rational("inf")

    @pytest.mark.parametrize("bad", ["abc", "1/0", None, True, float("nan"), [1]])
    def test_malformed(self, bad):
        with pytest.raises(MalformedNumber):
            parse_rational(bad, allow_inf=True)

    def test_format(self):
        assert format_rational(F(21, 25)) == "21/25"
        assert format_rational(INF) == "inf"


class TestValidation:
    def test_fig2_shape(self, fig2):
        assert [b.id for b in fig2.bidders] == ["1", "2", "3", "4"]
        assert fig2.slots == (100, 50, 25, 0)
        assert fig2.bidder("2").max_cpc == F(3, 4)
        assert fig2.positive_slots == 3

    @pytest.mark.parametrize(
        "doc, exc",
        [
            (raw([{"budget": -1}, {"budget": 1}], [2, 1]), NegativeBudget),
            (raw([{"budget": 1, "max_cpc": -1}, {"budget": 1}], [2, 1]), NegativeBid),
            (raw([{"budget": 1}, {"budget": 1}], [2, -1]), NegativeSupply),
            (raw([{"budget": 1}, {"budget": 1}], [1, 2]), NonDecreasingPositiveSupply),
            (raw([{"budget": 1}, {"budget": 1}], [2, 2]), NonDecreasingPositiveSupply),
            (raw([{"budget": 1}, {"budget": 1}, {"budget": 1}], [2, 0, 1]), ZeroSupplyBeforePositive),
            (raw([{"budget": 1}], [5]), TooFewBidders),
            (raw([], [5, 4]), TooFewBidders),
            (raw([{"budget": 1, "ctr": 0}, {"budget": 1}], [2, 1]), InvalidCtr),
            (raw([{"id": "a", "budget": 1}, {"id": "a", "budget": 1}], [2, 1]), DuplicateBidderId),
            (raw([{"budget": "x"}, {"budget": 1}], [2, 1]), MalformedNumber),
            (raw([{"budget": "inf"}, {"budget": 1}], [2, 1]), MalformedNumber),
            ({"slots": [1]}, ValidationError),
            (raw([{}, {"budget": 1}], [2, 1]), ValidationError),
        ],
    )
    def test_rejections(self, doc, exc):
        with pytest.raises(exc):
            validate_instance(doc)

    def test_one_bidder_two_slots_is_accepted(self):
        inst = validate_instance(raw([{"budget": 10, "max_cpc": 5}], [100, 0]))
        assert inst.n_bidders == 1

    def test_defaults(self):
        inst = validate_instance(raw([{"budget": 1}, {"budget": 2}], [3]))
        assert [b.id for b in inst.bidders] == ["1", "2"]
        assert all(b.max_cpc == INF and b.ctr == 1 for b in inst.bidders)
        assert [b.rank for b in inst.bidders] == [0, 1]


class TestPadding:
    def test_more_slots_adds_dummies(self):
        inst = pad_instance(make_instance([10], [100, 50, 0], bids=[5]))
        dummies = [b for b in inst.bidders if b.dummy]
        assert len(dummies) == 2
        assert all(b.budget == 0 and b.max_cpc == 0 for b in dummies)
        assert inst.by_bid()[0].id == "1"

    def test_more_bidders_adds_zero_slots(self):
        inst = pad_instance(make_instance([1, 2, 3], [7]))
        assert inst.slots == (7, 0, 0)

    def test_dummy_ids_avoid_collisions(self):
        inst = pad_instance(make_instance([1, 1], [5, 4, 3, 2], ids=["dummy-1", "x"]))
        ids = [b.id for b in inst.bidders]
        assert len(set(ids)) == 4

    @given(n=st.integers(1, 5), m=st.integers(1, 5))
    def test_idempotent_and_square(self, n, m):
        if max(n, m) < 2:
            return
        inst = make_instance([1] * n, list(range(m, 0, -1)))
        once = pad_instance(inst)
        assert once.n_bidders == len(once.slots) == max(n, m)
        assert pad_instance(once) == once


class TestBidOrder:
    KEYS = [BidKey(b, r) for b in (F(0), F(1, 2), F(1), INF) for r in range(3)]

    def test_higher_bid_wins_then_lower_rank(self):
        assert compare_bids(BidKey(F(2), 5), BidKey(F(1), 0)) == 1
        assert compare_bids(BidKey(F(1), 0), BidKey(F(1), 1)) == 1
        assert compare_bids(BidKey(INF, 3), BidKey(F(10**9), 0)) == 1
        assert compare_bids(BidKey(F(1), 1), BidKey(F(1), 1)) == 0

    def test_total_order_exhaustive(self):
        for a, b in itertools.product(self.KEYS, repeat=2):
            assert compare_bids(a, b) == -compare_bids(b, a)
            assert (compare_bids(a, b) == 0) == (a == b)
        for a, b, c in itertools.product(self.KEYS, repeat=3):
            if compare_bids(a, b) == 1 and compare_bids(b, c) == 1:
                assert compare_bids(a, c) == 1

    @given(st.lists(st.tuples(st.fractions(0, 10), st.integers(0, 4)), min_size=2, max_size=8))
    def test_sort_key_agrees_with_compare(self, pairs):
        keys = sorted((BidKey(b, r) for b, r in pairs), key=BidKey.sort_key)
        for a, b in zip(keys, keys[1:]):
            assert compare_bids(a, b) >= 0

    def test_shuffle_ranks_is_seeded_permutation(self, fig2):
        a, b = shuffle_ranks(fig2, 3), shuffle_ranks(fig2, 3)
        assert a == b
        assert sorted(x.rank for x in a.bidders) == [0, 1, 2, 3]


class TestCtr:
    def test_scaling_can_flip_the_order(self):
        inst = validate_instance(
            raw([{"budget": 10, "max_cpc": 2, "ctr": "1/2"}, {"budget": 10, "max_cpc": 1, "ctr": 2}], [10, 5])
        )
        assert [b.id for b in inst.by_bid()] == ["1", "2"]
        scaled = scale_by_ctr(inst)
        assert [b.max_cpc for b in scaled.bidders] == [1, 2]
        assert [b.id for b in scaled.by_bid()] == ["2", "1"]
        assert scale_by_ctr(scaled) == scaled

    def test_click_units(self):
        inst = validate_instance(raw([{"budget": 10, "ctr": "1/2"}, {"budget": 1}], [10, 5]))
        assert click_units(inst, "1", F(8), F(1)) == (F(4), F(2))


def instances():
    num = st.fractions(0, 50).map(lambda f: f.limit_denominator(16))
    bidder = st.fixed_dictionaries(
        {"budget": num, "max_cpc": st.one_of(num, st.just(INF)), "ctr": st.sampled_from([F(1), F(1, 2), F(3)])}
    )
    slots = st.lists(st.integers(1, 200), min_size=1, max_size=4, unique=True).map(
        lambda xs: sorted((F(x, 2) for x in xs), reverse=True)
    )
    return st.builds(
        lambda bs, ds, zeros: validate_instance({"bidders": bs, "slots": ds + [0] * zeros}),
        st.lists(bidder, min_size=2, max_size=5),
        slots,
        st.integers(0, 2),
    )


@given(instances())
def test_instance_round_trip_is_exact(inst):
    assert validate_instance(instance_to_dict(inst)) == inst
    assert aio.loads_instance(aio.dumps_instance(inst)) == inst
    assert validate_instance(inst) == inst


def test_json_floats_are_read_as_written_decimals():
    inst = aio.loads_instance('{"bidders": [{"budget": 0.1}, {"budget": 1}], "slots": [3.3]}')
    assert inst.bidders[0].budget == F(1, 10)
    assert inst.slots == (F(33, 10),)
