"""Seeded random instances."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .model import INF, Instance, validate_instance


def random_rational(rng: random.Random, hi: int, denom: int, lo: int = 0) -> Fraction:
    return Fraction(rng.randint(lo * denom, hi * denom), denom)


def random_instance(
    rng: random.Random,
    n: int,
    n_slots: Optional[int] = None,
    zero_slots: int = 0,
    max_supply: int = 100,
    max_budget: int = 100,
    max_bid: int = 5,
    denom: int = 4,
    inf_bid_prob: float = 0.0,
    zero_budget_prob: float = 0.1,
    finite_bids: bool = True,
) -> Instance:
    """Random valid instance with ``n`` bidders.

    Positive supplies are distinct draws sorted descending; ``zero_slots`` of
    the slots are forced to zero at the tail. Small denominators make ties in
    budgets and bids common, which is where tie-breaking bugs live.
    """
    if n < 1:
        raise ValueError("need at least one bidder")
    n_slots = n if n_slots is None else n_slots
    if zero_slots > n_slots:
        raise ValueError("more zero slots than slots")
    positive = n_slots - zero_slots
    if positive < 1 and n_slots > 0 and zero_slots == n_slots:
        supplies: list[Fraction] = []
    else:
        pool: set[Fraction] = set()
        while len(pool) < positive:
            pool.add(random_rational(rng, max_supply, denom, lo=0) or Fraction(1, denom))
        supplies = sorted(pool, reverse=True)
    supplies += [Fraction(0)] * zero_slots

    bidders = []
    for i in range(n):
        budget = Fraction(0) if rng.random() < zero_budget_prob else random_rational(rng, max_budget, denom)
        if not finite_bids or rng.random() < inf_bid_prob:
            bid = INF
        else:
            bid = random_rational(rng, max_bid, denom)
        bidders.append({"id": str(i + 1), "budget": budget, "max_cpc": bid})
    return validate_instance({"bidders": bidders, "slots": supplies})
