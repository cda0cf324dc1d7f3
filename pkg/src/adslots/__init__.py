"""Exact-arithmetic mechanisms for offline ad slot scheduling."""
from .model import (
    Bidder,
    BidKey,
    Instance,
    ValidationError,
    compare_bids,
    make_instance,
    pad_instance,
    scale_by_ctr,
    validate_instance,
)
from .scheduling import Schedule, audit_schedule, build_schedule, is_feasible, makespan, max_additional_clicks
from .mechanisms import (
    Outcome,
    PriceBlock,
    find_price_block,
    gfp,
    ps_budgets_only,
    ps_general,
    ps_single_slot,
    run_mechanism,
    threshold_budget,
)

__version__ = "0.1.0"
