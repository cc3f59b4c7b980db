"""Generalized proportional response dynamics in Fisher markets.

One step: prices are the column sums of the bid matrix, goods are allocated
in proportion to bids, and each buyer re-bids her whole budget in proportion
to x_j * grad_j u(x) on her received bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveBid, UnderflowDetected
from .market import DynamicsTrace, FisherState, MarketSpec, Mode, TraceRecord
from .utilities import bid_shares

# Bids this small mean the dynamics is heading into a boundary allocation,
# where the potential-function bookkeeping is no longer trustworthy.
BID_FLOOR = 1e-280


@dataclass(frozen=True)
class StopRule:
    max_iters: int
    price_tol: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.price_tol < 0:
            raise ValueError(f"price_tol must be nonnegative, got {self.price_tol}")


def share_matrix(market: MarketSpec, x: np.ndarray) -> np.ndarray:
    """Stack of per-buyer bid-share simplex vectors at allocation x."""
    return np.stack([bid_shares(u, x[i]) for i, u in enumerate(market.utilities)])


def pr_step(market: MarketSpec, state: FisherState):
    """One proportional-response iteration.

    Returns (next_state, prices, allocation) where prices/allocation belong to
    the *current* iteration (they are computed from state.bids).
    """
    b = state.bids
    if not np.all(b > 0):
        raise NonPositiveBid(f"bid matrix must be strictly positive at iteration {state.iteration}")
    p = b.sum(axis=0)
    x = b / p
    b_next = market.budgets[:, None] * share_matrix(market, x)
    if b_next.min() < BID_FLOOR:
        raise UnderflowDetected(
            f"bid below {BID_FLOOR} at iteration {state.iteration + 1}; "
            "the dynamics is approaching a boundary allocation"
        )
    return FisherState(bids=b_next, iteration=state.iteration + 1), p, x


def default_initial_bids(market: MarketSpec) -> np.ndarray:
    """Uniform split of each budget across the goods."""
    return np.repeat(market.budgets[:, None] / market.n_goods, market.n_goods, axis=1)


def run_fisher(
    market: MarketSpec,
    b0: np.ndarray,
    stop: StopRule,
    record_every: int = 1,
) -> DynamicsTrace:
    """Iterate pr_step until successive prices move less than price_tol in the
    infinity norm, or max_iters steps have been taken. Every record_every-th
    iteration is recorded, plus always the final one."""
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    trace = DynamicsTrace(mode=Mode.FISHER)
    state = FisherState(bids=np.asarray(b0, dtype=float), iteration=0)
    prev_p = None
    while True:
        t = state.iteration
        next_state, p, x = pr_step(market, state)
        delta = float("inf") if prev_p is None else float(np.max(np.abs(p - prev_p)))
        record = TraceRecord(
            iteration=t, prices=p, bids=state.bids, allocation=x, max_price_delta=delta
        )
        if t % record_every == 0:
            trace.records.append(record)
        trace.n_steps = t + 1
        if delta < stop.price_tol:
            trace.stop_reason = "price_tol"
        elif t + 1 >= stop.max_iters:
            trace.stop_reason = "max_iters"
        if trace.stop_reason:
            if not trace.records or trace.records[-1].iteration != t:
                trace.records.append(record)
            return trace
        prev_p = p
        state = next_state
