"""Lazy proportional response dynamics in exchange markets.

Each agent keeps a bank balance B_i, spends only the fraction alpha_i of it
per round, and collects the revenue of the goods she owns. Total money in the
system is conserved at 1.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveBid, UnderflowDetected
from .fisher import BID_FLOOR, StopRule, share_matrix
from .market import DynamicsTrace, ExchangeState, MarketSpec, Mode, TraceRecord


def _revenue(market: MarketSpec, p: np.ndarray) -> np.ndarray:
    """Per-agent revenue sum of prices of owned goods."""
    rev = np.empty(market.n_buyers)
    for i, goods in enumerate(market.endowments):
        rev[i] = p[list(goods)].sum()
    return rev


def lazy_step(market: MarketSpec, state: ExchangeState):
    """One lazy-PR iteration; returns (next_state, prices, allocation)."""
    b = state.bids
    if not np.all(b > 0):
        raise NonPositiveBid(f"bid matrix must be strictly positive at iteration {state.iteration}")
    alpha = market.laziness
    p = b.sum(axis=0)
    x = b / p
    B_next = (1.0 - alpha) * state.budgets_B + _revenue(market, p)
    e_next = alpha * B_next
    b_next = e_next[:, None] * share_matrix(market, x)
    if b_next.min() < BID_FLOOR:
        raise UnderflowDetected(
            f"bid below {BID_FLOOR} at iteration {state.iteration + 1}; "
            "the dynamics is approaching a boundary allocation"
        )
    next_state = ExchangeState(
        budgets_B=B_next, spend_e=e_next, bids=b_next, iteration=state.iteration + 1
    )
    return next_state, p, x


def default_initial_exchange(market: MarketSpec) -> ExchangeState:
    """Equal bank balances summing to 1, uniform bid split."""
    n, m = market.n_buyers, market.n_goods
    B0 = np.full(n, 1.0 / n)
    e0 = market.laziness * B0
    b0 = np.repeat(e0[:, None] / m, m, axis=1)
    return ExchangeState(budgets_B=B0, spend_e=e0, bids=b0, iteration=0)


def run_exchange(
    market: MarketSpec,
    init: ExchangeState,
    stop: StopRule,
    record_every: int = 1,
) -> DynamicsTrace:
    """Iterate lazy_step; stop when successive allocations move less than
    price_tol in the infinity norm, or after max_iters steps."""
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    trace = DynamicsTrace(mode=Mode.EXCHANGE)
    state = init
    prev_x = None
    while True:
        t = state.iteration
        next_state, p, x = lazy_step(market, state)
        trace.budget_drift = max(trace.budget_drift, abs(float(state.budgets_B.sum()) - 1.0))
        delta = float("inf") if prev_x is None else float(np.max(np.abs(x - prev_x)))
        record = TraceRecord(
            iteration=t,
            prices=p,
            bids=state.bids,
            allocation=x,
            max_price_delta=delta,
            budgets_B=state.budgets_B,
            spend_e=state.spend_e,
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
        prev_x = x
        state = next_state
