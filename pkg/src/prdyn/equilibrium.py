"""Independent equilibrium oracle for both market modes.

The oracle deliberately shares no machinery with the proportional-response
iteration: it runs a damped multiplicative excess-demand fixed point
p <- p * z^gamma (z = aggregate demand at unit supply), which only needs the
demand oracles. Cobb-Douglas Fisher markets use the closed form instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import corresponding_price, demand
from .market import ExchangeState, MarketSpec, Mode
from .utilities import CobbDouglas

DEFAULT_DAMPING = 0.3


@dataclass(frozen=True)
class EquilibriumResult:
    x_star: np.ndarray
    p_star: np.ndarray
    b_star: np.ndarray  # b*[i, j] = x*[i, j] * p*[j]
    clearing: float
    optimality_gap: float
    budget_gap: float
    converged: bool
    iterations: int


def _budgets_at(market: MarketSpec, p: np.ndarray) -> np.ndarray:
    if market.mode is Mode.FISHER:
        return market.budgets
    rev = np.empty(market.n_buyers)
    for i, goods in enumerate(market.endowments):
        rev[i] = p[list(goods)].sum()
    return rev


def _aggregate_demand(market: MarketSpec, p: np.ndarray) -> np.ndarray:
    e = _budgets_at(market, p)
    return np.stack([demand(u, p, e[i]).x for i, u in enumerate(market.utilities)])


def _finish(market: MarketSpec, p: np.ndarray, converged: bool, iters: int) -> EquilibriumResult:
    x = _aggregate_demand(market, p)
    e = _budgets_at(market, p)
    b = x * p
    clearing = float(np.max(np.abs(x.sum(axis=0) - 1.0)))
    budget_gap = float(np.max(np.abs(b.sum(axis=1) - e) / e))
    # KKT residual: the corresponding price of each buyer's bundle should be
    # the market price.
    opt = 0.0
    for i, u in enumerate(market.utilities):
        q = corresponding_price(u, x[i], e[i])
        opt = max(opt, float(np.max(np.abs(q - p) / p)))
    return EquilibriumResult(
        x_star=x,
        p_star=p,
        b_star=b,
        clearing=clearing,
        optimality_gap=opt,
        budget_gap=budget_gap,
        converged=converged,
        iterations=iters,
    )


def solve_fisher_eq(
    market: MarketSpec,
    tol: float = 1e-10,
    max_iters: int = 20000,
    damping: float = DEFAULT_DAMPING,
) -> EquilibriumResult:
    assert market.mode is Mode.FISHER
    total = float(market.budgets.sum())
    if all(isinstance(u, CobbDouglas) for u in market.utilities):
        A = np.stack([u.weights for u in market.utilities])
        p = market.budgets @ A
        return _finish(market, p, converged=True, iters=0)

    p = np.full(market.n_goods, total / market.n_goods)
    for it in range(1, max_iters + 1):
        z = _aggregate_demand(market, p).sum(axis=0)
        if np.max(np.abs(z - 1.0)) <= tol:
            return _finish(market, p, converged=True, iters=it)
        p = p * z ** damping
        p *= total / p.sum()
    return _finish(market, p, converged=False, iters=max_iters)


def solve_exchange_eq(
    market: MarketSpec,
    tol: float = 1e-10,
    max_iters: int = 20000,
    damping: float = DEFAULT_DAMPING,
) -> EquilibriumResult:
    assert market.mode is Mode.EXCHANGE
    p = np.full(market.n_goods, 1.0 / market.n_goods)
    for it in range(1, max_iters + 1):
        z = _aggregate_demand(market, p).sum(axis=0)
        if np.max(np.abs(z - 1.0)) <= tol:
            return _finish(market, p, converged=True, iters=it)
        p = p * z ** damping
        p /= p.sum()
    return _finish(market, p, converged=False, iters=max_iters)


@dataclass(frozen=True)
class EquilibriumReport:
    demand_residual: float  # condition 1: allocation equals demand
    oversell: float  # condition 2: max(sum_i x_ij - 1, 0)
    undersell: float  # condition 3: max(1 - sum_i x_ij, 0)
    passed: bool


def verify_fisher_equilibrium(
    market: MarketSpec, x, p, tol: float = 1e-8
) -> EquilibriumReport:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    xd = np.stack(
        [demand(u, p, market.budgets[i]).x for i, u in enumerate(market.utilities)]
    )
    col = x.sum(axis=0)
    report = EquilibriumReport(
        demand_residual=float(np.max(np.abs(x - xd))),
        oversell=float(max(np.max(col - 1.0), 0.0)),
        undersell=float(max(np.max(1.0 - col), 0.0)),
        passed=False,
    )
    passed = report.demand_residual <= tol and report.oversell <= tol and report.undersell <= tol
    return EquilibriumReport(report.demand_residual, report.oversell, report.undersell, passed)


def verify_exchange_equilibrium(
    market: MarketSpec, x, p, tol: float = 1e-8
) -> EquilibriumReport:
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    # Exchange equilibria are scale free; demand is homogeneous of degree zero
    # in (p, e), so the report is identical under p -> c p. Normalize anyway so
    # residuals are comparable across calls.
    p = p / p.sum()
    e = _budgets_at(market, p)
    xd = np.stack([demand(u, p, e[i]).x for i, u in enumerate(market.utilities)])
    col = x.sum(axis=0)
    demand_residual = float(np.max(np.abs(x - xd)))
    oversell = float(max(np.max(col - 1.0), 0.0))
    undersell = float(max(np.max(1.0 - col), 0.0))
    passed = demand_residual <= tol and oversell <= tol and undersell <= tol
    return EquilibriumReport(demand_residual, oversell, undersell, passed)


@dataclass(frozen=True)
class TransformedEquilibrium:
    """Exchange equilibrium mapped into the lazy dynamics' state variables.

    Per-agent income is rescaled so total bank money is exactly 1, matching
    the dynamics' money-conservation invariant.
    """

    b_star: np.ndarray
    e_star: np.ndarray
    B_star: np.ndarray
    p_star: np.ndarray
    x_star: np.ndarray


def transform_exchange_equilibrium(
    market: MarketSpec, eq: EquilibriumResult
) -> TransformedEquilibrium:
    alpha = market.laziness
    income = _budgets_at(market, eq.p_star)  # per-agent revenue at p*
    B_tilde = income / alpha
    scale = float(B_tilde.sum())
    return TransformedEquilibrium(
        b_star=eq.x_star * eq.p_star / scale,
        e_star=income / scale,
        B_star=B_tilde / scale,
        p_star=eq.p_star / scale,
        x_star=eq.x_star,
    )


def equilibrium_exchange_state(transformed: TransformedEquilibrium) -> ExchangeState:
    """Exchange state sitting exactly at the transformed equilibrium."""
    return ExchangeState(
        budgets_B=transformed.B_star,
        spend_e=transformed.e_star,
        bids=transformed.b_star,
        iteration=0,
    )
