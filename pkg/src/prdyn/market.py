"""Market descriptions and dynamic-state containers.

Goods always have unit supply. Fisher markets carry fixed money budgets;
exchange markets carry good endowments (a partition of the goods among the
agents) plus a per-agent laziness parameter alpha in (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    EndowmentNotPartition,
    LazinessOutOfRange,
    NonPositiveBudget,
    UtilityParamInvalid,
)
from .utilities import UtilitySpec


class Mode(Enum):
    FISHER = "fisher"
    EXCHANGE = "exchange"


@dataclass(frozen=True)
class MarketSpec:
    """Immutable market description.

    Fisher mode: ``budgets`` set, ``endowments``/``laziness`` None.
    Exchange mode: the converse; ``endowments[i]`` is the tuple of 0-based
    good indices owned by agent i, and the tuples partition range(n_goods).
    """

    n_buyers: int
    n_goods: int
    utilities: Tuple[UtilitySpec, ...]
    mode: Mode
    budgets: Optional[np.ndarray] = None
    endowments: Optional[Tuple[Tuple[int, ...], ...]] = None
    laziness: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "utilities", tuple(self.utilities))
        if self.budgets is not None:
            object.__setattr__(self, "budgets", np.asarray(self.budgets, dtype=float))
        if self.laziness is not None:
            object.__setattr__(self, "laziness", np.asarray(self.laziness, dtype=float))
        if self.endowments is not None:
            object.__setattr__(
                self, "endowments", tuple(tuple(int(j) for j in g) for g in self.endowments)
            )


def validate_market(spec: MarketSpec) -> MarketSpec:
    """Check all structural invariants; return the market unchanged if they hold."""
    n, m = spec.n_buyers, spec.n_goods
    if n < 1 or m < 1:
        raise UtilityParamInvalid(f"market must have at least one buyer and one good, got {n}x{m}")
    if len(spec.utilities) != n:
        raise UtilityParamInvalid(f"expected {n} utilities, got {len(spec.utilities)}")
    for i, u in enumerate(spec.utilities):
        if u.n_goods != m:
            raise UtilityParamInvalid(f"buyer {i}: utility covers {u.n_goods} goods, market has {m}")

    if spec.mode is Mode.FISHER:
        if spec.budgets is None:
            raise NonPositiveBudget("Fisher market requires budgets")
        if spec.endowments is not None or spec.laziness is not None:
            raise UtilityParamInvalid("Fisher market must not carry endowments or laziness")
        if spec.budgets.shape != (n,):
            raise NonPositiveBudget(f"budgets shape {spec.budgets.shape}, expected ({n},)")
        if not np.all(spec.budgets > 0):
            raise NonPositiveBudget(f"budgets must be strictly positive, got {spec.budgets}")
    else:
        if spec.budgets is not None:
            raise UtilityParamInvalid("exchange market must not carry budgets")
        if spec.endowments is None or spec.laziness is None:
            raise EndowmentNotPartition("exchange market requires endowments and laziness")
        if len(spec.endowments) != n:
            raise EndowmentNotPartition(f"expected {n} endowment sets, got {len(spec.endowments)}")
        owned = [j for g in spec.endowments for j in g]
        if sorted(owned) != list(range(m)):
            raise EndowmentNotPartition(
                f"endowment sets must partition the {m} goods, got {spec.endowments}"
            )
        if spec.laziness.shape != (n,):
            raise LazinessOutOfRange(f"laziness shape {spec.laziness.shape}, expected ({n},)")
        if not np.all((spec.laziness > 0) & (spec.laziness < 1)):
            raise LazinessOutOfRange(f"laziness must lie in (0, 1), got {spec.laziness}")
    return spec


@dataclass(frozen=True)
class FisherState:
    """Bid matrix b[i, j] (currency) at one iteration of the Fisher dynamics."""

    bids: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bids", np.asarray(self.bids, dtype=float))


@dataclass(frozen=True)
class ExchangeState:
    """Per-agent bank balance B, spendable money e = alpha * B, and bids."""

    budgets_B: np.ndarray
    spend_e: np.ndarray
    bids: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "budgets_B", np.asarray(self.budgets_B, dtype=float))
        object.__setattr__(self, "spend_e", np.asarray(self.spend_e, dtype=float))
        object.__setattr__(self, "bids", np.asarray(self.bids, dtype=float))


@dataclass
class TraceRecord:
    """State of one recorded iteration."""

    iteration: int
    prices: np.ndarray
    bids: np.ndarray
    allocation: np.ndarray
    max_price_delta: float
    potential_value: float = float("nan")
    budgets_B: Optional[np.ndarray] = None
    spend_e: Optional[np.ndarray] = None


@dataclass
class DynamicsTrace:
    """Ordered per-iteration records plus run-level bookkeeping.

    ``budget_drift`` is the worst deviation of sum_i B_i from 1 seen at any
    iteration of an exchange run (0.0 for Fisher runs).
    """

    mode: Mode
    records: List[TraceRecord] = field(default_factory=list)
    stop_reason: str = ""
    n_steps: int = 0
    budget_drift: float = 0.0

    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records])

    def price_matrix(self) -> np.ndarray:
        return np.array([r.prices for r in self.records])

    def is_consecutive(self) -> bool:
        its = self.iterations()
        return its.size > 0 and its[0] == 0 and bool(np.all(np.diff(its) == 1))
