"""Lagrangian machinery shared by the solvers.

Prices live on the scaled simplex: an (m+1)-vector of nonnegative entries
whose l1 norm equals ``p_max``. Coordinate m (0-based) is the dummy
constraint <0, x> <= 0; it carries no demand and no supply, so only the
first m coordinates enter surpluses and payments.

An agent's best response to prices p takes the bundle maximizing
``value - priced demand`` among bundles with nonnegative surplus (a surplus
of exactly zero is taken); ties go to the smallest bundle index; if every
surplus is negative the agent takes nothing.

Surplus evaluation subtracts the priced demand one resource at a time, in
resource order. The solver kernels pin the same order, which keeps the two
backends bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .model import Allocation, AgentData, PackingInstance, _pairwise_sum

# |sum(prices) - p_max| <= SIMPLEX_RTOL * p_max must hold for a price vector.
SIMPLEX_RTOL = 1e-9


@dataclass(frozen=True)
class DualPriceVector:
    """m+1 nonnegative prices with l1 norm pinned to p_max."""

    prices: np.ndarray
    p_max: float

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.prices, dtype=np.float64))
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "p_max", float(self.p_max))
        if p.ndim != 1 or p.shape[0] < 2:
            raise ShapeMismatchError("prices must be a 1-d vector of m+1 >= 2 entries")
        if np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ValueError("prices must be finite and nonnegative")
        if abs(float(_pairwise_sum(p)) - self.p_max) > SIMPLEX_RTOL * self.p_max:
            raise ValueError(
                f"price vector l1 norm {float(_pairwise_sum(p))!r} "
                f"deviates from p_max={self.p_max!r}"
            )

    @property
    def m(self) -> int:
        return self.prices.shape[0] - 1

    @property
    def real(self) -> np.ndarray:
        """The m resource prices (dummy excluded)."""
        return self.prices[:-1]


def uniform_prices(m: int, p_max: float) -> DualPriceVector:
    """The initial price vector: every coordinate equals p_max / (m+1)."""
    return DualPriceVector(np.full(m + 1, p_max / (m + 1)), p_max)


@dataclass(frozen=True)
class BestResponse:
    """Chosen bundle index (None = empty allocation) and its surplus."""

    chosen: int | None
    utility: float


def surpluses(agent: AgentData, prices: np.ndarray) -> np.ndarray:
    """value - priced demand per bundle; subtraction in resource order."""
    s = agent.values.copy()
    for j in range(agent.demands.shape[1]):
        s -= agent.demands[:, j] * prices[j]
    return s


def best_response(agent: AgentData, p: DualPriceVector) -> BestResponse:
    if p.m != agent.demands.shape[1]:
        raise ShapeMismatchError(
            f"price vector has {p.m} resource coordinates, agent has "
            f"{agent.demands.shape[1]}"
        )
    s = surpluses(agent, p.prices)
    k = int(np.argmax(s))
    util = float(s[k])
    if util >= 0.0:
        return BestResponse(chosen=k, utility=util)
    return BestResponse(chosen=None, utility=0.0)


def best_response_allocation(instance: PackingInstance, p: DualPriceVector) -> Allocation:
    xs = []
    for agent in instance.agents:
        xi = np.zeros(agent.ell)
        br = best_response(agent, p)
        if br.chosen is not None:
            xi[br.chosen] = 1.0
        xs.append(xi)
    return Allocation(tuple(xs))


def lagrangian(instance: PackingInstance, alloc: Allocation, p: DualPriceVector) -> float:
    """b * sum_j p_j  +  sum_i sum_k x_ik (value_ik - priced demand_ik).

    The dummy coordinate contributes nothing: its supply and demands are 0.
    """
    if p.m != instance.m:
        raise ShapeMismatchError(f"price vector has {p.m} resources, instance has {instance.m}")
    if len(alloc.x) != instance.n:
        raise ShapeMismatchError(
            f"allocation has {len(alloc.x)} agents, instance has {instance.n}"
        )
    supply_term = instance.supply_b * float(_pairwise_sum(p.real))
    per_agent = np.empty(instance.n)
    for i, (agent, xi) in enumerate(zip(instance.agents, alloc.x)):
        if xi.shape != (agent.ell,):
            raise ShapeMismatchError(f"agent {i}: allocation length mismatch")
        per_agent[i] = float(_pairwise_sum(xi * surpluses(agent, p.prices)))
    return supply_term + float(_pairwise_sum(per_agent))


def lagrangian_decomposed(
    instance: PackingInstance, alloc: Allocation, p: DualPriceVector
) -> float:
    """Same value as :func:`lagrangian`, evaluated as a sum of per-agent
    terms that each carry a b/n share of the supply."""
    share = instance.supply_b / instance.n
    per_agent = np.empty(instance.n)
    for i, (agent, xi) in enumerate(zip(instance.agents, alloc.x)):
        value = float(_pairwise_sum(agent.values * xi))
        cons = xi @ agent.demands
        per_agent[i] = value - float(_pairwise_sum(p.real * (cons - share)))
    return float(_pairwise_sum(per_agent))


def exact_subgradient(instance: PackingInstance, p: DualPriceVector) -> np.ndarray:
    """Per-resource supply minus best-response consumption (m entries).

    The dummy coordinate's component is identically 0 and left to callers.
    """
    if p.m != instance.m:
        raise ShapeMismatchError(f"price vector has {p.m} resources, instance has {instance.m}")
    per_agent_cons = np.zeros((instance.n, instance.m))
    for i, agent in enumerate(instance.agents):
        br = best_response(agent, p)
        if br.chosen is not None:
            per_agent_cons[i] = agent.demands[br.chosen]
    consumption = np.asarray(_pairwise_sum(per_agent_cons, axis=0), dtype=np.float64)
    return instance.supply_b - consumption


def dual_objective(instance: PackingInstance, p: DualPriceVector) -> float:
    """max_x L(x, p), attained at the per-agent best responses."""
    return lagrangian(instance, best_response_allocation(instance, p), p)
