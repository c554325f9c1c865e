"""Packing-problem data model, validation, allocation metrics, and file I/O.

An instance has n agents and m resources. Agent i chooses at most one of its
bundles; bundle k has value ``values[k]`` in [0,1] and consumes
``demands[k, j]`` in [0,1] units of resource j. Every resource has the same
supply ``supply_b`` (the uniform-supply simplification; the file format
reserves a per-resource supply vector but solvers reject non-uniform ones).

All operations here are pure functions over immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InstanceFormatError, ShapeMismatchError as ShapeError

# A constraint counts as violated only when consumption exceeds supply by
# more than this absolute slack, so summation noise cannot flip the verdict.
FEASIBILITY_ATOL = 1e-9


def _pairwise_sum(a: np.ndarray, axis=None) -> np.ndarray | float:
    """Sum with NumPy's pairwise reduction (compensated-error contract).

    NumPy only guarantees pairwise accumulation along contiguous fast-axis
    reductions, so off-axis sums go column by column over contiguous copies.
    """
    a = np.asarray(a, dtype=np.float64)
    if axis is None:
        return np.add.reduce(np.ascontiguousarray(a.reshape(-1)))
    moved = np.moveaxis(a, axis, -1)
    out = np.empty(moved.shape[:-1])
    for idx in np.ndindex(out.shape):
        out[idx] = np.add.reduce(np.ascontiguousarray(moved[idx]))
    return out


@dataclass(frozen=True)
class AgentData:
    """One agent's bundle menu: values (ell,) and demands (ell, m)."""

    values: np.ndarray
    demands: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        d = np.ascontiguousarray(np.asarray(self.demands, dtype=np.float64))
        if v.ndim != 1:
            raise ShapeError("values must be one-dimensional")
        if d.ndim != 2:
            raise ShapeError("demands must be two-dimensional (bundles x resources)")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "demands", d)

    @property
    def ell(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PackingInstance:
    """Agents with bundle menus, m resources, uniform per-resource supply."""

    n: int
    m: int
    supply_b: float
    agents: tuple[AgentData, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "supply_b", float(self.supply_b))


@dataclass(frozen=True)
class Allocation:
    """Fractional per-agent, per-bundle assignment; x[i] has shape (ell_i,)."""

    x: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "x",
            tuple(np.ascontiguousarray(np.asarray(xi, dtype=np.float64)) for xi in self.x),
        )


@dataclass(frozen=True)
class AllocationMetrics:
    objective: float
    consumption: np.ndarray  # per-resource totals, shape (m,)
    max_violation: float
    feasible: bool


def zero_allocation(instance: PackingInstance) -> Allocation:
    return Allocation(tuple(np.zeros(a.ell) for a in instance.agents))


def _in_unit_range(a: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(a)) and a.size >= 0 and np.all(a >= 0.0) and np.all(a <= 1.0))


def validate_instance(instance: PackingInstance) -> list[str]:
    """Return every range/shape violation found; an empty list means valid."""
    problems: list[str] = []
    if instance.n < 1:
        problems.append(f"n must be >= 1, got {instance.n}")
    if instance.m < 1:
        problems.append(f"m must be >= 1, got {instance.m}")
    if not np.isfinite(instance.supply_b) or instance.supply_b < 0:
        problems.append(f"supply must be finite and >= 0, got {instance.supply_b}")
    if len(instance.agents) != instance.n:
        problems.append(f"agent count {len(instance.agents)} does not match n={instance.n}")
    shapes_ok = True
    for i, agent in enumerate(instance.agents):
        if agent.ell < 1:
            problems.append(f"agent {i}: bundle count must be >= 1")
            shapes_ok = False
        if agent.demands.shape[0] != agent.ell:
            problems.append(
                f"agent {i}: demand row count {agent.demands.shape[0]} "
                f"does not match bundle count {agent.ell}"
            )
            shapes_ok = False
        if agent.demands.shape[1] != instance.m:
            problems.append(
                f"agent {i}: demand row length {agent.demands.shape[1]} "
                f"does not match m={instance.m}"
            )
            shapes_ok = False
    if not shapes_ok or not instance.agents:
        return problems
    # one vectorized range scan; fall back to per-agent checks only to name
    # the offenders when it trips
    all_values = np.concatenate([a.values for a in instance.agents])
    all_demands = np.concatenate([a.demands.reshape(-1) for a in instance.agents])
    if _in_unit_range(all_values) and _in_unit_range(all_demands):
        return problems
    for i, agent in enumerate(instance.agents):
        if not np.all(np.isfinite(agent.values)):
            problems.append(f"agent {i}: non-finite value")
        elif not _in_unit_range(agent.values):
            problems.append(f"agent {i}: value out of [0,1]")
        if not np.all(np.isfinite(agent.demands)):
            problems.append(f"agent {i}: non-finite demand")
        elif not _in_unit_range(agent.demands):
            problems.append(f"agent {i}: demand out of [0,1]")
    return problems


def validate_allocation_shape(instance: PackingInstance, alloc: Allocation) -> None:
    if len(alloc.x) != instance.n:
        raise ShapeError(
            f"allocation has {len(alloc.x)} agents, instance has {instance.n}"
        )
    for i, (agent, xi) in enumerate(zip(instance.agents, alloc.x)):
        if xi.shape != (agent.ell,):
            raise ShapeError(
                f"agent {i}: allocation length {xi.shape} does not match "
                f"bundle count {agent.ell}"
            )


def evaluate_allocation(instance: PackingInstance, alloc: Allocation) -> AllocationMetrics:
    """Objective and per-resource consumption of an allocation, computed
    exactly per the packing LP; feasibility uses FEASIBILITY_ATOL slack."""
    validate_allocation_shape(instance, alloc)
    per_agent_value = np.empty(instance.n)
    per_agent_cons = np.empty((instance.n, instance.m))
    for i, (agent, xi) in enumerate(zip(instance.agents, alloc.x)):
        per_agent_value[i] = _pairwise_sum(agent.values * xi)
        per_agent_cons[i] = xi @ agent.demands
    objective = float(_pairwise_sum(per_agent_value))
    consumption = np.asarray(_pairwise_sum(per_agent_cons, axis=0), dtype=np.float64)
    worst = float(np.max(consumption - instance.supply_b))
    return AllocationMetrics(
        objective=objective,
        consumption=consumption,
        max_violation=max(0.0, worst),
        feasible=worst <= FEASIBILITY_ATOL,
    )


# ---------------------------------------------------------------------------
# Instance file format (UTF-8 JSON):
#   { "n": int, "m": int, "supply": number,
#     "agents": [ { "values": [number], "demands": [[number]] } ] }
# "supply" may also be a list of m equal numbers (reserved extension); the
# solvers require uniformity and loading rejects a non-uniform vector.
# ---------------------------------------------------------------------------


def instance_to_dict(instance: PackingInstance) -> dict:
    return {
        "n": instance.n,
        "m": instance.m,
        "supply": instance.supply_b,
        "agents": [
            {"values": a.values.tolist(), "demands": a.demands.tolist()}
            for a in instance.agents
        ],
    }


def instance_from_dict(doc: dict) -> PackingInstance:
    for field in ("n", "m", "supply", "agents"):
        if field not in doc:
            raise InstanceFormatError(f"missing required field '{field}'")
    n, m = doc["n"], doc["m"]
    if not isinstance(n, int) or not isinstance(m, int):
        raise InstanceFormatError("'n' and 'm' must be integers")
    supply = doc["supply"]
    if isinstance(supply, list):
        if not supply:
            raise InstanceFormatError("'supply' list must be non-empty")
        if any(s != supply[0] for s in supply):
            raise InstanceFormatError(
                "non-uniform 'supply' vector: solvers require a uniform supply"
            )
        supply = supply[0]
    if not isinstance(supply, (int, float)) or isinstance(supply, bool):
        raise InstanceFormatError("'supply' must be a number")
    raw_agents = doc["agents"]
    if not isinstance(raw_agents, list):
        raise InstanceFormatError("'agents' must be a list")
    agents = []
    for i, entry in enumerate(raw_agents):
        if not isinstance(entry, dict) or "values" not in entry or "demands" not in entry:
            raise InstanceFormatError(f"agent {i}: expected object with 'values' and 'demands'")
        try:
            agents.append(AgentData(np.asarray(entry["values"]), np.asarray(entry["demands"])))
        except (ShapeError, ValueError) as exc:
            raise InstanceFormatError(f"agent {i}: {exc}") from exc
    instance = PackingInstance(n=n, m=m, supply_b=float(supply), agents=tuple(agents))
    problems = validate_instance(instance)
    if problems:
        raise InstanceFormatError("invalid instance: " + "; ".join(problems))
    return instance


def save_instance(instance: PackingInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


def load_instance(path) -> PackingInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top-level JSON value must be an object")
    try:
        return instance_from_dict(doc)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc


def instances_equal(a: PackingInstance, b: PackingInstance) -> bool:
    """Bit-exact equality on every numeric field (round-trip checks)."""
    if (a.n, a.m) != (b.n, b.m) or a.supply_b != b.supply_b:
        return False
    return all(
        np.array_equal(x.values, y.values) and np.array_equal(x.demands, y.demands)
        for x, y in zip(a.agents, b.agents)
    )
