"""Ground-truth oracles: exhaustive integral OPT for small instances, the
noiseless dual solver as a fractional near-OPT baseline, and the trivial
allocator for the uncontended regime (n <= supply)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dmw import run_dmw
from .errors import ParameterGuardError
from .model import Allocation, PackingInstance, FEASIBILITY_ATOL

# Cap on enumerated candidate combinations. Agents with identical menus are
# interchangeable, so enumeration runs over per-menu choice counts rather
# than per-agent choices; the cap applies to that collapsed count.
MAX_ENUMERATIONS = 10**7

# Product spaces up to this size are evaluated as one vectorized batch;
# larger (but still capped) spaces stream through itertools.
VECTOR_BATCH_LIMIT = 4 * 10**6

# Exact lexicographic tie resolution decodes every tied candidate; beyond
# this many ties the first one in enumeration order wins (still
# deterministic, the exact rule just isn't worth unbounded decoding).
TIE_DECODE_LIMIT = 10**5


@dataclass(frozen=True)
class OracleResult:
    opt_value: float
    allocation: Allocation
    method: str  # "brute" | "noiseless" | "trivial"
    enumerations: int


def _group_agents(instance: PackingInstance):
    """Agents with identical (values, demands) menus, first-occurrence order."""
    groups: dict[bytes, list[int]] = {}
    order: list[bytes] = []
    for i, agent in enumerate(instance.agents):
        key = agent.values.tobytes() + agent.demands.tobytes()
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)
    return [groups[k] for k in order]


def _compositions(total: int, parts: int):
    """Nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _group_rows(instance: PackingInstance, members):
    """Choice-count rows for one identical-menu group: each row is one way
    the group's agents can split over (bundles..., empty); returns
    (counts list, values (r,), consumption (r, m))."""
    agent = instance.agents[members[0]]
    opt_values = np.concatenate([agent.values, [0.0]])
    opt_demands = np.vstack([agent.demands, np.zeros((1, instance.m))])
    counts = list(_compositions(len(members), agent.ell + 1))
    cmat = np.asarray(counts, dtype=np.float64)
    return counts, cmat @ opt_values, cmat @ opt_demands


def brute_force_opt(instance: PackingInstance) -> OracleResult:
    """Exact integral OPT by exhaustive enumeration.

    Each agent independently picks one bundle or nothing; agents with
    identical menus are collapsed to choice counts, which preserves the
    optimum. Among equal-objective feasible candidates the lexicographically
    smallest allocation wins, encoding each agent's choice as its bundle
    index with the empty choice last.
    """
    groups = _group_agents(instance)
    space = 1
    for members in groups:
        space *= math.comb(len(members) + instance.agents[members[0]].ell,
                           instance.agents[members[0]].ell)
        if space > MAX_ENUMERATIONS:
            raise ParameterGuardError(
                f"instance too large for exhaustive search: more than "
                f"{MAX_ENUMERATIONS} candidate combinations"
            )

    tables = [_group_rows(instance, members) for members in groups]
    if space <= VECTOR_BATCH_LIMIT:
        best_value, tie_indices = _search_vectorized(instance, tables)
    else:
        best_value, tie_indices = _search_streaming(instance, tables)
    if best_value is None:
        raise ParameterGuardError("no feasible integral allocation found")

    radices = [len(t[0]) for t in tables]
    if len(tie_indices) > 1:
        tie_indices = tie_indices[:TIE_DECODE_LIMIT]
        keys = [
            (_candidate_key(instance, groups, _decode(idx, radices, tables)), idx)
            for idx in tie_indices
        ]
        best_index = min(keys)[1]
    else:
        best_index = tie_indices[0]
    counts = _decode(best_index, radices, tables)
    return OracleResult(
        opt_value=float(best_value),
        allocation=_counts_to_allocation(instance, groups, counts),
        method="brute",
        enumerations=space,
    )


def _search_vectorized(instance, tables):
    values = np.zeros(1)
    cons = np.zeros((1, instance.m))
    for _, gv, gc in tables:
        values = (values[:, None] + gv[None, :]).reshape(-1)
        cons = (cons[:, None, :] + gc[None, :, :]).reshape(-1, instance.m)
    feasible = np.all(cons <= instance.supply_b + FEASIBILITY_ATOL, axis=1)
    if not feasible.any():
        return None, []
    masked = np.where(feasible, values, -np.inf)
    best = float(np.max(masked))
    return best, np.flatnonzero(masked == best).tolist()


def _search_streaming(instance, tables):
    b = instance.supply_b
    best, ties = None, []
    index = 0
    for combo in itertools.product(*(range(len(t[0])) for t in tables)):
        value = 0.0
        consumption = np.zeros(instance.m)
        for (counts, gv, gc), row in zip(tables, combo):
            value += gv[row]
            consumption += gc[row]
        if np.max(consumption - b) <= FEASIBILITY_ATOL:
            if best is None or value > best:
                best, ties = value, [index]
            elif value == best:
                ties.append(index)
        index += 1
    return best, ties


def _decode(index, radices, tables):
    """Flat product index (group 0 most significant) to per-group counts."""
    rows = []
    for radix in reversed(radices):
        rows.append(index % radix)
        index //= radix
    rows.reverse()
    return [tables[g][0][row] for g, row in enumerate(rows)]


def _candidate_key(instance, groups, group_counts):
    """Per-agent choice tuple (bundle index, empty = ell_i) in agent order,
    assigning each group's choices to its members in ascending option order
    (the lexicographically smallest representative)."""
    code = [0] * instance.n
    for members, counts in zip(groups, group_counts):
        pos = 0
        for option, c in enumerate(counts):
            for _ in range(c):
                code[members[pos]] = option
                pos += 1
    return tuple(code)


def _counts_to_allocation(instance, groups, group_counts) -> Allocation:
    xs = [np.zeros(a.ell) for a in instance.agents]
    for members, counts in zip(groups, group_counts):
        ell = instance.agents[members[0]].ell
        pos = 0
        for option, c in enumerate(counts):
            for _ in range(c):
                if option < ell:
                    xs[members[pos]][option] = 1.0
                pos += 1
    return Allocation(tuple(xs))


def noiseless_dual_mwu(instance: PackingInstance, alpha: float, T: int):
    """Deterministic zero-noise run of the batch dual solver: the fractional
    near-OPT baseline for gap measurements. Same code path as a noisy run
    with the noise scale pinned to 0."""
    result = run_dmw(instance, spec=None, alpha=alpha, seed=0, t_override=T)
    return result.allocation, result.report


def trivial_allocate(instance: PackingInstance) -> Allocation:
    """Uncontended optimum for n <= supply: every agent takes its highest-
    value bundle (ties to the smallest index). Feasible because per-resource
    consumption is at most n <= supply."""
    if instance.n > instance.supply_b:
        raise ParameterGuardError(
            f"trivial allocation needs n <= supply, got n={instance.n}, "
            f"supply={instance.supply_b!r}"
        )
    xs = []
    for agent in instance.agents:
        xi = np.zeros(agent.ell)
        xi[int(np.argmax(agent.values))] = 1.0
        xs.append(xi)
    return Allocation(tuple(xs))
