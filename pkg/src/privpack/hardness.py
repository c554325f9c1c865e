"""Counting-query release through packing.

A dataset of n' = b/2 records and m sensitivity-1 counting queries become a
packing instance: one unit-value "record" agent per record whose demand for
resource j is the query value q_j(record), plus 2b "filler" agents, each
offering every size-(m/2) resource subset at value 1/4. Record agents earn
at least 1/m per demanded unit while fillers earn exactly 1/(2m), so a good
packing serves the records first and spends leftovers on fillers. Releasing
``supply - filler consumption`` per resource then approximates the true
counts, and inherits the packing solver's privacy: the fillers' allocation
is differentially private with respect to the records.

Workload JSON:
    { "records": [ {field: scalar, ...}, ... ],
      "queries": [ {"name": str, "field": str, "op": "eq|ne|ge|gt|le|lt",
                    "value": scalar}, ... ] }
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import InstanceFormatError, ParameterGuardError, ShapeMismatchError
from .model import AgentData, Allocation, PackingInstance, _pairwise_sum

# C(m, m/2) bundles are materialized per filler agent; cap m to keep that
# explicit enumeration small.
MAX_QUERIES = 12

FILLER_VALUE = 0.25
_PREDICATE_OPS = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "ge": lambda a, b: a >= b,
    "gt": lambda a, b: a > b,
    "le": lambda a, b: a <= b,
    "lt": lambda a, b: a < b,
}


@dataclass(frozen=True)
class FieldPredicate:
    """Equality/threshold test on one scalar record field; 1.0 on match."""

    name: str
    field: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in _PREDICATE_OPS:
            raise InstanceFormatError(
                f"query {self.name!r}: unknown op {self.op!r}; "
                f"expected one of {sorted(_PREDICATE_OPS)}"
            )

    def __call__(self, record: dict) -> float:
        if self.field not in record:
            raise InstanceFormatError(
                f"query {self.name!r}: record is missing field {self.field!r}"
            )
        return 1.0 if _PREDICATE_OPS[self.op](record[self.field], self.value) else 0.0


@dataclass(frozen=True)
class QueryWorkload:
    """Records plus m callables mapping a record into [0, 1]."""

    records: tuple
    queries: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "queries", tuple(self.queries))

    @property
    def m(self) -> int:
        return len(self.queries)

    def query_matrix(self) -> np.ndarray:
        """q_j(d_i) as an (n', m) array; validates the [0, 1] range."""
        out = np.empty((len(self.records), self.m))
        for i, record in enumerate(self.records):
            for j, q in enumerate(self.queries):
                v = float(q(record))
                if not 0.0 <= v <= 1.0:
                    raise InstanceFormatError(
                        f"query {j} returned {v!r} outside [0, 1] on record {i}"
                    )
                out[i, j] = v
        return out

    def true_counts(self) -> np.ndarray:
        """q_j(D') = sum_i q_j(d_i), one total per query."""
        return np.asarray(_pairwise_sum(self.query_matrix(), axis=0), dtype=np.float64)


def load_workload(path) -> QueryWorkload:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    for field in ("records", "queries"):
        if not isinstance(doc, dict) or field not in doc:
            raise InstanceFormatError(f"{path}: missing required field '{field}'")
    queries = []
    for j, spec in enumerate(doc["queries"]):
        try:
            queries.append(
                FieldPredicate(
                    name=spec.get("name", f"q{j}"),
                    field=spec["field"],
                    op=spec["op"],
                    value=spec["value"],
                )
            )
        except (KeyError, TypeError) as exc:
            raise InstanceFormatError(
                f"{path}: query {j}: expected fields name/field/op/value ({exc})"
            ) from exc
    return QueryWorkload(records=tuple(doc["records"]), queries=tuple(queries))


def save_workload(workload: QueryWorkload, path) -> None:
    doc = {
        "records": list(workload.records),
        "queries": [
            {"name": q.name, "field": q.field, "op": q.op, "value": q.value}
            for q in workload.queries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


@dataclass(frozen=True)
class ReductionInstance:
    packing: PackingInstance
    record_agents: range  # set A: one unit-value agent per record
    filler_agents: range  # set B: 2b agents over size-(m/2) subsets
    supply_b: float


def build_reduction_instance(workload: QueryWorkload, b: int) -> ReductionInstance:
    """The packing instance whose solution releases the workload's counts.

    Requires an even query count m <= MAX_QUERIES and exactly b/2 records
    (the accuracy accounting depends on that dataset size).
    """
    m = workload.m
    if m < 2 or m % 2 != 0:
        raise ParameterGuardError(f"query count must be even and >= 2, got {m}")
    if m > MAX_QUERIES:
        raise ParameterGuardError(
            f"query count {m} exceeds {MAX_QUERIES}; filler menus enumerate "
            "all size-(m/2) subsets explicitly"
        )
    if b < 2 or b % 2 != 0:
        raise ParameterGuardError(f"supply must be even and >= 2, got {b}")
    n_records = len(workload.records)
    if n_records != b // 2:
        raise ParameterGuardError(
            f"dataset must hold exactly b/2 = {b // 2} records, got {n_records}"
        )

    qmat = workload.query_matrix()
    agents = [
        AgentData(values=np.array([1.0]), demands=qmat[i : i + 1, :].copy())
        for i in range(n_records)
    ]

    subsets = list(itertools.combinations(range(m), m // 2))
    filler_values = np.full(len(subsets), FILLER_VALUE)
    filler_demands = np.zeros((len(subsets), m))
    for k, subset in enumerate(subsets):
        filler_demands[k, list(subset)] = 1.0
    filler = AgentData(values=filler_values, demands=filler_demands)
    agents.extend([filler] * (2 * b))

    packing = PackingInstance(
        n=n_records + 2 * b, m=m, supply_b=float(b), agents=tuple(agents)
    )
    return ReductionInstance(
        packing=packing,
        record_agents=range(0, n_records),
        filler_agents=range(n_records, n_records + 2 * b),
        supply_b=float(b),
    )


def opt_lower_bound(workload: QueryWorkload, b: int) -> float:
    """Certified floor on the built instance's integral OPT:
    n' + (1/2m) * sum_j (b - q_j(D')) - 1/2."""
    m = workload.m
    counts = workload.true_counts()
    n_records = len(workload.records)
    return n_records + float(_pairwise_sum(b - counts)) / (2.0 * m) - 0.5


def release_queries(reduction: ReductionInstance, alloc: Allocation, b: float) -> np.ndarray:
    """Released answers: supply minus the fillers' per-resource consumption."""
    if len(alloc.x) != reduction.packing.n:
        raise ShapeMismatchError(
            f"allocation has {len(alloc.x)} agents, instance has {reduction.packing.n}"
        )
    m = reduction.packing.m
    rows = np.zeros((max(len(reduction.filler_agents), 1), m))
    for row, i in enumerate(reduction.filler_agents):
        rows[row] = alloc.x[i] @ reduction.packing.agents[i].demands
    filler_consumption = np.asarray(_pairwise_sum(rows, axis=0), dtype=np.float64)
    return b - filler_consumption


def evaluate_release_accuracy(workload: QueryWorkload, released: np.ndarray) -> float:
    """Average absolute error of released answers against the true counts."""
    released = np.asarray(released, dtype=np.float64)
    counts = workload.true_counts()
    if released.shape != counts.shape:
        raise ShapeMismatchError(
            f"released answers have shape {released.shape}, expected {counts.shape}"
        )
    return float(_pairwise_sum(np.abs(released - counts))) / workload.m


def matrix_workload(qmat: np.ndarray) -> QueryWorkload:
    """Workload from an explicit (n', m) query-value matrix. Records become
    {"x0": v0, ...} dicts; binary columns get equality predicates (so the
    workload round-trips through JSON), others direct [0,1] field reads."""
    qmat = np.asarray(qmat, dtype=np.float64)
    n_records, m = qmat.shape
    records = tuple(
        {f"x{j}": float(qmat[i, j]) for j in range(m)} for i in range(n_records)
    )
    queries = []
    for j in range(m):
        if set(np.unique(qmat[:, j])) <= {0.0, 1.0}:
            queries.append(FieldPredicate(name=f"q{j}", field=f"x{j}", op="eq", value=1.0))
        else:
            queries.append(_FieldLookup(name=f"q{j}", field=f"x{j}"))
    return QueryWorkload(records=records, queries=tuple(queries))


@dataclass(frozen=True)
class _FieldLookup:
    """Direct [0,1]-valued field read (for non-binary synthetic workloads)."""

    name: str
    field: str

    def __call__(self, record: dict) -> float:
        return float(record[self.field])
