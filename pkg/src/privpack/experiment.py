"""Experiment sweeps: Cartesian parameter grids, per-run reports, CSV out.

A sweep config is JSON:

    { "solver": "dmw",                  # dmw|dmw-exact|domw|domw-online|noiseless|brute
      "kind": "uniform",                # instance family (see generators)
      "n": [400], "m": [4], "ell": [2],
      "b": [50, 100, 200],
      "eps": [5.0], "delta": [1e-4], "alpha": [0.3],
      "seeds": [1, 2, 3],
      "t_override": 2000,               # optional; required for "noiseless"
      "mode": null,                     # domw: pure|approx (null = from delta)
      "dummy_reset": false,
      "reference": "none",              # none|brute|noiseless
      "workers": 1,
      "output": "results.csv" }

Each grid point x seed becomes one row; the instance is regenerated from the
row's seed, and the same seed drives the solver. Rows appear in grid-product
order (n, m, ell, b, eps, delta, alpha, then seed), regardless of worker
scheduling, and runs that fail land in their row's status/error columns
without aborting the sweep. The CSV contains no volatile fields, so reruns
of one config are byte-identical.
"""

from __future__ import annotations

import csv
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .dmw import run_dmw, run_dmw_exact_feasible
from .domw import OnlineAllocator, run_domw, sample_order
from .errors import InstanceFormatError, ParameterGuardError, PrivpackError
from .generators import KINDS, generate_instance
from .model import Allocation, evaluate_allocation
from .privacy import PrivacySpec
from .reference import brute_force_opt
from .report import SolverReport

SOLVERS = ("dmw", "dmw-exact", "domw", "domw-online", "noiseless", "brute")
REFERENCES = ("none", "brute", "noiseless")

GRID_FIELDS = ("n", "m", "ell", "b", "eps", "delta", "alpha")

CSV_COLUMNS = [
    "solver", "kind", "n", "m", "ell", "b", "eps", "delta", "alpha", "seed",
    "t_override", "mode", "dummy_reset", "status",
    "objective", "opt_reference", "gap", "max_violation", "feasible",
    "exact_feasible", "rounds", "clamp_events", "best_response_evals",
    "duality_gap_proxy",
    "T", "t_formula", "eta", "p_max", "eps_step", "sigma", "grad_max",
    "noise_scale", "beta", "supply_requirement", "supply_used",
    "eta_grad_max", "oracle", "backend",
    "warnings", "error",
]


@dataclass(frozen=True)
class ExperimentConfig:
    solver: str
    kind: str = "uniform"
    n: tuple = (100,)
    m: tuple = (4,)
    ell: tuple = (2,)
    b: tuple = (25,)
    eps: tuple = (1.0,)
    delta: tuple = (1e-6,)
    alpha: tuple = (0.2,)
    seeds: tuple = (0,)
    t_override: int | None = None
    mode: str | None = None
    dummy_reset: bool = False
    reference: str = "none"
    workers: int = 1
    output: str = "results.csv"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise InstanceFormatError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.kind not in KINDS:
            raise InstanceFormatError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.reference not in REFERENCES:
            raise InstanceFormatError(
                f"unknown reference {self.reference!r}; expected one of {REFERENCES}"
            )
        for name in GRID_FIELDS:
            grid = getattr(self, name)
            object.__setattr__(self, name, tuple(grid))
            if not getattr(self, name):
                raise InstanceFormatError(f"grid '{name}' must be non-empty")
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.seeds:
            raise InstanceFormatError("'seeds' must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise InstanceFormatError("'seeds' must be distinct")
        if self.solver == "noiseless" and self.t_override is None:
            raise InstanceFormatError("solver 'noiseless' requires 't_override'")
        if self.workers < 1:
            raise InstanceFormatError("'workers' must be >= 1")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InstanceFormatError(
                    f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
                ) from exc
        if not isinstance(doc, dict) or "solver" not in doc:
            raise InstanceFormatError(f"{path}: config must be an object with a 'solver' field")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise InstanceFormatError(f"{path}: unknown config fields {sorted(unknown)}")
        for name in GRID_FIELDS + ("seeds",):
            if name in doc and not isinstance(doc[name], list):
                doc[name] = [doc[name]]
        return cls(**doc)

    def points(self):
        """Grid points x seeds, in deterministic row order."""
        for combo in itertools.product(*(getattr(self, g) for g in GRID_FIELDS)):
            for seed in self.seeds:
                yield dict(zip(GRID_FIELDS, combo)) | {"seed": seed}


def _run_domw_online(instance, spec, alpha, seed, mode, dummy_reset):
    """Batch instance through the online engine, in the engine's own sampled
    order; reproduces the batch solver exactly."""
    import time

    started = time.perf_counter()
    order = sample_order(instance.n, seed)
    allocator = OnlineAllocator(
        n=instance.n,
        m=instance.m,
        supply_b=instance.supply_b,
        spec=spec,
        alpha=alpha,
        seed=seed,
        mode=mode,
        dummy_reset=dummy_reset,
    )
    xs = [None] * instance.n
    for t in range(instance.n):
        i = int(order[t])
        outcome = allocator.next_decision(instance.agents[i])
        xi = [0.0] * instance.agents[i].ell
        if outcome.chosen is not None:
            xi[outcome.chosen] = 1.0
        xs[i] = xi
    allocation = Allocation(tuple(xs))
    metrics = evaluate_allocation(instance, allocation)
    return SolverReport(
        solver="domw-online",
        objective=metrics.objective,
        max_violation=metrics.max_violation,
        feasible=metrics.feasible,
        rounds=instance.n,
        clamp_events=allocator.clamp_events,
        best_response_evals=instance.n,
        wall_time_ms=(time.perf_counter() - started) * 1e3,
        seed=seed,
        params={
            "n": instance.n,
            "m": instance.m,
            "supply_used": instance.supply_b,
            "epsilon": spec.epsilon,
            "delta": spec.delta,
            "oracle": False,
            "dummy_reset": dummy_reset,
            "backend": "python",
            **allocator.params.echo(),
        },
        warnings=list(allocator.params.warnings),
    )


def run_point(config: ExperimentConfig, point: dict) -> dict:
    """One sweep row. Failures are captured into status/error."""
    row = {c: "" for c in CSV_COLUMNS}
    row.update(
        solver=config.solver,
        kind=config.kind,
        t_override=config.t_override,
        mode=config.mode,
        dummy_reset=config.dummy_reset,
        status="ok",
        **point,
    )
    seed = point["seed"]
    alpha = point["alpha"]
    try:
        instance = generate_instance(
            config.kind, point["n"], point["m"], point["ell"], point["b"], seed
        )
        spec = None
        if config.solver not in ("noiseless", "brute"):
            spec = PrivacySpec(epsilon=point["eps"], delta=point["delta"])

        if config.solver == "dmw":
            report = run_dmw(instance, spec, alpha, seed, t_override=config.t_override).report
        elif config.solver == "dmw-exact":
            report = run_dmw_exact_feasible(
                instance, spec, alpha, seed, t_override=config.t_override
            ).report
        elif config.solver == "noiseless":
            report = run_dmw(instance, None, alpha, seed, t_override=config.t_override).report
        elif config.solver == "domw":
            report = run_domw(
                instance, spec, alpha, seed, mode=config.mode, dummy_reset=config.dummy_reset
            ).report
        elif config.solver == "domw-online":
            report = _run_domw_online(instance, spec, alpha, seed, config.mode, config.dummy_reset)
        elif config.solver == "brute":
            oracle = brute_force_opt(instance)
            metrics = evaluate_allocation(instance, oracle.allocation)
            report = SolverReport(
                solver="brute",
                objective=oracle.opt_value,
                max_violation=metrics.max_violation,
                feasible=metrics.feasible,
                rounds=0,
                best_response_evals=oracle.enumerations,
                seed=seed,
                params={"n": instance.n, "m": instance.m, "supply_used": instance.supply_b},
            )
        else:  # pragma: no cover - guarded by config validation
            raise InstanceFormatError(f"unknown solver {config.solver!r}")

        if config.reference == "brute":
            report.opt_reference = brute_force_opt(instance).opt_value
        elif config.reference == "noiseless":
            ref_t = config.t_override if config.t_override is not None else report.rounds
            ref = run_dmw(instance, None, alpha, seed, t_override=ref_t)
            report.opt_reference = ref.report.objective
        if report.opt_reference is not None:
            report.gap = report.opt_reference - report.objective

        doc = report.to_dict()
        params = doc.pop("params")
        doc.pop("seed")
        row.update({k: v for k, v in doc.items() if k in CSV_COLUMNS})
        row.update({k: v for k, v in params.items() if k in CSV_COLUMNS})
        row["warnings"] = " | ".join(report.warnings)
        row["error"] = ""
    except ParameterGuardError as exc:
        row["status"] = "param_guard"
        row["error"] = str(exc)
    except (PrivpackError, ValueError) as exc:
        row["status"] = "error"
        row["error"] = str(exc)
    return row


def _run_point_packed(args):
    config_doc, point = args
    return run_point(ExperimentConfig(**config_doc), point)


def run_experiment(config: ExperimentConfig, output: str | None = None) -> list[dict]:
    """Run the whole grid and write the CSV; returns the rows in order."""
    points = list(config.points())
    if config.workers > 1:
        from dataclasses import asdict

        payload = [(asdict(config), p) for p in points]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_point_packed, payload))
    else:
        rows = [run_point(config, p) for p in points]

    path = output if output is not None else config.output
    if path:
        write_rows_csv(rows, path)
    return rows


def _csv_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_csv_cell(row.get(c, "")) for c in CSV_COLUMNS])
