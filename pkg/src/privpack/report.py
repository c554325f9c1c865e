"""Run reports shared by the solvers and the experiment harness."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)  # 'inf' / '-inf' / 'nan' as strings for strict JSON
    if isinstance(value, dict):
        return {k: _json_safe(value[k]) for k in value}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


@dataclass
class SolverReport:
    """Everything needed to reproduce and audit one solver run.

    ``wall_time_ms`` is the only volatile field; deterministic serialization
    drops it so identical seeds yield byte-identical output.
    """

    solver: str
    status: str = "ok"
    objective: float = 0.0
    opt_reference: float | None = None
    gap: float | None = None
    max_violation: float = 0.0
    feasible: bool = False
    exact_feasible: bool | None = None
    rounds: int = 0
    clamp_events: int = 0
    best_response_evals: int = 0
    duality_gap_proxy: float | None = None
    wall_time_ms: float = 0.0
    seed: int = 0
    params: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    error: str | None = None

    def to_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "solver": self.solver,
            "status": self.status,
            "objective": self.objective,
            "opt_reference": self.opt_reference,
            "gap": self.gap,
            "max_violation": self.max_violation,
            "feasible": self.feasible,
            "exact_feasible": self.exact_feasible,
            "rounds": self.rounds,
            "clamp_events": self.clamp_events,
            "best_response_evals": self.best_response_evals,
            "duality_gap_proxy": self.duality_gap_proxy,
            "seed": self.seed,
            "params": self.params,
            "warnings": list(self.warnings),
            "error": self.error,
        }
        if include_timing:
            doc["wall_time_ms"] = self.wall_time_ms
        return _json_safe(doc)

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing), indent=1, sort_keys=False)
