"""Batch private packing solver: noisy dual multiplicative-weights updates.

Each of T rounds computes every agent's best response to the current prices,
perturbs the resulting supply-minus-consumption subgradient with per-
coordinate Laplace noise, truncates it to +/- grad_max, applies the
multiplicative update with normalization back to the l1 = p_max simplex
(the dummy coordinate's gradient component is pinned to 0), and finally
averages the per-round integral best responses into the fractional output.

Only the price path touches noisy aggregates; each agent's allocation is
post-processing of its own data plus that price path, which is what makes
the output jointly private when the prices are differentially private.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels_py, kernels
from .dual import DualPriceVector
from .errors import InstanceFormatError, ParameterGuardError, SolverRuntimeError
from .model import Allocation, PackingInstance, evaluate_allocation, validate_instance
from .packed import pack_instance
from .privacy import NoiseStream, PrivacySpec, per_step_epsilon_dmw
from .report import SolverReport
from . import dual

DEFAULT_CHUNK_ROUNDS = 32768

_FAIL_MESSAGES = {
    kernels.FAIL_POSITIVITY: "multiplicative update produced a nonpositive weight",
    kernels.FAIL_NORM: "price vector drifted off the l1 = p_max simplex",
}


@dataclass(frozen=True)
class DmwParams:
    """Derived run parameters for the batch solver."""

    T: int
    eta: float
    p_max: float
    eps_step: float
    grad_max: float
    alpha: float
    noise_scale: float
    t_formula: int | None
    t_override: int | None
    beta: float
    supply_requirement: float | None
    warnings: tuple[str, ...]

    def echo(self) -> dict:
        return {
            "T": self.T,
            "t_formula": self.t_formula,
            "t_override": self.t_override,
            "eta": self.eta,
            "p_max": self.p_max,
            "eps_step": self.eps_step,
            "grad_max": self.grad_max,
            "alpha": self.alpha,
            "noise_scale": self.noise_scale,
            "beta": self.beta,
            "supply_requirement": self.supply_requirement,
            "eta_grad_max": self.eta * self.grad_max,
        }


@dataclass(frozen=True)
class DmwTrace:
    """Optional per-round log. ``prices`` rows are the vectors the agents
    responded to; gradients come in exact / noisy / truncated stages."""

    prices: np.ndarray      # (T, m+1)
    phi: np.ndarray         # (T,)
    grad_exact: np.ndarray  # (T, m)
    grad_noisy: np.ndarray  # (T, m)
    grad_trunc: np.ndarray  # (T, m)

    def to_csv(self, path, include_gradients: bool = False) -> None:
        T, mp1 = self.prices.shape
        m = mp1 - 1
        cols = ["round", "phi"] + [f"price_{j}" for j in range(mp1)]
        if include_gradients:
            cols += [f"grad_raw_{j}" for j in range(m)]
            cols += [f"grad_trunc_{j}" for j in range(m)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for t in range(T):
                row = [str(t + 1), repr(float(self.phi[t]))]
                row += [repr(float(v)) for v in self.prices[t]]
                if include_gradients:
                    row += [repr(float(v)) for v in self.grad_noisy[t]]
                    row += [repr(float(v)) for v in self.grad_trunc[t]]
                fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class DmwResult:
    allocation: Allocation
    report: SolverReport
    trace: DmwTrace | None


def truncate_gradient(g: float, grad_max: float) -> float:
    """Clamp a subgradient coordinate to [-grad_max, grad_max]."""
    if not grad_max > 0:
        raise ValueError("grad_max must be positive")
    return min(max(g, -grad_max), grad_max)


def mwu_step(p: DualPriceVector, g_bar: np.ndarray, eta: float) -> DualPriceVector:
    """One multiplicative update of the full (m+1)-price vector.

    ``g_bar`` carries m truncated components plus the dummy component,
    which must be 0. Bit-identical to one in-kernel round.
    """
    g_bar = np.asarray(g_bar, dtype=np.float64)
    if g_bar.shape != p.prices.shape:
        raise ValueError("g_bar must have m+1 entries")
    if g_bar[-1] != 0.0:
        raise ValueError("dummy gradient component must be 0")
    mult = 1.0 - eta * g_bar[:-1]
    prices = p.prices.copy()
    code = _kernels_py._price_update(prices, mult, p.p_max)
    if code != kernels.FAIL_NONE:
        raise SolverRuntimeError(_FAIL_MESSAGES[code])
    return DualPriceVector(prices, p.p_max)


def guard_supply_requirement(spec: PrivacySpec, T: int, m: int, alpha: float) -> float:
    """Supply level above which eta * grad_max < 1 is guaranteed:
    20 ln(T) sqrt(m ln(m+1) ln(6/beta) ln(2/delta)) / (alpha eps)."""
    return (
        20.0
        * math.log(T)
        * math.sqrt(m * math.log(m + 1) * math.log(6.0 / spec.beta) * math.log(2.0 / spec.delta))
        / (alpha * spec.epsilon)
    )


def derive_dmw_params(
    instance: PackingInstance,
    spec: PrivacySpec | None,
    alpha: float,
    t_override: int | None = None,
    force: bool = False,
) -> DmwParams:
    """All run parameters from the closed-form recipe.

    T = eps^2 n^2 / m rounded to the nearest integer >= 1; an override
    recomputes eta, the per-step budget, and the width from the overridden T
    so the end-to-end privacy budget is unchanged. ``spec=None`` selects the
    deterministic oracle mode (zero noise, infinite per-step budget), which
    requires an explicit ``t_override``.
    """
    problems = validate_instance(instance)
    if problems:
        raise InstanceFormatError("invalid instance: " + "; ".join(problems))
    if not 0.0 < alpha < 1.0:
        raise ParameterGuardError(f"alpha must lie in (0, 1), got {alpha}")
    n, m, b = instance.n, instance.m, instance.supply_b
    if not b > 0.0:
        raise ParameterGuardError("solver requires positive supply")

    warnings: list[str] = []
    if spec is None:
        if t_override is None:
            raise ParameterGuardError("oracle mode requires an explicit round count")
        t_formula = None
        T = int(t_override)
        eps_step = math.inf
        noise_scale = 0.0
        supply_requirement = None
    else:
        t_formula = max(1, round(spec.epsilon**2 * n**2 / m))
        T = int(t_override) if t_override is not None else t_formula
        eps_step = per_step_epsilon_dmw(spec, T, m)
        noise_scale = 1.0 / eps_step
        supply_requirement = guard_supply_requirement(spec, T, m, alpha)
        if b < supply_requirement:
            warnings.append(
                f"supply {b!r} is below the level {supply_requirement!r} at which the "
                "step-size/width product is provably < 1; guarantees may not apply"
            )
    if T < 1:
        raise ParameterGuardError(f"round count must be >= 1, got {T}")

    eta = math.log(m + 1) / (alpha * b * T)
    p_max = 4.0 * n / b
    grad_max = n + (0.0 if math.isinf(eps_step) else math.log(T) / eps_step)
    if eta * grad_max >= 1.0 and not force:
        raise ParameterGuardError(
            f"step size times width is {eta * grad_max!r} >= 1 (supply too small "
            "for the multiplicative update to keep weights positive); "
            "increase supply or set force=True"
        )
    return DmwParams(
        T=T,
        eta=eta,
        p_max=p_max,
        eps_step=eps_step,
        grad_max=grad_max,
        alpha=alpha,
        noise_scale=noise_scale,
        t_formula=t_formula,
        t_override=t_override,
        beta=spec.beta if spec is not None else 0.05,
        supply_requirement=supply_requirement,
        warnings=tuple(warnings),
    )


def _require_contention(instance: PackingInstance) -> None:
    if instance.n < instance.supply_b:
        raise ParameterGuardError(
            f"supply {instance.supply_b!r} exceeds the number of agents "
            f"{instance.n}; every agent can take its best bundle -- use the "
            "trivial allocator instead"
        )


def run_dmw(
    instance: PackingInstance,
    spec: PrivacySpec | None,
    alpha: float,
    seed: int,
    t_override: int | None = None,
    oracle: bool = False,
    trace: bool = False,
    force: bool = False,
    backend: str | None = None,
    chunk_rounds: int = DEFAULT_CHUNK_ROUNDS,
) -> DmwResult:
    """Run the batch solver; returns the averaged fractional allocation,
    a report, and the optional per-round trace.

    ``oracle=True`` (or ``spec=None``) zeroes the noise, making the run a
    deterministic function of the instance alone; with noise the run is a
    deterministic function of (instance, seed).
    """
    started = time.perf_counter()
    oracle = oracle or spec is None
    params = derive_dmw_params(instance, None if oracle else spec, alpha, t_override, force)
    _require_contention(instance)
    kern = kernels.get_backend(backend)
    packed = pack_instance(instance)
    n, m, b = packed.n, packed.m, packed.b
    T = params.T

    stream = NoiseStream(params.noise_scale, seed)
    prices = np.full(m + 1, params.p_max / (m + 1))
    counts = np.zeros((n, packed.values.shape[1]), dtype=np.int64)
    price_sum = np.zeros(m + 1)

    trace_arrays = None
    if trace:
        trace_arrays = {
            "prices": np.empty((T, m + 1)),
            "phi": np.empty(T),
            "grad_exact": np.empty((T, m)),
            "grad_noisy": np.empty((T, m)),
            "grad_trunc": np.empty((T, m)),
        }

    clamps = 0
    max_lag = -math.inf
    done = 0
    while done < T:
        step = min(chunk_rounds, T - done)
        noise = stream.draws((step, m))
        chunk_trace = None
        if trace_arrays is not None:
            chunk_trace = {k: v[done : done + step] for k, v in trace_arrays.items()}
        c, lag, code, fail_t = kern.dmw_chunk(
            packed.values,
            packed.demands,
            packed.ell,
            b,
            params.p_max,
            params.eta,
            params.grad_max,
            prices,
            noise,
            counts,
            price_sum,
            chunk_trace,
        )
        clamps += int(c)
        max_lag = max(max_lag, float(lag))
        if code != kernels.FAIL_NONE:
            raise SolverRuntimeError(
                f"{_FAIL_MESSAGES[int(code)]} in round {done + int(fail_t) + 1}",
                round_index=done + int(fail_t),
            )
        done += step

    xs = tuple(counts[i, : instance.agents[i].ell] / T for i in range(n))
    allocation = Allocation(xs)
    metrics = evaluate_allocation(instance, allocation)

    p_hat = price_sum / T
    p_hat *= params.p_max / float(np.add.reduce(p_hat))
    p_hat_vec = DualPriceVector(p_hat, params.p_max)
    gap_proxy = max_lag - dual.lagrangian(instance, allocation, p_hat_vec)

    report = SolverReport(
        solver="noiseless" if oracle else "dmw",
        objective=metrics.objective,
        max_violation=metrics.max_violation,
        feasible=metrics.feasible,
        rounds=T,
        clamp_events=clamps,
        best_response_evals=T * n,
        duality_gap_proxy=gap_proxy,
        wall_time_ms=(time.perf_counter() - started) * 1e3,
        seed=seed,
        params={
            "n": n,
            "m": m,
            "supply_used": b,
            "epsilon": spec.epsilon if spec is not None else None,
            "delta": spec.delta if spec is not None else None,
            "oracle": oracle,
            "backend": kern.BACKEND_NAME,
            **params.echo(),
        },
        warnings=list(params.warnings),
    )
    trace_obj = DmwTrace(**trace_arrays) if trace_arrays is not None else None
    return DmwResult(allocation=allocation, report=report, trace=trace_obj)


def run_dmw_exact_feasible(
    instance: PackingInstance,
    spec: PrivacySpec | None,
    alpha: float,
    seed: int,
    **kwargs,
) -> DmwResult:
    """Exact-feasibility wrapper: solve with supply shrunk to (1 - alpha) b,
    then judge the unmodified output against the original supply."""
    inner_supply = (1.0 - alpha) * instance.supply_b
    inner = dataclasses.replace(instance, supply_b=inner_supply)
    result = run_dmw(inner, spec, alpha, seed, **kwargs)
    metrics = evaluate_allocation(instance, result.allocation)
    report = result.report
    report.solver = "dmw-exact"
    report.objective = metrics.objective
    report.max_violation = metrics.max_violation
    report.feasible = metrics.feasible
    report.exact_feasible = metrics.feasible
    report.params["supply_original"] = instance.supply_b
    report.params["supply_inner"] = inner_supply
    return DmwResult(allocation=result.allocation, report=report, trace=result.trace)
