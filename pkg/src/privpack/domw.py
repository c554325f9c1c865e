"""Online private packing solver: one random-order pass with posted prices.

Agents are visited once, in a uniformly random order. The visited agent gets
its exact best response to the current prices and is charged those prices
for its demand, which is what makes truthful reporting a dominant strategy.
The price update sees only the agent's demand vector masked with Laplace
noise, so the price path is differentially private and each allocation is
per-agent post-processing of it.

Two noise regimes: pure mode uses scale m/eps (a pure-DP price path),
approximate mode uses sqrt(8 m ln(1/delta))/eps and needs delta > 0.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from . import _kernels_py, kernels
from .errors import InstanceFormatError, ParameterGuardError, SolverRuntimeError
from .model import AgentData, Allocation, PackingInstance, evaluate_allocation, validate_instance
from .packed import pack_instance
from .privacy import (
    STREAM_PERMUTATION,
    NoiseStream,
    PrivacySpec,
    seeded_generator,
    sigma_domw,
)
from .report import SolverReport

_FAIL_MESSAGES = {
    kernels.FAIL_POSITIVITY: "multiplicative update produced a nonpositive weight",
    kernels.FAIL_NORM: "price vector drifted off the l1 = p_max simplex",
}

def _supply_log_factor(n: int) -> float:
    # Pinned polylog stand-in for the supply diagnostic: the analysis needs
    # b >= sqrt(n)*sigma/alpha up to polylog terms; we report ln(n+1).
    return math.log(n + 1)


@dataclass(frozen=True)
class DomwParams:
    sigma: float
    eta: float
    p_max: float
    grad_max: float
    alpha: float
    mode: str  # "pure" | "approx"
    noise_scale: float
    supply_requirement: float
    warnings: tuple[str, ...]

    def echo(self) -> dict:
        return {
            "sigma": self.sigma,
            "eta": self.eta,
            "p_max": self.p_max,
            "grad_max": self.grad_max,
            "alpha": self.alpha,
            "mode": self.mode,
            "noise_scale": self.noise_scale,
            "supply_requirement": self.supply_requirement,
            "eta_grad_max": self.eta * self.grad_max,
        }


@dataclass(frozen=True)
class RoundOutcome:
    """One arrival: who, what they took, their demand, its noisy proxy,
    and what they paid."""

    agent: int
    chosen: int | None
    utility: float
    demand: np.ndarray        # y_t, zeros when nothing was taken
    noisy_demand: np.ndarray  # z_t = y_t + noise
    payment: float


@dataclass(frozen=True)
class DomwResult:
    allocation: Allocation          # integral, indexed by original agent
    payments: np.ndarray            # (n,), indexed by original agent
    report: SolverReport
    order: np.ndarray               # visit order (agent index per round)
    outcomes: tuple[RoundOutcome, ...] | None
    price_trace: np.ndarray | None  # (n, m+1) prices each round responded to


def compute_payment(prices: np.ndarray, demand: np.ndarray) -> float:
    """Posted-price charge: inner product over the m resource coordinates."""
    demand = np.asarray(demand, dtype=np.float64)
    m = demand.shape[0]
    if prices.shape[0] < m:
        raise ParameterGuardError("price vector shorter than the demand vector")
    total = 0.0
    for j in range(m):
        total += prices[j] * demand[j]
    return total


def _derive_domw_from_dims(
    n: int,
    m: int,
    supply_b: float,
    spec: PrivacySpec,
    alpha: float,
    mode: str | None,
    force: bool,
) -> DomwParams:
    if not 0.0 < alpha < 1.0:
        raise ParameterGuardError(f"alpha must lie in (0, 1), got {alpha}")
    if mode is None:
        mode = "pure" if spec.delta == 0.0 else "approx"
    if mode not in ("pure", "approx"):
        raise ParameterGuardError(f"mode must be 'pure' or 'approx', got {mode!r}")
    if mode == "approx" and spec.delta == 0.0:
        raise ParameterGuardError("approx mode requires delta > 0")
    if mode == "pure":
        sigma = m / spec.epsilon
    else:
        sigma = sigma_domw(spec, m)
    eta = 1.0 / (math.sqrt(n) * sigma)
    p_max = alpha * n / sigma
    grad_max = 1.0 + sigma * math.log(n)
    warnings = []
    supply_requirement = math.sqrt(n) * sigma * _supply_log_factor(n) / alpha
    if supply_b < supply_requirement:
        warnings.append(
            f"supply {supply_b!r} is below the diagnostic level "
            f"{supply_requirement!r} (sqrt(n)*sigma*ln(n+1)/alpha) the analysis "
            "asks for; guarantees may not apply"
        )
    if eta * grad_max >= 1.0 and not force:
        raise ParameterGuardError(
            f"step size times width is {eta * grad_max!r} >= 1; the multiplicative "
            "update cannot keep weights positive (set force=True to proceed)"
        )
    return DomwParams(
        sigma=sigma,
        eta=eta,
        p_max=p_max,
        grad_max=grad_max,
        alpha=alpha,
        mode=mode,
        noise_scale=sigma,
        supply_requirement=supply_requirement,
        warnings=tuple(warnings),
    )


def derive_domw_params(
    instance: PackingInstance,
    spec: PrivacySpec,
    alpha: float,
    mode: str | None = None,
    force: bool = False,
) -> DomwParams:
    """sigma from the privacy target, then eta = 1/(sqrt(n) sigma),
    p_max = alpha n / sigma, grad_max = 1 + sigma ln(n)."""
    problems = validate_instance(instance)
    if problems:
        raise InstanceFormatError("invalid instance: " + "; ".join(problems))
    return _derive_domw_from_dims(
        instance.n, instance.m, instance.supply_b, spec, alpha, mode, force
    )


def sample_order(n: int, seed: int) -> np.ndarray:
    """The uniformly random visit order (its own seeded substream)."""
    gen = seeded_generator(seed, STREAM_PERMUTATION)
    return gen.permutation(n).astype(np.int64)


def run_domw(
    instance: PackingInstance,
    spec: PrivacySpec,
    alpha: float,
    seed: int,
    mode: str | None = None,
    oracle: bool = False,
    dummy_reset: bool = False,
    order: np.ndarray | None = None,
    collect_outcomes: bool = False,
    price_trace: bool = False,
    force: bool = False,
    backend: str | None = None,
) -> DomwResult:
    """Batch entry point: samples the order, runs the single pass in the
    selected kernel backend, and assembles the integral allocation.

    ``oracle=True`` draws zero noise but keeps the derived parameters, so a
    run is a deterministic function of (instance, seed). ``order`` overrides
    the sampled permutation (testing hook). ``dummy_reset=True`` pins the
    dummy coordinate's update weight to the constant 1 instead of carrying
    its current weight (the alternative reading of the update rule).
    """
    started = time.perf_counter()
    params = derive_domw_params(instance, spec, alpha, mode, force)
    if instance.n < instance.supply_b:
        raise ParameterGuardError(
            f"supply {instance.supply_b!r} exceeds the number of agents "
            f"{instance.n}; use the trivial allocator"
        )
    kern = kernels.get_backend(backend)
    packed = pack_instance(instance)
    n, m = packed.n, packed.m

    if order is None:
        order = sample_order(n, seed)
    else:
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n)):
            raise ParameterGuardError("order override must be a permutation of range(n)")

    stream = NoiseStream(0.0 if oracle else params.noise_scale, seed)
    noise = stream.draws((n, m))
    prices = np.full(m + 1, params.p_max / (m + 1))
    chosen = np.empty(n, dtype=np.int64)
    payments_by_round = np.empty(n)
    utils_by_round = np.empty(n)
    y = np.empty((n, m))
    z = np.empty((n, m))
    trace = np.empty((n, m + 1)) if price_trace else None

    clamps, br_evals, code, fail_t = kern.domw_run(
        packed.values,
        packed.demands,
        packed.ell,
        order,
        instance.supply_b / n,
        params.p_max,
        params.eta,
        params.grad_max,
        prices,
        noise,
        chosen,
        payments_by_round,
        utils_by_round,
        y,
        z,
        trace,
        dummy_reset,
    )
    if code != kernels.FAIL_NONE:
        raise SolverRuntimeError(
            f"{_FAIL_MESSAGES[int(code)]} in round {int(fail_t) + 1}",
            round_index=int(fail_t),
        )

    xs = [np.zeros(a.ell) for a in instance.agents]
    payments = np.zeros(n)
    for t in range(n):
        i = int(order[t])
        if chosen[t] >= 0:
            xs[i][chosen[t]] = 1.0
        payments[i] = payments_by_round[t]
    allocation = Allocation(tuple(xs))
    metrics = evaluate_allocation(instance, allocation)

    outcomes = None
    if collect_outcomes:
        outcomes = tuple(
            RoundOutcome(
                agent=int(order[t]),
                chosen=int(chosen[t]) if chosen[t] >= 0 else None,
                utility=float(utils_by_round[t]),
                demand=y[t].copy(),
                noisy_demand=z[t].copy(),
                payment=float(payments_by_round[t]),
            )
            for t in range(n)
        )

    report = SolverReport(
        solver="domw",
        objective=metrics.objective,
        max_violation=metrics.max_violation,
        feasible=metrics.feasible,
        rounds=n,
        clamp_events=int(clamps),
        best_response_evals=int(br_evals),
        wall_time_ms=(time.perf_counter() - started) * 1e3,
        seed=seed,
        params={
            "n": n,
            "m": m,
            "supply_used": instance.supply_b,
            "epsilon": spec.epsilon,
            "delta": spec.delta,
            "oracle": oracle,
            "dummy_reset": dummy_reset,
            "backend": kern.BACKEND_NAME,
            **params.echo(),
        },
        warnings=list(params.warnings),
    )
    return DomwResult(
        allocation=allocation,
        payments=payments,
        report=report,
        order=order,
        outcomes=outcomes,
        price_trace=trace,
    )


class OnlineAllocator:
    """Pull-based online engine: feed agents one at a time, in what the
    caller asserts is uniformly random arrival order.

    Each ``next_decision`` call settles one agent completely (bundle and
    payment) before the next agent is read. Single-stream state: not
    reentrant across concurrent streams.
    """

    def __init__(
        self,
        n: int,
        m: int,
        supply_b: float,
        spec: PrivacySpec,
        alpha: float,
        seed: int,
        mode: str | None = None,
        oracle: bool = False,
        dummy_reset: bool = False,
        force: bool = False,
    ):
        if n < 1 or m < 1:
            raise ParameterGuardError("n and m must be >= 1")
        if n < supply_b:
            raise ParameterGuardError(
                f"supply {supply_b!r} exceeds the declared number of agents {n}; "
                "every agent can take its best bundle without coordination"
            )
        self.params = _derive_domw_from_dims(n, m, supply_b, spec, alpha, mode, force)
        self.n = n
        self.m = m
        self.supply_b = float(supply_b)
        self.seed = seed
        self.dummy_reset = dummy_reset
        self._b_over_n = float(supply_b) / n
        self._stream = NoiseStream(0.0 if oracle else self.params.noise_scale, seed)
        self._prices = np.full(m + 1, self.params.p_max / (m + 1))
        self._round = 0
        self.clamp_events = 0
        self.outcomes: list[RoundOutcome] = []

    @property
    def prices(self) -> np.ndarray:
        """The current posted prices (next arrival responds to these)."""
        return self._prices.copy()

    def next_decision(self, agent: AgentData) -> RoundOutcome:
        """Settle one arrival: bundle (or nothing) at the current posted
        prices, the payment, and the price update. The outcome's ``agent``
        field is the arrival position (the engine never learns caller-side
        identities)."""
        if self._round >= self.n:
            raise SolverRuntimeError(
                f"stream longer than the declared {self.n} agents", round_index=self._round
            )
        if agent.demands.shape[1] != self.m:
            raise InstanceFormatError(
                f"agent has {agent.demands.shape[1]} resources, allocator expects {self.m}"
            )
        t = self._round
        noise_t = self._stream.draws(self.m)
        chosen, util, y, z, payment, clamps, code = _kernels_py.domw_step(
            agent.values,
            agent.demands,
            self._prices,
            self._b_over_n,
            self.params.p_max,
            self.params.eta,
            self.params.grad_max,
            noise_t,
            self.dummy_reset,
        )
        self.clamp_events += clamps
        self._round += 1
        if code != kernels.FAIL_NONE:
            raise SolverRuntimeError(
                f"{_FAIL_MESSAGES[code]} in round {t + 1}", round_index=t
            )
        outcome = RoundOutcome(
            agent=t,
            chosen=chosen if chosen >= 0 else None,
            utility=util,
            demand=y,
            noisy_demand=z,
            payment=payment,
        )
        self.outcomes.append(outcome)
        return outcome

    def finished(self) -> bool:
        return self._round == self.n


def run_domw_online(
    agents: Iterable[AgentData],
    n: int,
    m: int,
    supply_b: float,
    spec: PrivacySpec,
    alpha: float,
    seed: int,
    **kwargs,
) -> Iterator[RoundOutcome]:
    """Generator over per-arrival decisions; each decision is yielded before
    the next agent is pulled from the iterable. Raises if the stream length
    disagrees with the declared n."""
    allocator = OnlineAllocator(n, m, supply_b, spec, alpha, seed, **kwargs)
    count = 0
    for agent in agents:
        yield allocator.next_decision(agent)
        count += 1
    if count != n:
        raise SolverRuntimeError(
            f"stream ended after {count} agents but {n} were declared", round_index=count
        )
