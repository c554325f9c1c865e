"""Seedable Laplace noise, derived noise-scale formulas, and empirical
privacy / concentration diagnostics.

Reproducibility contract
------------------------
All randomness in the package flows through 64-bit seeds expanded with
``numpy.random.SeedSequence``. A consumer stream is pinned as
``Generator(PCG64(SeedSequence((seed, STREAM_TAG))))`` with a documented
per-purpose tag, so distinct purposes never alias:

* ``STREAM_NOISE`` (0): Laplace noise inside solvers and diagnostics.
* ``STREAM_PERMUTATION`` (1): the online solver's agent ordering.
* ``STREAM_GENERATOR`` (2): synthetic instance generation.

Laplace variates use the inverse CDF on uniforms from that stream:
``u = random() + 2**-54`` (the half-ulp shift keeps u strictly inside (0,1)),
then ``scale*log(2u)`` if ``u < 1/2`` else ``-scale*log(2(1-u))``. Identical
seed and draw index give identical values on any platform with the same
numpy/libm build. A scale of exactly 0 is the deterministic debug/oracle
mode: it emits zeros without consuming uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as _beta_dist

STREAM_NOISE = 0
STREAM_PERMUTATION = 1
STREAM_GENERATOR = 2

MAX_SEED = 2**64 - 1


def seeded_generator(seed: int, stream: int) -> np.random.Generator:
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, stream))))


@dataclass(frozen=True)
class PrivacySpec:
    """Privacy target (epsilon, delta) plus the failure probability beta
    used by the supply diagnostics. delta = 0 selects pure-DP mode where a
    mechanism supports it."""

    epsilon: float
    delta: float
    beta: float = 0.05

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")


class NoiseStream:
    """Single-owner stream of Laplace(scale) variates.

    Not safe to share between threads; independent streams with distinct
    seeds may run in parallel.
    """

    def __init__(self, scale: float, seed: int, stream: int = STREAM_NOISE):
        if not scale >= 0.0:
            raise ValueError(f"scale must be >= 0, got {scale}")
        self.scale = float(scale)
        self.seed = int(seed)
        self.draws_emitted = 0
        self._gen = seeded_generator(self.seed, stream)

    def draws(self, shape) -> np.ndarray:
        """A fresh array of Laplace(scale) variates with the given shape."""
        count = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        self.draws_emitted += count
        if self.scale == 0.0:
            return np.zeros(shape)
        u = self._gen.random(shape) + 2.0**-54
        return np.where(u < 0.5, self.scale * np.log(2.0 * u), -self.scale * np.log(2.0 * (1.0 - u)))

    def draw(self) -> float:
        return float(self.draws(1)[0])


def laplace_draw(stream: NoiseStream) -> float:
    """One variate from the stream (see the module docstring for the pinned
    sampling algorithm)."""
    return stream.draw()


# ---------------------------------------------------------------------------
# Noise-scale formulas
# ---------------------------------------------------------------------------


def per_step_epsilon_dmw(spec: PrivacySpec, T: int, m: int) -> float:
    """Per-round budget for the batch solver: eps / sqrt(8*T*m*ln(2/delta)).

    Each of the T*m per-coordinate Laplace releases runs at this budget so
    the adaptive composition lands back at (epsilon, delta) overall.
    """
    if spec.delta <= 0.0:
        raise ValueError("the per-step budget formula requires delta > 0")
    if T < 1 or m < 1:
        raise ValueError("T and m must be >= 1")
    return spec.epsilon / math.sqrt(8.0 * T * m * math.log(2.0 / spec.delta))


def sigma_domw(spec: PrivacySpec, m: int) -> float:
    """Demand-vector noise scale for the online solver: m/eps in pure mode
    (delta = 0), sqrt(8*m*ln(1/delta))/eps otherwise."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if spec.delta == 0.0:
        return m / spec.epsilon
    return math.sqrt(8.0 * m * math.log(1.0 / spec.delta)) / spec.epsilon


def composition_epsilon(eps_step: float, T: int, delta_prime: float) -> float:
    """Advanced-composition budget of T adaptive (eps_step, .)-DP steps:
    eps*sqrt(2*T*ln(1/delta')) + T*eps*(e^eps - 1). Diagnostic only."""
    if not eps_step > 0:
        raise ValueError("eps_step must be positive")
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < delta_prime < 1.0:
        raise ValueError("delta_prime must lie in (0, 1)")
    return eps_step * math.sqrt(2.0 * T * math.log(1.0 / delta_prime)) + T * eps_step * math.expm1(eps_step)


# ---------------------------------------------------------------------------
# Empirical privacy audit
# ---------------------------------------------------------------------------

AUDIT_BINS = 200
AUDIT_MIN_COUNT = 100
AUDIT_QUANTILE_TAIL = 0.0005  # central 99.9% range
AUDIT_CONFIDENCE = 0.99


@dataclass(frozen=True)
class AuditResult:
    epsilon_hat: float            # confidence-corrected estimate (inf = non-private evidence)
    raw_epsilon_hat: float        # plain max log mass ratio over qualifying bins
    non_private: bool             # a populated bin on one side had zero mass on the other
    bins_used: int
    trials: int


def _clopper_pearson(count: np.ndarray, n: int, confidence: float):
    tail = (1.0 - confidence) / 2.0
    count = np.asarray(count, dtype=np.int64)
    lo = np.where(count > 0, _beta_dist.ppf(tail, count, n - count + 1), 0.0)
    hi = np.where(count < n, _beta_dist.ppf(1.0 - tail, count + 1, n - count), 1.0)
    return lo, hi


def audit_laplace(
    eps_step: float,
    trials: int,
    seed: int,
    inputs: tuple[float, float] = (0.0, 1.0),
) -> AuditResult:
    """Histogram-ratio audit of the Laplace mechanism on two sensitivity-1
    neighboring values.

    Runs the mechanism ``trials`` times on each input, bins the outputs on
    AUDIT_BINS uniform bins over the pooled central 99.9% quantile range
    (tail samples are clipped into the edge bins), and over bins holding at
    least AUDIT_MIN_COUNT samples on both sides reports the largest
    Clopper-Pearson (AUDIT_CONFIDENCE) lower-bounded log mass ratio, floored
    at 0. A bin with >= AUDIT_MIN_COUNT samples on one side and none on the
    other is conclusive evidence of a non-private mechanism and yields an
    infinite estimate. Diagnostic, not a privacy proof.

    ``eps_step = inf`` selects the zero-noise control (a deterministic, and
    for distinct inputs non-private, mechanism).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scale = 0.0 if math.isinf(eps_step) else 1.0 / eps_step
    stream = NoiseStream(scale, seed)
    out0 = inputs[0] + stream.draws(trials)
    out1 = inputs[1] + stream.draws(trials)
    pool = np.concatenate([out0, out1])
    lo, hi = np.quantile(pool, [AUDIT_QUANTILE_TAIL, 1.0 - AUDIT_QUANTILE_TAIL])
    if not hi > lo:
        hi = lo + 1.0
    c0, _ = np.histogram(np.clip(out0, lo, hi), bins=AUDIT_BINS, range=(lo, hi))
    c1, _ = np.histogram(np.clip(out1, lo, hi), bins=AUDIT_BINS, range=(lo, hi))

    disjoint = ((c0 >= AUDIT_MIN_COUNT) & (c1 == 0)) | ((c1 >= AUDIT_MIN_COUNT) & (c0 == 0))
    non_private = bool(disjoint.any())

    both = (c0 >= AUDIT_MIN_COUNT) & (c1 >= AUDIT_MIN_COUNT)
    bins_used = int(both.sum())
    raw = 0.0
    corrected = 0.0
    if bins_used:
        ratio = np.log(c0[both].astype(np.float64) / c1[both].astype(np.float64))
        raw = float(np.max(np.abs(ratio)))
        lo0, hi0 = _clopper_pearson(c0[both], trials, AUDIT_CONFIDENCE)
        lo1, hi1 = _clopper_pearson(c1[both], trials, AUDIT_CONFIDENCE)
        corrected = max(0.0, float(np.max(np.maximum(np.log(lo0 / hi1), np.log(lo1 / hi0)))))
    if non_private:
        corrected = math.inf
        raw = math.inf
    return AuditResult(
        epsilon_hat=corrected,
        raw_epsilon_hat=raw,
        non_private=non_private,
        bins_used=bins_used,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# Concentration harnesses for the adaptive noise bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationResult:
    violation_rate: float
    threshold: float
    trials: int
    worst_sum: float


def adaptive_sum_bound(p_max: float, eps_step: float, T: int, beta: float) -> float:
    """p_max * sqrt(8*T*ln(6/beta)) / eps_step."""
    return p_max * math.sqrt(8.0 * T * math.log(6.0 / beta)) / eps_step


def adaptive_sum_concentration(
    p_max: float,
    eps_step: float,
    T: int,
    m: int,
    beta: float,
    trials: int,
    seed: int,
    threshold_factor: float = 1.0,
    noise_scale: float | None = None,
) -> ConcentrationResult:
    """Adaptive inner products of simplex points with per-round Laplace noise.

    Per trial, round t picks the adversarial-adaptive simplex vertex
    q = p_max * e_j aligned with the largest running noise sum over the
    first t-1 rounds, then accumulates <q, nu_t> with fresh
    Laplace(1/eps_step) noise. Returns the fraction of trials whose total
    meets or exceeds ``threshold_factor`` times the bound
    p_max*sqrt(8*T*ln(6/beta))/eps_step. ``noise_scale`` overrides the noise
    (0 is the deterministic control); the threshold always uses eps_step.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scale = 1.0 / eps_step if noise_scale is None else noise_scale
    stream = NoiseStream(scale, seed)
    running = np.zeros((trials, m))
    totals = np.zeros(trials)
    rows = np.arange(trials)
    for _ in range(T):
        pick = np.argmax(running, axis=1)
        nu = stream.draws((trials, m))
        totals += p_max * nu[rows, pick]
        running += nu
    threshold = threshold_factor * adaptive_sum_bound(p_max, eps_step, T, beta)
    violations = totals >= threshold
    return ConcentrationResult(
        violation_rate=float(np.mean(violations)),
        threshold=threshold,
        trials=trials,
        worst_sum=float(np.max(totals)),
    )


def truncation_overflow_concentration(
    p_max: float,
    eps_step: float,
    T: int,
    m: int,
    beta: float,
    trials: int,
    seed: int,
    threshold_factor: float = 1.0,
    noise_scale: float | None = None,
) -> ConcentrationResult:
    """Truncation-overflow companion check.

    Per round the adaptive weights put mass p_max on the two coordinates
    (one if m = 1) with the largest running overflow, satisfying
    ||q||_1 <= 2*p_max and ||q||_inf <= p_max, and accumulate
    q_j * max(0, nu_j - ln(T)/eps_step). Violation threshold is
    ``threshold_factor`` times 2*p_max*sqrt(8*T*ln(6/beta))/eps_step.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scale = 1.0 / eps_step if noise_scale is None else noise_scale
    cut = math.log(T) / eps_step
    stream = NoiseStream(scale, seed)
    width = min(2, m)
    running = np.zeros((trials, m))
    totals = np.zeros(trials)
    rows = np.arange(trials)[:, None]
    for _ in range(T):
        pick = np.argsort(-running, axis=1)[:, :width]
        nu = stream.draws((trials, m))
        overflow = np.maximum(0.0, nu - cut)
        totals += p_max * np.add.reduce(overflow[rows, pick], axis=1)
        running += overflow
    threshold = threshold_factor * 2.0 * adaptive_sum_bound(p_max, eps_step, T, beta)
    violations = totals >= threshold
    return ConcentrationResult(
        violation_rate=float(np.mean(violations)),
        threshold=threshold,
        trials=trials,
        worst_sum=float(np.max(totals)),
    )
