"""Pure-Python (NumPy) solver kernels: the fallback backend.

The compiled backend in ``_speedups.pyx`` implements the same operations.
Both follow one pinned arithmetic recipe so their outputs are bit-identical:

* bundle surpluses subtract priced demands one resource at a time, in
  resource order, with no fused multiply-add;
* per-agent aggregates (consumption, utility) reduce over a balanced binary
  tree on the agent axis, zero-padded to a power of two -- pairing (0,1),
  (2,3), ... at every level;
* price updates compute ``w_j = p_j * mult_j``, the normalizer
  ``phi = (sum_j w_j) / p_max`` with a sequential coordinate sum, then
  ``p_j = w_j / phi``;
* dot products over the m resource coordinates accumulate sequentially.

Any change here must be mirrored in the compiled kernels.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# Relative l1-norm drift tolerated on the price simplex after each update.
NORM_RTOL = 1e-9

FAIL_NONE = 0
FAIL_POSITIVITY = 1
FAIL_NORM = 2


def _tree_sum(rows: np.ndarray) -> np.ndarray:
    """Balanced pairwise sum over axis 0, zero-padded to a power of two."""
    n = rows.shape[0]
    size = 1
    while size < n:
        size *= 2
    buf = np.zeros((size,) + rows.shape[1:], dtype=np.float64)
    buf[:n] = rows
    while buf.shape[0] > 1:
        buf = buf[0::2] + buf[1::2]
    return buf[0]


def best_responses(values, demands, ell, prices):
    """Best response of every agent to ``prices`` (length >= m).

    Returns (chosen, util): chosen[i] is the winning bundle index or -1 for
    the empty allocation; util[i] is the winning surplus (0 when empty).
    """
    n, L = values.shape
    m = demands.shape[2]
    s = values.copy()
    for j in range(m):
        s -= demands[:, :, j] * prices[j]
    chosen = np.argmax(s, axis=1)
    util = np.take_along_axis(s, chosen[:, None], axis=1)[:, 0]
    took = util >= 0.0
    return (
        np.where(took, chosen, -1).astype(np.int64),
        np.where(took, util, 0.0),
    )


def _price_update(prices, mult_real, p_max, dummy_weight=None):
    """Apply multipliers, renormalize to l1 = p_max; returns FAIL_* code."""
    m = mult_real.shape[0]
    if np.min(mult_real) <= 0.0:
        return FAIL_POSITIVITY
    w = np.empty(m + 1)
    w[:m] = prices[:m] * mult_real
    w[m] = prices[m] if dummy_weight is None else dummy_weight
    total = 0.0
    for j in range(m + 1):
        total += w[j]
    phi = total / p_max
    np.divide(w, phi, out=prices)
    norm = 0.0
    for j in range(m + 1):
        norm += prices[j]
    if abs(norm - p_max) > NORM_RTOL * p_max:
        return FAIL_NORM
    return FAIL_NONE


def dmw_chunk(
    values,
    demands,
    ell,
    b,
    p_max,
    eta,
    grad_max,
    prices,
    noise,
    counts,
    price_sum,
    trace=None,
):
    """Run ``noise.shape[0]`` rounds of the batch dual update.

    Mutates ``prices`` (m+1,), ``counts`` (n, L) and ``price_sum`` (m+1,)
    in place. ``trace``, when given, is a dict of per-round arrays
    (prices, phi, grad_exact, grad_noisy, grad_trunc) to fill.

    Returns (clamp_events, max_lagrangian, fail_code, fail_round) where
    fail_round is the chunk-local round index of the first failure (-1 ok).
    """
    n, L = values.shape
    m = demands.shape[2]
    rows = np.arange(n)
    clamps = 0
    max_lag = -np.inf
    for t in range(noise.shape[0]):
        price_sum += prices
        if trace is not None:
            trace["prices"][t] = prices
        p_sum_real = 0.0
        for j in range(m):
            p_sum_real += prices[j]

        chosen, util = best_responses(values, demands, ell, prices)
        took = chosen >= 0
        contrib = np.where(took[:, None], demands[rows, chosen, :], 0.0)
        consumption = _tree_sum(contrib)
        util_sum = float(_tree_sum(np.where(took, util, 0.0)))
        lag = b * p_sum_real + util_sum
        if lag > max_lag:
            max_lag = lag
        np.add.at(counts, (rows[took], chosen[took]), 1)

        grad_exact = b - consumption
        grad_noisy = grad_exact + noise[t]
        over = (grad_noisy > grad_max) | (grad_noisy < -grad_max)
        clamps += int(np.count_nonzero(over))
        grad_trunc = np.clip(grad_noisy, -grad_max, grad_max)
        if trace is not None:
            trace["grad_exact"][t] = grad_exact
            trace["grad_noisy"][t] = grad_noisy
            trace["grad_trunc"][t] = grad_trunc

        mult = 1.0 - eta * grad_trunc
        if trace is not None:
            # phi as defined: sum of reweighted coordinates over p_max
            w_dbg = prices[:m] * mult
            tot = 0.0
            for j in range(m):
                tot += w_dbg[j]
            trace["phi"][t] = (tot + prices[m]) / p_max
        code = _price_update(prices, mult, p_max)
        if code != FAIL_NONE:
            return clamps, max_lag, code, t
    return clamps, max_lag, FAIL_NONE, -1


def domw_step(
    values_i,
    demands_i,
    prices,
    b_over_n,
    p_max,
    eta,
    grad_max,
    noise_t,
    dummy_reset,
):
    """One online round: the agent's best response, the noisy demand proxy,
    and the price update. Mutates ``prices``.

    Returns (chosen, util, y, z, payment, clamp_events, fail_code).
    """
    m = demands_i.shape[1]
    s = values_i.copy()
    for j in range(m):
        s -= demands_i[:, j] * prices[j]
    k = int(np.argmax(s))
    util = float(s[k])
    took = util >= 0.0
    y = np.where(took, demands_i[k], 0.0)
    payment = 0.0
    for j in range(m):
        payment += prices[j] * y[j]
    z = y + noise_t
    d = z - b_over_n
    over = (d > grad_max) | (d < -grad_max)
    clamps = int(np.count_nonzero(over))
    d = np.clip(d, -grad_max, grad_max)
    mult = 1.0 + eta * d
    code = _price_update(prices, mult, p_max, dummy_weight=1.0 if dummy_reset else None)
    return (k if took else -1), (util if took else 0.0), y, z, payment, clamps, code


def domw_run(
    values,
    demands,
    ell,
    order,
    b_over_n,
    p_max,
    eta,
    grad_max,
    prices,
    noise,
    chosen_out,
    payment_out,
    util_out,
    y_out,
    z_out,
    price_trace=None,
    dummy_reset=False,
):
    """Single pass over agents in ``order``; exactly one best-response
    evaluation per agent. Outputs are indexed by round.

    Returns (clamp_events, best_response_evals, fail_code, fail_round).
    """
    clamps = 0
    for t in range(order.shape[0]):
        i = int(order[t])
        if price_trace is not None:
            price_trace[t] = prices
        chosen, util, y, z, payment, c, code = domw_step(
            values[i, : ell[i]],
            demands[i, : ell[i], :],
            prices,
            b_over_n,
            p_max,
            eta,
            grad_max,
            noise[t],
            dummy_reset,
        )
        chosen_out[t] = chosen
        payment_out[t] = payment
        util_out[t] = util
        y_out[t] = y
        z_out[t] = z
        clamps += c
        if code != FAIL_NONE:
            return clamps, t + 1, code, t
    return clamps, order.shape[0], FAIL_NONE, -1
