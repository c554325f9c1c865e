"""Backend equivalence: the compiled kernels must reproduce the pure-Python
kernels bit for bit (same pinned arithmetic recipe)."""

import numpy as np
import pytest

import privpack as pp
from privpack import kernels
from privpack.generators import generate_instance
from privpack.packed import pack_instance

needs_compiled = pytest.mark.skipif(
    "compiled" not in kernels.available_backends(),
    reason="compiled kernels not built",
)


def random_prices(gen, m, p_max):
    raw = gen.random(m + 1)
    return raw * (p_max / raw.sum())


@needs_compiled
class TestBackendBitEquality:
    def test_best_responses_match(self):
        gen = np.random.Generator(np.random.PCG64(1))
        for seed in range(25):
            inst = generate_instance("uniform", 17, 3, 3, 4.0, seed=seed)
            packed = pack_instance(inst)
            prices = random_prices(gen, packed.m, 6.0)
            out = {}
            for name, kern in kernels.available_backends().items():
                out[name] = kern.best_responses(
                    packed.values, packed.demands, packed.ell, prices
                )
            assert np.array_equal(out["python"][0], out["compiled"][0])
            assert np.array_equal(out["python"][1], out["compiled"][1])

    def test_best_responses_match_single_agent_api(self):
        gen = np.random.Generator(np.random.PCG64(2))
        inst = generate_instance("uniform", 11, 2, 2, 3.0, seed=77)
        packed = pack_instance(inst)
        raw = random_prices(gen, inst.m, 5.0)
        p = pp.DualPriceVector(raw, 5.0)
        kern = kernels.get_backend("compiled")
        chosen, util = kern.best_responses(packed.values, packed.demands, packed.ell, p.prices)
        for i, agent in enumerate(inst.agents):
            br = pp.best_response(agent, p)
            assert (br.chosen if br.chosen is not None else -1) == chosen[i]
            assert br.utility == util[i]

    @pytest.mark.parametrize("seed", range(6))
    def test_dmw_runs_bitwise_equal(self, seed):
        inst = generate_instance("uniform", 23, 4, 2, 9.0, seed=seed)
        spec = pp.PrivacySpec(5.0, 1e-5)
        results = {}
        for name in ("python", "compiled"):
            res = pp.run_dmw(inst, spec, 0.3, seed=seed, t_override=300,
                             trace=True, backend=name)
            results[name] = res
        a, b = results["python"], results["compiled"]
        for xa, xb in zip(a.allocation.x, b.allocation.x):
            assert np.array_equal(xa, xb)
        assert a.report.objective == b.report.objective
        assert a.report.clamp_events == b.report.clamp_events
        assert a.report.duality_gap_proxy == b.report.duality_gap_proxy
        assert np.array_equal(a.trace.prices, b.trace.prices)
        assert np.array_equal(a.trace.phi, b.trace.phi)
        assert np.array_equal(a.trace.grad_noisy, b.trace.grad_noisy)
        assert np.array_equal(a.trace.grad_trunc, b.trace.grad_trunc)

    @pytest.mark.parametrize("seed", range(6))
    def test_domw_runs_bitwise_equal(self, seed):
        inst = generate_instance("uniform", 60, 3, 2, 15.0, seed=seed)
        spec = pp.PrivacySpec(0.2, 0.0)
        results = {}
        for name in ("python", "compiled"):
            results[name] = pp.run_domw(inst, spec, 0.2, seed=seed,
                                        price_trace=True, backend=name)
        a, b = results["python"], results["compiled"]
        for xa, xb in zip(a.allocation.x, b.allocation.x):
            assert np.array_equal(xa, xb)
        assert np.array_equal(a.payments, b.payments)
        assert np.array_equal(a.price_trace, b.price_trace)
        assert a.report.clamp_events == b.report.clamp_events

    def test_dmw_chunking_invariance(self):
        # one big chunk vs many small chunks: identical results
        inst = generate_instance("uniform", 9, 2, 2, 3.0, seed=50)
        spec = pp.PrivacySpec(10.0, 1e-5)
        whole = pp.run_dmw(inst, spec, 0.3, seed=1, t_override=257, chunk_rounds=10**6)
        pieces = pp.run_dmw(inst, spec, 0.3, seed=1, t_override=257, chunk_rounds=16)
        for xa, xb in zip(whole.allocation.x, pieces.allocation.x):
            assert np.array_equal(xa, xb)
        assert whole.report.objective == pieces.report.objective


class TestMwuStepMatchesKernel:
    def test_step_replays_price_path(self):
        inst = generate_instance("uniform", 7, 3, 2, 5.0, seed=9)
        spec = pp.PrivacySpec(10.0, 1e-5)
        res = pp.run_dmw(inst, spec, 0.3, seed=4, t_override=100, trace=True)
        params = pp.derive_dmw_params(inst, spec, 0.3, t_override=100)
        p = pp.DualPriceVector(res.trace.prices[0].copy(), params.p_max)
        for t in range(99):
            g_bar = np.concatenate([res.trace.grad_trunc[t], [0.0]])
            p = pp.mwu_step(p, g_bar, params.eta)
            assert np.array_equal(p.prices, res.trace.prices[t + 1])
