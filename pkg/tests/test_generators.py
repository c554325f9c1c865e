import numpy as np
import pytest

import privpack as pp
from privpack.errors import ParameterGuardError
from privpack.generators import generate_instance, generate_workload
from privpack.privacy import STREAM_NOISE, STREAM_PERMUTATION, seeded_generator


class TestGenerate:
    def test_same_seed_identical(self):
        a = generate_instance("uniform", 9, 3, 2, 4.0, seed=77)
        b = generate_instance("uniform", 9, 3, 2, 4.0, seed=77)
        assert pp.model.instances_equal(a, b)
        c = generate_instance("uniform", 9, 3, 2, 4.0, seed=78)
        assert not pp.model.instances_equal(a, c)

    def test_uniform_value_mean(self):
        # 1e5 draws of values: mean within 0.5 +/- 0.01
        inst = generate_instance("uniform", 50000, 1, 2, 10.0, seed=123)
        values = np.concatenate([a.values for a in inst.agents])
        assert abs(float(values.mean()) - 0.5) < 0.01
        assert values.min() >= 0.0 and values.max() <= 1.0

    def test_correlated_demands_in_range(self):
        inst = generate_instance("correlated", 200, 3, 2, 10.0, seed=5)
        assert pp.validate_instance(inst) == []

    def test_hardness_agent_count(self):
        # b/2 record agents + 2b filler agents = 10 at b=4
        inst = generate_instance("hardness", 0, 2, 0, 4, seed=1)
        assert inst.n == 10

    def test_invalid_kind(self):
        with pytest.raises(ParameterGuardError, match="unknown instance kind"):
            generate_instance("zipf", 5, 2, 2, 2.0, seed=0)

    def test_workload_binary_values(self):
        w = generate_workload(10, 3, seed=9)
        qmat = w.query_matrix()
        assert qmat.shape == (5, 3)
        assert set(np.unique(qmat)) <= {0.0, 1.0}


class TestStreamSeparation:
    def test_purpose_streams_never_alias(self):
        # same seed, different purpose tags: independent streams
        noise = seeded_generator(42, STREAM_NOISE).random(64)
        perm = seeded_generator(42, STREAM_PERMUTATION).random(64)
        assert not np.array_equal(noise, perm)

    def test_same_purpose_reproducible(self):
        a = seeded_generator(42, STREAM_NOISE).random(64)
        b = seeded_generator(42, STREAM_NOISE).random(64)
        assert np.array_equal(a, b)
