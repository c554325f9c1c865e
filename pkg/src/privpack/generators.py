"""Synthetic instance and workload generators for desk-scale experiments.

Everything is a deterministic function of the seed (own substream, see
``privacy.STREAM_GENERATOR``).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterGuardError
from .hardness import QueryWorkload, build_reduction_instance, matrix_workload
from .model import AgentData, PackingInstance
from .privacy import STREAM_GENERATOR, seeded_generator

KINDS = ("uniform", "correlated", "hardness")


def generate_workload(b: int, m: int, seed: int) -> QueryWorkload:
    """b/2 records with i.i.d. Bernoulli(1/2) binary query values."""
    if b < 2 or b % 2 != 0:
        raise ParameterGuardError(f"supply must be even and >= 2, got {b}")
    gen = seeded_generator(seed, STREAM_GENERATOR)
    qmat = gen.integers(0, 2, size=(b // 2, m)).astype(np.float64)
    return matrix_workload(qmat)


def generate_instance(
    kind: str,
    n: int,
    m: int,
    ell: int,
    b: float,
    seed: int,
) -> PackingInstance:
    """Random packing instance of the given family.

    uniform: values and demands i.i.d. U[0,1].
    correlated: one U[0,1] scale per agent multiplies all its demands.
    hardness: the counting-query reduction built from a random binary
        workload; n and ell are ignored (the construction fixes both).
    """
    if kind not in KINDS:
        raise ParameterGuardError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    if kind == "hardness":
        workload = generate_workload(int(b), m, seed)
        return build_reduction_instance(workload, int(b)).packing
    if n < 1 or m < 1 or ell < 1:
        raise ParameterGuardError("n, m, ell must all be >= 1")
    gen = seeded_generator(seed, STREAM_GENERATOR)
    values = gen.random((n, ell))
    demands = gen.random((n, ell, m))
    if kind == "correlated":
        scale = gen.random(n)
        demands = demands * scale[:, None, None]
    agents = tuple(AgentData(values[i], demands[i]) for i in range(n))
    return PackingInstance(n=n, m=m, supply_b=float(b), agents=agents)
