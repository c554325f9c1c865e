"""Dense padded views of an instance for the solver kernels.

Menus are ragged (agents own different bundle counts), so kernels consume a
padded layout: values (n, L) with pad entries -1.0 and demands (n, L, m)
with pad rows 0.0, where L is the largest menu. A padded bundle has surplus
exactly -1 - 0 = -1 at any price vector, so it can never be taken (the
surplus gate requires >= 0) and never displaces a real argmax at or above
the gate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PackingInstance

PAD_VALUE = -1.0


@dataclass(frozen=True)
class PackedInstance:
    values: np.ndarray   # (n, L) float64, C-contiguous, pads = PAD_VALUE
    demands: np.ndarray  # (n, L, m) float64, C-contiguous, pads = 0
    ell: np.ndarray      # (n,) int64
    n: int
    m: int
    b: float

    @property
    def n_pow2(self) -> int:
        k = 1
        while k < self.n:
            k *= 2
        return k


def pack_instance(instance: PackingInstance) -> PackedInstance:
    n, m = instance.n, instance.m
    ell = np.array([a.ell for a in instance.agents], dtype=np.int64)
    L = int(ell.max())
    values = np.full((n, L), PAD_VALUE, dtype=np.float64)
    demands = np.zeros((n, L, m), dtype=np.float64)
    for i, agent in enumerate(instance.agents):
        values[i, : agent.ell] = agent.values
        demands[i, : agent.ell, :] = agent.demands
    return PackedInstance(
        values=np.ascontiguousarray(values),
        demands=np.ascontiguousarray(demands),
        ell=ell,
        n=n,
        m=m,
        b=float(instance.supply_b),
    )
