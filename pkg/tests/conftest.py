import numpy as np
import pytest

from privpack import AgentData, PackingInstance


def make_instance(agent_specs, b, m=None):
    """Instance from [(values, demands), ...] with uniform supply b."""
    agents = tuple(AgentData(np.asarray(v, dtype=float), np.asarray(d, dtype=float))
                   for v, d in agent_specs)
    if m is None:
        m = agents[0].demands.shape[1]
    return PackingInstance(n=len(agents), m=m, supply_b=float(b), agents=agents)


@pytest.fixture
def one_agent_instance():
    """n=1, ell=1, value 0.7, demand 0.5, supply 1."""
    return make_instance([([0.7], [[0.5]])], b=1.0)
