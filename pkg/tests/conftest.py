import numpy as np
import pytest
from hypothesis import settings

from feascbf.dynamics import AccParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return AccParams()


@pytest.fixture
def x0():
    return np.array([6.0, 100.0])


_RUNS = {}


def cached_run(p1, p2, feasibility_on=True, baseline="None"):
    """One simulation per distinct scenario for the whole session."""
    from feascbf.acc import AccScenario, simulate
    from feascbf.sim import SimConfig

    key = (p1, p2, feasibility_on, baseline)
    if key not in _RUNS:
        sc = AccScenario(p1=p1, p2=p2, feasibility_on=feasibility_on, baseline=baseline)
        _RUNS[key] = simulate(sc, SimConfig((6.0, 100.0), record_timing=False))
    return _RUNS[key]
