from __future__ import annotations

import pytest

from limitentry.config import NumericConfig
from limitentry.distributions import epsk, make_distribution


@pytest.fixture(scope="session")
def cfg():
    return NumericConfig()


@pytest.fixture(scope="session")
def coarse_cfg():
    # for loops over many best responses
    return NumericConfig(grid_points=1024)


BUILTIN_SPECS = [
    "exp(rate=1)",
    "exp(rate=3)",
    "uniform(lo=0,hi=1)",
    "uniform(lo=0,hi=2)",
    "halfnormal(sigma=1)",
    "epsk(eps=0.1,k=2)",
    "epsk(eps=0.02,k=1.3333333333333333)",
]


@pytest.fixture(params=BUILTIN_SPECS)
def builtin(request):
    return make_distribution(request.param)


@pytest.fixture
def eps01():
    return epsk(0.1, 2)
