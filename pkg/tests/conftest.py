import os

import pytest

from mbshape import mbprocess as mp

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture
def fixture_path():
    return lambda name: os.path.join(FIXTURES, name)


# one slice per branch, (eta, theta, gamma_sq, beta, xi)
BRANCH_PARAMS = {
    "case1_i": (1.0, 2.0, 0.5, 1.0, -0.2),
    "case1_ii": (1.0, 2.0, 0.5, 1.0, 0.25),
    "case1_iii": (1.0, 2.0, 0.5, 1.0, 0.8),
    "case2_i": (2.0, 1.0, 0.5, 1.0, -0.2),
    "case2_ii": (2.0, 1.0, 0.5, 1.0, 0.25),
    "case2_iii": (2.0, 1.0, 0.5, 1.0, 0.8),
}


@pytest.fixture(params=sorted(BRANCH_PARAMS))
def branch_params(request):
    return mp.EnsembleParams(*BRANCH_PARAMS[request.param])
