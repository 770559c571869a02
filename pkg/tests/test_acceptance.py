"""One test per acceptance criterion, at the stated tolerances.

Each test prints the criterion's report line; ``pytest -v`` shows one
PASSED/FAILED line per criterion.  Criterion 9 runs the full Metropolis
chain and takes about two minutes.
"""

import json

import pytest

from mbshape import acceptance as ac
from mbshape.io import to_jsonable


def check(i, **kw):
    res = ac.CRITERIA[i](**kw)
    print(res.line())
    assert res.passed, json.dumps(to_jsonable(res.measured), sort_keys=True)
    return res


def test_criterion_01_partition_function_oracle():
    check(1)


def test_criterion_02_normalization_sweep():
    check(2)


def test_criterion_03_constraint_and_saturation():
    check(3)


def test_criterion_04_rhp_normalization():
    check(4)


def test_criterion_04_detects_perturbed_c1():
    res = ac.check_n_normalization(c1_scale=1.01)
    assert not res.passed


def test_criterion_05_euler_lagrange_residual():
    check(5)


def test_criterion_06_edge_exponents():
    check(6)


def test_criterion_07_regime_transition():
    check(7)


def test_criterion_08_conformal_round_trip():
    check(8)


def test_criterion_09_sampling_concentration():
    check(9)


def test_criterion_10_variational_minimality():
    check(10)
