import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbshape import combinatorics as cb
from mbshape.errors import BudgetError, DivergenceError, DomainError


@st.composite
def plane_partitions(draw, max_side=5, max_h=6):
    M = draw(st.integers(1, max_side))
    N = draw(st.integers(1, max_side))
    raw = np.array(draw(st.lists(st.integers(0, max_h), min_size=M * N, max_size=M * N))).reshape(M, N)
    # sorting rows then columns (descending) keeps both orders
    m = -np.sort(-raw, axis=1)
    m = -np.sort(-m, axis=0)
    return cb.PlanePartition(tuple(map(tuple, m.tolist())))


@pytest.fixture
def example_6x6(fixture_path):
    header, pps = cb.read_partitions(fixture_path("example_6x6.txt"))
    return header, pps[0]


def test_example_6x6_slice_and_particles(example_6x6):
    _, pp = example_6x6
    assert cb.slice_(pp, 0) == [8, 5, 2, 1, 0, 0]
    assert cb.particle_config(pp, 0).positions == (13, 9, 5, 3, 1, 0)


def test_example_6x6_volumes(example_6x6):
    header, pp = example_6x6
    v = cb.volumes(pp)
    assert (v.left, v.central, v.right) == (int(header["left"]), int(header["central"]), int(header["right"]))
    assert v.total == pp.total == 70


def test_slice_lengths():
    assert [cb.slice_length(2, 4, t) for t in range(-1, 4)] == [1, 2, 2, 2, 1]
    assert [cb.slice_length(4, 2, t) for t in range(-3, 2)] == [1, 2, 2, 2, 1]
    with pytest.raises(IndexError):
        cb.slice_length(2, 4, 4)


def test_invalid_partition_rejected():
    with pytest.raises(DomainError):
        cb.PlanePartition(((1, 2), (0, 0)))
    with pytest.raises(DomainError):
        cb.PlanePartition(((1, 1), (2, 0)))


@settings(max_examples=80, deadline=None)
@given(plane_partitions())
def test_volumes_are_sums_of_slices(pp):
    v = cb.volumes(pp)
    assert v.left == sum(sum(cb.slice_(pp, t)) for t in range(-pp.M + 1, 0))
    assert v.central == sum(cb.slice_(pp, 0))
    assert v.right == sum(sum(cb.slice_(pp, t)) for t in range(1, pp.N))
    assert v.total == pp.total


@settings(max_examples=80, deadline=None)
@given(plane_partitions())
def test_neighbouring_slices_interlace(pp):
    for t in range(-pp.M + 1, pp.N - 1):
        a, b = cb.slice_(pp, t), cb.slice_(pp, t + 1)
        # slices grow towards the main diagonal
        assert cb.interlaces(b, a) if t < 0 else cb.interlaces(a, b)


@settings(max_examples=50, deadline=None)
@given(plane_partitions())
def test_flat_round_trip(pp):
    assert cb.PlanePartition.from_flat(pp.M, pp.N, pp.flat) == pp


@pytest.mark.parametrize("name", ["enum_2x2_cap1.txt", "enum_1x2_cap2.txt", "enum_2x3_cap2.txt"])
def test_enumeration_matches_fixture(fixture_path, name):
    header, expected = cb.read_partitions(fixture_path(name))
    M, N, cap = int(header["M"]), int(header["N"]), int(header["cap"])
    got = list(cb.enumerate_(M, N, cap))
    assert got == expected
    assert len(got) == int(header["count"]) == cb.box_count(M, N, cap)


@pytest.mark.parametrize("M,N,cap", [(1, 1, 5), (2, 2, 3), (2, 3, 2), (3, 3, 2)])
def test_enumeration_is_complete_and_distinct(M, N, cap):
    pps = list(cb.enumerate_(M, N, cap))
    assert len(set(pps)) == len(pps) == cb.box_count(M, N, cap)
    assert all(max(pp.flat) <= cap for pp in pps)


def test_box_count_macmahon_small():
    # a 1 x n box with cap c holds binomial(n + c, n) partitions
    assert cb.box_count(1, 4, 3) == math.comb(7, 4)
    assert cb.box_count(2, 2, 2) == 20


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        list(cb.enumerate_(3, 3, 6, budget=100))


def test_weight_is_log_of_direct_product():
    pp = cb.PlanePartition(((2, 1), (1, 0)))
    q, a, eta, theta = 0.6, 0.8, 1.0, 2.0
    # left = 1 (cell (1,0)), central = 2, right = 1
    direct = (a * q ** (0.5 * (eta + theta))) ** 2 * q ** (eta * 1) * q ** (theta * 1)
    assert cb.weight(pp, q, a, eta, theta) == pytest.approx(math.log(direct), rel=1e-14)


@pytest.mark.parametrize("eta,theta", [(1.0, 1.0), (1.0, 2.0), (2.5, 0.5)])
def test_partition_function_within_tail_bound(eta, theta):
    r = cb.partition_function(2, 2, 0.4, 0.7, eta, theta, 10)
    assert r.within_bound
    assert r.truncated_sum <= r.product_formula


def test_product_formula_divergence():
    with pytest.raises(DivergenceError):
        cb.product_formula(1, 1, 0.5, 4.0, 1.0, 1.0)


def test_qpochhammer():
    assert cb.qpochhammer(0.5, 0.5, 3) == pytest.approx(0.5 * 0.75 * 0.875)
    assert cb.log_qpochhammer(0.5, 0.5, 3) == pytest.approx(math.log(0.5 * 0.75 * 0.875))
    assert cb.qpochhammer(0.3, 0.2, 0) == 1.0


@pytest.mark.parametrize("M,N,t", [(2, 2, 0), (2, 3, 0), (2, 3, -1), (2, 3, 1), (2, 3, 2)])
def test_marginal_weight_is_proportional(M, N, t):
    q, a, eta, theta = 0.35, 0.9, 1.0, 2.0
    cap = 8
    lw = cb.cell_log_factors(M, N, q, a, eta, theta).ravel()
    exact = {}
    for pp in cb.enumerate_(M, N, cap):
        l = cb.particle_config(pp, t)
        exact[l.positions] = exact.get(l.positions, 0.0) + math.exp(float(np.dot(lw, pp.flat)))
    # keep configurations whose top particle is well below the truncation
    ratios = [
        math.log(v) - cb.marginal_weight(cb.ParticleConfig(t, k), q, a, eta, theta, M, N)
        for k, v in exact.items()
        if k[0] - (M - 1) <= 2
    ]
    assert len(ratios) >= 2
    # off the main diagonal the height cap truncates every class slightly
    assert max(ratios) - min(ratios) <= (1e-12 if t == 0 else 1e-4)


def test_slice_size_distribution_sums_to_one():
    d = cb.slice_size_distribution(2, 2, 0.5, 1.0, 1.0, 1.0, 6)
    assert math.fsum(d.values()) == pytest.approx(1.0)
    assert min(d) == 0


def test_partition_file_round_trip(tmp_path):
    pps = list(cb.enumerate_(2, 2, 2))
    p = tmp_path / "pp.txt"
    cb.write_partitions(p, pps, 2, 2, {"cap": 2})
    header, back = cb.read_partitions(p)
    assert back == pps and header["cap"] == "2"
    assert p.read_text().splitlines()[2] == "0 0 0 0"
