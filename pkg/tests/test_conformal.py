import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbshape import conformal as cf
from mbshape import equilibrium as eq
from mbshape import mbprocess as mp
from mbshape.errors import DomainError


@pytest.fixture(scope="module")
def sol():
    spec = mp.identify(mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, 0.25)).spec
    return eq.solve_constants(spec)


def direct_J(p, s):
    return (p.c1 * s + p.c0) * cmath.exp(cmath.log((s + 1) / s) / p.nu)


@pytest.mark.parametrize("s", [1.0 + 0.5j, -2.0 + 0.1j, 0.3 - 2j, 5.0, -3.0])
def test_J_matches_direct_formula(sol, s):
    assert abs(cf.eval_J(sol.map, s) - direct_J(sol.map, s)) <= 1e-13 * abs(direct_J(sol.map, s))


def test_J_rejects_the_cut(sol):
    with pytest.raises(DomainError):
        cf.eval_J(sol.map, -0.5)
    with pytest.raises(DomainError):
        cf.eval_J(sol.map, -0.5 + 1e-14j)


def test_map_params_validation():
    with pytest.raises(DomainError):
        cf.MapParams(1.0, 0.0, 2.0)
    with pytest.raises(DomainError):
        cf.MapParams(-1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        cf.MapParams(1.0, 1.0, 0.5)


def test_critical_points_are_real_zeros_of_dJ(sol):
    c = sol.crit
    assert c.s_a <= -1
    assert c.s_b > 0
    assert c.a < c.b
    for s in (c.s_a, c.s_b):
        assert abs(cf.eval_dJ(sol.map, complex(s))) <= 1e-10 * sol.map.c1
    assert abs(cf.eval_J(sol.map, complex(c.s_b)) - c.b) <= 1e-12 * c.b


def test_hard_edge_when_c0_equals_c1():
    p = cf.MapParams(1.0, 1.0, 1.0)
    c = cf.critical_points(p)
    assert c.hard_edge and c.a == 0.0
    assert c.s_b == pytest.approx(1.0) and c.b == pytest.approx(4.0)
    # nu = 1, c0 = c1: the contour is the unit circle
    arc = cf.trace_sigma(p, 65, c).upper_arc
    assert np.allclose(np.abs(arc), 1.0, atol=1e-12)


def test_sigma_is_mapped_onto_the_band(sol):
    sig = sol.sigma
    assert np.all(sig.upper_arc[1:-1].imag > 0)
    assert np.all(np.diff(sig.x) > 0)
    vals = cf.eval_J(sol.map, sig.upper_arc[1:-1])
    assert np.max(np.abs(vals.imag)) <= 1e-10 * sol.crit.b
    assert np.allclose(sig.lower_arc, np.conj(sig.upper_arc))


def test_invert_round_trip(sol):
    a, b = sol.crit.a, sol.crit.b
    x = np.linspace(a, b, 203)[1:-1]
    s = cf.invert_J_plus(sol.map, sol.crit, sol.sigma, x)
    assert np.all(s.imag > 0)
    assert np.max(np.abs(cf.eval_J(sol.map, s) - x)) <= 1e-10 * b
    sm = cf.invert_J_minus(sol.map, sol.crit, sol.sigma, x)
    assert np.allclose(sm, np.conj(s))


def test_outside_preimage(sol):
    x = 1.5 * sol.crit.b
    s = cf.invert_J_outside(sol.map, sol.crit, x)
    assert s > sol.crit.s_b
    assert abs(cf.eval_J(sol.map, complex(s)).real - x) <= 1e-10 * x


@settings(max_examples=60, deadline=None)
@given(
    re=st.floats(-5, 5, allow_nan=False),
    im=st.floats(0.01, 5, allow_nan=False),
    c0=st.floats(0.5, 3),
    r=st.floats(0.0, 2.0),
    nu=st.floats(1.0, 4.0),
)
def test_J_conjugate_symmetry(re, im, c0, r, nu):
    p = cf.MapParams(c0, c0 / (1 + r), nu)
    s = complex(re, im)
    assert abs(cf.eval_J(p, s.conjugate()) - cf.eval_J(p, s).conjugate()) <= 1e-12 * (1 + abs(cf.eval_J(p, s)))
