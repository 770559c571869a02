import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import spence

from mbshape import equilibrium as eq
from mbshape import mbprocess as mp
from mbshape import quadrature as qd
from mbshape.errors import DomainError, SupportError


def uniform(a, b, n):
    e = np.linspace(a, b, n + 1)
    return qd.GriddedMeasure(edges=e, weights=np.full(n, 1.0 / n))


def G(u):
    return 0.5 * u * u * math.log(u) - 0.75 * u * u


def test_uniform_unit_interval_energy():
    val, err = qd.log_energy(uniform(0.0, 1.0, 64), exponents=(1.0,))
    assert val == pytest.approx(-1.5, abs=1e-10)
    assert err <= 1e-10


def test_two_exponent_energy_closed_form():
    # ln|x^2 - y^2| + ln|x - y| = 2 ln|x - y| + ln(x + y)
    a, b = 0.5, 0.9
    L = b - a
    exact = 2 * (math.log(L) - 1.5) + (G(2 * b) - 2 * G(a + b) + G(2 * a)) / L**2
    val, err = qd.log_energy(uniform(a, b, 400), exponents=(2.0, 1.0))
    assert val == pytest.approx(exact, abs=1e-7)
    assert abs(val - exact) <= 10 * err + 1e-12


def test_energy_converges_under_refinement():
    f = lambda x: 1.5 * np.sqrt(x)  # noqa: E731
    errs = []
    ref = qd.log_energy(qd.GriddedMeasure.from_density(f, np.linspace(0, 1, 1601)), (1.3, 1.0), False)[0]
    for n in (100, 200, 400):
        val = qd.log_energy(qd.GriddedMeasure.from_density(f, np.linspace(0, 1, n + 1)), (1.3, 1.0), False)[0]
        errs.append(abs(val - ref))
    assert errs[0] > errs[1] > errs[2]


def test_mass_validation():
    with pytest.raises(DomainError):
        qd.GriddedMeasure(edges=[0.0, 1.0], weights=[0.5])
    with pytest.raises(DomainError):
        qd.GriddedMeasure(edges=[0.0, 0.0, 1.0], weights=[0.5, 0.5])


def test_atoms_have_infinite_rate():
    p = mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, 0.25)
    assert qd.log_energy(qd.GriddedMeasure.point_mass(0.3))[0] == -math.inf
    assert qd.rate_functional(qd.GriddedMeasure.point_mass(0.3), p).total == math.inf


def test_pushforward_and_coarsen_keep_mass():
    m = uniform(0.1, 0.7, 33)
    assert m.pushforward(2.5).mass == pytest.approx(1.0)
    assert m.coarsen().mass == pytest.approx(1.0)
    assert m.coarsen().weights.size == 17


@settings(max_examples=25, deadline=None)
@given(w=st.lists(st.floats(0.01, 1.0), min_size=4, max_size=30), a=st.floats(0.0, 2.0), L=st.floats(0.1, 3.0))
def test_single_exponent_energy_is_reflection_invariant(w, a, L):
    w = np.array(w) / np.sum(w)
    e = np.linspace(a, a + L, w.size + 1)
    m = qd.GriddedMeasure(edges=e, weights=w)
    r = qd.GriddedMeasure(edges=(2 * a + L) - e[::-1], weights=w[::-1])
    v1 = qd.log_energy(m, (1.0,), False)[0]
    v2 = qd.log_energy(r, (1.0,), False)[0]
    # near/far classification may flip under roundoff; both paths agree to ~1e-11
    assert v1 == pytest.approx(v2, abs=1e-10)


def test_external_field_matches_dilog():
    spec = mp.identify(mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, 0.25)).spec
    c = spec.beta * spec.alpha
    for z in (0.1, 0.4, 0.8):
        w = z**spec.nu  # MP1 uses z^nu
        li2 = lambda y: spence(1 - y)  # noqa: E731
        k = (li2(w * math.exp(-c * spec.n2)) - li2(w * math.exp(-c * spec.n1))) / c
        exact = k / spec.kappa + spec.m1 * math.log(z)
        assert qd.external_field(spec, z) == pytest.approx(exact, abs=1e-11)
    with pytest.raises(DomainError):
        qd.external_field(spec, 1.2)


@pytest.mark.parametrize("xi", [-0.2, 0.25, 0.8])
def test_rate_is_kappa_squared_times_model(xi):
    p = mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, xi)
    prof = mp.mu_density(p)
    g = qd.GriddedMeasure.from_profile(prof, n_band=200, n_sat=32)
    spec = prof.meta["identified"].spec
    e = prof.meta["exponent"]
    I = qd.rate_functional(g, p, estimate_error=False).total
    J = qd.model_functional(g.pushforward(e), spec, estimate_error=False).total
    assert I == pytest.approx(p.kappa**2 * J, rel=1e-10, abs=1e-12)


def test_support_outside_admissible_interval():
    p = mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, -0.2)
    with pytest.raises(SupportError):
        qd.rate_functional(uniform(0.2, 1.5 * p.x_max, 8), p)


def test_beta_zero_limit_is_continuous():
    m = uniform(0.2, 0.6, 64)
    vals = [qd.rate_functional(m, mp.EnsembleParams(1.0, 2.0, 0.5, b, 0.25), False).total for b in (1e-4, 1e-6)]
    assert vals[0] == pytest.approx(vals[1], abs=1e-3)


def test_el_residual_signs():
    spec = mp.identify(mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, 0.25)).spec
    bc = eq.find_beta_critical(spec)
    prof = eq.density(eq.solve_constants(spec.with_beta(2 * bc)))
    sp_ = spec.with_beta(2 * bc)
    a, b = prof.band.lo, prof.band.hi
    band = np.linspace(a, b, 9)[1:-1]
    assert np.max(np.abs(qd.el_residual(prof, sp_, band))) <= 1e-8
    s = prof.saturated
    assert np.all(qd.el_residual(prof, sp_, [0.5 * (s.lo + s.hi)]) >= 0)
    if a > 0:
        assert np.all(qd.el_residual(prof, sp_, [0.5 * a]) <= 0)


def test_admissible_bump_respects_constraints():
    p = mp.EnsembleParams(1.0, 2.0, 0.5, 1.0, 0.25)
    prof = mp.mu_density(p)
    g = qd.GriddedMeasure.from_profile(prof, x_hi=p.x_max, n_band=200, n_sat=32, n_void=16)
    cap = qd.cell_capacity(g, prof.cap, p.x_max)
    rng = np.random.default_rng(3)
    base = qd.rate_functional(g, p, False).total
    for _ in range(5):
        h, eps = qd.random_admissible_bump(g, cap, rng)
        assert eps > 0
        assert h.mass == pytest.approx(1.0, abs=1e-12)
        assert np.all(h.weights >= -1e-15)
        assert np.all(h.weights <= cap * (1 + 1e-12) + 1e-15)
        assert qd.rate_functional(h, p, False).total >= base - 1e-10
