"""Physical parameters of the two-exponent process and their model problems.

A slice at relative time ``xi`` of a plane partition in an ``M x N`` box with
``M = gamma_sq N`` carries ``kappa N`` particles.  After the pushforward
``x -> x**e`` (``e`` the smaller of ``eta`` and ``theta``) its equilibrium
measure solves one of the two model problems of :mod:`mbshape.equilibrium`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import equilibrium as eq
from .errors import DegenerateSliceError, DomainError, MBShapeError, UnsupportedError

__all__ = [
    "EnsembleParams",
    "IdentifiedProblem",
    "ArcticPoint",
    "xi_regime",
    "kappa_of",
    "identify",
    "mu_density",
    "arctic_curve",
    "limit_shape",
    "limit_shape_support",
]


@dataclass(frozen=True)
class EnsembleParams:
    """Physical parameters.

    Attributes
    ----------
    eta, theta : float
        Exponents of the left and right regions, both positive.
    gamma_sq : float
        Aspect ratio ``M/N`` in ``(0, 1]``.
    beta : float
        Scaling of ``q = exp(-beta/N)``, ``beta >= 0``.
    xi : float
        Relative slice position in ``(-gamma_sq, 1]``.
    N : int, optional
        Lattice size for discrete oracles.
    activity : float
        Exponent ``alpha`` in ``a = exp(-alpha beta / N)`` for discrete oracles.
    """

    eta: float
    theta: float
    gamma_sq: float
    beta: float
    xi: float
    N: int | None = None
    activity: float = 0.0

    def __post_init__(self):
        if not (self.eta > 0 and self.theta > 0):
            raise DomainError("eta and theta must be positive")
        if not 0 < self.gamma_sq <= 1:
            raise DomainError(f"gamma_sq must lie in (0, 1], got {self.gamma_sq}")
        if not self.beta >= 0:
            raise DomainError(f"beta must be non-negative, got {self.beta}")
        if not -self.gamma_sq < self.xi <= 1:
            raise DomainError(f"xi must lie in (-gamma_sq, 1], got {self.xi}")

    @property
    def kappa(self) -> float:
        return kappa_of(self.gamma_sq, self.xi)

    @property
    def x_max(self) -> float:
        """Upper end of the admissible support, ``exp(-beta (gamma_sq - kappa))``."""
        return math.exp(-self.beta * (self.gamma_sq - self.kappa))

    def replace(self, **kw) -> "EnsembleParams":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class IdentifiedProblem:
    """A model problem together with the pushforward that produced it."""

    spec: eq.ModelProblemSpec
    pushforward_exponent: float
    branch_label: str


@dataclass(frozen=True)
class ArcticPoint:
    xi: float
    x_model: float
    x_physical: float
    active: bool
    error: str | None = None


def xi_regime(gamma_sq: float, xi: float) -> int:
    """Index 1, 2 or 3 of the interval ``(-g, 0]``, ``(0, 1-g]``, ``(1-g, 1]`` containing ``xi``."""
    if xi <= 0:
        return 1
    if xi <= 1 - gamma_sq:
        return 2
    return 3


def kappa_of(gamma_sq: float, xi: float) -> float:
    """Particle fraction ``L_xi / N`` of the slice."""
    r = xi_regime(gamma_sq, xi)
    if r == 1:
        return gamma_sq - abs(xi)
    if r == 2:
        return gamma_sq
    return 1 - xi


def identify(params: EnsembleParams) -> IdentifiedProblem:
    """Map physical parameters to a model problem.

    Raises
    ------
    UnsupportedError
        If ``eta == theta``.
    DegenerateSliceError
        If ``kappa = 0`` (``xi = 1``).
    """
    eta, theta, g, beta, xi = params.eta, params.theta, params.gamma_sq, params.beta, params.xi
    if eta == theta:
        raise UnsupportedError("eta == theta has no model-problem identification; perturb one exponent")
    r = xi_regime(g, xi)
    k = kappa_of(g, xi)
    if k <= 0:
        raise DegenerateSliceError(f"kappa = {k} at xi = {xi}")
    roman = {1: "i", 2: "ii", 3: "iii"}[r]
    if theta > eta:
        nu, e, case = theta / eta, eta, 1
        if r == 1:
            kw = dict(problem_id="MP1", m1=abs(xi) / k, n1=-abs(xi), n2=1 - g, alpha=theta)
        elif r == 2:
            kw = dict(problem_id="MP1", m1=theta * xi / (eta * k), n1=0.0, n2=1 - g - xi, alpha=theta)
        else:
            kw = dict(problem_id="MP2", m1=theta * xi / (eta * k), n1=1 - g - xi, n2=0.0, alpha=eta)
    else:
        nu, e, case = eta / theta, theta, 2
        if r == 1:
            kw = dict(problem_id="MP2", m1=abs(xi) * eta / (k * theta), n1=-abs(xi), n2=1 - g, alpha=theta)
        elif r == 2:
            kw = dict(problem_id="MP2", m1=xi / k, n1=0.0, n2=1 - g - xi, alpha=theta)
        else:
            kw = dict(problem_id="MP1", m1=xi / k, n1=1 - g - xi, n2=0.0, alpha=eta)
    # float noise at xi = 1 - gamma_sq must not produce n2 < n1
    if abs(kw["n2"] - kw["n1"]) < 1e-14:
        kw["n2"] = kw["n1"]
    spec = eq.ModelProblemSpec(nu=nu, kappa=k, beta=beta, rho=e, **kw)
    return IdentifiedProblem(spec=spec, pushforward_exponent=e, branch_label=f"Case {case}({roman})")


def _physical_mass(evaluator, lo, hi):
    def f(t):
        x = lo + (hi - lo) * (1 - math.cos(math.pi * t)) / 2
        if x <= 0:
            return 0.0
        return float(evaluator(np.array([x]))[0]) * (hi - lo) * math.pi / 2 * math.sin(math.pi * t)

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def mu_density(params: EnsembleParams, n_band: int = 2048, n_sat: int = 256) -> eq.DensityProfile:
    """Physical equilibrium density ``mu(x) = e x**(e-1) omega(x**e)``.

    The returned profile has ``cap = 1/(beta kappa)`` and carries the model
    solution and model profile in ``meta``.
    """
    ident = identify(params)
    sol = eq.solve_constants(ident.spec)
    omega = eq.density(sol, n_band=n_band, n_sat=n_sat)
    e = ident.pushforward_exponent
    cap = 1.0 / (params.beta * params.kappa)

    def evaluator(x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xa)
        pos = xa > 0
        out[pos] = e * xa[pos] ** (e - 1) * omega.evaluator(xa[pos] ** e)
        out[xa == 0] = omega.evaluator(0.0) if omega.band.lo == 0 else 0.0
        sat = omega.saturated
        if sat is not None:
            m = (xa > sat.lo ** (1 / e)) & (xa <= sat.hi ** (1 / e))
            out[m] = cap / xa[m]
        return out[0] if np.ndim(x) == 0 else out

    segs = tuple(eq.Segment(s.lo ** (1 / e), s.hi ** (1 / e), s.kind) for s in omega.support_segments)
    xs = omega.grid[:, 0] ** (1 / e)
    vals = evaluator(xs)
    band = segs[0]
    mass = _physical_mass(evaluator, band.lo, band.hi)
    if len(segs) > 1:
        mass += cap * math.log(segs[1].hi / segs[1].lo)
    return eq.DensityProfile(
        support_segments=segs,
        evaluator=evaluator,
        grid=np.column_stack([xs, vals]),
        total_mass=mass,
        cap=cap,
        coords="physical",
        meta={
            "identified": ident,
            "solution": sol,
            "model_profile": omega,
            "regime": sol.regime.value,
            "exponent": e,
        },
    )


def arctic_curve(params_template: EnsembleParams, xi_grid) -> list:
    """Band edge ``b`` and its physical image across slices.

    Each point carries ``active=True`` when the slice has a saturated segment.
    Slices that fail (for example ``kappa = 0``) are reported with NaN values
    and an error message instead of raising.
    """
    out = []
    for xi in xi_grid:
        try:
            p = params_template.replace(xi=float(xi))
            ident = identify(p)
            sol = eq.solve_constants(ident.spec)
            b = sol.crit.b
            active = sol.regime is not eq.Regime.SUBCRITICAL
            if active and not b <= ident.spec.x_max:
                raise MBShapeError(f"band edge {b} above x_max {ident.spec.x_max}")
            out.append(ArcticPoint(float(xi), b, b ** (1 / ident.pushforward_exponent), active))
        except (MBShapeError, ValueError) as exc:
            out.append(ArcticPoint(float(xi), math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"))
    return out


def limit_shape_support(profile: eq.DensityProfile, beta: float) -> tuple:
    """Interval of ``lambda`` covered by ``nu(lambda)``."""
    lo = profile.support_segments[0].lo
    hi = profile.support_segments[-1].hi
    return (-math.log(hi) / beta, math.inf if lo <= 0 else -math.log(lo) / beta)


def limit_shape(params: EnsembleParams, lambda_grid, profile: eq.DensityProfile | None = None) -> list:
    """Limit shape ``nu(lambda) = beta mu(e^{-beta lambda}) e^{-beta lambda}``.

    On a saturated interval the shape is the constant ``1/kappa``.

    Raises
    ------
    DomainError
        For ``beta = 0``.
    """
    if params.beta <= 0:
        raise DomainError("limit shape needs beta > 0")
    profile = profile or mu_density(params)
    lam = np.asarray(lambda_grid, dtype=float)
    if np.any(lam < 0):
        raise DomainError("lambda must be non-negative")
    x = np.exp(-params.beta * lam)
    vals = params.beta * profile.evaluator(x) * x
    return list(zip(lam.tolist(), np.asarray(vals, dtype=float).tolist()))
