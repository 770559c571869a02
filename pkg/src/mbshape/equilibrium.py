"""Closed-form equilibrium measures of the two constrained model problems.

Both problems minimise a log-energy functional over probability densities on
``[0, x_max]`` that obey the upper constraint ``omega(x) <= 1/(beta rho kappa x)``.
The minimiser is written in terms of the conformal map of
:mod:`mbshape.conformal` with constants fixed by a four-equation normalization
system.  Problem ``MP1`` carries the potential ``log(1 - x**nu e^{-beta alpha u})``
and problem ``MP2`` the potential ``log(1 - x e^{-beta alpha u})``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import conformal as cf
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    InconsistentSpecError,
    InsufficientRangeError,
    NegativityError,
)

__all__ = [
    "ProblemId",
    "Regime",
    "SegmentKind",
    "Region",
    "Edge",
    "ModelProblemSpec",
    "SpectralSolution",
    "Segment",
    "DensityProfile",
    "closed_form_constants",
    "defining_residuals",
    "solve_constants",
    "classify_regime",
    "subcritical_ansatz_check",
    "find_beta_critical",
    "regime_margin",
    "density",
    "eval_N",
    "edge_exponent",
    "with_lagrange_multiplier",
]

RESIDUAL_TOL = 1e-6
# mass deficit of the band-only ansatz above which the constraint counts as active
OPERATIVE_TOL = 1e-8


class ProblemId(str, Enum):
    MP1 = "MP1"
    MP2 = "MP2"


class Regime(str, Enum):
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    SATURATED = "Saturated_n1_eq_n2"


class SegmentKind(str, Enum):
    BAND = "Band"
    SATURATED = "Saturated"


class Region(str, Enum):
    INSIDE = "InsideSigma"
    OUTSIDE = "OutsideSigma"


class Edge(str, Enum):
    LOWER = "Lower"
    UPPER = "Upper"


@dataclass(frozen=True)
class ModelProblemSpec:
    """Parameters of a model problem.

    Attributes
    ----------
    problem_id : ProblemId
    nu : float
        Interaction exponent, ``nu > 1``.
    kappa : float
        Particle fraction in ``(0, 1]``.
    m1 : float
        Coefficient of ``log x`` in the potential, ``m1 >= 0``.
    n1, n2 : float
        Limits of the u-integral in the potential, ``n1 <= n2``.
    alpha : float
        Rate in the potential, ``alpha > 0``.
    beta : float
        Inverse temperature, ``beta > 0``.
    rho : float, optional
        Pushforward exponent setting the upper constraint.  The closed form
        saturates at ``nu/(kappa alpha beta)`` for MP1 and ``1/(kappa alpha beta)``
        for MP2, so ``rho`` defaults to ``alpha/nu`` or ``alpha``.  Any other
        value is kept but rejected by :func:`density`.
    """

    problem_id: ProblemId
    nu: float
    kappa: float
    m1: float
    n1: float
    n2: float
    alpha: float
    beta: float
    rho: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "problem_id", ProblemId(self.problem_id))
        if not self.nu > 1:
            raise DomainError(f"nu must exceed 1, got {self.nu}")
        if not 0 < self.kappa <= 1:
            raise DomainError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not self.m1 >= 0:
            raise DomainError(f"m1 must be non-negative, got {self.m1}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise DomainError("beta must be positive; beta = 0 is handled by quadrature only")
        if self.n2 < self.n1:
            raise InconsistentSpecError(f"n2={self.n2} < n1={self.n1}")
        if self.rho is None:
            object.__setattr__(self, "rho", self.natural_rho)
        elif not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")

    @property
    def natural_rho(self) -> float:
        """The value of ``rho`` compatible with the closed-form saturation level."""
        return self.alpha / self.nu if self.problem_id is ProblemId.MP1 else self.alpha

    @property
    def rho_consistent(self) -> bool:
        return abs(self.rho - self.natural_rho) <= 1e-12 * max(1.0, self.rho)

    @property
    def x_max(self) -> float:
        """Upper end of the admissible interval, ``exp(rho beta n1)``."""
        return math.exp(self.rho * self.beta * self.n1)

    @property
    def cap(self) -> float:
        """Constraint coefficient ``1/(beta rho kappa)``."""
        return 1.0 / (self.beta * self.rho * self.kappa)

    @property
    def saturated_case(self) -> bool:
        return abs(self.n2 - self.n1) <= 1e-12

    def with_beta(self, beta: float) -> "ModelProblemSpec":
        rho = None if self.rho_consistent else self.rho
        return replace(self, beta=beta, rho=rho)


@dataclass(frozen=True)
class SpectralSolution:
    """Spectral constants of a solved model problem.

    ``s1`` and ``s2`` are the real preimages of ``exp(n1 alpha beta / nu)`` and
    ``exp(n2 alpha beta / nu)`` (MP1) or of ``exp(n2 alpha beta)`` and
    ``exp(n1 alpha beta)`` (MP2).  ``q1`` is the second real preimage of
    ``x_max`` whenever ``x_max > b``.
    """

    spec: ModelProblemSpec
    A: float
    B: float
    s1: float
    s2: float
    q1: float | None
    K1: float
    K2: float
    map: cf.MapParams
    crit: cf.CriticalData
    regime: Regime | None
    sigma: cf.SigmaContour = field(repr=False, compare=False)
    lagrange_multiplier: float | None = None
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def c0(self) -> float:
        return self.map.c0

    @property
    def c1(self) -> float:
        return self.map.c1


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    kind: SegmentKind


@dataclass(frozen=True)
class DensityProfile:
    """A closed-form density with a sampled grid.

    Attributes
    ----------
    support_segments : tuple of Segment
        Band first, then the saturated segment if any.
    evaluator : callable
        Vectorised ``x -> density``; zero off the support.
    grid : ndarray, shape (n, 2)
        Columns ``x`` and density value.
    total_mass : float
        Integral over all segments.
    cap : float
        Constraint coefficient; the density never exceeds ``cap / x``.
    coords : str
        ``"model"`` for omega, ``"physical"`` for mu.
    """

    support_segments: tuple
    evaluator: Callable = field(repr=False, compare=False)
    grid: np.ndarray = field(repr=False, compare=False)
    total_mass: float = 1.0
    cap: float = 1.0
    coords: str = "model"
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def band(self) -> Segment:
        return self.support_segments[0]

    @property
    def saturated(self) -> Segment | None:
        for seg in self.support_segments:
            if seg.kind is SegmentKind.SATURATED:
                return seg
        return None

    def __call__(self, x):
        return self.evaluator(x)


# ---------------------------------------------------------------------------
# constants


def _log_constants(spec: ModelProblemSpec):
    nu, k, m1, n1, n2, al, be = spec.nu, spec.kappa, spec.m1, spec.n1, spec.n2, spec.alpha, spec.beta
    ab = al * be
    if spec.problem_id is ProblemId.MP1:
        lnA = ab * k / nu * (nu + 1 + m1 + nu / k * (n2 - n1))
        lnB = ab * k / nu * (1 + m1)
    else:
        lnA = ab * k * (nu + 1 + m1 + (n2 - n1) / k)
        lnB = ab * k * (1 + m1 + (n2 - n1) / k)
    Am1, Bm1 = math.expm1(lnA), math.expm1(lnB)
    s2 = Bm1 / (math.exp(lnB) * math.expm1(lnA - lnB))
    s1 = math.exp(lnA) * s2
    if spec.problem_id is ProblemId.MP1:
        lnK1 = (n1 * ab + lnA + math.log(Bm1) - lnB - math.log(Am1)) / nu
        lnK2 = (n2 * ab + math.log(Bm1) - math.log(Am1)) / nu
    else:
        lnK1 = n2 * ab + (lnA + math.log(Bm1) - lnB - math.log(Am1)) / nu
        lnK2 = n1 * ab + (math.log(Bm1) - math.log(Am1)) / nu
    K1, K2 = math.exp(lnK1), math.exp(lnK2)
    # c1 = (K1 - K2)/(s1 - s2), c0 = (K2 s1 - K1 s2)/(s1 - s2), with s1 - s2 = s2 (A - 1)
    c1 = K2 * math.expm1(lnK1 - lnK2) / (s2 * Am1)
    c0 = (K2 * math.exp(lnA) - K1) / Am1
    return dict(A=math.exp(lnA), B=math.exp(lnB), s1=s1, s2=s2, K1=K1, K2=K2, c0=c0, c1=c1)


def _printed_variant(spec: ModelProblemSpec, variant: str):
    """Alternative printed closed forms, used only for diagnostics."""
    nu, k, m1, n1, n2, al, be = spec.nu, spec.kappa, spec.m1, spec.n1, spec.n2, spec.alpha, spec.beta
    ab = al * be
    if variant == "body" and spec.problem_id is ProblemId.MP1:
        A = math.exp(ab * k * (nu + 1 + m1 + nu / k * (n2 - n1)))
        B = math.exp(ab * k / nu * (1 + m1))
        e1, e2 = math.exp(n1 * ab), math.exp(n2 * ab)
    elif variant == "body":
        A = math.exp(ab * k * (nu + 1 + m1 + (n2 - n1) / k))
        B = math.exp(ab * k * (1 + m1))
        e1, e2 = math.exp(n2 * ab), math.exp(n1 * ab)
    elif variant == "saturated":
        A = math.exp(ab * k * (nu + 1 + m1))
        B = math.exp(ab * k * (1 + m1))
        e1 = e2 = math.exp(n1 * ab)
    else:
        raise DomainError(f"unknown variant {variant!r}")
    s2 = (B - 1) / (A - B)
    s1 = A * s2
    K1 = e1 * (A * (B - 1) / (B * (A - 1))) ** (1 / nu)
    K2 = e2 * ((B - 1) / (A - 1)) ** (1 / nu)
    c1 = (K1 - K2) / (s1 - s2)
    c0 = (K2 * s1 - K1 * s2) / (s1 - s2)
    return dict(A=A, B=B, s1=s1, s2=s2, K1=K1, K2=K2, c0=c0, c1=c1)


def closed_form_constants(spec: ModelProblemSpec, variant: str = "intro") -> dict:
    """Printed closed forms for ``A, B, s1, s2, K1, K2, c0, c1``.

    Parameters
    ----------
    variant : {"intro", "body", "saturated"}
        ``"intro"`` is evaluated in log space and is the default.  The other
        two reproduce alternative printed forms for comparison.
    """
    if variant == "intro":
        return _log_constants(spec)
    return _printed_variant(spec, variant)


def _N_in_limits(spec, s1, s2):
    """Inside-region N at s = 0 and s = -1 from its closed form."""
    nu, k, m1, dn = spec.nu, spec.kappa, spec.m1, spec.n2 - spec.n1
    ab = spec.alpha * spec.beta
    if spec.problem_id is ProblemId.MP1:
        c = nu / (k * ab)
        n0 = -1 - m1 + c * (-dn * ab + math.log(s1 / s2))
        nm1 = -1 - m1 + c * math.log((s1 + 1) / (s2 + 1))
    else:
        c = 1 / (k * ab)
        n0 = -1 - m1 - dn / k + c * math.log(s1 / s2)
        nm1 = -1 - m1 - dn / k + c * math.log((s1 + 1) / (s2 + 1))
    return n0, nm1


def defining_residuals(spec: ModelProblemSpec, s1, s2, c0, c1) -> np.ndarray:
    """Residuals of the system fixing ``(s1, s2, c0, c1)``.

    The four equations are ``N(0) = nu``, ``N(-1) = 0`` and the two preimage
    conditions on ``J(s1)`` and ``J(s2)``, all written on a log scale.
    """
    n0, nm1 = _N_in_limits(spec, s1, s2)
    p = cf.MapParams(c0=c0, c1=c1, nu=spec.nu)
    lj1 = math.log(cf._J_scalar(p, complex(s1)).real)
    lj2 = math.log(cf._J_scalar(p, complex(s2)).real)
    ab = spec.alpha * spec.beta
    if spec.problem_id is ProblemId.MP1:
        r3, r4 = spec.nu * lj1 - spec.n1 * ab, spec.nu * lj2 - spec.n2 * ab
    else:
        r3, r4 = lj1 - spec.n2 * ab, lj2 - spec.n1 * ab
    return np.array([n0 - spec.nu, nm1, r3, r4])


def _newton_refine(spec, guess):
    x0 = np.log([guess["s1"], guess["s2"], guess["c0"], guess["c1"]])

    def fun(z):
        s1, s2, c0, c1 = np.exp(z)
        return defining_residuals(spec, s1, s2, c0, c1)

    sol = optimize.root(fun, x0, method="hybr", options={"xtol": 1e-15})
    res = fun(sol.x)
    if not np.all(np.isfinite(res)) or np.max(np.abs(res)) > 1e-10:
        raise ConvergenceError("normalization system did not converge", residuals=res)
    s1, s2, c0, c1 = np.exp(sol.x)
    return dict(guess, s1=s1, s2=s2, c0=c0, c1=c1)


def regime_margin(spec: ModelProblemSpec) -> float:
    """Signed algebraic regime test, positive in the supercritical regime.

    MP1 uses ``s1 - s_b``; MP2 uses ``s_b - s2``.
    """
    k = _log_constants(spec)
    crit = cf.critical_points(cf.MapParams(c0=k["c0"], c1=k["c1"], nu=spec.nu))
    if spec.problem_id is ProblemId.MP1:
        return k["s1"] - crit.s_b
    return crit.s_b - k["s2"]


def solve_constants(spec: ModelProblemSpec, n_sigma: int = 2049) -> SpectralSolution:
    """Solve for the spectral constants and classify the regime.

    The intro closed forms are evaluated first and checked against
    :func:`defining_residuals`.  Residuals above ``1e-6`` trigger a Newton
    solve seeded with the closed forms.  Residuals of the alternative printed
    forms are recorded in ``diagnostics["variant_residuals"]``.

    Raises
    ------
    ConvergenceError
        If the Newton fallback fails.
    """
    consts = _log_constants(spec)
    res = defining_residuals(spec, consts["s1"], consts["s2"], consts["c0"], consts["c1"])
    diag = {"residuals": res.tolist(), "newton_used": False, "warnings": []}
    variants = {}
    for name in ("body", "saturated"):
        if name == "saturated" and not spec.saturated_case:
            continue
        try:
            v = _printed_variant(spec, name)
            variants[name] = float(np.max(np.abs(defining_residuals(spec, v["s1"], v["s2"], v["c0"], v["c1"]))))
        except (ValueError, ZeroDivisionError, OverflowError, cf.DomainError):
            variants[name] = math.inf
    variants["intro"] = float(np.max(np.abs(res)))
    diag["variant_residuals"] = variants
    if not np.all(np.isfinite(res)) or np.max(np.abs(res)) > RESIDUAL_TOL:
        consts = _newton_refine(spec, consts)
        diag["newton_used"] = True
        diag["residuals"] = defining_residuals(
            spec, consts["s1"], consts["s2"], consts["c0"], consts["c1"]
        ).tolist()
    mp = cf.MapParams(c0=consts["c0"], c1=consts["c1"], nu=spec.nu)
    crit = cf.critical_points(mp)
    sigma = cf.trace_sigma(mp, n_sigma, crit)
    x_max = spec.x_max
    q1 = None
    if x_max > crit.b * (1 + 1e-14):
        if spec.problem_id is ProblemId.MP1:
            # s1 is the preimage of x_max; q1 is the one on the other side of s_b
            mode = "inside" if consts["s1"] >= crit.s_b else "outside"
        else:
            mode = "outside" if consts["s2"] <= crit.s_b else "inside"
        q1 = cf.invert_J_outside(mp, crit, x_max, mode)
    sol = SpectralSolution(
        spec=spec,
        A=consts["A"],
        B=consts["B"],
        s1=consts["s1"],
        s2=consts["s2"],
        q1=q1,
        K1=consts["K1"],
        K2=consts["K2"],
        map=mp,
        crit=crit,
        regime=None,
        sigma=sigma,
        diagnostics=diag,
    )
    return replace(sol, regime=classify_regime(sol))


# ---------------------------------------------------------------------------
# regime


def _band_density(sol, x):
    """Band formula ``(cap/(pi x)) Arg((s1 - I+)/(s2 - I+))`` without clipping."""
    s = cf.invert_J_plus(sol.map, sol.crit, sol.sigma, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (sol.s1 - s) / (sol.s2 - s)
        ang = np.angle(ratio)
        # real ratios occur only at the edges; take the limit from the upper arc
        ang = np.where(ratio.imag == 0, np.abs(ang), ang)
        return sol.spec.cap / (np.pi * x) * ang


def _band_mass(sol) -> float:
    a, b = sol.crit.a, sol.crit.b

    def f(t):
        x = a + (b - a) * (1 - math.cos(math.pi * t)) / 2
        if x <= a:
            return 0.0
        return float(_band_density(sol, np.array([x]))[0]) * (b - a) * math.pi / 2 * math.sin(math.pi * t)

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def subcritical_ansatz_check(sol: SpectralSolution) -> dict:
    """Test whether the band-only density is admissible.

    Returns
    -------
    dict
        ``band_mass`` of the band-only formula, its ``deficit`` ``1 - band_mass``,
        and ``edge_ratio``, the value of ``omega(x) x / cap`` at ``x = b``.
        A positive deficit means the upper constraint has to carry mass on a
        saturated interval.
    """
    mass = _band_mass(sol)
    sb = sol.crit.s_b
    ang = float(np.angle((sol.s1 - sb + 0j) / (sol.s2 - sb + 0j)))
    return {"band_mass": mass, "deficit": 1.0 - mass, "edge_ratio": ang / math.pi}


def classify_regime(sol: SpectralSolution) -> Regime:
    """Regime of a solved problem.

    ``n1 = n2`` is always saturated.  Otherwise the algebraic test
    (:func:`regime_margin`) is cross-checked against the mass deficit of the
    band-only ansatz; the latter wins on disagreement and a warning is
    recorded in ``sol.diagnostics``.
    """
    spec = sol.spec
    if spec.saturated_case:
        return Regime.SATURATED
    if spec.problem_id is ProblemId.MP1:
        margin = sol.s1 - sol.crit.s_b
    else:
        margin = sol.crit.s_b - sol.s2
    algebraic = Regime.SUPERCRITICAL if margin > 0 else Regime.SUBCRITICAL
    check = subcritical_ansatz_check(sol)
    operative = Regime.SUPERCRITICAL if check["deficit"] > OPERATIVE_TOL else Regime.SUBCRITICAL
    sol.diagnostics.update(
        algebraic_regime=algebraic.value,
        operative_regime=operative.value,
        margin=margin,
        mp2_theorem_margin=(sol.s1 - sol.crit.s_b) if spec.problem_id is ProblemId.MP2 else None,
        ansatz=check,
    )
    if algebraic is not operative:
        msg = (
            f"regime tests disagree (margin={margin:.3e}, deficit={check['deficit']:.3e}); "
            f"using {operative.value}"
        )
        sol.diagnostics["warnings"].append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return operative


def find_beta_critical(
    spec_template: ModelProblemSpec, beta_lo: float = 1e-6, beta_hi: float = 1.0, beta_ceiling: float = 1e6
) -> float:
    """Critical inverse temperature where the algebraic margin changes sign.

    The margin is negative at ``beta_lo``; ``beta_hi`` is doubled until the
    margin turns positive, then the root is polished by Brent's method.

    Raises
    ------
    DomainError
        For ``n1 = n2`` (always saturated).
    BracketError
        If no sign change is found below ``beta_ceiling``.
    """
    if spec_template.saturated_case:
        raise DomainError("n1 = n2 has no critical beta")
    f = lambda be: regime_margin(spec_template.with_beta(be))  # noqa: E731
    if f(beta_lo) >= 0:
        raise BracketError(f"already supercritical at beta={beta_lo}")
    hi = beta_hi
    while f(hi) <= 0:
        hi *= 2
        if hi > beta_ceiling:
            raise BracketError(f"no sign change below beta={beta_ceiling}")
    lo = hi / 2 if f(hi / 2) < 0 else beta_lo
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


# ---------------------------------------------------------------------------
# density


def _band_grid(a, b, n_band, hard_lower, per_decade=32, decades=8):
    t = np.linspace(0.0, 1.0, n_band)
    xs = a + (b - a) * (1 - np.cos(np.pi * t)) / 2
    off = (b - a) * np.logspace(-decades, -1, per_decade * (decades - 1) + 1)
    xs = np.concatenate([xs, a + off, b - off])
    xs = np.unique(np.clip(xs, a, b))
    if hard_lower:
        xs = xs[xs > a]
    return xs


def density(sol: SpectralSolution, n_band: int = 2048, n_sat: int = 256) -> DensityProfile:
    """Equilibrium density of a solved, classified problem.

    Raises
    ------
    InconsistentSpecError
        If ``rho`` is not the natural value for the problem.
    NegativityError
        If the band formula is negative anywhere on the grid.
    """
    spec = sol.spec
    if not spec.rho_consistent:
        raise InconsistentSpecError(
            f"rho={spec.rho} but the closed form saturates at rho={spec.natural_rho}"
        )
    a, b, cap = sol.crit.a, sol.crit.b, spec.cap
    regime = sol.regime or classify_regime(sol)
    segs = [Segment(a, b, SegmentKind.BAND)]
    if regime is not Regime.SUBCRITICAL and spec.x_max > b:
        segs.append(Segment(b, spec.x_max, SegmentKind.SATURATED))
    segs = tuple(segs)
    sat = segs[1] if len(segs) > 1 else None

    def evaluator(x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xa)
        band = (xa >= a) & (xa <= b)
        if np.any(band):
            vals = _band_density(sol, xa[band])
            out[band] = np.where(np.isnan(vals), np.inf, np.maximum(vals, 0.0))
        if sat is not None:
            m = (xa > b) & (xa <= sat.hi)
            out[m] = cap / xa[m]
        return out[0] if np.ndim(x) == 0 else out

    xs = _band_grid(a, b, n_band, sol.crit.hard_edge)
    raw = _band_density(sol, xs)
    if np.any(raw < -1e-10):
        raise NegativityError(f"band density negative: min {raw.min():.3e}")
    vals = np.maximum(raw, 0.0)
    if sat is not None:
        xsat = np.geomspace(b, sat.hi, n_sat)[1:]
        xs = np.concatenate([xs, xsat])
        vals = np.concatenate([vals, cap / xsat])
    band_mass = _band_mass(sol)
    sat_mass = cap * math.log(sat.hi / sat.lo) if sat is not None else 0.0
    return DensityProfile(
        support_segments=segs,
        evaluator=evaluator,
        grid=np.column_stack([xs, vals]),
        total_mass=band_mass + sat_mass,
        cap=cap,
        coords="model",
        meta={"regime": regime.value, "band_mass": band_mass, "saturated_mass": sat_mass},
    )


# ---------------------------------------------------------------------------
# N function


def _jnu(sol, s):
    # J^nu = (c1 s + c0)^nu (s+1)/s; the principal power is analytic inside sigma
    p = sol.map
    return (p.c1 * (s + 1) + (p.c0 - p.c1)) ** p.nu * (s + 1) / s


def eval_N(sol: SpectralSolution, s, region: Region | str):
    """Closed-form ``N(s)`` on either side of the contour.

    ``s = 0`` and ``s = -1`` (inside) and ``s = inf`` (outside) are evaluated
    as limits.

    Raises
    ------
    DomainError
        On the real cuts: the open segment ``(-1, 0)`` and the closed real
        segment spanned by ``s1``, ``s2`` and ``q1``.
    """
    region = Region(region)
    spec = sol.spec
    nu, k, m1, dn = spec.nu, spec.kappa, spec.m1, spec.n2 - spec.n1
    ab = spec.alpha * spec.beta
    mp1 = spec.problem_id is ProblemId.MP1
    c = (nu if mp1 else 1.0) / (k * ab)
    s = complex(s)
    if math.isinf(abs(s)):
        if region is not Region.OUTSIDE:
            raise DomainError("infinity lies outside sigma")
        return 1.0 + 0j
    if region is Region.INSIDE and s == 0:
        return complex(_N_in_limits(spec, sol.s1, sol.s2)[0])
    if region is Region.INSIDE and s == -1:
        return complex(_N_in_limits(spec, sol.s1, sol.s2)[1])
    roots = [sol.s1, sol.s2] + ([sol.q1] if sol.q1 is not None else [])
    if abs(s.imag) <= 1e-14 and (-1 < s.real < 0 or min(roots) <= s.real <= max(roots)):
        raise DomainError(f"s={s} lies on a cut of N")
    lr = np.log((sol.s1 - s) / (sol.s2 - s))
    if mp1:
        if region is Region.INSIDE:
            X = _jnu(sol, s)
            LU = np.log(1 - math.exp(-spec.n2 * ab) * X) - np.log(1 - math.exp(-spec.n1 * ab) * X)
            return complex(-1 - m1 + c * (LU + lr))
        return complex(1 - c * lr)
    if region is Region.INSIDE:
        return complex(-1 - m1 - dn / k + c * lr)
    X = cf._J_scalar(sol.map, s)
    LU = np.log(1 - math.exp(-spec.n2 * ab) * X) - np.log(1 - math.exp(-spec.n1 * ab) * X)
    return complex(1 + c * (LU + dn * ab - lr))


# ---------------------------------------------------------------------------
# edges


def edge_exponent(profile: DensityProfile, edge: Edge | str, n_fit: int = 33) -> float:
    """Least-squares slope of ``log density`` against ``log|x - edge|``.

    The fit uses one decade of distances, ``[1e-6, 1e-5]`` times the band
    width, measured into the band from the queried edge.

    Raises
    ------
    DomainError
        If the upper edge borders a saturated segment.
    InsufficientRangeError
        If the band is too narrow to resolve the fitting decade.
    """
    edge = Edge(edge)
    band = profile.band
    w = band.hi - band.lo
    if edge is Edge.UPPER and profile.saturated is not None:
        raise DomainError("upper edge borders a saturated segment")
    if not w > 1e-9 * max(1.0, band.hi):
        raise InsufficientRangeError(f"band width {w} too small for an edge fit")
    d = np.geomspace(1e-6 * w, 1e-5 * w, n_fit)
    x = band.lo + d if edge is Edge.LOWER else band.hi - d
    y = np.asarray(profile.evaluator(x), dtype=float)
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise InsufficientRangeError("density not positive over the fitting decade")
    slope, _ = np.polyfit(np.log(d), np.log(y), 1)
    return float(slope)


def with_lagrange_multiplier(sol: SpectralSolution, profile: DensityProfile | None = None) -> SpectralSolution:
    """Return a copy with ``lagrange_multiplier`` set to the effective potential at the band midpoint."""
    from .quadrature import effective_potential

    profile = profile or density(sol)
    mid = 0.5 * (sol.crit.a + sol.crit.b)
    ell = float(effective_potential(profile, sol.spec, [mid])[0])
    return replace(sol, lagrange_multiplier=ell)
