"""Conformal map ``J(s) = (c1 s + c0) ((s + 1) / s)**(1/nu)`` and its inverses.

The map is analytic off the segment ``[-1, 0]``.  It has two real critical
points ``s_a <= -1`` and ``s_b >= 0``.  A pair of conjugate arcs joining them
is mapped onto the band ``[a, b]``; the rest of the plane is mapped onto the
complement of the band.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    ContinuationError,
    DomainError,
    InvariantError,
    NoRootError,
    OutOfBandError,
)

__all__ = [
    "EXCLUSION_TOL",
    "MapParams",
    "CriticalData",
    "SigmaContour",
    "eval_J",
    "eval_dJ",
    "eval_d2J",
    "critical_points",
    "trace_sigma",
    "invert_J_plus",
    "invert_J_minus",
    "invert_J_outside",
]

#: absolute distance from the cut [-1, 0] below which eval_J refuses to evaluate
EXCLUSION_TOL = 1e-12
# s_a is snapped to -1 when closer than this (hard-edge case c0 == c1)
_HARD_EDGE_SNAP = 1e-12


@dataclass(frozen=True)
class MapParams:
    """Parameters of the map.

    Attributes
    ----------
    c0, c1 : float
        Affine coefficients, ``c1 > 0`` and ``c0 >= 0``.  ``c0 = 0`` is
        accepted for evaluation only; :func:`critical_points` rejects it.
    nu : float
        Exponent parameter, ``nu >= 1``.
    """

    c0: float
    c1: float
    nu: float

    def __post_init__(self):
        if not (self.c1 > 0 and math.isfinite(self.c1)):
            raise DomainError(f"c1 must be positive, got {self.c1}")
        if not (self.c0 >= 0 and math.isfinite(self.c0)):
            raise DomainError(f"c0 must be non-negative, got {self.c0}")
        if not self.nu >= 1:
            raise DomainError(f"nu must be >= 1, got {self.nu}")


@dataclass(frozen=True)
class CriticalData:
    """Critical points of J and their images ``a = J(s_a)``, ``b = J(s_b)``."""

    s_a: float
    s_b: float
    a: float
    b: float

    @property
    def hard_edge(self) -> bool:
        """True when ``s_a = -1`` so that the lower band edge sits at ``a = 0``."""
        return self.s_a == -1.0


@dataclass(frozen=True)
class SigmaContour:
    """Samples of the upper arc and its mirror image.

    Attributes
    ----------
    upper_arc : ndarray of complex
        Points from ``s_a`` to ``s_b``; interior points have ``Im > 0``.
    lower_arc : ndarray of complex
        Complex conjugate of ``upper_arc``.
    x : ndarray of float
        ``J`` evaluated along the arc; strictly increasing from ``a`` to ``b``.
    t : ndarray of float
        Chebyshev parameter in ``[0, 1]`` with
        ``x = a + (b - a) (1 - cos(pi t)) / 2``.
    """

    upper_arc: np.ndarray
    lower_arc: np.ndarray
    x: np.ndarray
    t: np.ndarray


def _check_domain(s, tol):
    s = np.asarray(s, dtype=complex)
    bad = (np.abs(s.imag) <= tol) & (s.real >= -1 - tol) & (s.real <= tol)
    if np.any(bad):
        raise DomainError("J is not defined on the cut [-1, 0]")


def _J(p, s):
    # c1 s + c0 written around s = -1 to keep precision at the hard edge
    return (p.c1 * (s + 1) + (p.c0 - p.c1)) * np.exp((np.log(s + 1) - np.log(s)) / p.nu)


def _logderiv(p, s):
    return p.c1 / (p.c1 * (s + 1) + (p.c0 - p.c1)) + (1 / (s + 1) - 1 / s) / p.nu


def _J_scalar(p, s):
    return (p.c1 * (s + 1) + (p.c0 - p.c1)) * cmath.exp((cmath.log(s + 1) - cmath.log(s)) / p.nu)


def _dJ_scalar(p, s):
    lin = p.c1 * (s + 1) + (p.c0 - p.c1)
    j = lin * cmath.exp((cmath.log(s + 1) - cmath.log(s)) / p.nu)
    return j, j * (p.c1 / lin + (1 / (s + 1) - 1 / s) / p.nu)


def eval_J(p: MapParams, s, *, tol: float = EXCLUSION_TOL):
    """Evaluate ``J(s)`` on the principal branch.

    Parameters
    ----------
    p : MapParams
    s : complex or array_like of complex
        Points off the cut ``[-1, 0]``.
    tol : float, optional
        Exclusion distance around the cut.

    Returns
    -------
    complex or ndarray

    Raises
    ------
    DomainError
        If any point lies on the cut within ``tol``.
    """
    _check_domain(s, tol)
    out = _J(p, np.asarray(s, dtype=complex))
    return out[()] if out.ndim == 0 else out


def eval_dJ(p: MapParams, s, *, tol: float = EXCLUSION_TOL):
    """Closed-form derivative ``J'(s) = J(s) (c1/(c1 s + c0) + (1/(s+1) - 1/s)/nu)``."""
    _check_domain(s, tol)
    s = np.asarray(s, dtype=complex)
    out = _J(p, s) * _logderiv(p, s)
    return out[()] if out.ndim == 0 else out


def eval_d2J(p: MapParams, s, *, tol: float = EXCLUSION_TOL):
    """Closed-form second derivative of J."""
    _check_domain(s, tol)
    s = np.asarray(s, dtype=complex)
    L = _logderiv(p, s)
    dL = -(p.c1 / (p.c1 * (s + 1) + (p.c0 - p.c1))) ** 2 + (1 / s**2 - 1 / (s + 1) ** 2) / p.nu
    out = _J(p, s) * (L * L + dL)
    return out[()] if out.ndim == 0 else out


def critical_points(p: MapParams) -> CriticalData:
    """Closed-form critical points and band edges.

    Raises
    ------
    InvariantError
        If ``s_a > -1`` or ``s_b < 0`` (invalid ``c0``, ``c1``).
    """
    nu, c0, c1 = p.nu, p.c0, p.c1
    shift = -(nu - 1) / (2 * nu)
    root = math.sqrt(4 * c0 * c1 * nu + c1**2 * (nu - 1) ** 2) / (2 * nu * c1)
    s_a, s_b = shift - root, shift + root
    if abs(s_a + 1) <= _HARD_EDGE_SNAP:
        s_a = -1.0
    if s_a > -1 or s_b < 0 or s_b == 0:
        raise InvariantError(f"critical points out of order: s_a={s_a}, s_b={s_b}")
    if s_a == -1.0:
        a = 0.0
    else:
        # limit from above the cut; (s+1)/s > 0 on s < -1 so the value is real
        a = _J_scalar(p, complex(s_a, 0.0)).real
    b = _J_scalar(p, complex(s_b, 0.0)).real
    if not 0 <= a < b:
        raise InvariantError(f"band edges out of order: a={a}, b={b}")
    return CriticalData(s_a=s_a, s_b=s_b, a=a, b=b)


def _edge_seed(p, crit, x, edge):
    """Local model of the upper-arc preimage of ``x`` close to a band edge."""
    if edge == "a":
        if crit.hard_edge:
            # J ~ c1 (s+1)^(1+1/nu) e^{-i pi/nu} near s = -1
            r = (max(x, 0.0) / p.c1) ** (p.nu / (p.nu + 1))
            return -1 + r * cmath.exp(1j * math.pi / (p.nu + 1))
        s_e, x_e = crit.s_a, crit.a
    else:
        s_e, x_e = crit.s_b, crit.b
    j2 = complex(eval_d2J(p, complex(s_e, 0.0))).real
    d = cmath.sqrt(2 * (x - x_e) / j2 + 0j)
    s = s_e + d
    return s if s.imag >= 0 else s_e - d


def _newton_scalar(p, s, x, tol, maxit=60):
    for _ in range(maxit):
        j, dj = _dJ_scalar(p, s)
        if dj == 0:
            break
        ds = (j - x) / dj
        s = s - ds
        if abs(ds) <= tol * max(1.0, abs(s)):
            return s, True
    j = _J_scalar(p, s)
    return s, abs(j - x) <= 1e-12 * max(1.0, abs(x))


def trace_sigma(p: MapParams, n_points: int = 2049, crit: CriticalData | None = None) -> SigmaContour:
    """Trace the upper arc by predictor-corrector continuation in ``x = J(s)``.

    The arc is sampled at Chebyshev-spaced band values so that the samples
    cluster near both edges.  The predictor is a tangent step
    ``s + dx / J'(s)``; the corrector is Newton on ``J(s) = x``.  A failed
    corrector halves the step, up to a fixed depth.

    Parameters
    ----------
    p : MapParams
    n_points : int
        Number of samples including both endpoints, at least 8.
    crit : CriticalData, optional
        Precomputed critical data.

    Raises
    ------
    ContinuationError
        If the corrector loses the level set ``Im J = 0`` on the upper arc.
    """
    if n_points < 8:
        raise DomainError("n_points must be >= 8")
    crit = crit or critical_points(p)
    a, b = crit.a, crit.b
    t = np.linspace(0.0, 1.0, n_points)
    xs = a + (b - a) * (1 - np.cos(np.pi * t)) / 2
    xs[0], xs[-1] = a, b
    S = np.empty(n_points, dtype=complex)
    S[0], S[-1] = crit.s_a, crit.s_b

    s, ok = _newton_scalar(p, _edge_seed(p, crit, xs[1], "a"), xs[1], 1e-15)
    if not ok or s.imag <= 0:
        raise ContinuationError("could not start the arc at s_a")
    S[1] = s
    for k in range(2, n_points - 1):
        x_prev, x_new = xs[k - 1], xs[k]
        s = S[k - 1]
        sub, depth = 1, 0
        while True:
            trial, good = s, True
            for m in range(1, sub + 1):
                xm = x_prev + (x_new - x_prev) * m / sub
                xm_prev = x_prev + (x_new - x_prev) * (m - 1) / sub
                _, dj = _dJ_scalar(p, trial)
                trial, conv = _newton_scalar(p, trial + (xm - xm_prev) / dj, xm, 1e-15)
                if not conv or trial.imag <= 0:
                    good = False
                    break
            if good:
                break
            depth += 1
            sub *= 2
            if depth > 12:
                raise ContinuationError(f"lost Im J = 0 at x = {x_new}")
        S[k] = trial
    return SigmaContour(upper_arc=S, lower_arc=S.conj(), x=xs, t=t)


def _t_of_x(x, a, b):
    return np.arccos(np.clip(1 - 2 * (x - a) / (b - a), -1.0, 1.0)) / np.pi


def invert_J_plus(p: MapParams, crit: CriticalData, sigma: SigmaContour, x, *, maxit: int = 50):
    """Preimage of band points on the upper arc.

    Seeds come from the traced samples (or the local edge model for points
    closer to an edge than the first sample) and are polished by Newton.

    Parameters
    ----------
    x : float or array_like
        Band points in ``[a, b]``.

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    OutOfBandError
        If any ``x`` lies outside ``[a, b]``.
    """
    a, b = crit.a, crit.b
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    scale = max(1.0, b)
    if np.any(xa < a - 1e-14 * scale) or np.any(xa > b + 1e-14 * scale) or np.any(~np.isfinite(xa)):
        raise OutOfBandError(f"x outside the band [{a}, {b}]")
    xa = np.clip(xa, a, b)
    out = np.empty(xa.shape, dtype=complex)
    at_a, at_b = xa == a, xa == b
    out[at_a], out[at_b] = crit.s_a, crit.s_b
    inner = ~(at_a | at_b)
    if np.any(inner):
        xi = xa[inner]
        tt = _t_of_x(xi, a, b)
        S = sigma.upper_arc
        s = np.interp(tt, sigma.t, S.real) + 1j * np.interp(tt, sigma.t, S.imag)
        lo, hi = xi < sigma.x[1], xi > sigma.x[-2]
        for mask, edge in ((lo, "a"), (hi, "b")):
            for k in np.flatnonzero(mask):
                s[k] = _edge_seed(p, crit, xi[k], edge)
        for _ in range(maxit):
            L = _logderiv(p, s)
            j = _J(p, s)
            ds = (j - xi) / (j * L)
            ds[~np.isfinite(ds)] = 0
            s = s - ds
            if np.all(np.abs(ds) <= 1e-15 * np.maximum(1.0, np.abs(s))):
                break
        # the conjugate of a lower-arc root is the upper-arc root
        s = np.where(s.imag < 0, s.conj(), s)
        out[inner] = s
    return out[0] if np.ndim(x) == 0 else out


def invert_J_minus(p: MapParams, crit: CriticalData, sigma: SigmaContour, x):
    """Preimage on the lower arc, the conjugate of :func:`invert_J_plus`."""
    return np.conj(invert_J_plus(p, crit, sigma, x))


def invert_J_outside(p: MapParams, crit: CriticalData, x: float, mode: str = "outside") -> float:
    """Real preimage of ``x > b`` on either side of ``s_b``.

    Parameters
    ----------
    x : float
        Target value, strictly above ``b``.
    mode : {"outside", "inside"}
        ``"outside"`` solves on ``(s_b, inf)`` where J increases from ``b``;
        ``"inside"`` solves on ``(0, s_b)`` where J decreases from ``+inf``.

    Raises
    ------
    NoRootError
        If ``x <= b``.
    """
    b, s_b = crit.b, crit.s_b
    if not x > b:
        raise NoRootError(f"no real preimage of x={x} <= b={b}")
    f = lambda s: _J_scalar(p, complex(s, 0.0)).real - x  # noqa: E731
    if mode == "outside":
        hi = max(2 * s_b, x / p.c1 + 1.0)
        while f(hi) <= 0:
            hi *= 2
        return optimize.brentq(f, s_b, hi, xtol=1e-15 * hi, rtol=1e-15, maxiter=500)
    if mode == "inside":
        lo = s_b / 2
        while f(lo) <= 0:
            lo /= 2
            if lo < 1e-300:
                raise NoRootError("inside branch bracket failed")
        return optimize.brentq(f, lo, s_b, xtol=1e-16 * s_b, rtol=1e-15, maxiter=500)
    raise DomainError(f"unknown mode {mode!r}")
