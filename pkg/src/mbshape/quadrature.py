"""Log-singular integrals: rate functionals, external field and Euler-Lagrange residuals.

Measures are stored as cell masses on a partition of the admissible interval
(a piecewise-constant density).  The logarithmic double integral is split as

    ln|x^p - y^p| = ln|x - y| + R_p(x, y),   R_p(x, y) = ln((x^p - y^p)/(x - y)),

where the first term is integrated exactly over each pair of cells and the
smooth remainder ``R_p`` by the midpoint rule.  Both pieces are second order
in the mesh width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, SupportError

__all__ = [
    "GriddedMeasure",
    "FunctionalValue",
    "log_energy",
    "rate_functional",
    "model_functional",
    "external_field",
    "effective_potential",
    "el_residual",
    "cell_capacity",
    "random_admissible_bump",
]

MASS_TOL = 1e-10
# near-field cutoff: cell pairs closer than this many widths use the exact panel formula
_NEAR = 8.0
_CHUNK = 1024


# ---------------------------------------------------------------------------
# measures


def _gl(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def _cell_masses(f, edges, order=8):
    t, w = _gl(order)
    lo, h = edges[:-1], np.diff(edges)
    pts = lo[:, None] + h[:, None] * t[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return np.maximum(h * (vals @ w), 0.0)


@dataclass(frozen=True)
class GriddedMeasure:
    """Probability measure with piecewise-constant density plus optional atoms.

    Attributes
    ----------
    edges : ndarray, shape (n + 1,)
        Strictly increasing cell boundaries.
    weights : ndarray, shape (n,)
        Non-negative cell masses.
    atoms : tuple of (float, float)
        Point masses ``(location, mass)``.  Any atom makes the rate infinite.
    """

    edges: np.ndarray
    weights: np.ndarray
    atoms: tuple = ()
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "weights", w)
        if e.ndim != 1 or w.shape != (e.size - 1,):
            raise DomainError("need n + 1 edges for n weights")
        if np.any(np.diff(e) <= 0):
            raise DomainError("edges must be strictly increasing")
        if np.any(w < 0):
            raise DomainError("weights must be non-negative")
        if abs(self.mass - 1) > MASS_TOL:
            raise DomainError(f"total mass {self.mass!r} differs from 1")

    @property
    def nodes(self) -> np.ndarray:
        """Cell midpoints."""
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mass(self) -> float:
        return float(self.weights.sum() + sum(m for _, m in self.atoms))

    @property
    def support_hi(self) -> float:
        hi = max((x for x, m in self.atoms if m > 0), default=-math.inf)
        nz = np.nonzero(self.weights > 0)[0]
        if nz.size:
            hi = max(hi, float(self.edges[nz[-1] + 1]))
        return hi

    @property
    def support_lo(self) -> float:
        lo = min((x for x, m in self.atoms if m > 0), default=math.inf)
        nz = np.nonzero(self.weights > 0)[0]
        if nz.size:
            lo = min(lo, float(self.edges[nz[0]]))
        return lo

    @classmethod
    def point_mass(cls, x: float) -> "GriddedMeasure":
        return cls(edges=np.array([0.0, 1.0]), weights=np.array([0.0]), atoms=((float(x), 1.0),))

    @classmethod
    def from_density(cls, f, edges, order: int = 8, normalize: bool = True) -> "GriddedMeasure":
        """Cell masses of the density ``f`` by Gauss-Legendre on each cell."""
        edges = np.asarray(edges, dtype=float)
        m = _cell_masses(f, edges, order)
        if normalize:
            m = m / m.sum()
        return cls(edges=edges, weights=m)

    @classmethod
    def from_profile(
        cls,
        profile,
        x_hi: float | None = None,
        n_band: int = 800,
        n_sat: int = 96,
        n_void: int = 64,
    ) -> "GriddedMeasure":
        """Discretise a density profile over ``[0, x_hi]``.

        Band cells follow a Chebyshev distribution, saturated cells are
        geometric and void cells uniform.  Void cells carry zero mass but are
        kept so that perturbations can move mass into them.
        """
        band = profile.band
        sat = profile.saturated
        end = sat.hi if sat is not None else band.hi
        x_hi = end if x_hi is None else max(x_hi, end)
        parts = []
        if band.lo > 0:
            parts.append(np.linspace(0.0, band.lo, n_void + 1)[:-1])
        k = np.arange(n_band + 1)
        parts.append(band.lo + (band.hi - band.lo) * (1 - np.cos(np.pi * k / n_band)) / 2)
        if sat is not None:
            parts.append(np.geomspace(sat.lo, sat.hi, n_sat + 1)[1:])
        if x_hi > end * (1 + 1e-12):
            parts.append(np.linspace(end, x_hi, n_void + 1)[1:])
        edges = np.concatenate(parts)
        edges = edges[np.concatenate([[True], np.diff(edges) > 0])]
        w = _cell_masses(profile.evaluator, edges)
        if sat is not None:
            # exact masses on the saturated cells
            lo_e, hi_e = edges[:-1], edges[1:]
            m = (lo_e >= sat.lo * (1 - 1e-14)) & (hi_e <= sat.hi * (1 + 1e-14))
            w[m] = profile.cap * np.log(hi_e[m] / lo_e[m])
        return cls(edges=edges, weights=w / w.sum(), meta={"raw_mass": float(w.sum())})

    def pushforward(self, p: float) -> "GriddedMeasure":
        """Image under ``x -> x**p``; the cell masses are unchanged."""
        return GriddedMeasure(
            edges=self.edges**p,
            weights=self.weights,
            atoms=tuple((x**p, m) for x, m in self.atoms),
        )

    def coarsen(self) -> "GriddedMeasure":
        """Merge neighbouring cells pairwise."""
        n = self.weights.size
        if n < 2:
            return self
        k = n // 2 * 2
        w = self.weights[:k].reshape(-1, 2).sum(axis=1)
        e = self.edges[: k + 1 : 2]
        if k < n:
            w = np.append(w, self.weights[k:].sum())
            e = np.append(e, self.edges[-1])
        return GriddedMeasure(edges=e, weights=w, atoms=self.atoms)

    def with_weights(self, w) -> "GriddedMeasure":
        return GriddedMeasure(edges=self.edges, weights=np.asarray(w, dtype=float), atoms=self.atoms)


@dataclass(frozen=True)
class FunctionalValue:
    """Terms of ``total = -H - K - M``; ``error`` estimates the error in ``H``."""

    H: float
    K: float
    M: float
    total: float
    error: float = 0.0


# ---------------------------------------------------------------------------
# log energy


def _F(u):
    au = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(au > 0, 0.5 * u * u * np.log(np.where(au > 0, au, 1.0)) - 0.75 * u * u, 0.0)


def _log_block(lo_i, hi_i, lo_j, hi_j):
    """Exact ``int int ln|x - y|`` over cell pairs divided by the cell widths."""
    hi_ = hi_i[:, None]
    lo_ = lo_i[:, None]
    h_i = hi_ - lo_
    h_j = (hi_j - lo_j)[None, :]
    mid_d = 0.5 * (hi_ + lo_) - 0.5 * (hi_j + lo_j)[None, :]
    near = np.abs(mid_d) <= _NEAR * np.maximum(h_i, h_j)
    # far pairs: E ln|d + Z| with Z = X - Y uniform differences, expanded in even moments of Z
    a2, b2 = h_i**2, h_j**2
    z2 = (a2 + b2) / 12
    z4 = (a2 * a2 + b2 * b2) / 80 + a2 * b2 / 24
    z6 = (a2**3 + b2**3) / 448 + a2 * b2 * (a2 + b2) / 64
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r2 = 1.0 / mid_d**2
        far = np.log(np.abs(mid_d)) - r2 * (z2 / 2 + r2 * (z4 / 4 + r2 * z6 / 6))
    if np.any(near):
        ii, jj = np.nonzero(near)
        a1, b1 = lo_i[ii], hi_i[ii]
        a2, b2 = lo_j[jj], hi_j[jj]
        box = -(_F(b1 - b2) - _F(b1 - a2) - _F(a1 - b2) + _F(a1 - a2))
        far[ii, jj] = box / ((b1 - a1) * (b2 - a2))
    return far


def _smooth_remainder(x, y, p):
    """``ln((x^p - y^p)/(x - y))`` for positive ``x, y`` (``ln(p x^(p-1))`` on the diagonal)."""
    if p == 1:
        return np.zeros(np.broadcast(x, y).shape)
    hi = np.maximum(x, y)
    lr = np.log(np.minimum(x, y)) - np.log(hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lr < 0, np.expm1(p * lr) / np.expm1(lr), p)
    return (p - 1) * np.log(hi) + np.log(ratio)


def _energy(edges, weights, exponents):
    sel = np.nonzero(weights > 0)[0]
    lo, hi, m = edges[sel], edges[sel + 1], weights[sel]
    mid = 0.5 * (lo + hi)
    total = 0.0
    n = sel.size
    for s in range(0, n, _CHUNK):
        sl = slice(s, min(s + _CHUNK, n))
        blk = _log_block(lo[sl], hi[sl], lo, hi)
        acc = len(exponents) * blk
        for p in exponents:
            acc = acc + _smooth_remainder(mid[sl, None], mid[None, :], p)
        total += float(m[sl] @ acc @ m)
    return total


def log_energy(mu: GriddedMeasure, exponents=(1.0, 1.0), estimate_error: bool = True):
    """``sum_p int int ln|x^p - y^p| dmu dmu`` and a Richardson error estimate.

    Returns ``(-inf, 0)`` when the measure has atoms.
    """
    if any(m > 0 for _, m in mu.atoms):
        return -math.inf, 0.0
    if mu.edges[0] < 0:
        raise SupportError("negative support")
    val = _energy(mu.edges, mu.weights, exponents)
    err = 0.0
    if estimate_error:
        c = mu.coarsen()
        err = abs(val - _energy(c.edges, c.weights, exponents)) / 3
    return val, err


# ---------------------------------------------------------------------------
# potential terms


def _u_integral(x, p, c, u0, u1, n_u=96):
    """``k(x) = int_{u0}^{u1} ln(1 - x^p e^{c u}) du`` for an array ``x``.

    Nodes cluster (quadratically) at the endpoint where the argument is
    smallest, which tames the logarithmic endpoint singularity at ``x_max``.
    """
    x = np.asarray(x, dtype=float)
    length = u1 - u0
    if length == 0:
        return np.zeros_like(x)
    t, w = _gl(n_u)
    worst, other = (u1, u0) if c > 0 else (u0, u1)
    u = worst + (other - worst) * t**2
    jac = abs(other - worst) * 2 * t * w
    with np.errstate(divide="ignore"):
        lx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    z = np.exp(p * lx[..., None] + c * u)
    if np.any(z >= 1):
        raise SupportError("integrand argument 1 - x^p e^{cu} is non-positive")
    return np.log1p(-z) @ jac


def _cell_average(f, pairs, order=4):
    """Gauss-Legendre mean of ``f`` over each ``(lo, hi)`` pair."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    t, w = _gl(order)
    lo, h = pairs[:, 0], pairs[:, 1] - pairs[:, 0]
    pts = lo[:, None] + h[:, None] * t[None, :]
    return np.asarray(f(pts.ravel())).reshape(pts.shape) @ w


def _cell_mean_log(edges):
    lo, hi = edges[:-1], edges[1:]
    out = np.empty_like(lo)
    z = lo == 0
    out[z] = np.log(hi[z]) - 1
    nz = ~z
    wr = (hi[nz] - lo[nz]) / lo[nz]
    out[nz] = np.log(hi[nz]) - 1 + np.log1p(wr) / wr
    return out


def _potential_terms(mu, p, c, u0, u1, k_coef, m_coef, x_max):
    if mu.support_hi > x_max * (1 + 1e-12) or mu.support_lo < 0:
        raise SupportError(f"support [{mu.support_lo}, {mu.support_hi}] outside [0, {x_max}]")
    if any(m > 0 for _, m in mu.atoms):
        return math.nan, math.nan
    sel = mu.weights > 0
    e = mu.edges
    kbar = _cell_average(lambda x: _u_integral(x, p, c, u0, u1), np.column_stack([e[:-1], e[1:]])[sel].ravel())
    K = k_coef * float(mu.weights[sel] @ kbar) if np.any(sel) else 0.0
    M = m_coef * float(mu.weights @ _cell_mean_log(e))
    return K, M


def _physical_branch(params):
    g, xi, beta = params.gamma_sq, params.xi, params.beta
    k = params.kappa
    eta, theta = params.eta, params.theta
    if xi <= 0:
        return dict(p=theta, c=beta * theta, u0=g - 1, u1=abs(xi), m_coef=k * eta * abs(xi))
    if xi <= 1 - g:
        return dict(p=theta, c=-beta * theta, u0=0.0, u1=1 - g - xi, m_coef=k * theta * xi)
    return dict(p=eta, c=-beta * eta, u0=1 - g - xi, u1=0.0, m_coef=k * theta * xi)


def rate_functional(mu: GriddedMeasure, params, estimate_error: bool = True) -> FunctionalValue:
    """Rate functional ``-H - K - M`` of the physical slice measure.

    ``beta = 0`` is the limit ``c -> 0`` of the same u-integral, which gives
    the length of the u-range times ``int ln(1 - x^p) dmu``.

    Returns
    -------
    FunctionalValue
        ``total = +inf`` when ``mu`` has atoms.

    Raises
    ------
    SupportError
        If the support leaves ``[0, exp(-beta (gamma_sq - kappa))]``.
    """
    k = params.kappa
    br = _physical_branch(params)
    K, M = _potential_terms(mu, br["p"], br["c"], br["u0"], br["u1"], k, br["m_coef"], params.x_max)
    E, err = log_energy(mu, (params.theta, params.eta), estimate_error)
    if E == -math.inf:
        return FunctionalValue(-math.inf, math.nan, math.nan, math.inf, 0.0)
    H = k * k / 2 * E
    return FunctionalValue(H, K, M, -H - K - M, k * k / 2 * err)


def model_functional(omega: GriddedMeasure, spec, estimate_error: bool = True) -> FunctionalValue:
    """Model functional with ``H = 1/2 int int (ln|x^nu - y^nu| + ln|x - y|)``.

    ``K = (1/kappa) int int_{n1}^{n2} ln(1 - x^p e^{-beta alpha u}) du`` with
    ``p = nu`` for MP1 and ``p = 1`` for MP2, and ``M = m1 int ln x``.
    """
    p = spec.nu if _pid(spec) == "MP1" else 1.0
    K, M = _potential_terms(
        omega, p, -spec.beta * spec.alpha, spec.n1, spec.n2, 1.0 / spec.kappa, spec.m1, spec.x_max
    )
    E, err = log_energy(omega, (spec.nu, 1.0), estimate_error)
    if E == -math.inf:
        return FunctionalValue(-math.inf, math.nan, math.nan, math.inf, 0.0)
    H = E / 2
    return FunctionalValue(H, K, M, -H - K - M, err / 2)


def _pid(spec):
    pid = spec.problem_id
    return getattr(pid, "value", pid)


def external_field(spec, z) -> float:
    """``V(z) = (1/kappa) int_{n1}^{n2} ln(1 - z^p e^{-beta alpha u}) du + m1 ln z``.

    Raises
    ------
    DomainError
        If ``z`` is outside ``(0, 1)`` or the logarithm's argument is
        negative somewhere on ``[n1, n2]``.
    """
    z = float(z)
    if not 0 < z < 1:
        raise DomainError(f"z must lie in (0, 1), got {z}")
    p = spec.nu if _pid(spec) == "MP1" else 1.0
    c = -spec.beta * spec.alpha
    lz = p * math.log(z)
    worst = max(lz + c * spec.n1, lz + c * spec.n2)
    if worst > 1e-13:
        raise DomainError(f"1 - z^p e^(-beta alpha u) < 0 on the u-range at z = {z}")
    val = 0.0
    if spec.n2 > spec.n1:
        val, _ = integrate.quad(
            lambda u: math.log1p(-min(math.exp(lz + c * u), 1.0)) if lz + c * u < 0 else -745.0,
            spec.n1,
            spec.n2,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )
        val /= spec.kappa
    return val + spec.m1 * math.log(z)


# ---------------------------------------------------------------------------
# Euler-Lagrange


def _tanh_sinh(level_h=1.0 / 32, t_max=3.2):
    t = np.arange(-t_max, t_max + level_h / 2, level_h)
    s = 0.5 * np.pi * np.sinh(t)
    w = level_h * 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2
    # distances from the endpoints in units of the half-length, without cancellation
    d_lo = 2.0 / (1.0 + np.exp(-2 * s))
    d_hi = 2.0 / (1.0 + np.exp(2 * s))
    return d_lo, d_hi, w


_TS = _tanh_sinh()


def _segment_log_integral(dens, lo, hi, x, nu):
    """``int_lo^hi (ln|x-y| + ln|x^nu-y^nu|) dens(y) dy`` by tanh-sinh with ``x`` outside ``(lo, hi)``."""
    d_lo, d_hi, w = _TS
    half = 0.5 * (hi - lo)
    y = np.where(d_lo <= d_hi, lo + half * d_lo, hi - half * d_hi)
    if x <= lo:
        dist = (lo - x) + half * d_lo
    else:
        dist = (x - hi) + half * d_hi
    keep = (half * np.minimum(d_lo, d_hi) > 1e-300) & (y > 0)
    y, dist, ww = y[keep], dist[keep], w[keep]
    f = np.asarray(dens(y), dtype=float)
    kern = 2 * np.log(dist) + _smooth_remainder(np.full_like(y, x), y, nu)
    return float(half * np.sum(ww * kern * f))


def effective_potential(profile, spec, xs) -> np.ndarray:
    """``U(x) = int (ln|x^nu - y^nu| + ln|x - y|) domega(y) + V(x)`` at each ``x``.

    The support is split at ``x`` so that the logarithmic singularity always
    sits at an endpoint of a tanh-sinh rule; the rule never evaluates its
    endpoints, so ``x`` may coincide with a band edge.
    """
    out = []
    segs = [(s.lo, s.hi) for s in profile.support_segments]
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        if not 0 < x < 1:
            raise DomainError(f"x must lie in (0, 1), got {x}")
        acc = 0.0
        for lo, hi in segs:
            if lo < x < hi:
                acc += _segment_log_integral(profile.evaluator, lo, x, x, spec.nu)
                acc += _segment_log_integral(profile.evaluator, x, hi, x, spec.nu)
            else:
                acc += _segment_log_integral(profile.evaluator, lo, hi, x, spec.nu)
        out.append(acc + external_field(spec, x))
    return np.array(out)


def el_residual(profile, spec, x_grid, ell: float | None = None) -> np.ndarray:
    """``U(x) - ell`` with ``ell = U`` at the band midpoint.

    Approximately zero on the band, non-positive on voids and non-negative on
    saturated segments.
    """
    if ell is None:
        band = profile.band
        ell = float(effective_potential(profile, spec, [0.5 * (band.lo + band.hi)])[0])
    return effective_potential(profile, spec, x_grid) - ell


# ---------------------------------------------------------------------------
# admissible perturbations


def cell_capacity(mu: GriddedMeasure, cap: float, x_max: float) -> np.ndarray:
    """Largest admissible mass per cell under ``density <= cap / x`` on ``[0, x_max]``."""
    lo, hi = mu.edges[:-1], mu.edges[1:]
    with np.errstate(divide="ignore"):
        c = np.where(lo > 0, cap * np.log(hi / np.where(lo > 0, lo, 1.0)), np.inf)
    c = np.where(hi <= x_max * (1 + 1e-12), c, 0.0)
    return c


def random_admissible_bump(mu: GriddedMeasure, capacity, rng, width=(0.02, 0.1), strength=(0.2, 0.8)):
    """Move mass between two random smooth bumps, respecting ``0 <= w <= capacity``.

    Mass is removed in proportion to the existing mass under a raised-cosine
    window and added in proportion to the free capacity under another.
    """
    w = mu.weights
    x = mu.nodes
    span = mu.edges[-1] - mu.edges[0]
    slack = np.clip(capacity - w, 0.0, None)
    # saturated cells carry roundoff-level slack; treat them as full
    slack = np.where(slack > 1e-9 * np.where(np.isfinite(capacity), capacity, 1.0), slack, 0.0)
    slack = np.where(np.isfinite(slack), slack, w.max())
    for _ in range(100):
        src_c = x[rng.choice(np.nonzero(w > 0)[0])]
        dst_c = x[rng.choice(np.nonzero(slack > 0)[0])]
        rad = rng.uniform(*width) * span
        ws = w * np.where(np.abs(x - src_c) < rad, 0.5 * (1 + np.cos(np.pi * (x - src_c) / rad)), 0.0)
        wt = slack * np.where(np.abs(x - dst_c) < rad, 0.5 * (1 + np.cos(np.pi * (x - dst_c) / rad)), 0.0)
        if ws.sum() <= 0 or wt.sum() <= 0:
            continue
        d = wt / wt.sum() - ws / ws.sum()
        if not np.any(d):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(d > 0, slack / d, np.inf)
            down = np.where(d < 0, w / -d, np.inf)
        eps_max = float(min(up.min(), down.min()))
        if eps_max <= 1e-9:
            continue
        eps = rng.uniform(*strength) * eps_max
        new = np.clip(w + eps * d, 0.0, None)
        new = new / new.sum()
        return mu.with_weights(new), eps
    raise DomainError("no admissible bump found")
