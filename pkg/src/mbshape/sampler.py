"""Metropolis sampling of weighted plane partitions and slice comparisons.

The chain proposes, with probability 1/2 each, adding a cube at a uniformly
chosen addable cell or removing one at a uniformly chosen removable cell.
Acceptance multiplies the weight ratio by ``|A(x)|/|R(y)|`` (or its mirror)
so that detailed balance holds exactly on the height-capped state space.

The inner loop runs in a compiled extension when it is available and in
pure Python otherwise; ``MBSHAPE_PURE_PYTHON=1`` forces the fallback.  Both
backends consume the same xoshiro256** stream and give identical chains.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _chain_py
from ._rng import splitmix64_state
from .combinatorics import PlanePartition, cell_log_factors, particle_config
from .errors import DomainError

try:
    if os.environ.get("MBSHAPE_PURE_PYTHON") == "1":
        raise ImportError("pure Python forced")
    from . import _chain as _chain_c

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    _chain_c = None
    BACKEND = "python"

__all__ = [
    "BACKEND",
    "ChainConfig",
    "ChainResult",
    "EmpiricalMeasure",
    "mcmc_sample",
    "empirical_measure",
    "profile_cdf",
    "compare",
    "sample_profile",
    "write_samples",
    "read_samples",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ChainConfig:
    """Chain parameters.  ``burn_in`` and ``thin`` count sweeps of ``M*N`` proposals."""

    M: int
    N: int
    q: float
    a: float
    eta: float
    theta: float
    height_cap: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise DomainError("M and N must be positive")
        if not 0 < self.q < 1:
            raise DomainError(f"q must lie in (0, 1), got {self.q}")
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if not (self.eta > 0 and self.theta > 0):
            raise DomainError("eta and theta must be positive")
        if self.a * self.q ** (0.5 * (self.eta + self.theta)) >= 1:
            raise DomainError("a Q^(1/2) Qt^(1/2) >= 1: the weights are not summable")
        if self.height_cap < 1:
            raise DomainError("height_cap must be positive")
        if self.burn_in < 0 or self.thin < 1:
            raise DomainError("need burn_in >= 0 and thin >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def sweep(self) -> int:
        return self.M * self.N

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for k, v in d.items():
            if k in types:
                kw[k] = float(v) if types[k] == "float" else int(v)
        return cls(**kw)


@dataclass
class ChainResult:
    """Samples plus diagnostics."""

    config: ChainConfig
    samples: list
    acceptance_rate: float
    backend: str
    cap_hits: int = 0

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Pooled particle images ``x = exp(-eps l)`` of one slice."""

    xi: float
    samples: np.ndarray = field(repr=False)
    n_effective: float
    t: int = 0
    eps: float = 0.0


def _kernel(backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _chain_c is None:
            raise DomainError("compiled kernel not available")
        return _chain_c.run, "cython"
    if backend == "python":
        return _chain_py.run, "python"
    raise DomainError(f"unknown backend {backend!r}")


def mcmc_sample(cfg: ChainConfig, n_samples: int, backend: str | None = None, init=None) -> ChainResult:
    """Draw ``n_samples`` states after ``burn_in`` sweeps, ``thin`` sweeps apart.

    Parameters
    ----------
    cfg : ChainConfig
    n_samples : int
    backend : {"cython", "python"}, optional
        Defaults to the compiled kernel when importable.
    init : PlanePartition, optional
        Starting state; the empty partition by default.
    """
    run, name = _kernel(backend)
    h = np.zeros((cfg.M, cfg.N), dtype=np.int32)
    if init is not None:
        h[:, :] = np.asarray(init.entries, dtype=np.int32)
        if h.max() > cfg.height_cap:
            raise DomainError("initial state exceeds the height cap")
    rfac = np.ascontiguousarray(np.exp(cell_log_factors(cfg.M, cfg.N, cfg.q, cfg.a, cfg.eta, cfg.theta)))
    state = splitmix64_state(cfg.seed)
    acc = run(h, rfac, cfg.height_cap, cfg.burn_in * cfg.sweep, state)
    total = cfg.burn_in * cfg.sweep
    out = []
    hits = 0
    for _ in range(n_samples):
        acc += run(h, rfac, cfg.height_cap, cfg.thin * cfg.sweep, state)
        total += cfg.thin * cfg.sweep
        hits += int(h[0, 0] == cfg.height_cap)
        out.append(PlanePartition(tuple(map(tuple, h.tolist()))))
    return ChainResult(cfg, out, acc / total if total else 0.0, name, hits)


def empirical_measure(samples, t: int, beta: float, N: int | None = None) -> EmpiricalMeasure:
    """Pool ``x_i = exp(-beta l_i / N)`` over the slice at time ``t`` of every sample."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    samples = list(samples)
    if not samples:
        raise DomainError("no samples")
    N = N or samples[0].N
    eps = beta / N
    xs = []
    for pp in samples:
        xs.extend(particle_config(pp, t).positions)
    x = np.exp(-eps * np.asarray(xs, dtype=float))
    return EmpiricalMeasure(xi=t / N, samples=x, n_effective=float(len(xs)), t=t, eps=eps)


def profile_cdf(profile, n_band: int = 4000):
    """Piecewise-linear CDF of a profile through its cell masses.

    Returns ``(edges, cumulative)``; the CDF is exact for the cell
    discretisation and linear inside each cell.
    """
    from .quadrature import GriddedMeasure

    g = GriddedMeasure.from_profile(profile, n_band=n_band, n_void=8)
    return g.edges, np.concatenate([[0.0], np.cumsum(g.weights)])


def compare(emp: EmpiricalMeasure, profile, n_band: int = 4000) -> tuple:
    """1-Wasserstein and Kolmogorov-Smirnov distances to the analytic CDF."""
    edges, cum = profile_cdf(profile, n_band)
    x = np.sort(emp.samples)
    n = x.size
    F = lambda z: np.interp(z, edges, cum, left=0.0, right=1.0)  # noqa: E731
    Fx = F(x)
    k = np.arange(1, n + 1)
    ks = float(max(np.max(np.abs(k / n - Fx)), np.max(np.abs((k - 1) / n - Fx))))
    # W1 = int |F_emp - F| dz, exact between breakpoints
    grid = np.union1d(edges, x)
    grid = grid[(grid >= min(edges[0], x[0])) & (grid <= max(edges[-1], x[-1]))]
    Fg = F(grid)
    Eg = np.searchsorted(x, grid, side="right") / n
    d0 = Fg[:-1] - Eg[:-1]  # F_emp is constant on [g_k, g_{k+1})
    d1 = Fg[1:] - Eg[:-1]
    h = np.diff(grid)
    same = d0 * d1 >= 0
    part = np.where(same, 0.5 * h * np.abs(d0 + d1), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = 0.5 * h * (d0**2 + d1**2) / (np.abs(d0) + np.abs(d1))
    part = np.where(same, part, cross)
    w1 = float(np.sum(part))
    return w1, ks


def sample_profile(profile, n: int, rng, n_band: int = 4000) -> np.ndarray:
    """Inverse-CDF draws from the piecewise-linear CDF of ``profile``."""
    edges, cum = profile_cdf(profile, n_band)
    u = rng.uniform(0.0, 1.0, size=n)
    keep = np.concatenate([[True], np.diff(cum) > 0])
    return np.interp(u, cum[keep], edges[keep])


# ---------------------------------------------------------------------------
# sample dumps


def write_samples(path, result: ChainResult, provenance: dict | None = None) -> None:
    """Header lines ``# key=value`` (schema, config, provenance), then one flattened partition per line."""
    cfg = result.config
    lines = [f"# schema_version={SCHEMA_VERSION}", "# format=mbshape-samples"]
    for k, v in cfg.to_dict().items():
        lines.append(f"# {k}={v!r}" if isinstance(v, float) else f"# {k}={v}")
    lines.append(f"# n_samples={len(result.samples)}")
    lines.append(f"# acceptance_rate={result.acceptance_rate!r}")
    lines.append(f"# backend={result.backend}")
    if provenance:
        lines.append("# provenance=" + json.dumps(provenance, sort_keys=True, separators=(",", ":")))
    lines += [" ".join(map(str, pp.flat)) for pp in result.samples]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_samples(path) -> tuple:
    """Return ``(ChainConfig, header dict, list of PlanePartition)``."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                k, _, v = line[2:].partition("=")
                header[k] = v
            elif line:
                rows.append([int(v) for v in line.split()])
    cfg = ChainConfig.from_dict(header)
    return cfg, header, [PlanePartition.from_flat(cfg.M, cfg.N, r) for r in rows]


def slice_time(N: int, xi: float) -> int:
    """Nearest lattice time ``round(xi N)``."""
    return int(round(xi * N))

