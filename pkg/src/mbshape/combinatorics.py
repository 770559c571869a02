"""Exact small-box oracles for weighted plane partitions.

Rows are indexed by ``i`` and columns by ``j`` (both 0-based here).  Cells with
``i > j`` lie left of the main diagonal, cells with ``i < j`` to the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import BudgetError, DivergenceError, DomainError

__all__ = [
    "PlanePartition",
    "ParticleConfig",
    "VolumeTriple",
    "PartitionFunction",
    "slice_",
    "slice_length",
    "particle_config",
    "interlaces",
    "volumes",
    "weight",
    "cell_log_factors",
    "box_count",
    "enumerate_",
    "partition_function",
    "product_formula",
    "tail_bound",
    "qpochhammer",
    "log_qpochhammer",
    "marginal_weight",
    "slice_size_distribution",
    "read_partitions",
    "write_partitions",
]

DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class PlanePartition:
    """``M x N`` matrix of non-negative integers, weakly decreasing along rows and columns."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        if not rows or not rows[0]:
            raise DomainError("empty matrix")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise DomainError("ragged matrix")
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                if v < 0:
                    raise DomainError(f"negative entry at ({i}, {j})")
                if j + 1 < n and r[j + 1] > v:
                    raise DomainError(f"row {i} increases at column {j + 1}")
                if i + 1 < len(rows) and rows[i + 1][j] > v:
                    raise DomainError(f"column {j} increases at row {i + 1}")

    @property
    def M(self) -> int:
        return len(self.entries)

    @property
    def N(self) -> int:
        return len(self.entries[0])

    @property
    def flat(self) -> tuple:
        return tuple(v for r in self.entries for v in r)

    @property
    def total(self) -> int:
        return sum(self.flat)

    @classmethod
    def from_flat(cls, M: int, N: int, values) -> "PlanePartition":
        values = list(values)
        if len(values) != M * N:
            raise DomainError(f"need {M * N} entries, got {len(values)}")
        return cls(tuple(tuple(values[i * N : (i + 1) * N]) for i in range(M)))

    @classmethod
    def zeros(cls, M: int, N: int) -> "PlanePartition":
        return cls(tuple((0,) * N for _ in range(M)))


@dataclass(frozen=True)
class ParticleConfig:
    """Positions ``l_i = lambda_i + M - i`` (1-based ``i``) of the slice at time ``t``."""

    t: int
    positions: tuple

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if any(b >= a for a, b in zip(pos, pos[1:])):
            raise DomainError("positions must be strictly decreasing")
        if pos and pos[-1] < 0:
            raise DomainError("positions must be non-negative")


@dataclass(frozen=True)
class VolumeTriple:
    left: int
    central: int
    right: int

    @property
    def total(self) -> int:
        return self.left + self.central + self.right


@dataclass(frozen=True)
class PartitionFunction:
    truncated_sum: float
    product_formula: float
    tail_bound: float

    @property
    def within_bound(self) -> bool:
        slack = 1e-12 * abs(self.product_formula)
        return abs(self.truncated_sum - self.product_formula) <= self.tail_bound + slack


def slice_length(M: int, N: int, t: int) -> int:
    """Number of diagonal cells ``L_t`` at time ``t``."""
    if not -M + 1 <= t <= N - 1:
        raise IndexError(f"t = {t} outside [{-M + 1}, {N - 1}]")
    if t <= 0:
        return min(M + t, N)
    return min(M, N - t)


def slice_(pp: PlanePartition, t: int) -> list:
    """Diagonal partition ``lambda^(t)`` of length ``L_t``."""
    L = slice_length(pp.M, pp.N, t)
    e = pp.entries
    if t <= 0:
        return [e[i - t][i] for i in range(L)]
    return [e[i][i + t] for i in range(L)]


def particle_config(pp: PlanePartition, t: int) -> ParticleConfig:
    lam = slice_(pp, t)
    return ParticleConfig(t, tuple(v + pp.M - i for i, v in enumerate(lam, start=1)))


def interlaces(big, small) -> bool:
    """``big_1 >= small_1 >= big_2 >= small_2 >= ...`` with missing parts read as 0."""
    n = max(len(big), len(small)) + 1
    b = list(big) + [0] * (n - len(big))
    s = list(small) + [0] * (n - len(small))
    return all(b[k] >= s[k] >= b[k + 1] for k in range(n - 1))


def volumes(pp: PlanePartition) -> VolumeTriple:
    left = central = right = 0
    for i, r in enumerate(pp.entries):
        for j, v in enumerate(r):
            if i > j:
                left += v
            elif i == j:
                central += v
            else:
                right += v
    return VolumeTriple(left, central, right)


def _check_weight_params(q, a, eta, theta):
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    if not (eta > 0 and theta > 0):
        raise DomainError("eta and theta must be positive")


def weight(pp: PlanePartition, q: float, a: float, eta: float, theta: float) -> float:
    """Log-weight ``C (ln a + (eta+theta)/2 ln q) + (eta L + theta R) ln q``."""
    _check_weight_params(q, a, eta, theta)
    v = volumes(pp)
    lq = math.log(q)
    return v.central * (math.log(a) + 0.5 * (eta + theta) * lq) + (eta * v.left + theta * v.right) * lq


def cell_log_factors(M: int, N: int, q: float, a: float, eta: float, theta: float) -> np.ndarray:
    """Log of the weight per cube in each cell, shape ``(M, N)``."""
    lq = math.log(q)
    i = np.arange(M)[:, None]
    j = np.arange(N)[None, :]
    return np.where(i == j, math.log(a) + 0.5 * (eta + theta) * lq, np.where(i > j, eta * lq, theta * lq))


def box_count(M: int, N: int, cap: int) -> int:
    """Number of plane partitions in an ``M x N x cap`` box."""
    r = Fraction(1)
    for i in range(1, M + 1):
        for j in range(1, N + 1):
            for k in range(1, cap + 1):
                r *= Fraction(i + j + k - 1, i + j + k - 2)
    return int(r)


def enumerate_(M: int, N: int, height_cap: int, budget: int = DEFAULT_BUDGET) -> Iterator[PlanePartition]:
    """All plane partitions in the box, lexicographic in the row-major flattening.

    Raises
    ------
    BudgetError
        If the box holds more than ``budget`` partitions.
    """
    if M < 1 or N < 1 or height_cap < 0:
        raise DomainError("need M, N >= 1 and height_cap >= 0")
    count = box_count(M, N, height_cap)
    if count > budget:
        raise BudgetError(f"{count} partitions exceed the budget {budget}")
    cells = [(i, j) for i in range(M) for j in range(N)]
    grid = [[0] * N for _ in range(M)]

    def rec(k):
        if k == len(cells):
            yield PlanePartition(tuple(tuple(r) for r in grid))
            return
        i, j = cells[k]
        hi = height_cap
        if i > 0:
            hi = min(hi, grid[i - 1][j])
        if j > 0:
            hi = min(hi, grid[i][j - 1])
        for v in range(hi + 1):
            grid[i][j] = v
            yield from rec(k + 1)
        grid[i][j] = 0

    yield from rec(0)


def _convergence_ratio(q, a, eta, theta):
    return a * q ** (0.5 * (eta + theta))


def product_formula(M: int, N: int, q: float, a: float, eta: float, theta: float) -> float:
    """``prod_{i,j} (1 - a Q^{i-1/2} Qt^{j-1/2})^{-1}`` with ``Q = q^eta``, ``Qt = q^theta``."""
    _check_weight_params(q, a, eta, theta)
    if _convergence_ratio(q, a, eta, theta) >= 1:
        raise DivergenceError("a Q^(1/2) Qt^(1/2) >= 1")
    lq = math.log(q)
    s = 0.0
    for i in range(1, M + 1):
        for j in range(1, N + 1):
            s -= math.log1p(-a * math.exp(lq * (eta * (i - 0.5) + theta * (j - 0.5))))
    return math.exp(s)


def tail_bound(M: int, N: int, q: float, a: float, eta: float, theta: float, height_cap: int) -> float:
    """Bound on the weight of partitions with a corner entry above ``height_cap``.

    Dropping monotonicity, the omitted weight is at most
    ``r11^(cap+1)/(1 - r11) * prod_{other cells} 1/(1 - r_ij)``.
    """
    r = np.exp(cell_log_factors(M, N, q, a, eta, theta))
    if np.any(r >= 1):
        raise DivergenceError("a per-cell factor is >= 1; the geometric bound does not apply")
    others = -np.log1p(-r).sum() + math.log1p(-r[0, 0])
    return math.exp((height_cap + 1) * math.log(r[0, 0]) - math.log1p(-r[0, 0]) + others)


def partition_function(
    M: int, N: int, q: float, a: float, eta: float, theta: float, height_cap: int, budget: int = DEFAULT_BUDGET
) -> PartitionFunction:
    """Truncated sum over the box, the product formula and the certified tail bound."""
    prod = product_formula(M, N, q, a, eta, theta)
    lw = cell_log_factors(M, N, q, a, eta, theta).ravel()
    total = math.fsum(math.exp(float(np.dot(lw, pp.flat))) for pp in enumerate_(M, N, height_cap, budget))
    return PartitionFunction(total, prod, tail_bound(M, N, q, a, eta, theta, height_cap))


def log_qpochhammer(x: float, q: float, n: int) -> float:
    """``log (x; q)_n`` by direct finite product; requires every factor positive."""
    if n < 0:
        raise DomainError(f"negative Pochhammer length {n}")
    s = 0.0
    for k in range(n):
        f = x * q**k
        if f >= 1:
            raise DomainError("non-positive Pochhammer factor")
        s += math.log1p(-f)
    return s


def qpochhammer(x: float, q: float, n: int) -> float:
    """``(x; q)_n = prod_{k<n} (1 - x q^k)``."""
    p = 1.0
    for k in range(n):
        p *= 1 - x * q**k
    return p


def _log_wd(x, t, q, a, eta, theta, M, N):
    lq = math.log(q)
    lQ, lQt = eta * lq, theta * lq
    base = x * math.log(a) + 0.5 * x * (lQ + lQt)
    if t <= 0:
        n = N - (M - abs(t))
        if n < 0:
            raise DomainError(f"slice t = {t} needs M - |t| <= N")
        return base + abs(t) * x * lQ + log_qpochhammer(math.exp(lQt * (x - abs(t) + 1)), math.exp(lQt), n)
    if N - t >= M:
        return base + t * x * lQt + log_qpochhammer(math.exp(lQt * (x + 1)), math.exp(lQt), N - t - M)
    return base + t * x * lQt + log_qpochhammer(math.exp(lQ * (x + N - t - M + 1)), math.exp(lQ), M - (N - t))


def marginal_weight(l: ParticleConfig, q: float, a: float, eta: float, theta: float, M: int, N: int) -> float:
    """Log of the printed slice weight: interaction double product times ``prod w_d(l_i)``.

    The result is proportional, not equal, to the marginal probability times
    the box partition function; the constant depends on ``t`` only.
    """
    _check_weight_params(q, a, eta, theta)
    t = l.t
    L = slice_length(M, N, t)
    pos = l.positions
    if len(pos) != L:
        raise DomainError(f"slice {t} holds {L} particles, got {len(pos)}")
    if pos and pos[-1] < M - L:
        raise DomainError(f"positions must be >= M - L_t = {M - L}")
    lq = math.log(q)
    s = 0.0
    for i in range(L):
        for j in range(i + 1, L):
            d = pos[i] - pos[j]
            # (Q^{l_j} - Q^{l_i}) = Q^{l_j} (1 - Q^{l_i - l_j})
            s += eta * lq * pos[j] + math.log(-math.expm1(eta * lq * d))
            s += theta * lq * pos[j] + math.log(-math.expm1(theta * lq * d))
    for x in pos:
        s += _log_wd(x, t, q, a, eta, theta, M, N)
    return s


def slice_size_distribution(M: int, N: int, q, a, eta, theta, height_cap: int, t: int = 0) -> dict:
    """Exact law of ``|lambda^(t)|`` on the truncated box, as ``{size: probability}``."""
    lw = cell_log_factors(M, N, q, a, eta, theta).ravel()
    acc: dict = {}
    for pp in enumerate_(M, N, height_cap):
        k = sum(slice_(pp, t))
        acc[k] = acc.get(k, 0.0) + math.exp(float(np.dot(lw, pp.flat)))
    z = math.fsum(acc.values())
    return {k: v / z for k, v in sorted(acc.items())}


# ---------------------------------------------------------------------------
# fixture files: '#' header lines, then one row-major flattened matrix per line


def write_partitions(path, partitions, M: int, N: int, header: dict | None = None) -> None:
    lines = [f"# M={M} N={N}"]
    for k, v in (header or {}).items():
        lines.append(f"# {k}={v}")
    lines += [" ".join(str(v) for v in pp.flat) for pp in partitions]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_partitions(path) -> tuple:
    """Return ``(header, partitions)``; the header must define ``M`` and ``N``."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        header[k] = v
            elif line.strip():
                rows.append([int(v) for v in line.split()])
    M, N = int(header["M"]), int(header["N"])
    return header, [PlanePartition.from_flat(M, N, r) for r in rows]
