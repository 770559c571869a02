"""Pure-Python chain kernel; the fallback when the compiled extension is absent.

Mirrors ``_chain.pyx`` statement for statement, including the order of
random draws, so both backends produce identical chains.
"""

from __future__ import annotations

import numpy as np

from ._rng import Xoshiro256ss


def _can_add(h, i, j, M, N, cap):
    v = h[i][j]
    if v >= cap:
        return False
    if i > 0 and h[i - 1][j] <= v:
        return False
    if j > 0 and h[i][j - 1] <= v:
        return False
    return True


def _can_remove(h, i, j, M, N):
    v = h[i][j]
    if v <= 0:
        return False
    if i + 1 < M and h[i + 1][j] >= v:
        return False
    if j + 1 < N and h[i][j + 1] >= v:
        return False
    return True


class _CellSet:
    """Index set with O(1) insertion and swap-removal."""

    def __init__(self, size):
        self.items = []
        self.pos = [-1] * size

    def set(self, c, present):
        p = self.pos[c]
        if present and p < 0:
            self.pos[c] = len(self.items)
            self.items.append(c)
        elif not present and p >= 0:
            last = self.items.pop()
            if last != c:
                self.items[p] = last
                self.pos[last] = p
            self.pos[c] = -1


def run(h, rfac, cap, n_prop, state):
    """Run ``n_prop`` proposals in place on ``h``; returns the accepted count.

    Parameters
    ----------
    h : ndarray of int32, shape (M, N)
        Heights, modified in place.
    rfac : ndarray of float64, shape (M, N)
        Weight ratio for adding one cube to each cell.
    cap : int
        Height cap.
    n_prop : int
        Number of proposals.
    state : ndarray of uint64, shape (4,)
        Generator state, advanced in place.
    """
    M, N = h.shape
    hl = h.tolist()
    rf = rfac.tolist()
    rng = Xoshiro256ss(state)
    A = _CellSet(M * N)
    R = _CellSet(M * N)
    for c in range(M * N):
        i, j = divmod(c, N)
        A.set(c, _can_add(hl, i, j, M, N, cap))
        R.set(c, _can_remove(hl, i, j, M, N))

    def refresh(i, j):
        for di, dj in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < M and 0 <= b < N:
                c = a * N + b
                A.set(c, _can_add(hl, a, b, M, N, cap))
                R.set(c, _can_remove(hl, a, b, M, N))

    accepted = 0
    for _ in range(n_prop):
        u = rng.next_double()
        if u < 0.5:
            n_old = len(A.items)
            if n_old == 0:
                continue
            k = int(rng.next_double() * n_old)
            c = A.items[k]
            i, j = divmod(c, N)
            hl[i][j] += 1
            refresh(i, j)
            ratio = rf[i][j] * n_old / len(R.items)
            if rng.next_double() < ratio:
                accepted += 1
            else:
                hl[i][j] -= 1
                refresh(i, j)
        else:
            n_old = len(R.items)
            if n_old == 0:
                continue
            k = int(rng.next_double() * n_old)
            c = R.items[k]
            i, j = divmod(c, N)
            hl[i][j] -= 1
            refresh(i, j)
            ratio = n_old / (rf[i][j] * len(A.items))
            if rng.next_double() < ratio:
                accepted += 1
            else:
                hl[i][j] += 1
                refresh(i, j)
    h[:, :] = np.asarray(hl, dtype=h.dtype)
    state[:] = rng.state()
    return accepted
