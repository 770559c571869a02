# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled chain kernel; see ``_chain_py.run`` for the reference semantics."""

from libc.stdint cimport uint64_t, int32_t, int64_t
import numpy as np


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _next_u64(uint64_t* s) noexcept nogil:
    cdef uint64_t result = _rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


cdef inline double _next_double(uint64_t* s) noexcept nogil:
    return <double>(_next_u64(s) >> 11) * (1.0 / 9007199254740992.0)


cdef inline bint _can_add(int32_t* h, Py_ssize_t i, Py_ssize_t j, Py_ssize_t M, Py_ssize_t N, int32_t cap) noexcept nogil:
    cdef int32_t v = h[i * N + j]
    if v >= cap:
        return False
    if i > 0 and h[(i - 1) * N + j] <= v:
        return False
    if j > 0 and h[i * N + j - 1] <= v:
        return False
    return True


cdef inline bint _can_remove(int32_t* h, Py_ssize_t i, Py_ssize_t j, Py_ssize_t M, Py_ssize_t N) noexcept nogil:
    cdef int32_t v = h[i * N + j]
    if v <= 0:
        return False
    if i + 1 < M and h[(i + 1) * N + j] >= v:
        return False
    if j + 1 < N and h[i * N + j + 1] >= v:
        return False
    return True


cdef struct CellSet:
    int64_t* items
    int64_t* pos
    int64_t n


cdef inline void _set(CellSet* cs, int64_t c, bint present) noexcept nogil:
    cdef int64_t p = cs.pos[c]
    cdef int64_t last
    if present and p < 0:
        cs.pos[c] = cs.n
        cs.items[cs.n] = c
        cs.n += 1
    elif not present and p >= 0:
        cs.n -= 1
        last = cs.items[cs.n]
        if last != c:
            cs.items[p] = last
            cs.pos[last] = p
        cs.pos[c] = -1


cdef inline void _update(int32_t* h, Py_ssize_t a, Py_ssize_t b, Py_ssize_t M, Py_ssize_t N, int32_t cap,
                         CellSet* A, CellSet* R) noexcept nogil:
    if 0 <= a < M and 0 <= b < N:
        _set(A, a * N + b, _can_add(h, a, b, M, N, cap))
        _set(R, a * N + b, _can_remove(h, a, b, M, N))


cdef inline void _refresh(int32_t* h, Py_ssize_t i, Py_ssize_t j, Py_ssize_t M, Py_ssize_t N, int32_t cap,
                          CellSet* A, CellSet* R) noexcept nogil:
    _update(h, i, j, M, N, cap, A, R)
    _update(h, i + 1, j, M, N, cap, A, R)
    _update(h, i - 1, j, M, N, cap, A, R)
    _update(h, i, j + 1, M, N, cap, A, R)
    _update(h, i, j - 1, M, N, cap, A, R)


def run(int32_t[:, ::1] h_view, double[:, ::1] rfac_view, int cap, int64_t n_prop, uint64_t[::1] state):
    """Run ``n_prop`` proposals in place; returns the accepted count."""
    cdef Py_ssize_t M = h_view.shape[0], N = h_view.shape[1]
    cdef int64_t size = M * N
    cdef int64_t[::1] ai = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] ap = np.full(size, -1, dtype=np.int64)
    cdef int64_t[::1] ri = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] rp = np.full(size, -1, dtype=np.int64)
    cdef CellSet A, R
    cdef int32_t* h = &h_view[0, 0]
    cdef double* rfac = &rfac_view[0, 0]
    cdef int64_t n_old, k, c, accepted = 0, step
    cdef Py_ssize_t i, j
    cdef uint64_t s[4]
    cdef double u, ratio
    cdef int32_t cap32 = cap
    A.items = &ai[0]
    A.pos = &ap[0]
    A.n = 0
    R.items = &ri[0]
    R.pos = &rp[0]
    R.n = 0
    for k in range(4):
        s[k] = state[k]
    for c in range(size):
        _update(h, c // N, c % N, M, N, cap32, &A, &R)
    with nogil:
        for step in range(n_prop):
            u = _next_double(s)
            if u < 0.5:
                n_old = A.n
                if n_old == 0:
                    continue
                k = <int64_t>(_next_double(s) * n_old)
                c = A.items[k]
                i = c // N
                j = c % N
                h[c] += 1
                _refresh(h, i, j, M, N, cap32, &A, &R)
                ratio = rfac[c] * n_old / R.n
                if _next_double(s) < ratio:
                    accepted += 1
                else:
                    h[c] -= 1
                    _refresh(h, i, j, M, N, cap32, &A, &R)
            else:
                n_old = R.n
                if n_old == 0:
                    continue
                k = <int64_t>(_next_double(s) * n_old)
                c = R.items[k]
                i = c // N
                j = c % N
                h[c] -= 1
                _refresh(h, i, j, M, N, cap32, &A, &R)
                ratio = n_old / (rfac[c] * A.n)
                if _next_double(s) < ratio:
                    accepted += 1
                else:
                    h[c] += 1
                    _refresh(h, i, j, M, N, cap32, &A, &R)
    for k in range(4):
        state[k] = s[k]
    return accepted
