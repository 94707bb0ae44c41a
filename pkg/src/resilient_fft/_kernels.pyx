# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Stockham stage sweeps (radix-2 and radix-4) over contiguous rows.

One call performs one pass of the factorization for every signal row in a
transaction block. ``base`` holds omega_{s*r}^q for q in [0, s); higher leg
powers are formed per butterfly so the per-value twiddle error stays bounded
by a couple of ulps regardless of pass count.
"""

import numpy as np

COMPILED = True

ctypedef fused cplx:
    float complex
    double complex


cdef void _radix2(cplx[:, ::1] src, cplx[:, ::1] dst, Py_ssize_t s,
                  const cplx[::1] base) noexcept nogil:
    cdef Py_ssize_t rows = src.shape[0]
    cdef Py_ssize_t n = src.shape[1]
    cdef Py_ssize_t m = n // (2 * s)
    cdef Py_ssize_t sm = s * m
    cdef Py_ssize_t row, p, q, i0, o0
    cdef cplx u0, u1
    for row in range(rows):
        for p in range(m):
            i0 = p * s
            o0 = 2 * p * s
            for q in range(s):
                u0 = src[row, i0 + q]
                u1 = src[row, i0 + q + sm] * base[q]
                dst[row, o0 + q] = u0 + u1
                dst[row, o0 + q + s] = u0 - u1


cdef void _radix4(cplx[:, ::1] src, cplx[:, ::1] dst, Py_ssize_t s,
                  const cplx[::1] base, bint inverse) noexcept nogil:
    cdef Py_ssize_t rows = src.shape[0]
    cdef Py_ssize_t n = src.shape[1]
    cdef Py_ssize_t m = n // (4 * s)
    cdef Py_ssize_t sm = s * m
    cdef Py_ssize_t row, p, q, i0, o0
    cdef cplx rot
    cdef cplx w, w2, w3, u0, u1, u2, u3, a, b, c, d, jd
    if inverse:
        rot = 1j
    else:
        rot = -1j
    for row in range(rows):
        for p in range(m):
            i0 = p * s
            o0 = 4 * p * s
            for q in range(s):
                w = base[q]
                w2 = w * w
                w3 = w2 * w
                u0 = src[row, i0 + q]
                u1 = src[row, i0 + q + sm] * w
                u2 = src[row, i0 + q + 2 * sm] * w2
                u3 = src[row, i0 + q + 3 * sm] * w3
                a = u0 + u2
                b = u0 - u2
                c = u1 + u3
                d = u1 - u3
                jd = d * rot
                dst[row, o0 + q] = a + c
                dst[row, o0 + q + s] = b + jd
                dst[row, o0 + q + 2 * s] = a - c
                dst[row, o0 + q + 3 * s] = b - jd


def stockham_pass(cplx[:, ::1] src, cplx[:, ::1] dst, Py_ssize_t s, int r,
                  const cplx[::1] base, bint inverse):
    """Apply one radix-r pass (r in {2, 4}) of the Stockham sweep."""
    if r == 2:
        with nogil:
            _radix2(src, dst, s, base)
    elif r == 4:
        with nogil:
            _radix4(src, dst, s, base, inverse)
    else:
        raise ValueError(f"compiled kernel supports radix 2 and 4, got {r}")
