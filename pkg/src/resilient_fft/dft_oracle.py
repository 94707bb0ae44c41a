"""Brute-force discrete Fourier transform used as the ground-truth oracle.

Everything here works straight from the definition ``y_j = sum_n x_n w^(jn)``
with per-call trigonometry, sharing no tables or factorization logic with the
fast path in ``fft_core``. It is O(N^2) on purpose and is only meant for
verification at modest sizes (tests cap it at N <= 4096).
"""

from __future__ import annotations

import numpy as np

_COMPLEX_DTYPES = (np.complex64, np.complex128)

# Output bins are computed in blocks of this many rows so the phase matrix
# never materializes at full N x N size.
_BLOCK = 128


def _as_complex(x):
    x = np.asarray(x)
    if x.dtype in _COMPLEX_DTYPES:
        return x
    return x.astype(np.complex128)


def _roots(n, dtype, sign):
    """All n-th roots of unity, with trig evaluated in the working precision."""
    k = np.arange(n)
    theta = (sign * 2.0 * np.pi / n) * k
    if dtype == np.complex64:
        theta = theta.astype(np.float32)
    return np.exp(1j * theta).astype(dtype, copy=False)


def dft_naive(x, direction="forward"):
    """Direct-summation DFT of one signal (1-D) or a stack of signals (2-D).

    Forward returns the unnormalized sums; inverse carries the 1/N factor so
    that ``dft_naive(dft_naive(x), "inverse")`` recovers ``x``.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction: {direction!r}")
    x = _as_complex(x)
    if x.ndim not in (1, 2):
        raise ValueError("expected a 1-D signal or a 2-D stack of signals")
    n = x.shape[-1]
    if n < 1:
        raise ValueError("signal length must be >= 1")

    x2 = np.atleast_2d(x)
    sign = -1.0 if direction == "forward" else 1.0
    roots = _roots(n, x2.dtype, sign)
    k = np.arange(n)
    y = np.empty_like(x2)
    for j0 in range(0, n, _BLOCK):
        j = np.arange(j0, min(j0 + _BLOCK, n))
        w = roots[(j[:, None] * k[None, :]) % n]
        y[:, j0 : j0 + len(j)] = x2 @ w.T
    if direction == "inverse":
        y *= np.real(y.dtype.type(1.0 / n))
    return y if x.ndim == 2 else y[0]


def dft_matrix(n, precision="double"):
    """The n x n DFT matrix W with W[j][k] = exp(-2*pi*i*j*k/n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dtype = np.complex64 if precision == "single" else np.complex128
    roots = _roots(n, dtype, -1.0)
    jk = np.arange(n)
    return roots[(jk[:, None] * jk[None, :]) % n]


def gemv_checksum(e, n):
    """The checksum row e^T W accumulated as an explicit row combination.

    Mathematically identical to ``dft_naive(e)`` but summed in a different
    order (row-major over e), which makes it a genuine cross-check for the
    oracle itself and for precomputed checksum rows.
    """
    e = _as_complex(e)
    if e.shape != (n,):
        raise ValueError(f"encoding vector has length {e.shape}, expected ({n},)")
    roots = _roots(n, e.dtype, -1.0)
    k = np.arange(n)
    acc = np.zeros(n, dtype=e.dtype)
    for j in range(n):
        acc += e[j] * roots[(j * k) % n]
    return acc
