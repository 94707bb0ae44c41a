import numpy as np

from resilient_fft import SignalBatch
from resilient_fft.fft_core import DTYPES, EPS


def gaussian_batch(n, b, precision, seed=0):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))
    return SignalBatch(data.astype(DTYPES[precision]))


def oracle_tol(precision, n, c=16.0):
    return c * EPS[precision] * np.log2(n)


def max_rel_error(got, ref):
    """Max over signals of the relative infinity-norm error."""
    got = np.atleast_2d(got)
    ref = np.atleast_2d(ref)
    err = np.abs(got - ref).max(axis=1)
    scale = np.maximum(np.abs(ref).max(axis=1), 1e-300)
    return float((err / scale).max())
