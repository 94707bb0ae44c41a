"""Pure-numpy Stockham stage sweeps, interface-identical to the compiled core.

Each pass reshapes the (rows, n) block to expose the butterfly legs and runs
the whole sweep as vectorized array arithmetic. Slower than the compiled
kernels (several full-array traversals per pass) but dependency-free.
"""

import numpy as np

COMPILED = False


def stockham_pass(src, dst, s, r, base, inverse):
    """Apply one radix-r pass (r in {2, 4}) of the Stockham sweep.

    Index layout: input leg t of butterfly (p, q) lives at q + s*(p + m*t),
    the output lands at q + s*(r*p + c); both views below encode exactly that.
    """
    rows, n = src.shape
    m = n // (s * r)
    a = src.reshape(rows, r, m, s)
    out = dst.reshape(rows, m, r, s)
    if r == 2:
        u0 = a[:, 0]
        u1 = a[:, 1] * base
        np.add(u0, u1, out=out[:, :, 0])
        np.subtract(u0, u1, out=out[:, :, 1])
    elif r == 4:
        w2 = base * base
        w3 = w2 * base
        u0 = a[:, 0]
        u1 = a[:, 1] * base
        u2 = a[:, 2] * w2
        u3 = a[:, 3] * w3
        ac = u0 + u2
        bd = u0 - u2
        ce = u1 + u3
        df = u1 - u3
        jd = df * (1j if inverse else -1j)
        np.add(ac, ce, out=out[:, :, 0])
        np.add(bd, jd, out=out[:, :, 1])
        np.subtract(ac, ce, out=out[:, :, 2])
        np.subtract(bd, jd, out=out[:, :, 3])
    else:
        raise ValueError(f"numpy kernel supports radix 2 and 4, got {r}")
