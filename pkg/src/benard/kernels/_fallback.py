"""Pure numpy implementations of the hot kernels.

These mirror the compiled versions in _ckernels.pyx operation for
operation, so both paths produce identical floating point results.
"""

import numpy as np


def dz_centered(values, dz):
    """Derivative along the last axis on a wall-bounded grid.

    Second-order centered differences in the interior, second-order
    one-sided stencils on the two boundary rows.  `values` must have at
    least 3 points along the last axis.
    """
    f = np.asarray(values)
    out = np.empty_like(f)
    c = 1.0 / (2.0 * dz)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) * c
    out[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) * c
    out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) * c
    return out


def thomas_batch(dl, d, du, b):
    """Solve a batch of tridiagonal systems by the Thomas algorithm.

    dl, d, du: real (B, n-1), (B, n), (B, n-1) bands (no pivoting; callers
    supply diagonally dominant or shifted definite systems).  b: (B, n)
    right sides, real or complex.  Returns x with b's dtype.
    """
    d = np.asarray(d)
    B, n = d.shape
    w = np.empty((B, n - 1))
    g = np.empty((B, n), dtype=b.dtype)
    w[:, 0] = du[:, 0] / d[:, 0]
    g[:, 0] = b[:, 0] / d[:, 0]
    for i in range(1, n):
        denom = d[:, i] - dl[:, i - 1] * w[:, i - 1]
        if i < n - 1:
            w[:, i] = du[:, i] / denom
        g[:, i] = (b[:, i] - dl[:, i - 1] * g[:, i - 1]) / denom
    x = np.empty_like(g)
    x[:, -1] = g[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i] = g[:, i] - w[:, i] * x[:, i + 1]
    return x
