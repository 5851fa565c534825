"""Pressure Poisson solves on both grids.

Box: Fourier in x, second-order finite differences in z with ghost-node
Neumann walls (the cosine-compatible tridiagonal operator), solved per
x mode by a batched Thomas sweep.  Torus: fully spectral.

Both solvers act on mean-zero right sides: the quadrature mean of the
input is removed first and returned to the caller, which is the discrete
form of the Neumann compatibility condition.  Solutions are normalized
to quadrature mean zero.  Inputs are expected to carry no x Nyquist
content; that mode sits outside the discrete calculus and is dropped.
"""

import numpy as np

from benard import kernels
from benard.grid import TORUS, Grid


def _neumann_bands(grid: Grid):
    """Tridiagonal bands of the z Neumann Laplacian shifted by -kx^2, batched over kx."""
    nz = grid.nz
    idz2 = 1.0 / grid.dz ** 2
    kx = grid.kx
    nk = kx.size
    dl = np.full((nk, nz - 1), idz2)
    du = np.full((nk, nz - 1), idz2)
    d = np.empty((nk, nz))
    d[:] = -2.0 * idz2 - (kx ** 2)[:, None]
    du[:, 0] = 2.0 * idz2
    dl[:, -1] = 2.0 * idz2
    singular = kx == 0.0
    # pin the last unknown of each singular member; its dropped equation is
    # recovered by compatibility of the mean-free right side
    dl[singular, -1] = 0.0
    d[singular, -1] = 1.0
    return dl, d, du, singular


def apply_neumann_laplacian(p, grid: Grid):
    """Apply the box operator used by solve_neumann_box (for residual checks)."""
    ph = np.fft.rfft(p, axis=0)
    nz = grid.nz
    idz2 = 1.0 / grid.dz ** 2
    out = np.empty_like(ph)
    out[:, 1:-1] = (ph[:, :-2] - 2.0 * ph[:, 1:-1] + ph[:, 2:]) * idz2
    out[:, 0] = (2.0 * ph[:, 1] - 2.0 * ph[:, 0]) * idz2
    out[:, -1] = (2.0 * ph[:, -2] - 2.0 * ph[:, -1]) * idz2
    out -= (grid.kx ** 2)[:, None] * ph
    out[-1] = 0.0
    return np.fft.irfft(out, n=grid.nx, axis=0)


def solve_neumann_box(rhs, grid: Grid):
    """Solve the Neumann-wall pressure problem; returns (p, removed_constant)."""
    w = grid.quad_weights
    c = float(np.sum(w * rhs) / grid.area)
    rh = np.fft.rfft(rhs - c, axis=0)
    dl, d, du, singular = _neumann_bands(grid)
    rh[singular, -1] = 0.0
    rh[-1] = 0.0
    p = np.fft.irfft(kernels.thomas_batch(dl, d, du, rh), n=grid.nx, axis=0)
    p -= np.sum(w * p) / grid.area
    return p, c


def solve_poisson_torus(rhs, grid: Grid):
    """Spectral inverse Laplacian on the torus; returns (p, removed_constant)."""
    if grid.kind != TORUS:
        raise ValueError("torus grid required")
    kx = grid.kx_full[:, None]
    kz = grid.kz[None, :]
    ksq = kx ** 2 + kz ** 2
    rh = np.fft.rfftn(rhs, axes=(0, 1))
    c = rh[0, 0].real / (grid.nx * grid.nz)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(ksq > 0.0, -rh / np.where(ksq > 0.0, ksq, 1.0), 0.0)
    p = np.fft.irfftn(ph, s=grid.shape, axes=(0, 1))
    return p, c
