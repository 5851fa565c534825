"""Scalar and vector fields with the discrete vector calculus used everywhere.

Conventions, fixed once and shared by all solvers and checks:

  * arrays have shape (nx, nz) with x along axis 0,
  * x derivatives are spectral (rfft) with the Nyquist mode annihilated,
    so the derivative matrix is real and antisymmetric,
  * z derivatives on the box use second-order centered differences with
    one-sided second-order stencils on the wall rows; on the torus they
    are spectral like x,
  * the Laplacian is the literal composition divergence(gradient(f)),
  * quadrature is uniform in x and trapezoid in z on the box (uniform on
    the torus), and |f| below always means that quadrature L2 norm,
  * zero-wavenumber handling: inverse Laplacians act on mean-zero data,
    and the Leray projector passes the mean of a field through unchanged.
"""

from dataclasses import dataclass

import numpy as np

from benard import kernels
from benard.grid import BOX, TORUS, Grid

DIRICHLET_BOX = "dirichlet_box"
ZERO_MEAN_TORUS = "zero_mean_torus"


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        self.values = v


@dataclass
class VectorField:
    grid: Grid
    components: tuple
    solenoidal: bool = False

    def __post_init__(self):
        if len(self.components) != 2:
            raise ValueError("exactly two components expected")
        for c in self.components:
            if c.grid != self.grid:
                raise ValueError("component grids disagree")
        self.components = tuple(self.components)

    @classmethod
    def from_arrays(cls, grid, u1, u2, solenoidal=False):
        return cls(grid, (ScalarField(grid, u1), ScalarField(grid, u2)), solenoidal)

    @property
    def u1(self):
        return self.components[0].values

    @property
    def u2(self):
        return self.components[1].values


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1: float
    linf: float
    grad_l2: float


# === derivative primitives on raw arrays ===

def ddx(values, grid):
    vh = np.fft.rfft(values, axis=0)
    vh *= 1j * grid.kx[:, None]
    return np.fft.irfft(vh, n=grid.nx, axis=0)


def ddz(values, grid):
    if grid.kind == BOX:
        return kernels.dz_centered(values, grid.dz)
    vh = np.fft.rfft(values, axis=1)
    vh *= 1j * grid.kz[None, :]
    return np.fft.irfft(vh, n=grid.nz, axis=1)


def dealias(values, grid):
    """Remove modes outside the 2/3 band along every periodic direction."""
    vh = np.fft.rfft(values, axis=0)
    vh[~grid.dealias_x] = 0.0
    out = np.fft.irfft(vh, n=grid.nx, axis=0)
    if grid.kind == TORUS:
        vh = np.fft.rfft(out, axis=1)
        vh[:, ~grid.dealias_z] = 0.0
        out = np.fft.irfft(vh, n=grid.nz, axis=1)
    return out


# === vector calculus ===

def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, (ScalarField(g, ddx(f.values, g)), ScalarField(g, ddz(f.values, g))))


def divergence(u: VectorField) -> ScalarField:
    g = u.grid
    return ScalarField(g, ddx(u.u1, g) + ddz(u.u2, g))


def curl_scalar(u: VectorField) -> ScalarField:
    """Scalar vorticity d(u2)/dx - d(u1)/dz."""
    g = u.grid
    return ScalarField(g, ddx(u.u2, g) - ddz(u.u1, g))


def stream_velocity(psi: ScalarField) -> VectorField:
    """Velocity (dpsi/dz, -dpsi/dx) of a stream function.

    The x and z derivative operators commute exactly, so the discrete
    divergence of the result vanishes to round-off on either grid kind.
    """
    g = psi.grid
    return VectorField.from_arrays(g, ddz(psi.values, g), -ddx(psi.values, g), solenoidal=True)


def laplacian(f: ScalarField) -> ScalarField:
    return divergence(gradient(f))


# === quadrature, norms, inner products ===

def integral(f: ScalarField) -> float:
    return float(np.sum(f.grid.quad_weights * f.values))


def mean(f: ScalarField) -> float:
    return integral(f) / f.grid.area


def inner(a, b) -> float:
    """Quadrature L2 inner product of two scalar or two vector fields."""
    if isinstance(a, VectorField):
        return sum(inner(ca, cb) for ca, cb in zip(a.components, b.components))
    return float(np.sum(a.grid.quad_weights * a.values * b.values))


def norms(obj) -> NormReport:
    if isinstance(obj, VectorField):
        comps = obj.components
        l2sq = sum(inner(c, c) for c in comps)
        gradsq = 0.0
        for c in comps:
            gc = gradient(c)
            gradsq += inner(gc, gc)
        mag = np.sqrt(sum(c.values ** 2 for c in comps))
        linf = float(np.max(mag))
    else:
        l2sq = inner(obj, obj)
        gf = gradient(obj)
        gradsq = inner(gf, gf)
        linf = float(np.max(np.abs(obj.values)))
    l2 = float(np.sqrt(l2sq))
    grad_l2 = float(np.sqrt(gradsq))
    return NormReport(l2=l2, h1=float(np.sqrt(l2sq + gradsq)), linf=linf, grad_l2=grad_l2)


def solenoidal_defect(u: VectorField) -> float:
    """Relative divergence defect |div u| / max(|u|_H1, tiny)."""
    d = norms(divergence(u)).l2
    h1 = norms(u).h1
    return d / max(h1, 1e-300)


# === Leray projection ===

def _project_torus_arrays(u1, u2, grid):
    kx = grid.kx_full[:, None]
    kz = grid.kz[None, :]
    f1 = np.fft.rfftn(u1, axes=(0, 1))
    f2 = np.fft.rfftn(u2, axes=(0, 1))
    ksq = kx ** 2 + kz ** 2
    inv = np.where(ksq > 0.0, 1.0 / np.where(ksq > 0.0, ksq, 1.0), 0.0)
    kd = (kx * f1 + kz * f2) * inv
    f1 -= kx * kd
    f2 -= kz * kd
    w1 = np.fft.irfftn(f1, s=grid.shape, axes=(0, 1))
    w2 = np.fft.irfftn(f2, s=grid.shape, axes=(0, 1))
    return w1, w2


def leray_project(v: VectorField) -> VectorField:
    """Project onto divergence-free fields; the mean passes through.

    On the torus the projection is spectral and exact.  On the box it
    subtracts the gradient of the Neumann pressure solve of div v, which
    removes the divergence to discretization accuracy.
    """
    g = v.grid
    if g.kind == TORUS:
        w1, w2 = _project_torus_arrays(v.u1, v.u2, g)
        return VectorField.from_arrays(g, w1, w2, solenoidal=True)
    from benard import poisson

    p, _ = poisson.solve_neumann_box(divergence(v).values, g)
    w = VectorField.from_arrays(g, v.u1 - ddx(p, g), v.u2 - ddz(p, g))
    w.solenoidal = solenoidal_defect(w) < 1e-10
    return w


# === Poincare constants ===

def poincare_lambda1(grid: Grid, bc: str) -> float:
    """Smallest Laplacian eigenvalue for the named boundary setting."""
    if bc == DIRICHLET_BOX:
        return np.pi ** 2 * (1.0 / grid.Lx ** 2 + 1.0 / grid.Lz ** 2)
    if bc == ZERO_MEAN_TORUS:
        return (2.0 * np.pi / max(grid.Lx, grid.Lz)) ** 2
    raise ValueError(f"unknown boundary setting {bc!r}")


def lambda1_channel(Lz: float) -> float:
    """Slowest decay rate pi^2/Lz^2 for no-slip walls with periodic sides."""
    return np.pi ** 2 / Lz ** 2
