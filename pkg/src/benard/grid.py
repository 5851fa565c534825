"""Structured 2D grids for the convection problem.

Two geometries: a "box" periodic in x with walls at z = 0 and z = Lz
(nodes placed on the walls), and a fully periodic "torus".  Derivatives
along periodic directions are spectral; the wall-bounded direction uses
second-order finite differences with one-sided stencils at the walls.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

BOX = "box"
TORUS = "torus"


@dataclass(frozen=True)
class Grid:
    kind: str
    nx: int
    nz: int
    Lx: float
    Lz: float

    def __post_init__(self):
        if self.kind not in (BOX, TORUS):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        for name, n in (("nx", self.nx), ("nz", self.nz)):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name}={n}: grid extents must be even and >= 8")
        if not (self.Lx > 0 and self.Lz > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def shape(self):
        return (self.nx, self.nz)

    @cached_property
    def dx(self):
        return self.Lx / self.nx

    @cached_property
    def dz(self):
        if self.kind == BOX:
            return self.Lz / (self.nz - 1)
        return self.Lz / self.nz

    @cached_property
    def x(self):
        return np.arange(self.nx) * self.dx

    @cached_property
    def z(self):
        return np.arange(self.nz) * self.dz

    def meshes(self):
        return np.meshgrid(self.x, self.z, indexing="ij")

    @cached_property
    def kx(self):
        """rfft wavenumbers along x with the Nyquist mode zeroed.

        The zeroed Nyquist keeps first derivatives real and antisymmetric,
        so integration by parts holds discretely.
        """
        k = 2.0 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)
        k[-1] = 0.0
        return k

    @cached_property
    def kx_full(self):
        """Full fft wavenumbers along x (both signs), Nyquist zeroed."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)
        k[self.nx // 2] = 0.0
        return k

    @cached_property
    def kz(self):
        if self.kind != TORUS:
            raise ValueError("kz is only defined on the torus")
        k = 2.0 * np.pi * np.fft.rfftfreq(self.nz, d=self.dz)
        k[-1] = 0.0
        return k

    @cached_property
    def weights_z(self):
        """Quadrature weights along z: trapezoid on the box, uniform on the torus."""
        if self.kind == BOX:
            w = np.full(self.nz, self.dz)
            w[0] = w[-1] = 0.5 * self.dz
            return w
        return np.full(self.nz, self.dz)

    @cached_property
    def quad_weights(self):
        """Full 2D quadrature weights, shape (nx, nz)."""
        return np.broadcast_to(self.dx * self.weights_z, (self.nx, self.nz)).copy()

    @cached_property
    def area(self):
        return self.Lx * self.Lz

    @cached_property
    def dealias_x(self):
        """2/3-rule mask over rfft modes along x."""
        m = np.fft.rfftfreq(self.nx) * self.nx
        return np.abs(m) < self.nx / 3.0

    @cached_property
    def dealias_z(self):
        if self.kind != TORUS:
            raise ValueError("spectral dealiasing in z only applies on the torus")
        m = np.fft.rfftfreq(self.nz) * self.nz
        return np.abs(m) < self.nz / 3.0
