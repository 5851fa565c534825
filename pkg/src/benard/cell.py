"""Fast-time dynamics on the periodic unit cell.

The cell system evolves a solenoidal velocity and a temperature field on
the torus in the fast time variable tau:

    du/dtau + (u.grad)u - nu Lap u + grad p = g_alpha e2 theta + f
    dtheta/dtau + (u.grad)theta - kappa Lap theta = source * u2

f is a frozen constant forcing (the slow pressure gradient seen by one
cell), and the temperature source is off by default. Spatial means obey
a closed linear ODE because advection, pressure, and diffusion all
integrate to zero over the torus; the discretization preserves this
exactly by computing advection in divergence form on dealiased products,
so the zero wavenumber of the advection term vanishes identically.

Discretization: Fourier Galerkin with 2/3-rule dealiasing in both
directions, exact spectral Leray projection, Crank-Nicolson diffusion,
and second-order Adams-Bashforth for the explicit terms after an Euler
start.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .fields import ScalarField, VectorField, norms
from .snapshots import write_snapshot, write_table
from .solver import NumericalError

__all__ = [
    "CellParams", "CellState", "CellCheckpoint", "CellTrajectory",
    "CellSolver", "cell_mean_ode_check", "solve_cell_family",
    "random_solenoidal",
]

MEAN_COLUMNS = ("tau", "mean_u1", "mean_u2", "mean_theta")


@dataclass(frozen=True)
class CellParams:
    nu: float
    kappa: float
    g_alpha: float = 0.0
    source: float = 0.0          # coefficient of u2 in the theta equation
    forcing: tuple = (0.0, 0.0)  # frozen constant body force

    def __post_init__(self):
        if self.nu <= 0 or self.kappa <= 0:
            raise ValueError("nu and kappa must be positive")
        if len(self.forcing) != 2:
            raise ValueError("forcing must have two components")


@dataclass
class CellState:
    grid: Grid
    tau: float
    uh: np.ndarray    # (2, nx, nz//2+1) spectral velocity
    thh: np.ndarray   # (nx, nz//2+1) spectral temperature
    step_count: int = 0
    prev_rhs: tuple | None = None


@dataclass
class CellCheckpoint:
    tau: float
    u: VectorField
    theta: ScalarField
    mean_u: tuple
    mean_theta: float


@dataclass
class CellTrajectory:
    grid: Grid
    params: CellParams
    dtau: float
    checkpoints: list
    means: list = field(default_factory=list)  # rows matching MEAN_COLUMNS

    @property
    def taus(self):
        return [cp.tau for cp in self.checkpoints]


def random_solenoidal(grid: Grid, seed: int, amp: float = 1.0,
                      kmax: int = 5) -> VectorField:
    """Zero-mean band-limited solenoidal field from a random stream function."""
    rng = np.random.default_rng(seed)
    X, Z = grid.meshes()
    psi = np.zeros(grid.shape)
    for _ in range(6):
        k1 = int(rng.integers(-kmax, kmax + 1))
        k2 = int(rng.integers(-kmax, kmax + 1))
        if k1 == 0 and k2 == 0:
            continue
        ph = rng.uniform(0.0, 2.0 * np.pi)
        psi += rng.normal() * np.cos(
            2.0 * np.pi * (k1 * X / grid.Lx + k2 * Z / grid.Lz) + ph)
    # exact spectral curl keeps the divergence at machine zero
    ph = np.fft.rfft2(psi)
    kx = grid.kx_full[:, None]
    kz = 2.0 * np.pi * np.fft.rfftfreq(grid.nz, grid.Lz / grid.nz)[None, :]
    u1 = np.fft.irfft2(1j * kz * ph, s=grid.shape)
    u2 = np.fft.irfft2(-1j * kx * ph, s=grid.shape)
    m = max(np.abs(u1).max(), np.abs(u2).max(), 1e-300)
    return VectorField.from_arrays(grid, amp * u1 / m, amp * u2 / m,
                                   solenoidal=True)


class CellSolver:
    def __init__(self, grid: Grid, params: CellParams, dtau: float):
        if grid.kind != "torus":
            raise ValueError("cell dynamics run on the torus")
        if dtau <= 0:
            raise ValueError("dtau must be positive")
        self.grid = grid
        self.params = params
        self.dtau = float(dtau)

        nx, nz = grid.nx, grid.nz
        self.kx = grid.kx_full[:, None]                       # x Nyquist zeroed
        kz = 2.0 * np.pi * np.fft.rfftfreq(nz, grid.Lz / nz)
        kz[nz // 2] = 0.0
        self.kz = kz[None, :]
        self.k2 = self.kx**2 + self.kz**2
        # k2 vanishes at the mean mode and at the zeroed Nyquist lines;
        # all of those modes stay masked, so a unit divisor is safe
        self._inv_k2 = 1.0 / np.where(self.k2 == 0.0, 1.0, self.k2)

        mx = np.abs(np.fft.fftfreq(nx) * nx) < nx / 3.0
        mz = np.arange(nz // 2 + 1) < nz / 3.0
        self.mask = mx[:, None] & mz[None, :]

        a = 0.5 * self.dtau * params.nu
        b = 0.5 * self.dtau * params.kappa
        self._mul_u = (1.0 - a * self.k2) / (1.0 + a * self.k2)
        self._pin_u = 1.0 / (1.0 + a * self.k2)
        self._mul_t = (1.0 - b * self.k2) / (1.0 + b * self.k2)
        self._pin_t = 1.0 / (1.0 + b * self.k2)
        self._nnodes = nx * nz

    # --- construction -------------------------------------------------------

    def project(self, uh: np.ndarray) -> np.ndarray:
        """Spectral Leray projection; the zero mode passes through."""
        dot = self.kx * uh[0] + self.kz * uh[1]
        out = np.empty_like(uh)
        out[0] = uh[0] - self.kx * dot * self._inv_k2
        out[1] = uh[1] - self.kz * dot * self._inv_k2
        return out

    def project_initial(self, u: VectorField, theta: ScalarField) -> CellState:
        uh = np.stack([np.fft.rfft2(u.u1), np.fft.rfft2(u.u2)])
        uh *= self.mask
        uh = self.project(uh)
        thh = np.fft.rfft2(theta.values) * self.mask
        return CellState(grid=self.grid, tau=0.0, uh=uh, thh=thh)

    # --- reconstruction -----------------------------------------------------

    def velocity(self, state: CellState) -> VectorField:
        s = self.grid.shape
        return VectorField.from_arrays(
            self.grid,
            np.fft.irfft2(state.uh[0], s=s),
            np.fft.irfft2(state.uh[1], s=s),
            solenoidal=True,
        )

    def theta(self, state: CellState) -> ScalarField:
        return ScalarField(self.grid, np.fft.irfft2(state.thh, s=self.grid.shape))

    def means(self, state: CellState):
        n = self._nnodes
        return (float(state.uh[0, 0, 0].real) / n,
                float(state.uh[1, 0, 0].real) / n,
                float(state.thh[0, 0].real) / n)

    # --- stepping -----------------------------------------------------------

    def _explicit_rhs(self, state: CellState):
        g = self.grid
        s = g.shape
        p = self.params
        u1 = np.fft.irfft2(state.uh[0], s=s)
        u2 = np.fft.irfft2(state.uh[1], s=s)
        th = np.fft.irfft2(state.thh, s=s)

        # divergence form keeps the zero mode of advection exactly zero
        f11 = np.fft.rfft2(u1 * u1) * self.mask
        f12 = np.fft.rfft2(u1 * u2) * self.mask
        f22 = np.fft.rfft2(u2 * u2) * self.mask
        f1t = np.fft.rfft2(u1 * th) * self.mask
        f2t = np.fft.rfft2(u2 * th) * self.mask

        N = np.empty_like(state.uh)
        N[0] = -(1j * self.kx * f11 + 1j * self.kz * f12)
        N[1] = -(1j * self.kx * f12 + 1j * self.kz * f22)
        N[1] += p.g_alpha * state.thh
        N = self.project(N)
        N[0, 0, 0] += p.forcing[0] * self._nnodes
        N[1, 0, 0] += p.forcing[1] * self._nnodes

        Nt = -(1j * self.kx * f1t + 1j * self.kz * f2t)
        Nt += p.source * state.uh[1]
        return N, Nt

    def step(self, state: CellState) -> CellState:
        with np.errstate(over="ignore", invalid="ignore"):
            N, Nt = self._explicit_rhs(state)
            if state.prev_rhs is None:
                N_eff, Nt_eff = N, Nt
            else:
                pN, pNt = state.prev_rhs
                N_eff = 1.5 * N - 0.5 * pN
                Nt_eff = 1.5 * Nt - 0.5 * pNt
            state.prev_rhs = (N, Nt)
            dtau = self.dtau
            state.uh = self._mul_u * state.uh + dtau * self._pin_u * N_eff
            state.thh = self._mul_t * state.thh + dtau * self._pin_t * Nt_eff
        state.tau += dtau
        state.step_count += 1
        if state.step_count % 16 == 0 or state.step_count < 4:
            if not (np.isfinite(state.uh).all() and np.isfinite(state.thh).all()):
                raise NumericalError(
                    f"cell state lost finiteness at tau={state.tau:.6g}",
                    t=state.tau, step=state.step_count)
        return state

    def run(self, state: CellState, tau_end: float, checkpoint_every: int = 0,
            out_dir: str | None = None, snap_every: int = 0,
            snapshot_extra: dict | None = None) -> CellTrajectory:
        n_steps = max(1, int(round((tau_end - state.tau) / self.dtau)))
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        checkpoints = [self._checkpoint(state)]
        means = [[state.tau, *self.means(state)]]
        if out_dir and snap_every:
            self._write_snaps(state, out_dir, 0, snapshot_extra)
        try:
            for n in range(1, n_steps + 1):
                self.step(state)
                means.append([state.tau, *self.means(state)])
                if (checkpoint_every and n % checkpoint_every == 0) or n == n_steps:
                    checkpoints.append(self._checkpoint(state))
                if out_dir and snap_every and (n % snap_every == 0 or n == n_steps):
                    self._write_snaps(state, out_dir, n, snapshot_extra)
        except ValueError as err:
            # non-finite values can surface from a field constructor
            # between the cadenced finiteness checks
            if "non-finite" not in str(err):
                raise
            raise NumericalError(
                f"cell state lost finiteness at tau={state.tau:.6g}",
                t=state.tau, step=state.step_count) from err
        if out_dir:
            write_table(os.path.join(out_dir, "cell_means.csv"),
                        MEAN_COLUMNS, means)
        return CellTrajectory(grid=self.grid, params=self.params,
                              dtau=self.dtau, checkpoints=checkpoints,
                              means=means)

    def _checkpoint(self, state: CellState) -> CellCheckpoint:
        m = self.means(state)
        return CellCheckpoint(tau=state.tau, u=self.velocity(state),
                              theta=self.theta(state),
                              mean_u=(m[0], m[1]), mean_theta=m[2])

    def _write_snaps(self, state: CellState, out_dir: str, n: int,
                     extra: dict | None):
        tag = f"{n:08d}"
        ex = dict(extra or {})
        ex["tau"] = state.tau
        write_snapshot(os.path.join(out_dir, f"cell_u_{tag}.bhf"),
                       self.velocity(state), t=state.tau, name="cell_u",
                       extra=ex)
        write_snapshot(os.path.join(out_dir, f"cell_theta_{tag}.bhf"),
                       self.theta(state), t=state.tau, name="cell_theta",
                       extra=ex)


def cell_mean_ode_check(u2_mean: float, theta_mean: float,
                        tau_end: float = 0.5, dtau: float = 5e-4,
                        n: int = 32, osc_amp: float = 0.2, seed: int = 2):
    """Integrate the normalized coupled cell system and compare its means
    with the closed forms of the 2x2 linear mean ODE.

    With unit coupling both ways the means obey m' = [[0,1],[1,0]] m for
    m = (u2, theta), whose solution mixes cosh and sinh. A zero-mean
    oscillation rides on top to exercise the nonlinear terms, which do
    not touch the means.
    """
    grid = Grid("torus", n, n, 1.0, 1.0)
    params = CellParams(nu=1.0, kappa=1.0, g_alpha=1.0, source=1.0)
    solver = CellSolver(grid, params, dtau=dtau)
    base = random_solenoidal(grid, seed=seed, amp=osc_amp)
    X, _ = grid.meshes()
    u = VectorField.from_arrays(grid, base.u1, base.u2 + u2_mean,
                                solenoidal=True)
    th = ScalarField(grid, theta_mean + osc_amp * np.cos(2.0 * np.pi * X))
    state = solver.project_initial(u, th)
    solver.run(state, tau_end=tau_end)
    m1, m2, mth = solver.means(state)
    ch, sh = math.cosh(tau_end), math.sinh(tau_end)
    return {
        "measured_u2": m2,
        "measured_theta": mth,
        "expected_u2": u2_mean * ch + theta_mean * sh,
        "expected_theta": u2_mean * sh + theta_mean * ch,
        "measured_u1": m1,
    }


def sample_lattice(Lx: float, Lz: float, cells: int):
    """Midpoints of a cells x cells partition of the slow domain."""
    xs = [(Lx * (i + 0.5) / cells, Lz * (j + 0.5) / cells)
          for i in range(cells) for j in range(cells)]
    return xs


def solve_cell_family(cfg, out_dir: str | None = None):
    """One cell run per slow-sample point; initial data is the two-scale
    profile evaluated at the sample.

    Returns (samples, trajectories) with matching order.
    """
    from .profiles import cell_initial_velocity, cell_initial_theta, chi_at

    grid = Grid("torus", cfg.cell_nx, cfg.cell_nz, 1.0, 1.0)
    params = CellParams(nu=cfg.nu, kappa=cfg.kappa, g_alpha=cfg.g_alpha,
                        source=0.0 if cfg.theta_source == "off"
                        else (cfg.T1 - cfg.T2) / cfg.Lz,
                        forcing=tuple(cfg.forcing_gradp0))
    solver = CellSolver(grid, params, dtau=cfg.dtau)
    tau_end = cfg.tau_end if cfg.tau_end > 0 else cfg.t_end
    n_steps = max(1, int(round(tau_end / cfg.dtau)))
    cpe = cfg.snap_every if cfg.snap_every else max(1, n_steps // 8)

    samples = sample_lattice(cfg.Lx, cfg.Lz, cfg.cells)
    trajectories = []
    for idx, xs in enumerate(samples):
        chi_u = chi_at(cfg.profile_u, xs, cfg.Lx, cfg.Lz)
        chi_t = chi_at(cfg.profile_theta, xs, cfg.Lx, cfg.Lz)
        u0 = cell_initial_velocity(grid, cfg.profile_u, chi_u)
        th0 = cell_initial_theta(grid, cfg.profile_theta, chi_t)
        state = solver.project_initial(u0, th0)
        member_dir = os.path.join(out_dir, f"cell_{idx:03d}") if out_dir else None
        extra = {"xsample": f"{xs[0]:.6g}+{xs[1]:.6g}"}
        traj = solver.run(state, tau_end=tau_end, checkpoint_every=cpe,
                          out_dir=member_dir,
                          snap_every=cfg.snap_every,
                          snapshot_extra=extra)
        trajectories.append(traj)
    return samples, trajectories
