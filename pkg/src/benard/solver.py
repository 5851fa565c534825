"""Time integration of the wall-bounded convection system.

The fluctuation form evolves velocity u, temperature fluctuation theta
(zero at both walls), and an implied mean-zero pressure on the box:

    du/dt + (u.grad)u - nu_eff Lap u + grad p = g_alpha e2 theta
    dtheta/dt + (u.grad)theta - kappa_eff Lap theta = ((T1-T2)/h) u2
    div u = 0

with nu_eff = eps^gamma nu and kappa_eff = eps^gamma kappa; eps=1
recovers the unscaled system.

Discretization: Fourier in x (2/3-rule dealiasing of products, modes
outside the dealias band are never carried), second-order finite
differences in z. Velocity is advanced per horizontal wavenumber in a
clamped-streamfunction basis: psi vanishes at the walls and satisfies
psi_1 = psi_2/4 and psi_{n-2} = psi_{n-3}/4, which makes the one-sided
derivative rows vanish, so u = (Dz psi, -i kx psi) satisfies no-slip and
the discrete divergence EXACTLY (the x and z derivative operators
commute). Diffusion uses Crank-Nicolson on the Galerkin-reduced
operators, advection and buoyancy use second-order Adams-Bashforth after
an Euler start. The Galerkin reduction of the explicit terms is the
discrete solenoidal projection in this basis, so no separate pressure
step exists; pressure is recovered on demand from momentum balance.

One SolverState is owned by one worker at a time; all returned fields
are fresh arrays safe to hold across steps.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import Grid
from .fields import ScalarField, VectorField, norms, laplacian, divergence
from .poisson import solve_neumann_box
from .profiles import initial_velocity, initial_theta
from .snapshots import write_snapshot, write_table

__all__ = [
    "PhysicalParams", "SolverState", "Trajectory", "Checkpoint",
    "BoussinesqSolver", "NumericalError", "theta_from_T", "T_from_theta",
    "run_from_config", "epsilon_sweep",
]

DIAG_COLUMNS = ("t", "u_l2", "u_h1", "theta_l2", "theta_max", "theta_min",
                "cfl", "energy_input")


class NumericalError(RuntimeError):
    """Raised when the state stops being finite; carries the last good time."""

    def __init__(self, msg, t=None, step=None, last_snapshot=None):
        super().__init__(msg)
        self.t = t
        self.step = step
        self.last_snapshot = last_snapshot


@dataclass(frozen=True)
class PhysicalParams:
    nu: float
    kappa: float
    g_alpha: float
    T1: float
    T2: float
    h: float
    L: float
    lambda1: float = 0.0  # 0 selects pi^2/h^2

    def __post_init__(self):
        if min(self.nu, self.kappa, self.h, self.L) <= 0:
            raise ValueError("nu, kappa, h, L must be positive")
        if not self.T1 > self.T2:
            raise ValueError("need T1 > T2")
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be nonnegative")

    @property
    def lambda1_effective(self) -> float:
        return self.lambda1 if self.lambda1 > 0 else float(np.pi**2 / self.h**2)

    def rayleigh(self) -> float:
        return self.g_alpha * (self.T1 - self.T2) * self.h**3 / (self.nu * self.kappa)

    def prandtl(self) -> float:
        return self.nu / self.kappa

    def aspect(self) -> float:
        return self.L / self.h


def theta_from_T(T: ScalarField, params: PhysicalParams) -> ScalarField:
    """Fluctuation = T minus the linear conduction profile."""
    if T.grid.kind != "box":
        raise ValueError("temperature shift is defined on the box")
    _, Z = T.grid.meshes()
    prof = params.T1 + (Z / params.h) * (params.T2 - params.T1)
    return ScalarField(T.grid, T.values - prof)


def T_from_theta(theta: ScalarField, params: PhysicalParams) -> ScalarField:
    if theta.grid.kind != "box":
        raise ValueError("temperature shift is defined on the box")
    _, Z = theta.grid.meshes()
    prof = params.T1 + (Z / params.h) * (params.T2 - params.T1)
    return ScalarField(theta.grid, theta.values + prof)


@dataclass
class SolverState:
    """Reduced coefficients plus bookkeeping for one trajectory."""

    grid: Grid
    t: float
    eps: float
    c: np.ndarray        # (n_active - 1, nz - 4) complex, kx != 0 stream dofs
    U: np.ndarray        # (nz,) real, kx = 0 horizontal profile, walls zero
    th: np.ndarray       # (n_active, nz) complex, wall rows zero
    step_count: int = 0
    prev_rhs: tuple | None = None  # AB2 memory
    history: list = field(default_factory=list)
    cfl_warnings: int = 0


@dataclass
class Checkpoint:
    t: float
    tau: float
    u: VectorField
    theta: ScalarField


@dataclass
class Trajectory:
    grid: Grid
    params: PhysicalParams
    eps: float
    gamma: float
    dt: float
    checkpoints: list
    diagnostics: list  # rows matching DIAG_COLUMNS
    T_range: tuple | None = None  # (min, max) of T over every node and step

    @property
    def times(self):
        return [cp.t for cp in self.checkpoints]

    @property
    def taus(self):
        return [cp.tau for cp in self.checkpoints]


def _dz_matrix(nz: int, dz: float) -> np.ndarray:
    D = np.zeros((nz, nz))
    c = 1.0 / (2.0 * dz)
    for i in range(1, nz - 1):
        D[i, i - 1] = -c
        D[i, i + 1] = c
    D[0, 0], D[0, 1], D[0, 2] = -3.0 * c, 4.0 * c, -c
    D[-1, -1], D[-1, -2], D[-1, -3] = 3.0 * c, -4.0 * c, c
    return D


def _clamp_basis(nz: int) -> np.ndarray:
    """Columns span {psi: psi_0 = psi_{n-1} = 0, psi_1 = psi_2/4,
    psi_{n-2} = psi_{n-3}/4}; free nodes are rows 2 .. nz-3."""
    m = nz - 4
    B = np.zeros((nz, m))
    for j in range(m):
        B[2 + j, j] = 1.0
    B[1, 0] = 0.25
    B[nz - 2, m - 1] = 0.25
    return B


class BoussinesqSolver:
    def __init__(self, grid: Grid, params: PhysicalParams, eps: float = 1.0,
                 gamma: float = 1.5, dt: float | None = None,
                 advection: bool = True):
        if grid.kind != "box":
            raise ValueError("this integrator runs on the box")
        if not (0 < eps <= 1):
            raise ValueError("eps must lie in (0, 1]")
        self.grid = grid
        self.params = params
        self.eps = float(eps)
        self.gamma = float(gamma)
        self.advection = bool(advection)
        scale = self.eps ** self.gamma
        self.nu_eff = params.nu * scale
        self.kappa_eff = params.kappa * scale

        nz, dz = grid.nz, grid.dz
        self.n_active = int(np.sum(grid.dealias_x))
        self.kxa = grid.kx[: self.n_active].copy()
        self.Dz = _dz_matrix(nz, dz)
        self.B = _clamp_basis(nz)
        self.G = self.Dz @ self.B
        self.H = self.Dz @ self.G
        w = grid.weights_z
        GtWG = self.G.T @ (w[:, None] * self.G)
        BtWB = self.B.T @ (w[:, None] * self.B)
        HtWH = self.H.T @ (w[:, None] * self.H)
        self._mass_parts = (GtWG, BtWB)
        self._stiff_parts = (GtWG, BtWB, HtWH)

        self.dt = float(dt) if dt else None  # fixed once stepping starts
        self._ops_for_dt = None  # built lazily when dt is known

    # --- setup ------------------------------------------------------------

    def _mode_matrices(self, k: float):
        GtWG, BtWB = self._mass_parts
        _, _, HtWH = self._stiff_parts
        M = GtWG + k * k * BtWB
        A = 2.0 * k * k * GtWG + HtWH + k**4 * BtWB
        return M, A

    def _build_ops(self, dt: float):
        nz = self.grid.nz
        dz = self.grid.dz
        na = self.n_active
        m = nz - 4
        a = 0.5 * dt * self.nu_eff
        PinvQ = np.empty((na - 1, m, m))
        Pinv = np.empty((na - 1, m, m))
        for j in range(1, na):
            M, A = self._mode_matrices(self.kxa[j])
            P = M + a * A
            Q = M - a * A
            Pinv[j - 1] = np.linalg.inv(P)
            PinvQ[j - 1] = Pinv[j - 1] @ Q

        # tridiagonal CN bands for theta (all active modes) and for the
        # kx=0 velocity profile, interior nodes only
        n_int = nz - 2
        bth = 0.5 * dt * self.kappa_eff
        dl = np.zeros((na, n_int - 1))
        du = np.zeros((na, n_int - 1))
        d = np.zeros((na, n_int))
        for j in range(na):
            k2 = self.kxa[j] ** 2
            d[j, :] = 1.0 + bth * (k2 + 2.0 / dz**2)
            dl[j, :] = -bth / dz**2
            du[j, :] = -bth / dz**2
        bu = 0.5 * dt * self.nu_eff
        dU = np.full((1, n_int), 1.0 + bu * 2.0 / dz**2)
        dlU = np.full((1, n_int - 1), -bu / dz**2)
        self._ops_for_dt = {
            "dt": dt, "PinvQ": PinvQ, "Pinv": Pinv,
            "th_bands": (dl, d, du), "U_bands": (dlU, dU, dlU.copy()),
        }

    def choose_dt(self, u_linf: float, t_end: float) -> float:
        """Stability policy: advective bound capped by the explicit
        diffusion limit, never coarser than t_end/8."""
        g = self.grid
        hmin = min(g.dx, g.dz)
        p = self.params
        buoy = math.sqrt(p.g_alpha * (p.T1 - p.T2) * p.h) if p.g_alpha > 0 else 0.0
        vel = max(u_linf, buoy, 1e-8)
        dt = 0.4 * hmin / vel
        diff = self.eps**self.gamma * max(p.nu, p.kappa)
        if diff > 0:
            dt = min(dt, 0.25 * hmin * hmin / diff)
        if t_end > 0:
            dt = min(dt, t_end / 8.0)
        return dt

    # --- state construction ----------------------------------------------

    def project_initial(self, u: VectorField, theta: ScalarField) -> SolverState:
        """Least-squares fit of (u, theta) into the constrained basis.

        The fit minimizes the quadrature L2 misfit of both velocity
        components at once; its normal matrix is the mode mass matrix.
        """
        g = self.grid
        na = self.n_active
        w = g.weights_z
        u1h = np.fft.rfft(u.u1, axis=0)[:na]
        u2h = np.fft.rfft(u.u2, axis=0)[:na]
        thh = np.fft.rfft(theta.values, axis=0)[:na]
        nzm = g.nx  # rfft normalization divisor
        u1h /= nzm
        u2h /= nzm
        thh /= nzm

        m = g.nz - 4
        c = np.zeros((na - 1, m), dtype=complex)
        for j in range(1, na):
            k = self.kxa[j]
            M, _ = self._mode_matrices(k)
            rhs = self.G.T @ (w * u1h[j]) + 1j * k * (self.B.T @ (w * u2h[j]))
            c[j - 1] = np.linalg.solve(M, rhs)
        U = u1h[0].real.copy()
        U[0] = U[-1] = 0.0
        th = thh.copy()
        th[:, 0] = 0.0
        th[:, -1] = 0.0
        return SolverState(grid=g, t=0.0, eps=self.eps, c=c, U=U, th=th)

    def state_from_profiles(self, profile_u: str, profile_theta: str,
                            seed: int = 0) -> SolverState:
        u = initial_velocity(self.grid, profile_u, eps=self.eps, seed=seed)
        th = initial_theta(self.grid, profile_theta, eps=self.eps, seed=seed,
                           delta_T=self.params.T1 - self.params.T2)
        return self.project_initial(u, th)

    def stokes_mode(self, amplitude: float = 1.0) -> VectorField:
        """Slowest decaying discrete mode: the x-mean sine profile."""
        _, Z = self.grid.meshes()
        u1 = amplitude * np.sin(np.pi * Z / self.grid.Lz)
        return VectorField.from_arrays(self.grid, u1, np.zeros(self.grid.shape))

    # --- reconstruction ---------------------------------------------------

    def _spectra(self, state: SolverState):
        """Active-band spectra of (u1, u2, theta), rfft convention."""
        na = self.n_active
        u1h = np.zeros((na, self.grid.nz), dtype=complex)
        u2h = np.zeros_like(u1h)
        u1h[1:] = state.c @ self.G.T
        u2h[1:] = -1j * self.kxa[1:, None] * (state.c @ self.B.T)
        u1h[0] = state.U
        return u1h, u2h, state.th

    def _to_physical(self, spec_rows: np.ndarray) -> np.ndarray:
        g = self.grid
        full = np.zeros((g.nx // 2 + 1, g.nz), dtype=complex)
        full[: self.n_active] = spec_rows
        return np.fft.irfft(full * g.nx, n=g.nx, axis=0)

    def velocity(self, state: SolverState) -> VectorField:
        u1h, u2h, _ = self._spectra(state)
        return VectorField.from_arrays(
            self.grid, self._to_physical(u1h), self._to_physical(u2h),
            solenoidal=True,
        )

    def theta(self, state: SolverState) -> ScalarField:
        return ScalarField(self.grid, self._to_physical(state.th))

    # --- stepping ----------------------------------------------------------

    def _ddx_phys(self, spec_rows: np.ndarray) -> np.ndarray:
        return self._to_physical(1j * self.kxa[:, None] * spec_rows)

    def _explicit_rhs(self, state: SolverState):
        """Spectral reductions of advection, buoyancy, and the theta source."""
        g = self.grid
        na = self.n_active
        p = self.params
        u1h, u2h, thh = self._spectra(state)
        u1 = self._to_physical(u1h)
        u2 = self._to_physical(u2h)
        th = self._to_physical(thh)

        if self.advection:
            u1x = self._ddx_phys(u1h)
            u2x = self._ddx_phys(u2h)
            thx = self._ddx_phys(thh)
            u1z = kernels.dz_centered(u1, g.dz)
            u2z = kernels.dz_centered(u2, g.dz)
            thz = kernels.dz_centered(th, g.dz)
            F1 = -(u1 * u1x + u2 * u1z)
            F2 = -(u1 * u2x + u2 * u2z)
            Fth = -(u1 * thx + u2 * thz)
        else:
            F1 = np.zeros(g.shape)
            F2 = np.zeros(g.shape)
            Fth = np.zeros(g.shape)
        F2 = F2 + p.g_alpha * th
        Fth = Fth + ((p.T1 - p.T2) / p.h) * u2

        F1h = np.fft.rfft(F1, axis=0)[:na] / g.nx
        F2h = np.fft.rfft(F2, axis=0)[:na] / g.nx
        Fthh = np.fft.rfft(Fth, axis=0)[:na] / g.nx

        w = g.weights_z
        r = (w * F1h[1:]) @ self.G + 1j * self.kxa[1:, None] * ((w * F2h[1:]) @ self.B)
        r0 = F1h[0].real
        cfl = self.dt * (np.max(np.abs(u1)) / g.dx + np.max(np.abs(u2)) / g.dz)
        return r, r0, Fthh, cfl

    def step(self, state: SolverState) -> SolverState:
        """Advance one time step in place; returns the same state."""
        if self.dt is None:
            raise RuntimeError("dt not set; construct with dt= or call run()")
        if self._ops_for_dt is None or self._ops_for_dt["dt"] != self.dt:
            self._build_ops(self.dt)
        # nonfinite values are caught at the end of the step, so arithmetic
        # warnings on the way to a detected blowup are suppressed
        with np.errstate(over="ignore", invalid="ignore"):
            return self._step_inner(state)

    def _step_inner(self, state: SolverState) -> SolverState:
        ops = self._ops_for_dt
        dt = self.dt
        g = self.grid
        dz2 = g.dz**2

        r, r0, Fthh, cfl = self._explicit_rhs(state)
        if state.prev_rhs is None:
            r_eff, r0_eff, Fth_eff = r, r0, Fthh
        else:
            pr, pr0, pFth = state.prev_rhs
            r_eff = 1.5 * r - 0.5 * pr
            r0_eff = 1.5 * r0 - 0.5 * pr0
            Fth_eff = 1.5 * Fthh - 0.5 * pFth
        state.prev_rhs = (r, r0, Fthh)
        state.last_cfl = cfl

        # velocity, kx != 0: CN on the reduced Galerkin system
        state.c = np.einsum("ijk,ik->ij", ops["PinvQ"], state.c) \
            + dt * np.einsum("ijk,ik->ij", ops["Pinv"], r_eff)

        # velocity, kx = 0: interior tridiagonal CN
        U = state.U
        lap = (U[:-2] - 2.0 * U[1:-1] + U[2:]) / dz2
        rhsU = U[1:-1] + 0.5 * dt * self.nu_eff * lap + dt * r0_eff[1:-1]
        dlU, dU, duU = ops["U_bands"]
        U[1:-1] = kernels.thomas_batch(dlU, dU, duU, rhsU[None, :])[0]

        # theta: interior tridiagonal CN per mode, Dirichlet walls
        th = state.th
        k2 = self.kxa[:, None] ** 2
        lapth = (th[:, :-2] - 2.0 * th[:, 1:-1] + th[:, 2:]) / dz2 \
            - k2 * th[:, 1:-1]
        rhsth = th[:, 1:-1] + 0.5 * dt * self.kappa_eff * lapth \
            + dt * Fth_eff[:, 1:-1]
        dl, d, du = ops["th_bands"]
        th[:, 1:-1] = kernels.thomas_batch(dl, d, du, rhsth)

        state.t += dt
        state.step_count += 1
        if state.step_count % 16 == 0 or state.step_count < 4:
            ok = np.isfinite(state.c).all() and np.isfinite(state.th).all() \
                and np.isfinite(state.U).all()
            if not ok:
                raise NumericalError(
                    f"state lost finiteness at t={state.t:.6g}",
                    t=state.t, step=state.step_count,
                )
        return state

    # --- diagnostics and outputs -------------------------------------------

    def diagnostics_row(self, state: SolverState):
        with np.errstate(over="ignore", invalid="ignore"):
            u = self.velocity(state)
            th = self.theta(state)
            nu_ = norms(u)
            nth = norms(th)
            p = self.params
            w = self.grid.quad_weights
            energy_in = p.g_alpha * float(np.sum(w * th.values * u.u2))
        cfl = getattr(state, "last_cfl", 0.0)
        return [state.t, nu_.l2, nu_.h1, nth.l2,
                float(th.values.max()), float(th.values.min()), cfl, energy_in]

    def recover_pressure(self, state: SolverState) -> ScalarField:
        """Mean-zero pressure from momentum balance of the current state."""
        g = self.grid
        p = self.params
        u = self.velocity(state)
        th = self.theta(state)
        u1f = ScalarField(g, u.u1)
        u2f = ScalarField(g, u.u2)
        F1 = self.nu_eff * laplacian(u1f).values
        F2 = self.nu_eff * laplacian(u2f).values + p.g_alpha * th.values
        if self.advection:
            u1h, u2h, _ = self._spectra(state)
            F1 = F1 - (u.u1 * self._ddx_phys(u1h)
                       + u.u2 * kernels.dz_centered(u.u1, g.dz))
            F2 = F2 - (u.u1 * self._ddx_phys(u2h)
                       + u.u2 * kernels.dz_centered(u.u2, g.dz))
        rhs = divergence(VectorField.from_arrays(g, F1, F2)).values
        pvals, _ = solve_neumann_box(rhs, g)
        return ScalarField(g, pvals)

    def run(self, state: SolverState, t_end: float,
            snap_every: int = 0, diag_every: int = 1,
            out_dir: str | None = None, snapshot_extra: dict | None = None,
            checkpoint_every: int = 0, track_T_range: bool = False) -> Trajectory:
        """Integrate to t_end, recording diagnostics and checkpoints.

        checkpoint_every counts steps between in-memory checkpoints
        (0 keeps first and last only). Snapshots go to out_dir when given.
        track_T_range accumulates the min and max of the reconstructed
        total temperature over every node of every step.
        NaN aborts write the last good snapshot before raising.
        """
        if self.dt is None:
            u0 = self.velocity(state)
            lin = max(np.max(np.abs(u0.u1)), np.max(np.abs(u0.u2)))
            self.dt = self.choose_dt(float(lin), t_end)
        n_steps = max(1, int(round((t_end - state.t) / self.dt)))
        sqeps = math.sqrt(self.eps)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

        p = self.params
        prof = p.T1 + (self.grid.z / p.h) * (p.T2 - p.T1)  # (nz,)
        T_min = T_max = None
        if track_T_range:
            T0 = self._to_physical(state.th) + prof
            T_min, T_max = float(T0.min()), float(T0.max())

        checkpoints = [Checkpoint(state.t, state.t / sqeps,
                                  self.velocity(state), self.theta(state))]
        diagnostics = [self.diagnostics_row(state)]
        if out_dir and snap_every:
            self._write_snaps(state, out_dir, 0, snapshot_extra)
        last_good = checkpoints[0]

        def abort(err: NumericalError) -> NumericalError:
            if out_dir:
                path = os.path.join(out_dir, "last_good_u.bhf")
                write_snapshot(path, last_good.u, t=last_good.t, name="u",
                               extra=snapshot_extra)
                err.last_snapshot = path
            return err

        try:
            for n in range(1, n_steps + 1):
                self.step(state)
                if track_T_range:
                    T = self._to_physical(state.th) + prof
                    T_min = min(T_min, float(T.min()))
                    T_max = max(T_max, float(T.max()))
                want_diag = (n % diag_every == 0) or n == n_steps
                want_snap = snap_every and (n % snap_every == 0 or n == n_steps)
                want_cp = (checkpoint_every and n % checkpoint_every == 0) \
                    or n == n_steps
                if want_diag:
                    row = self.diagnostics_row(state)
                    diagnostics.append(row)
                    if row[6] > 1.0:
                        state.cfl_warnings += 1
                if want_cp:
                    cp = Checkpoint(state.t, state.t / sqeps,
                                    self.velocity(state), self.theta(state))
                    checkpoints.append(cp)
                    last_good = cp
                if out_dir and want_snap:
                    self._write_snaps(state, out_dir, n, snapshot_extra)
        except NumericalError as err:
            raise abort(err)
        except ValueError as err:
            # non-finite values can surface from a field constructor
            # between the cadenced finiteness checks
            if "non-finite" not in str(err):
                raise
            raise abort(NumericalError(
                f"state lost finiteness at t={state.t:.6g}",
                t=state.t, step=state.step_count)) from err
        if out_dir:
            write_table(os.path.join(out_dir, "diagnostics.csv"),
                        DIAG_COLUMNS, diagnostics)
        state.history = diagnostics
        T_range = (T_min, T_max) if track_T_range else None
        return Trajectory(grid=self.grid, params=self.params, eps=self.eps,
                          gamma=self.gamma, dt=self.dt,
                          checkpoints=checkpoints, diagnostics=diagnostics,
                          T_range=T_range)

    def _write_snaps(self, state: SolverState, out_dir: str, n: int,
                     extra: dict | None):
        tag = f"{n:08d}"
        ex = dict(extra or {})
        ex["tau"] = state.t / math.sqrt(self.eps)
        write_snapshot(os.path.join(out_dir, f"u_{tag}.bhf"),
                       self.velocity(state), t=state.t, name="u", extra=ex)
        write_snapshot(os.path.join(out_dir, f"theta_{tag}.bhf"),
                       self.theta(state), t=state.t, name="theta", extra=ex)


def run_from_config(cfg, out_dir: str | None = None) -> Trajectory:
    """Build grid, params, initial data from an ExperimentConfig and run."""
    grid = Grid("box", cfg.nx, cfg.nz, cfg.Lx, cfg.Lz)
    params = PhysicalParams(nu=cfg.nu, kappa=cfg.kappa, g_alpha=cfg.g_alpha,
                            T1=cfg.T1, T2=cfg.T2, h=cfg.Lz, L=cfg.Lx,
                            lambda1=cfg.lambda1)
    eps = cfg.eps[0]
    solver = BoussinesqSolver(grid, params, eps=eps, gamma=cfg.gamma,
                              dt=cfg.dt if cfg.dt > 0 else None)
    state = solver.state_from_profiles(cfg.profile_u, cfg.profile_theta,
                                       seed=cfg.seed)
    return solver.run(state, t_end=cfg.t_end, snap_every=cfg.snap_every,
                      diag_every=cfg.diag_every, out_dir=out_dir,
                      checkpoint_every=cfg.snap_every, track_T_range=True)


def epsilon_sweep(cfg, eps_list=None, out_dir: str | None = None):
    """Run the scaled system for each eps with two-scale initial data.

    Every member takes the same number of fast-time steps (dt scales with
    sqrt(eps)), so checkpoints align at shared tau values. Returns
    (trajectories, monitors) where monitors maps eps to rows of
    (tau, scaled_u_l2, scaled_grad_l2, advection_l1).
    """
    eps_values = tuple(eps_list) if eps_list is not None else tuple(cfg.eps)
    if len(eps_values) > 1 and not all(
        a > b for a, b in zip(eps_values, eps_values[1:])
    ):
        raise ValueError("eps values must strictly decrease")
    grid = Grid("box", cfg.nx, cfg.nz, cfg.Lx, cfg.Lz)
    params = PhysicalParams(nu=cfg.nu, kappa=cfg.kappa, g_alpha=cfg.g_alpha,
                            T1=cfg.T1, T2=cfg.T2, h=cfg.Lz, L=cfg.Lx,
                            lambda1=cfg.lambda1)
    tau_end = cfg.tau_end if cfg.tau_end > 0 else cfg.t_end
    trajectories = []
    monitors = {}
    for eps in eps_values:
        dt = math.sqrt(eps) * cfg.dtau
        solver = BoussinesqSolver(grid, params, eps=eps, gamma=cfg.gamma, dt=dt)
        state = solver.state_from_profiles(cfg.profile_u, cfg.profile_theta,
                                           seed=cfg.seed)
        member_dir = os.path.join(out_dir, f"eps_{eps:g}") if out_dir else None
        cpe = cfg.snap_every if cfg.snap_every else max(
            1, int(round(tau_end / cfg.dtau)) // 8)
        traj = solver.run(state, t_end=math.sqrt(eps) * tau_end,
                          snap_every=cfg.snap_every, diag_every=cfg.diag_every,
                          out_dir=member_dir,
                          snapshot_extra={"eps": eps},
                          checkpoint_every=cpe)
        rows = []
        for cp in traj.checkpoints:
            nu_ = norms(cp.u)
            adv = _advection_l1(solver, cp.u)
            rows.append([cp.tau, nu_.l2 / math.sqrt(eps),
                         math.sqrt(eps) * nu_.grad_l2, adv])
        monitors[eps] = rows
        trajectories.append(traj)
        if member_dir:
            write_table(os.path.join(member_dir, "monitors.csv"),
                        ("tau", "scaled_u_l2", "scaled_grad_l2",
                         "advection_l1"), rows)
    return trajectories, monitors


def _advection_l1(solver: BoussinesqSolver, u: VectorField) -> float:
    g = solver.grid
    u1h = np.fft.rfft(u.u1, axis=0)[: solver.n_active] / g.nx
    u2h = np.fft.rfft(u.u2, axis=0)[: solver.n_active] / g.nx
    a1 = u.u1 * solver._ddx_phys(u1h) + u.u2 * kernels.dz_centered(u.u1, g.dz)
    a2 = u.u1 * solver._ddx_phys(u2h) + u.u2 * kernels.dz_centered(u.u2, g.dz)
    mag = np.hypot(a1, a2)
    return float(np.sum(g.quad_weights * mag))
