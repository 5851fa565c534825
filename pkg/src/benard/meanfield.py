"""Slow-domain mean-field pipeline.

Given the cell-averaged temperature on the slow domain, this module
computes the global pressure (a wall-Neumann Poisson problem), the
divergence-free part of the buoyancy force, the time-integrated mean
velocity, and the residual of the forced Euler equation that the mean
velocity satisfies. It also verifies the identity that the cell mean of
the self-advection of a periodic solenoidal field vanishes.

Two independent routes compute the buoyancy projection on the torus:
the pressure route subtracts the gradient of an inverse Laplacian of
the divergence, and the curl route rebuilds the field from its
vorticity. Their agreement is a consistency check on the discrete
calculus; the box geometry supports the pressure route only, with the
wall-Neumann solver certifying its own residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .fields import (
    ScalarField,
    VectorField,
    ddx,
    ddz,
    divergence,
    gradient,
    integral,
    laplacian,
    mean,
    norms,
    solenoidal_defect,
    stream_velocity,
)
from .grid import BOX, TORUS, Grid
from .poisson import apply_neumann_laplacian, solve_neumann_box, solve_poisson_torus

__all__ = [
    "MeanFieldState", "neumann_poisson", "projection_residual",
    "project_buoyancy", "curl_project", "advection", "mean_advection",
    "integrate_history", "mean_field", "mean_field_states",
    "euler_residual", "theta_bar_field",
    "theta_bar_series", "projection_consistency_rows",
    "RESIDUAL_COLUMNS", "CONSISTENCY_COLUMNS",
]

LOG = logging.getLogger(__name__)

RESIDUAL_COLUMNS = ("tau", "residual_l2", "advection_l2")
CONSISTENCY_COLUMNS = ("case", "route_gap_rel", "div_rel")


@dataclass(frozen=True)
class MeanFieldState:
    """Mean-field quantities at one fast time.

    theta0_bar is the cell-averaged temperature, p0 the mean-zero global
    pressure, H the divergence-free part of the buoyancy force, and
    u0_bar the mean velocity accumulated up to tau.
    """

    theta0_bar: ScalarField
    p0: ScalarField
    u0_bar: VectorField
    H: VectorField
    tau: float

    def defects(self) -> dict:
        """Invariant measurements: pressure mean and divergence of H.

        On the torus the divergence is evaluated directly (the spectral
        derivative is exact); the wall geometry certifies the projection
        through the residual of the pressure solve in its own stencil,
        since the centered first-derivative composition differs from the
        zero-flux second-difference operator at the walls.
        """
        out = {"mean_p0": abs(mean(self.p0))}
        if self.H.grid.kind == TORUS:
            div = divergence(self.H)
            scale = max(norms(self.H).l2, norms(self.theta0_bar).l2, 1e-300)
            out["div_H"] = norms(div).l2 / scale
        else:
            out["div_H"] = projection_residual(self.theta0_bar, self.p0)
        return out


def neumann_poisson(rhs: ScalarField) -> ScalarField:
    """Mean-zero solution of the Poisson problem for the global pressure.

    Box grids use zero-flux walls and periodic sides; torus grids are
    fully periodic. The quadrature mean of the right side is removed
    first (the discrete solvability condition) and logged.
    """
    g = rhs.grid
    if g.kind == BOX:
        p, defect = solve_neumann_box(rhs.values, g)
    else:
        p, defect = solve_poisson_torus(rhs.values, g)
    if abs(defect) > 0.0:
        LOG.debug("poisson compatibility defect %.6e removed", defect)
    return ScalarField(g, p)


def projection_residual(theta0_bar: ScalarField, p0: ScalarField) -> float:
    """Relative residual of the pressure solve in its own stencil."""
    g = theta0_bar.grid
    rhs = ddz(theta0_bar.values, g)
    c = float(np.sum(g.quad_weights * rhs) / g.area)
    rhs = rhs - c
    if g.kind == BOX:
        lap = apply_neumann_laplacian(p0.values, g)
    else:
        lap = laplacian(p0).values
    denom = float(np.sqrt(np.sum(g.quad_weights * rhs ** 2)))
    if denom == 0.0:
        return 0.0
    num = float(np.sqrt(np.sum(g.quad_weights * (lap - rhs) ** 2)))
    return num / denom


def project_buoyancy(theta0_bar: ScalarField) -> VectorField:
    """Divergence-free part of the buoyancy force: e2*theta minus the
    gradient of the pressure solving the Neumann problem for its
    divergence."""
    g = theta0_bar.grid
    e2 = VectorField.from_arrays(g, np.zeros(g.shape), theta0_bar.values)
    p0 = neumann_poisson(divergence(e2))
    gp = gradient(p0)
    return VectorField.from_arrays(g, e2.u1 - gp.u1, e2.u2 - gp.u2,
                                   solenoidal=(g.kind == TORUS))


def curl_project(theta0_bar: ScalarField) -> VectorField:
    """Same projection through the vorticity route, torus only.

    The buoyancy's vorticity is inverted to a stream function whose curl
    is the zero-mean divergence-free part; the constant mean, its own
    divergence-free part, is added back explicitly.
    """
    g = theta0_bar.grid
    if g.kind != TORUS:
        raise ValueError("curl route requires the torus grid")
    e2 = VectorField.from_arrays(g, np.zeros(g.shape), theta0_bar.values)
    w = ddx(e2.u2, g) - ddz(e2.u1, g)
    psi, _ = solve_poisson_torus(w, g)
    h = stream_velocity(ScalarField(g, -psi))
    m = mean(theta0_bar)
    return VectorField.from_arrays(g, h.u1, h.u2 + m, solenoidal=True)


def advection(u: VectorField) -> VectorField:
    """(u . grad) u with the grid's derivative operators."""
    g = u.grid
    a1 = u.u1 * ddx(u.u1, g) + u.u2 * ddz(u.u1, g)
    a2 = u.u1 * ddx(u.u2, g) + u.u2 * ddz(u.u2, g)
    return VectorField.from_arrays(g, a1, a2)


def mean_advection(u0: VectorField):
    """Cell mean of the self-advection, with the divergence defect.

    For periodic solenoidal fields the mean vanishes identically; a
    nonzero divergence breaks the identity, so the defect is reported
    alongside the componentwise integral.
    """
    g = u0.grid
    if g.kind != TORUS:
        raise ValueError("mean advection is a cell (torus) quantity")
    adv = advection(u0)
    vec = np.array([integral(ScalarField(g, adv.u1)),
                    integral(ScalarField(g, adv.u2))])
    return vec, solenoidal_defect(u0)


def integrate_history(H_series, tau: float) -> VectorField:
    """Trapezoid time integral of a field history up to the checkpoint
    at tau. The lower limit is the first recorded time."""
    if not H_series:
        raise ValueError("empty history")
    g = H_series[0][1].grid
    acc1 = np.zeros(g.shape)
    acc2 = np.zeros(g.shape)
    if abs(tau - H_series[0][0]) <= 1e-9:
        return VectorField.from_arrays(g, acc1, acc2)
    hit = False
    for (t0, h0), (t1, h1) in zip(H_series, H_series[1:]):
        acc1 += 0.5 * (t1 - t0) * (h0.u1 + h1.u1)
        acc2 += 0.5 * (t1 - t0) * (h0.u2 + h1.u2)
        if abs(t1 - tau) <= 1e-9:
            hit = True
            break
    if not hit:
        raise ValueError(f"tau={tau} is not a recorded checkpoint")
    return VectorField.from_arrays(g, acc1, acc2)


def mean_field(theta_series, tau: float) -> VectorField:
    """Mean velocity at tau: the time integral of the divergence-free
    buoyancy part accumulated from the start of the temperature history."""
    if not theta_series:
        raise ValueError("empty history")
    H_series = [(t, project_buoyancy(th)) for t, th in theta_series
                if t <= tau + 1e-9]
    return integrate_history(H_series, tau)


def mean_field_states(theta_series) -> list:
    """Assemble per-checkpoint mean-field states from a temperature
    history sampled at increasing fast times."""
    if not theta_series:
        raise ValueError("empty history")
    H_series = []
    p_series = []
    for tau, th in theta_series:
        g = th.grid
        e2 = VectorField.from_arrays(g, np.zeros(g.shape), th.values)
        p0 = neumann_poisson(divergence(e2))
        gp = gradient(p0)
        H = VectorField.from_arrays(g, e2.u1 - gp.u1, e2.u2 - gp.u2,
                                    solenoidal=(g.kind == TORUS))
        H_series.append((tau, H))
        p_series.append(p0)
    states = []
    for (tau, th), (_, H), p0 in zip(theta_series, H_series, p_series):
        u0 = integrate_history(H_series, tau)
        states.append(MeanFieldState(theta0_bar=th, p0=p0, u0_bar=u0,
                                     H=H, tau=tau))
    return states


def euler_residual(u0_series, p1_series, theta_series):
    """Forced-Euler residual per interior checkpoint.

    Rows are (tau, residual_l2, advection_l2): the L2 norm of
    du/dtau + (u.grad)u + grad(p1) - H with a centered difference in
    tau, plus the advection magnitude carrying the closure defect.
    """
    n = len(u0_series)
    if n < 3:
        raise ValueError("need at least three checkpoints")
    if len(p1_series) != n or len(theta_series) != n:
        raise ValueError("histories must share checkpoints")
    taus = [t for t, _ in u0_series]
    for series in (p1_series, theta_series):
        if max(abs(a - b) for (a, _), (b, _) in zip(series, u0_series)) > 1e-9:
            raise ValueError("histories must share checkpoints")
    rows = []
    for i in range(1, n - 1):
        tau = taus[i]
        span = taus[i + 1] - taus[i - 1]
        up, um = u0_series[i + 1][1], u0_series[i - 1][1]
        g = up.grid
        dudt1 = (up.u1 - um.u1) / span
        dudt2 = (up.u2 - um.u2) / span
        adv = advection(u0_series[i][1])
        gp = gradient(p1_series[i][1])
        H = project_buoyancy(theta_series[i][1])
        r1 = dudt1 + adv.u1 + gp.u1 - H.u1
        r2 = dudt2 + adv.u2 + gp.u2 - H.u2
        res = VectorField.from_arrays(g, r1, r2)
        rows.append((tau, norms(res).l2, norms(adv).l2))
    return rows


def theta_bar_field(samples, values, grid: Grid) -> ScalarField:
    """Bilinear interpolation of per-sample values onto the slow grid.

    The sample lattice is the midpoint partition used for cell runs:
    periodic interpolation in x, clamped at the wall rows in z.
    """
    cells = int(round(np.sqrt(len(samples))))
    if cells * cells != len(samples):
        raise ValueError("samples must form a square lattice")
    vals = np.asarray(values, dtype=float).reshape(cells, cells)
    X, Z = grid.meshes()
    hx = grid.Lx / cells
    hz = grid.Lz / cells
    sx = X / hx - 0.5
    i0 = np.floor(sx).astype(int)
    wx = sx - i0
    i0m = np.mod(i0, cells)
    i1m = np.mod(i0 + 1, cells)
    sz = np.clip(Z / hz - 0.5, 0.0, cells - 1.0)
    j0 = np.minimum(np.floor(sz).astype(int), cells - 2) if cells > 1 \
        else np.zeros_like(sz, dtype=int)
    wz = sz - j0 if cells > 1 else np.zeros_like(sz)
    j1 = np.minimum(j0 + 1, cells - 1)
    out = ((1 - wx) * (1 - wz) * vals[i0m, j0]
           + wx * (1 - wz) * vals[i1m, j0]
           + (1 - wx) * wz * vals[i0m, j1]
           + wx * wz * vals[i1m, j1])
    return ScalarField(grid, out)


def theta_bar_series(samples, cell_trajectories, grid: Grid):
    """[(tau, ScalarField)] of interpolated cell-average temperatures."""
    if len(samples) != len(cell_trajectories):
        raise ValueError("one cell trajectory per sample is required")
    n_cp = len(cell_trajectories[0].checkpoints)
    series = []
    for k in range(n_cp):
        tau = cell_trajectories[0].checkpoints[k].tau
        vals = [traj.checkpoints[k].mean_theta for traj in cell_trajectories]
        series.append((tau, theta_bar_field(samples, vals, grid)))
    return series


def projection_consistency_rows(theta_list):
    """Compare the two projection routes on the torus, one row per case.

    Gaps and divergences are scaled by the input buoyancy magnitude: a
    temperature whose projection is nearly zero would make a ratio of
    roundoff against roundoff meaningless.
    """
    rows = []
    for name, th in theta_list:
        hp = project_buoyancy(th)
        hc = curl_project(th)
        diff = VectorField.from_arrays(th.grid, hp.u1 - hc.u1, hp.u2 - hc.u2)
        scale = max(norms(th).l2, 1e-300)
        rows.append((name, norms(diff).l2 / scale,
                     norms(divergence(hp)).l2 / scale))
    return rows
