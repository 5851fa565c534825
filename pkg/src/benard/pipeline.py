"""Experiment orchestration.

Stage runners wrap the solver, cell, homogenization, mean-field, and
bounds modules so each can run from a config plus output directory;
loaders reconstruct trajectories from the snapshot directories those
stages write, so later stages can consume earlier output across
processes. The full pipeline chains every stage and writes a manifest
of content hashes over the artifact tree.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import re
from dataclasses import replace

import numpy as np

from .bounds import (
    absorbing_constants,
    barrier_check,
    energy_barrier,
    gradient_barrier,
    leray_decay_envelope,
    maximum_principle_monitor,
    report_rows as bounds_rows,
    settling_time,
    REPORT_COLUMNS as BOUNDS_COLUMNS,
)
from .cell import CellCheckpoint, CellParams, CellTrajectory, sample_lattice, solve_cell_family
from .config import ExperimentConfig
from .fields import ScalarField, mean
from .grid import Grid
from .homogenize import (
    REPORT_COLUMNS as TWO_SCALE_COLUMNS,
    load_phi_file,
    report_rows as two_scale_rows,
    standard_phi_suite,
    two_scale_error_sweep,
)
from .meanfield import (
    CONSISTENCY_COLUMNS,
    RESIDUAL_COLUMNS,
    euler_residual,
    mean_field_states,
    projection_consistency_rows,
    theta_bar_series,
)
from .snapshots import read_snapshot, read_table, write_snapshot, write_table
from .solver import Checkpoint, PhysicalParams, Trajectory, epsilon_sweep, run_from_config

__all__ = [
    "PipelineError", "physical_params", "checkpoint_cadence",
    "with_snapshot_cadence", "stage_run", "stage_sweep", "stage_cell",
    "load_sweep_dir", "load_cell_dir", "phi_suite_for", "stage_homogenize",
    "analytic_theta_series", "stage_meanfield", "stage_bounds",
    "write_manifest", "pipeline_full",
]

LOG = logging.getLogger(__name__)

_SNAP_RE = re.compile(r"^(u|theta|cell_u|cell_theta)_(\d{8})\.bhf$")


class PipelineError(RuntimeError):
    """A stage failed; carries the stage name and the last-good manifest."""

    def __init__(self, stage, cause, manifest=None):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.manifest = manifest


def physical_params(cfg: ExperimentConfig) -> PhysicalParams:
    return PhysicalParams(nu=cfg.nu, kappa=cfg.kappa, g_alpha=cfg.g_alpha,
                          T1=cfg.T1, T2=cfg.T2, h=cfg.Lz, L=cfg.Lx,
                          lambda1=cfg.lambda1)


def checkpoint_cadence(cfg: ExperimentConfig) -> int:
    """Steps between recorded checkpoints for fast-time runs."""
    tau_end = cfg.tau_end if cfg.tau_end > 0 else cfg.t_end
    n_steps = max(1, int(round(tau_end / cfg.dtau)))
    return max(1, n_steps // 8)


def with_snapshot_cadence(cfg: ExperimentConfig) -> ExperimentConfig:
    """Pin the snapshot cadence to the checkpoint cadence when unset, so
    directory output carries every checkpoint for downstream stages."""
    if cfg.snap_every > 0:
        return cfg
    return replace(cfg, snap_every=checkpoint_cadence(cfg))


# --- stages ----------------------------------------------------------------


def stage_run(cfg: ExperimentConfig, out_dir: str):
    traj = run_from_config(cfg, out_dir=out_dir)
    if cfg.snap_every == 0:
        last = traj.checkpoints[-1]
        extra = {"tau": last.tau}
        write_snapshot(os.path.join(out_dir, "u_final.bhf"), last.u,
                       t=last.t, name="u", extra=extra)
        write_snapshot(os.path.join(out_dir, "theta_final.bhf"), last.theta,
                       t=last.t, name="theta", extra=extra)
    return traj


def stage_sweep(cfg: ExperimentConfig, out_dir: str, eps_list=None):
    return epsilon_sweep(with_snapshot_cadence(cfg), eps_list=eps_list,
                         out_dir=out_dir)


def stage_cell(cfg: ExperimentConfig, out_dir: str):
    return solve_cell_family(with_snapshot_cadence(cfg), out_dir=out_dir)


# --- directory loaders ------------------------------------------------------


def _snapshot_series(member_dir: str, u_prefix: str, th_prefix: str):
    """Paired (tag -> (u_path, theta_path)) files of one member directory."""
    found = {}
    for fn in sorted(os.listdir(member_dir)):
        m = _SNAP_RE.match(fn)
        if not m:
            continue
        kind, tag = m.group(1), m.group(2)
        found.setdefault(tag, {})[kind] = os.path.join(member_dir, fn)
    series = []
    for tag in sorted(found):
        pair = found[tag]
        if u_prefix not in pair or th_prefix not in pair:
            raise ValueError(f"{member_dir}: checkpoint {tag} is missing a "
                             f"{u_prefix} or {th_prefix} snapshot")
        series.append((pair[u_prefix], pair[th_prefix]))
    if not series:
        raise ValueError(f"{member_dir}: no snapshot checkpoints found")
    return series


def load_sweep_dir(path: str, cfg: ExperimentConfig):
    """Rebuild the sweep trajectories (eps descending) from a sweep
    output directory."""
    members = []
    for name in os.listdir(path):
        if name.startswith("eps_") and os.path.isdir(os.path.join(path, name)):
            members.append((float(name[4:]), os.path.join(path, name)))
    if not members:
        raise ValueError(f"{path}: no eps_* member directories")
    members.sort(key=lambda kv: -kv[0])
    params = physical_params(cfg)
    trajectories = []
    for eps, member in members:
        checkpoints = []
        for u_path, th_path in _snapshot_series(member, "u", "theta"):
            u, meta = read_snapshot(u_path)
            th, _ = read_snapshot(th_path)
            tau = float(meta.extra.get("tau", meta.t / math.sqrt(eps)))
            checkpoints.append(Checkpoint(meta.t, tau, u, th))
        diag_path = os.path.join(member, "diagnostics.csv")
        diagnostics = read_table(diag_path)[1] if os.path.exists(diag_path) else []
        trajectories.append(Trajectory(
            grid=checkpoints[0].u.grid, params=params, eps=eps,
            gamma=cfg.gamma, dt=math.sqrt(eps) * cfg.dtau,
            checkpoints=checkpoints, diagnostics=diagnostics))
    return trajectories


def load_cell_dir(path: str, cfg: ExperimentConfig):
    """Rebuild (samples, cell trajectories) from a cell output directory.

    Sample coordinates are recomputed from the config lattice; the
    directory just has to hold one member per sample, in lattice order.
    """
    members = sorted(
        os.path.join(path, name) for name in os.listdir(path)
        if name.startswith("cell_") and os.path.isdir(os.path.join(path, name)))
    samples = sample_lattice(cfg.Lx, cfg.Lz, cfg.cells)
    if len(members) != len(samples):
        raise ValueError(f"{path}: {len(members)} cell directories for "
                         f"{len(samples)} lattice samples")
    params = CellParams(nu=cfg.nu, kappa=cfg.kappa, g_alpha=cfg.g_alpha,
                        source=0.0 if cfg.theta_source == "off"
                        else (cfg.T1 - cfg.T2) / cfg.Lz,
                        forcing=tuple(cfg.forcing_gradp0))
    trajectories = []
    for member in members:
        checkpoints = []
        for u_path, th_path in _snapshot_series(member, "cell_u", "cell_theta"):
            u, meta = read_snapshot(u_path)
            th, _ = read_snapshot(th_path)
            tau = float(meta.extra["tau"])
            mu = (mean(ScalarField(u.grid, u.u1)),
                  mean(ScalarField(u.grid, u.u2)))
            checkpoints.append(CellCheckpoint(tau=tau, u=u, theta=th,
                                              mean_u=mu, mean_theta=mean(th)))
        means_path = os.path.join(member, "cell_means.csv")
        means = read_table(means_path)[1] if os.path.exists(means_path) else []
        trajectories.append(CellTrajectory(
            grid=checkpoints[0].u.grid, params=params, dtau=cfg.dtau,
            checkpoints=checkpoints, means=means))
    return samples, trajectories


# --- reporting stages -------------------------------------------------------


def phi_suite_for(cfg: ExperimentConfig):
    if cfg.phis:
        return load_phi_file(cfg.phis)
    return standard_phi_suite(cfg.Lx, cfg.Lz)


def stage_homogenize(cfg: ExperimentConfig, trajectories, family,
                     out_csv: str, component: str = "u2"):
    suite = phi_suite_for(cfg)
    report = two_scale_error_sweep(trajectories, family, suite,
                                   component=component)
    os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
    write_table(out_csv, TWO_SCALE_COLUMNS, two_scale_rows(report))
    return report


def analytic_theta_series(spec: str, cfg: ExperimentConfig):
    """Prescribed cell-average temperature history on the slow grid.

    Grammar: 'uniform amp=A' or 'mode k1=I k2=J amp=A'; the time factor
    is sin(tau) on the configured checkpoint cadence.
    """
    tokens = spec.split()
    if not tokens or tokens[0] not in ("uniform", "mode"):
        raise ValueError(f"analytic theta spec {spec!r}: expected "
                         "'uniform ...' or 'mode ...'")
    kv = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ValueError(f"analytic theta spec {spec!r}: bad token {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = float(v)
    amp = kv.pop("amp", 1.0)
    grid = Grid("box", cfg.nx, cfg.nz, cfg.Lx, cfg.Lz)
    if tokens[0] == "uniform":
        if kv:
            raise ValueError(f"analytic theta spec {spec!r}: unknown keys {sorted(kv)}")
        shape = np.ones(grid.shape)
    else:
        k1 = int(kv.pop("k1", 1))
        k2 = int(kv.pop("k2", 1))
        if kv:
            raise ValueError(f"analytic theta spec {spec!r}: unknown keys {sorted(kv)}")
        X, Z = grid.meshes()
        shape = (np.cos(2.0 * np.pi * k1 * X / cfg.Lx)
                 * np.sin(np.pi * k2 * Z / cfg.Lz) ** 2)
    tau_end = cfg.tau_end if cfg.tau_end > 0 else cfg.t_end
    n_steps = max(1, int(round(tau_end / cfg.dtau)))
    cpe = checkpoint_cadence(cfg)
    taus = [0.0] + [n * cfg.dtau for n in range(1, n_steps + 1)
                    if n % cpe == 0 or n == n_steps]
    return [(t, ScalarField(grid, amp * math.sin(t) * shape)) for t in taus]


def stage_meanfield(cfg: ExperimentConfig, theta_series, out_dir: str):
    """Mean-field outputs: velocity snapshots and the two report tables."""
    os.makedirs(out_dir, exist_ok=True)
    states = mean_field_states(theta_series)
    for i, st in enumerate(states):
        write_snapshot(os.path.join(out_dir, f"u0bar_{i:08d}.bhf"),
                       st.u0_bar, t=st.tau, name="u0bar",
                       extra={"tau": st.tau})
    u0s = [(st.tau, st.u0_bar) for st in states]
    zero_p = [(st.tau, ScalarField(st.theta0_bar.grid,
                                   np.zeros(st.theta0_bar.grid.shape)))
              for st in states]
    ths = [(st.tau, st.theta0_bar) for st in states]
    if len(states) >= 3:
        rows = euler_residual(u0s, zero_p, ths)
    else:
        rows = []
    write_table(os.path.join(out_dir, "euler_residual.csv"),
                RESIDUAL_COLUMNS, rows)

    # operator self-check on a fully periodic grid: the two projection
    # routes and the divergence of their output, on seeded band-limited
    # temperatures plus the x-independent analytic case
    tor = Grid("torus", cfg.cell_nx, cfg.cell_nz, 1.0, 1.0)
    _, Z = tor.meshes()
    cases = [("zonly", ScalarField(tor, np.sin(2.0 * np.pi * Z / tor.Lz) + 0.5))]
    rng = np.random.default_rng(cfg.seed)
    kmax = 4
    X, Z = tor.meshes()
    for i in range(5):
        vals = np.zeros(tor.shape)
        for _ in range(6):
            kx = int(rng.integers(-kmax, kmax + 1))
            kz = int(rng.integers(-kmax, kmax + 1))
            phase = rng.uniform(0.0, 2.0 * np.pi)
            vals += rng.normal() * np.cos(
                2.0 * np.pi * (kx * X / tor.Lx + kz * Z / tor.Lz) + phase)
        cases.append((f"seeded{i}", ScalarField(tor, vals)))
    crows = projection_consistency_rows(cases)
    write_table(os.path.join(out_dir, "projection_consistency.csv"),
                CONSISTENCY_COLUMNS, crows)
    return states


def _temperature_extrema_rows(trajectory_dir: str, cfg: ExperimentConfig):
    """Total-temperature extrema per snapshot of a run directory."""
    rows = []
    for fn in sorted(os.listdir(trajectory_dir)):
        m = _SNAP_RE.match(fn)
        if not m or m.group(1) != "theta":
            continue
        th, meta = read_snapshot(os.path.join(trajectory_dir, fn))
        prof = cfg.T1 + (th.grid.z / cfg.Lz) * (cfg.T2 - cfg.T1)
        T = th.values + prof[None, :]
        rows.append((meta.t, float(T.min()), float(T.max())))
    return rows


def stage_bounds(cfg: ExperimentConfig, out_csv: str,
                 trajectory_dir: str | None = None, diagnostics=None):
    """Write the estimate report: closed-form constants as value rows,
    then checked estimates when trajectory data is available."""
    params = physical_params(cfg)
    beta = params.lambda1_effective * cfg.nu / 2.0
    if params.g_alpha > 0:
        consts = absorbing_constants(params)
        rows = [(k, "", float(v), "") for k, v in consts.items()
                if not isinstance(v, bool)]
        rows.append(("aspect_gate", str(consts["aspect_gate"]), "", ""))
    else:
        # no buoyancy: the closed forms degenerate, keep what survives
        consts = None
        rows = [("lambda1", "", params.lambda1_effective, ""),
                ("beta", "", beta, "")]

    if diagnostics is None and trajectory_dir:
        diag_path = os.path.join(trajectory_dir, "diagnostics.csv")
        if os.path.exists(diag_path):
            diagnostics = read_table(diag_path)[1]
    reports = []
    if diagnostics:
        f_norm = consts["K"] * math.sqrt(cfg.Lz) if consts else 0.0
        u0_norm = diagnostics[0][1]
        span = diagnostics[-1][0] - diagnostics[0][0]
        if span >= 1.0:
            # recover the gradient seminorm from the recorded l2 and h1
            series = [(r[0], r[1],
                       math.sqrt(max(r[2] ** 2 - r[1] ** 2, 0.0)))
                      for r in diagnostics]
        else:
            series = [(r[0], r[1]) for r in diagnostics]
        reports.append(leray_decay_envelope(
            series, u0_norm, f_norm, params.lambda1_effective, cfg.nu))
        if consts:
            rows.append(("settling_time", "",
                         settling_time(params, u0_norm), ""))
            if u0_norm > 0 or f_norm > 0:
                espec = energy_barrier(u0_norm, f_norm, consts["beta"])
                reports.append(barrier_check(espec, [(r[0], r[2] ** 2)
                                                     for r in diagnostics]))
            gspec = gradient_barrier(params)
            reports.append(barrier_check(gspec, [(r[0], r[2])
                                                 for r in diagnostics]))
    if trajectory_dir:
        trows = _temperature_extrema_rows(trajectory_dir, cfg)
        if trows:
            reports.append(maximum_principle_monitor(trows, cfg.T1, cfg.T2))
    rows.extend(bounds_rows(reports))
    os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
    write_table(out_csv, BOUNDS_COLUMNS, rows)
    return rows


# --- manifest and the full pipeline ------------------------------------------


def write_manifest(root: str) -> str:
    """Hash every artifact under root into MANIFEST.txt (sorted, sha256)."""
    entries = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for fn in sorted(filenames):
            if fn == "MANIFEST.txt":
                continue
            full = os.path.join(dirpath, fn)
            rel = os.path.relpath(full, root).replace(os.sep, "/")
            digest = hashlib.sha256()
            with open(full, "rb") as f:
                for chunk in iter(lambda: f.read(1 << 20), b""):
                    digest.update(chunk)
            entries.append((rel, digest.hexdigest()))
    entries.sort()
    path = os.path.join(root, "MANIFEST.txt")
    with open(path, "w", encoding="ascii") as f:
        for rel, hx in entries:
            f.write(f"{hx}  {rel}\n")
    return path


def pipeline_full(cfg: ExperimentConfig, out_root: str) -> dict:
    """sweep -> cells -> two-scale report -> mean field -> bounds.

    Every artifact lands under out_root; MANIFEST.txt is written last.
    A stage failure raises PipelineError naming the stage, after
    manifesting whatever artifacts exist.
    """
    os.makedirs(out_root, exist_ok=True)
    artifacts = {"root": out_root}

    def guarded(stage, fn):
        try:
            return fn()
        except Exception as err:
            manifest = write_manifest(out_root)
            raise PipelineError(stage, err, manifest=manifest) from err

    sweep_dir = os.path.join(out_root, "sweep")
    trajectories, monitors = guarded(
        "sweep", lambda: stage_sweep(cfg, sweep_dir))
    artifacts["sweep"] = sweep_dir
    LOG.info("sweep stage done: %d members", len(trajectories))

    cell_dir = os.path.join(out_root, "cells")
    family = guarded("cell", lambda: stage_cell(cfg, cell_dir))
    artifacts["cells"] = cell_dir
    LOG.info("cell stage done: %d members", len(family[1]))

    report_csv = os.path.join(out_root, "two_scale_report.csv")
    guarded("homogenize",
            lambda: stage_homogenize(cfg, trajectories, family, report_csv))
    artifacts["two_scale_report"] = report_csv
    LOG.info("two-scale report written")

    mf_dir = os.path.join(out_root, "meanfield")
    grid = Grid("box", cfg.nx, cfg.nz, cfg.Lx, cfg.Lz)
    theta_series = guarded(
        "meanfield", lambda: theta_bar_series(family[0], family[1], grid))
    guarded("meanfield", lambda: stage_meanfield(cfg, theta_series, mf_dir))
    artifacts["meanfield"] = mf_dir
    LOG.info("mean-field stage done")

    bounds_csv = os.path.join(out_root, "bounds_report.csv")
    first = trajectories[0]
    guarded("bounds", lambda: stage_bounds(
        cfg, bounds_csv,
        trajectory_dir=os.path.join(sweep_dir, f"eps_{first.eps:g}"),
        diagnostics=first.diagnostics))
    artifacts["bounds_report"] = bounds_csv
    LOG.info("bounds stage done")

    artifacts["manifest"] = write_manifest(out_root)
    return artifacts
