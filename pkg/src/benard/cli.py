"""Command-line interface.

Every subcommand reads the same key = value configuration format and
shares the global flags --config, --out, --seed, and --verbose. Stage
commands write into a directory; report commands write a single CSV.

Exit codes: 0 success, 2 configuration or input error, 3 numerical
failure, 4 operating-system I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import pipeline as pl
from .config import ConfigError, DEFAULTS_HELP, load_config, parse_config, serialize_config
from .meanfield import theta_bar_series
from .grid import Grid
from .snapshots import read_snapshot, write_csv
from .solver import NumericalError

__all__ = ["main", "build_parser"]

LOG = logging.getLogger(__name__)


def _global_flags(parser, suppress: bool):
    """The shared flags, accepted both before and after the subcommand.

    Subparsers get SUPPRESS defaults so an absent flag never clobbers a
    value parsed at the top level.
    """
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="FILE", default=d,
                        help="configuration file (defaults apply when absent)")
    parser.add_argument("--out", metavar="PATH", default=d,
                        help="output directory, or CSV path for report commands")
    parser.add_argument("--seed", type=int, metavar="N", default=d,
                        help="override the configured random seed")
    parser.add_argument("--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="debug-level logging on stderr")


def build_parser() -> argparse.ArgumentParser:
    epilog = "config keys:\n" + "\n".join(
        f"  {key:<16} {kind:<7} default={default!r}  {help}"
        for key, kind, default, help in DEFAULTS_HELP)
    parser = argparse.ArgumentParser(
        prog="benard",
        description="Convection experiments: solver stages, scale sweeps, "
                    "cell problems, mean-field reports, and norm estimates.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        return p

    add("run", "integrate one slow-time trajectory")

    p = add("sweep", "scaled runs across a decreasing eps list")
    p.add_argument("--eps", metavar="E1,E2,...",
                   help="override the configured eps list")

    p = add("cell", "unit-cell family over the sample lattice")
    p.add_argument("--gradp0", metavar="GX,GZ",
                   help="override the constant cell forcing")

    p = add("homogenize", "two-scale pairing report from stage directories")
    p.add_argument("--sweep", required=True, metavar="DIR",
                   help="sweep output directory")
    p.add_argument("--cell", required=True, metavar="DIR",
                   help="cell family output directory")
    p.add_argument("--phis", metavar="FILE",
                   help="test function file (default: built-in suite)")
    p.add_argument("--component", default="u2",
                   choices=("u1", "u2", "theta"),
                   help="field component to pair (default u2)")

    p = add("meanfield", "slow-domain velocity from a temperature history")
    p.add_argument("--theta", required=True, metavar="SRC",
                   help="cell family directory, or 'analytic:<spec>' with "
                        "spec 'uniform amp=A' or 'mode k1=I k2=J amp=A'")

    p = add("bounds", "norm-estimate report")
    p.add_argument("--params", metavar="FILE",
                   help="config file supplying the physical constants "
                        "(default: --config)")
    p.add_argument("--trajectory", metavar="DIR",
                   help="run directory to check estimates against")

    add("pipeline", "all stages in order, with a manifest")

    p = add("export-csv", "convert a field snapshot to CSV")
    p.add_argument("snapshot", metavar="FILE", help="snapshot file to convert")

    return parser


def _config_from_args(args) -> "pl.ExperimentConfig":
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args, cfg, default: str) -> str:
    path = args.out or cfg.out or default
    os.makedirs(path, exist_ok=True)
    return path


def _save_config(cfg, out_dir: str):
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="ascii") as f:
        f.write(serialize_config(cfg))


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args, cfg, "run_out")
    _save_config(cfg, out)
    traj = pl.stage_run(cfg, out)
    last = traj.diagnostics[-1] if traj.diagnostics else None
    if last is not None:
        print(f"run finished: t={last[0]:g} u_l2={last[1]:.6e} "
              f"theta_l2={last[3]:.6e}")
    print(f"wrote {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    eps_list = None
    if args.eps:
        eps_list = [float(tok) for tok in args.eps.split(",") if tok.strip()]
        if not eps_list:
            raise ValueError("--eps needs at least one value")
    out = _out_dir(args, cfg, "sweep_out")
    _save_config(cfg, out)
    trajectories, _ = pl.stage_sweep(cfg, out, eps_list=eps_list)
    print(f"sweep finished: {len(trajectories)} members, "
          f"{len(trajectories[0].checkpoints)} checkpoints each")
    print(f"wrote {out}")
    return 0


def _cmd_cell(args) -> int:
    cfg = _config_from_args(args)
    if args.gradp0:
        parts = [float(tok) for tok in args.gradp0.split(",")]
        if len(parts) != 2:
            raise ValueError("--gradp0 needs exactly two comma-separated values")
        cfg = replace(cfg, forcing_gradp0=tuple(parts))
    out = _out_dir(args, cfg, "cell_out")
    _save_config(cfg, out)
    samples, trajectories = pl.stage_cell(cfg, out)
    print(f"cell family finished: {len(trajectories)} members over "
          f"{len(samples)} samples")
    print(f"wrote {out}")
    return 0


def _cmd_homogenize(args) -> int:
    cfg = _config_from_args(args)
    if args.phis:
        cfg = replace(cfg, phis=args.phis)
    trajectories = pl.load_sweep_dir(args.sweep, cfg)
    family = pl.load_cell_dir(args.cell, cfg)
    out_csv = args.out or cfg.out or "two_scale_report.csv"
    report = pl.stage_homogenize(cfg, trajectories, family, out_csv,
                                 component=args.component)
    worst = max(err[-1] for err in report.errors) if report.errors else 0.0
    print(f"two-scale report: {len(report.phi_descriptions)} test functions, "
          f"finest-eps error max {worst:.6e}")
    print(f"wrote {out_csv}")
    return 0


def _cmd_meanfield(args) -> int:
    cfg = _config_from_args(args)
    if args.theta.startswith("analytic:"):
        series = pl.analytic_theta_series(args.theta[len("analytic:"):], cfg)
    else:
        samples, cells = pl.load_cell_dir(args.theta, cfg)
        grid = Grid("box", cfg.nx, cfg.nz, cfg.Lx, cfg.Lz)
        series = theta_bar_series(samples, cells, grid)
    out = _out_dir(args, cfg, "meanfield_out")
    states = pl.stage_meanfield(cfg, series, out)
    print(f"mean field finished: {len(states)} checkpoints, "
          f"final tau={states[-1].tau:g}")
    print(f"wrote {out}")
    return 0


def _cmd_bounds(args) -> int:
    cfg = _config_from_args(args)
    if args.params:
        cfg = replace(load_config(args.params), seed=cfg.seed)
    out_csv = args.out or "bounds_report.csv"
    rows = pl.stage_bounds(cfg, out_csv, trajectory_dir=args.trajectory)
    checked = sum(1 for r in rows if r[1] != "")
    print(f"bounds report: {len(rows)} rows, {checked} checked estimates")
    print(f"wrote {out_csv}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args, cfg, "pipeline_out")
    _save_config(cfg, out)
    artifacts = pl.pipeline_full(cfg, out)
    for key in ("sweep", "cells", "two_scale_report", "meanfield",
                "bounds_report"):
        print(f"{key}: {artifacts[key]}")
    print(f"manifest: {artifacts['manifest']}")
    return 0


def _cmd_export_csv(args) -> int:
    field, meta = read_snapshot(args.snapshot)
    out = args.out or os.path.splitext(args.snapshot)[0] + ".csv"
    write_csv(out, field)
    print(f"wrote {out} ({meta.name}, t={meta.t:g})")
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "cell": _cmd_cell,
    "homogenize": _cmd_homogenize,
    "meanfield": _cmd_meanfield,
    "bounds": _cmd_bounds,
    "pipeline": _cmd_pipeline,
    "export-csv": _cmd_export_csv,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except pl.PipelineError as err:
        print(str(err), file=sys.stderr)
        if err.manifest:
            print(f"last-good manifest: {err.manifest}", file=sys.stderr)
        cause = err.__cause__
        if isinstance(cause, NumericalError):
            return 3
        if isinstance(cause, OSError):
            return 4
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4
    except ValueError as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
