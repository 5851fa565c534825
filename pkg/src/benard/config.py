"""Flat key=value experiment configuration.

Grammar: one `key=value` per line, `#` starts a comment, blank lines
ignored. Unknown keys are errors. Parsing validates everything and
reports ALL problems at once rather than stopping at the first.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields as dc_fields

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "serialize_config",
           "load_config", "DEFAULTS_HELP"]


class ConfigError(ValueError):
    """Carries every validation error found in one pass."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _parse_floats(s: str):
    return tuple(float(tok) for tok in s.split(","))


def _ser_floats(v) -> str:
    return ",".join(repr(float(x)) for x in v)


# key -> (kind, default, help). kind in {int, float, str, floats, pair}
_REGISTRY = {
    "nx": ("int", 64, "horizontal points of the main grid"),
    "nz": ("int", 64, "vertical points of the main grid"),
    "Lx": ("float", 2.0, "horizontal period"),
    "Lz": ("float", 1.0, "vertical extent (the wall gap for box runs)"),
    "nu": ("float", 1.0, "kinematic viscosity"),
    "kappa": ("float", 1.0, "thermal diffusivity"),
    "g_alpha": ("float", 0.0, "buoyancy coefficient (gravity times expansion)"),
    "T1": ("float", 1.0, "bottom wall temperature"),
    "T2": ("float", 0.0, "top wall temperature"),
    "lambda1": ("float", 0.0, "Poincare constant; 0 selects pi^2/Lz^2"),
    "gamma": ("float", 1.5, "diffusion scaling exponent in the eps-scaled system"),
    "eps": ("floats", (1.0,), "scale parameter(s); lists must strictly decrease"),
    "dt": ("float", 0.0, "time step; 0 selects the stability policy"),
    "t_end": ("float", 1.0, "slow-time horizon"),
    "tau_end": ("float", 0.0, "fast-time horizon for sweeps/cells; 0 falls back to t_end"),
    "dtau": ("float", 0.01, "fast-time step for cell runs"),
    "snap_every": ("int", 0, "snapshot cadence in steps; 0 selects the checkpoint cadence"),
    "diag_every": ("int", 1, "diagnostics cadence in steps"),
    "profile_u": ("str", "zero", "initial velocity profile spec"),
    "profile_theta": ("str", "zero", "initial temperature-fluctuation profile spec"),
    "seed": ("int", 0, "RNG seed for noise profiles"),
    "cells": ("int", 4, "cells x cells lattice of global sample points"),
    "cell_nx": ("int", 32, "cell torus points, first direction"),
    "cell_nz": ("int", 32, "cell torus points, second direction"),
    "theta_source": ("str", "off", "cell runs: 'on' couples the vertical-velocity source"),
    "forcing_gradp0": ("pair", (0.0, 0.0), "frozen global pressure gradient for cell runs"),
    "phis": ("str", "", "test-function suite file; empty selects the builtin suite"),
    "out": ("str", ".", "output directory (command line --out overrides)"),
}

DEFAULTS_HELP = tuple(
    (k, kind, default, help_) for k, (kind, default, help_) in _REGISTRY.items()
)


@dataclass(frozen=True)
class ExperimentConfig:
    nx: int
    nz: int
    Lx: float
    Lz: float
    nu: float
    kappa: float
    g_alpha: float
    T1: float
    T2: float
    lambda1: float
    gamma: float
    eps: tuple
    dt: float
    t_end: float
    tau_end: float
    dtau: float
    snap_every: int
    diag_every: int
    profile_u: str
    profile_theta: str
    seed: int
    cells: int
    cell_nx: int
    cell_nz: int
    theta_source: str
    forcing_gradp0: tuple
    phis: str
    out: str

    def lambda1_effective(self) -> float:
        import numpy as np

        return self.lambda1 if self.lambda1 > 0 else float(np.pi**2 / self.Lz**2)


def _parse_value(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "floats":
        return _parse_floats(raw)
    if kind == "pair":
        v = _parse_floats(raw)
        if len(v) != 2:
            raise ValueError("expected two comma-separated numbers")
        return v
    return raw


def _validate(values: dict, errors: list):
    def check(cond, msg):
        if not cond:
            errors.append(msg)

    for key in ("nx", "nz", "cell_nx", "cell_nz"):
        n = values[key]
        check(n >= 8 and n % 2 == 0, f"{key}={n}: must be even and >= 8")
    for key in ("Lx", "Lz", "nu", "kappa", "gamma", "dtau"):
        check(values[key] > 0, f"{key}={values[key]}: must be positive")
    for key in ("dt", "t_end", "tau_end", "g_alpha", "lambda1"):
        check(values[key] >= 0, f"{key}={values[key]}: must be nonnegative")
    check(values["T1"] > values["T2"],
          f"T1={values['T1']} T2={values['T2']}: need T1 > T2")
    eps = values["eps"]
    for e in eps:
        check(0 < e <= 1, f"eps member {e}: must lie in (0, 1]")
    if len(eps) > 1:
        check(all(a > b for a, b in zip(eps, eps[1:])),
              f"eps={','.join(repr(e) for e in eps)}: must strictly decrease")
    check(values["snap_every"] >= 0, "snap_every: must be nonnegative")
    check(values["diag_every"] >= 1, "diag_every: must be >= 1")
    check(values["cells"] >= 1, "cells: must be >= 1")
    check(values["seed"] >= 0, "seed: must be nonnegative")
    check(values["theta_source"] in ("on", "off"),
          f"theta_source={values['theta_source']}: must be 'on' or 'off'")
    if values["phis"]:
        check(os.path.exists(values["phis"]),
              f"phis={values['phis']}: file does not exist")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    values = {k: default for k, (_, default, _) in _REGISTRY.items()}
    errors = []
    seen = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key=value, got {line!r}")
            continue
        key, raw = (tok.strip() for tok in line.split("=", 1))
        if key not in _REGISTRY:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        kind = _REGISTRY[key][0]
        try:
            values[key] = _parse_value(kind, raw)
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}={raw!r}: {exc}")
    # constraint checks run on whatever parsed (defaults fill the rest) so
    # one pass reports parse errors and constraint violations together
    _validate(values, errors)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**values)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Deterministic text form; parse_config(serialize_config(c)) == c."""
    lines = []
    for f in dc_fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        kind = _REGISTRY[f.name][0]
        if kind in ("floats", "pair"):
            s = _ser_floats(v)
        elif kind == "float":
            s = repr(float(v))
        else:
            s = str(v)
        lines.append(f"{f.name}={s}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())
