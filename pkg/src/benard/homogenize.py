"""Oscillating test-function pairings and sweep convergence reports.

The central quantity is the pairing

    <u_eps, phi>_eps = integral over tau and x of u_eps(x,tau) phi(x, x/eps, tau)

for test functions phi(x, y, tau) that are periodic with unit period in
the fast variable y and localized in the slow variable x. As eps shrinks
the pairing approaches the limit pairing

    integral over tau, x, y of u0(x, y, tau) phi(x, y, tau)

where u0 is the separable-limit family computed on the unit cell, one
member per slow sample point. Comparing the two across an eps sweep
measures two-scale convergence; a y-independent phi collapses both sides
to plain weak convergence against the cell average.

Test functions come from a small DSL of separable factors:

    chi:<gaussian|bump> cx,cz,w * y:<cos|sin> k1 k2 [* tau:poly n]

chi is the slow envelope (gaussian or compactly supported bump, centered
at (cx, cz) with width w), the y factor is cos or sin of
2 pi (k1 y1 + k2 y2), and the optional tau factor is tau^n. One function
per line; blank lines and # comments are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField

__all__ = [
    "TestFunction", "parse_phi", "load_phi_file", "standard_phi_suite",
    "pairing", "weak_pairing", "limit_pairing", "cell_average_series",
    "cell_average_weak_limit", "component_series", "two_scale_error_sweep",
    "TwoScaleReport", "report_rows", "REPORT_COLUMNS",
]

REPORT_COLUMNS = ("phi", "component", "eps", "pairing", "limit", "error")


@dataclass(frozen=True)
class TestFunction:
    """Separable phi(x, y, tau) = chi(x1,x2) * yfac(y1,y2) * taufac(tau)."""

    __test__ = False  # not a pytest class despite the name

    chi: object
    yfac: object
    taufac: object
    description: str
    y_independent: bool = False

    def __call__(self, x1, x2, y1, y2, tau):
        return self.chi(x1, x2) * self.yfac(y1, y2) * self.taufac(tau)


def _chi_gaussian(cx, cz, w):
    def chi(x1, x2):
        r2 = (np.asarray(x1) - cx) ** 2 + (np.asarray(x2) - cz) ** 2
        return np.exp(-r2 / (2.0 * w * w))
    return chi


def _chi_bump(cx, cz, w):
    def chi(x1, x2):
        r2 = ((np.asarray(x1, dtype=float) - cx) ** 2
              + (np.asarray(x2, dtype=float) - cz) ** 2) / (w * w)
        r2 = np.atleast_1d(r2)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out if out.ndim else float(out)
    return chi


def _y_trig(kind, k1, k2):
    if k1 == 0 and k2 == 0 and kind == "cos":
        return lambda y1, y2: np.ones_like(np.asarray(y1, dtype=float))
    if kind == "cos":
        return lambda y1, y2: np.cos(2.0 * np.pi * (k1 * np.asarray(y1)
                                                    + k2 * np.asarray(y2)))
    return lambda y1, y2: np.sin(2.0 * np.pi * (k1 * np.asarray(y1)
                                                + k2 * np.asarray(y2)))


def parse_phi(line: str) -> TestFunction:
    """Parse one DSL line into a TestFunction."""
    parts = [p.strip() for p in line.split("*")]
    chi = None
    yfac = None
    taufac = None
    y_indep = True
    for part in parts:
        if ":" not in part:
            raise ValueError(f"phi factor {part!r}: expected prefix:body")
        prefix, body = part.split(":", 1)
        prefix = prefix.strip().lower()
        tokens = body.split()
        if prefix == "chi":
            if len(tokens) != 2:
                raise ValueError(f"chi factor {body!r}: expected shape and cx,cz,w")
            shape = tokens[0].lower()
            try:
                cx, cz, w = (float(v) for v in tokens[1].split(","))
            except ValueError as exc:
                raise ValueError(f"chi parameters {tokens[1]!r}: {exc}") from None
            if w <= 0:
                raise ValueError("chi width must be positive")
            if shape == "gaussian":
                chi = _chi_gaussian(cx, cz, w)
            elif shape == "bump":
                chi = _chi_bump(cx, cz, w)
            else:
                raise ValueError(f"unknown chi shape {shape!r}")
        elif prefix == "y":
            kind = tokens[0].lower()
            rest = tokens[1:]
            if kind.startswith("cos"):
                trailing, kind = kind[3:], "cos"
            elif kind.startswith("sin"):
                trailing, kind = kind[3:], "sin"
            else:
                raise ValueError(f"unknown y factor {tokens[0]!r}")
            if trailing:
                rest = [trailing] + rest
            if len(rest) != 2:
                raise ValueError(f"y factor {body!r}: expected two integers")
            k1, k2 = int(rest[0]), int(rest[1])
            yfac = _y_trig(kind, k1, k2)
            y_indep = (k1 == 0 and k2 == 0 and kind == "cos")
            if k1 == 0 and k2 == 0 and kind == "sin":
                raise ValueError("y:sin 0 0 is identically zero")
        elif prefix == "tau":
            if len(tokens) != 2 or tokens[0].lower() != "poly":
                raise ValueError(f"tau factor {body!r}: expected poly n")
            n = int(tokens[1])
            if n < 0:
                raise ValueError("tau power must be nonnegative")
            taufac = (lambda n: lambda tau: float(tau) ** n)(n)
        else:
            raise ValueError(f"unknown phi factor prefix {prefix!r}")
    if chi is None:
        raise ValueError("phi needs a chi factor")
    if yfac is None:
        yfac = _y_trig("cos", 0, 0)
        y_indep = True
    if taufac is None:
        taufac = lambda tau: 1.0
    return TestFunction(chi=chi, yfac=yfac, taufac=taufac,
                        description=" * ".join(parts), y_independent=y_indep)


def load_phi_file(path: str):
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(parse_phi(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise ValueError(f"{path}: no test functions found")
    return out


def _chi_harmonic(Lx, Lz, cx, px, pz):
    """Trigonometric slow envelope: a raised-cosine x1-window centered at
    cx (periodic over the domain) times a wall-vanishing sin^2 window in
    x2, each raised to a small integer power.

    Being a trig polynomial of bandwidth (px, pz), it is integrated
    exactly by uniform midpoint lattices once the lattice exceeds the
    bandwidth; limit pairings over the coarse slow-sample lattice then
    carry no envelope quadrature bias.
    """
    def chi(x1, x2):
        hx = 0.5 * (1.0 + np.cos(2.0 * np.pi * (np.asarray(x1) - cx) / Lx))
        hz = np.sin(np.pi * np.asarray(x2) / Lz) ** 2
        return hx ** px * hz ** pz
    return chi


def standard_phi_suite(Lx: float, Lz: float):
    """Six separable test functions covering oscillating, mixed,
    y-independent, and time-weighted probes.

    The slow envelopes are low-bandwidth trigonometric windows so that
    the midpoint x-lattice used by limit_pairing integrates them exactly;
    file-supplied phis (gaussian/bump envelopes) remain available through
    the DSL but converge more slowly in the lattice resolution.
    """
    tau1 = lambda tau: float(tau)
    tau2 = lambda tau: float(tau) ** 2
    specs = [
        (_chi_harmonic(Lx, Lz, 0.5 * Lx, 1, 1), ("sin", 1, 0), None,
         "chi:harmonic 0.5,1,1 * y:sin 1 0"),
        (_chi_harmonic(Lx, Lz, 0.5 * Lx, 1, 1), ("cos", 1, 0), None,
         "chi:harmonic 0.5,1,1 * y:cos 1 0"),
        (_chi_harmonic(Lx, Lz, 0.3 * Lx, 1, 2), ("sin", 1, 0), tau1,
         "chi:harmonic 0.3,1,2 * y:sin 1 0 * tau:poly 1"),
        (_chi_harmonic(Lx, Lz, 0.5 * Lx, 2, 1), ("sin", 1, 1), None,
         "chi:harmonic 0.5,2,1 * y:sin 1 1"),
        (_chi_harmonic(Lx, Lz, 0.7 * Lx, 1, 1), ("cos", 0, 0), None,
         "chi:harmonic 0.7,1,1 * y:cos 0 0"),
        (_chi_harmonic(Lx, Lz, 0.5 * Lx, 1, 2), ("sin", 1, 0), tau2,
         "chi:harmonic 0.5,1,2 * y:sin 1 0 * tau:poly 2"),
    ]
    out = []
    for chi, (kind, k1, k2), taufac, desc in specs:
        out.append(TestFunction(
            chi=chi, yfac=_y_trig(kind, k1, k2),
            taufac=taufac if taufac is not None else (lambda tau: 1.0),
            description=desc,
            y_independent=(kind == "cos" and k1 == 0 and k2 == 0)))
    return out


# --- quadratures -------------------------------------------------------------


def _time_trapezoid(pairs) -> float:
    if len(pairs) == 1:
        return pairs[0][1]
    total = 0.0
    for (t0, v0), (t1, v1) in zip(pairs, pairs[1:]):
        total += 0.5 * (t1 - t0) * (v0 + v1)
    return total


def pairing(series, phi: TestFunction, eps: float) -> float:
    """Space-time quadrature of u(x,tau) phi(x, x/eps, tau).

    series is a sequence of (tau, ScalarField); a single entry skips the
    time quadrature and returns the spatial pairing alone.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    vals = []
    for tau, f in series:
        g = f.grid
        X, Z = g.meshes()
        y1 = np.mod(X / eps, 1.0)
        y2 = np.mod(Z / eps, 1.0)
        integ = float(np.sum(g.quad_weights * f.values
                             * phi(X, Z, y1, y2, tau)))
        vals.append((tau, integ))
    return _time_trapezoid(vals)


def weak_pairing(series, phi: TestFunction) -> float:
    """Pairing without fast oscillation, phi evaluated at y = x."""
    return pairing(series, phi, 1.0)


def component_series(trajectory, component: str, scale: float = 1.0):
    """Extract [(tau, ScalarField)] for one component of a box trajectory.

    component is u1, u2, or theta; scale multiplies the values (pass
    eps**-0.5 to normalize a scaled-system velocity).
    """
    out = []
    for cp in trajectory.checkpoints:
        if component == "theta":
            vals = cp.theta.values
        elif component in ("u1", "u2"):
            vals = getattr(cp.u, component)
        else:
            raise ValueError(f"unknown component {component!r}")
        out.append((cp.tau, ScalarField(cp.u.grid, scale * vals)))
    return out


def limit_pairing(samples, cell_trajectories, phi: TestFunction,
                  Lx: float, Lz: float, component: str = "u2") -> float:
    """Quadrature of u0(x, y, tau) phi(x, y, tau) over tau, x, and y.

    The x integral uses the midpoint rule on the sample lattice; y uses
    the exact uniform torus rule; tau uses the trapezoid rule on the
    recorded checkpoints.
    """
    if len(samples) != len(cell_trajectories):
        raise ValueError("one cell trajectory per sample is required")
    wx = Lx * Lz / len(samples)
    total = 0.0
    for (x1, x2), traj in zip(samples, cell_trajectories):
        g = traj.grid
        Y1, Y2 = g.meshes()
        vals = []
        for cp in traj.checkpoints:
            if component == "theta":
                u0 = cp.theta.values
            else:
                u0 = getattr(cp.u, component)
            integ = float(np.sum(g.quad_weights * u0
                                 * phi(x1, x2, Y1, Y2, cp.tau)))
            vals.append((cp.tau, integ))
        total += wx * _time_trapezoid(vals)
    return total


def cell_average_series(traj, component: str = "u2"):
    """[(tau, mean over the cell)] for one cell trajectory."""
    col = {"u1": 1, "u2": 2, "theta": 3}[component]
    return [(row[0], row[col]) for row in traj.means]


def cell_average_weak_limit(samples, cell_trajectories, phi: TestFunction,
                            Lx: float, Lz: float,
                            component: str = "u2") -> float:
    """Weak limit through the cell-average route, for y-independent phi:
    quadrature of ubar0(x, tau) phi(x, tau) over tau and x."""
    wx = Lx * Lz / len(samples)
    total = 0.0
    for (x1, x2), traj in zip(samples, cell_trajectories):
        pairs = []
        for cp in traj.checkpoints:
            m = {"u1": cp.mean_u[0], "u2": cp.mean_u[1],
                 "theta": cp.mean_theta}[component]
            pairs.append((cp.tau, m * float(phi.chi(x1, x2))
                          * float(phi.taufac(cp.tau))))
        total += wx * _time_trapezoid(pairs)
    return total


# --- sweep reports -----------------------------------------------------------


@dataclass
class TwoScaleReport:
    eps_values: tuple
    component: str
    phi_descriptions: list
    pairings: list       # per phi: list of per-eps pairings
    limits: list         # per phi: limit pairing
    errors: list         # per phi: |pairing - limit| per eps
    estimated_order: list  # per phi: least-squares slope or None
    non_monotone: list   # per phi: True when errors fail to decrease

    def monotone(self) -> bool:
        return not any(self.non_monotone)


def _check_tau_alignment(trajectories, cell_trajectories):
    ref = trajectories[0].taus
    for traj in trajectories[1:]:
        if len(traj.taus) != len(ref) or \
                max(abs(a - b) for a, b in zip(traj.taus, ref)) > 1e-9:
            raise ValueError("sweep members disagree on tau checkpoints")
    cref = cell_trajectories[0].taus
    if len(cref) != len(ref) or \
            max(abs(a - b) for a, b in zip(cref, ref)) > 1e-9:
        raise ValueError("cell family tau checkpoints do not match the sweep")


def two_scale_error_sweep(trajectories, family, phi_list,
                          component: str = "u2") -> TwoScaleReport:
    """Pairings, limits, errors, and convergence order across an eps sweep.

    trajectories come from epsilon_sweep (eps strictly decreasing) and
    family from solve_cell_family on the same configuration; the velocity
    components are normalized by eps**-0.5 before pairing.
    """
    samples, cell_trajs = family
    eps_values = tuple(t.eps for t in trajectories)
    if len(eps_values) < 2:
        raise ValueError("a sweep needs at least two eps values")
    if not all(a > b for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps values must strictly decrease")
    _check_tau_alignment(trajectories, cell_trajs)
    Lx = trajectories[0].grid.Lx
    Lz = trajectories[0].grid.Lz

    pairings, limits, errors, orders, flags, descs = [], [], [], [], [], []
    for phi in phi_list:
        lim = limit_pairing(samples, cell_trajs, phi, Lx, Lz,
                            component=component)
        per_eps = []
        for traj in trajectories:
            scale = traj.eps ** -0.5 if component in ("u1", "u2") else 1.0
            series = component_series(traj, component, scale=scale)
            per_eps.append(pairing(series, phi, traj.eps))
        errs = [abs(p - lim) for p in per_eps]
        order = None
        if len(errs) >= 3 and all(e > 0 for e in errs):
            slope = np.polyfit(np.log(eps_values), np.log(errs), 1)[0]
            order = float(slope)
        pairings.append(per_eps)
        limits.append(lim)
        errors.append(errs)
        orders.append(order)
        flags.append(any(b >= a for a, b in zip(errs, errs[1:])))
        descs.append(phi.description)
    return TwoScaleReport(eps_values=eps_values, component=component,
                          phi_descriptions=descs, pairings=pairings,
                          limits=limits, errors=errors,
                          estimated_order=orders, non_monotone=flags)


def report_rows(report: TwoScaleReport):
    """Flatten a TwoScaleReport into rows matching REPORT_COLUMNS."""
    rows = []
    for i, desc in enumerate(report.phi_descriptions):
        for j, eps in enumerate(report.eps_values):
            rows.append([desc, report.component, eps,
                         report.pairings[i][j], report.limits[i],
                         report.errors[i][j]])
    return rows
