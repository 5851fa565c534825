"""Closed-form estimate calculators and trajectory monitors.

Decay envelopes, barrier functions, absorbing-set constants, the
settling-time formula, and the temperature range monitor. Everything
here is either an exact evaluation of a formula or a streaming check of
a recorded norm series against such a formula; nothing integrates the
equations itself.

Generic constants that the underlying inequalities never fix (the
Gagliardo-Nirenberg style C's) enter only through the caller-supplied
barrier coefficients, which are therefore labeled unnormalized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BarrierSpec", "EstimateReport", "leray_decay_envelope",
    "fit_decay_rate", "barrier_check", "absorbing_constants",
    "settling_time", "maximum_principle_monitor", "overshoot_decay_rate",
    "energy_barrier", "gradient_barrier", "report_rows", "REPORT_COLUMNS",
]

LOG = logging.getLogger(__name__)

REPORT_COLUMNS = ("name", "satisfied", "margin", "t_worst")


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier inequality v - a*v^k <= M with its admissibility data."""

    a: float
    M: float
    k: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("barrier coefficient a must be positive")
        if not self.M > 0:
            raise ValueError("forcing level M must be positive")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError("barrier exponent k must be an integer >= 2")

    @property
    def v_max(self) -> float:
        """Argmax of F(v) = v - a*v^k on [0, inf)."""
        return (1.0 / (self.k * self.a)) ** (1.0 / (self.k - 1))

    def F(self, v):
        return v - self.a * np.asarray(v, dtype=float) ** self.k

    @property
    def F_max(self) -> float:
        """F(v_max) = ((k-1)/k) * v_max, the escape threshold."""
        return (self.k - 1.0) / self.k * self.v_max

    @property
    def admissible(self) -> bool:
        """The barrier argument needs the forcing level below the peak."""
        return self.M < self.F_max

    @property
    def bound(self) -> float:
        """Norm bound (k/(k-1)) * M implied for admissible specs."""
        return self.k / (self.k - 1.0) * self.M


@dataclass(frozen=True)
class EstimateReport:
    """One checked estimate: name, verdict, worst slack, and its time.

    satisfied is None when the estimate's hypotheses fail, so the check
    is not applicable; margin is the signed worst-case slack (negative
    exactly when the estimate is violated).
    """

    name: str
    satisfied: bool | None
    margin: float
    t_worst: float | None

    def __post_init__(self):
        if self.satisfied and not self.margin >= 0.0:
            raise ValueError("a satisfied estimate cannot have negative slack")


def report_rows(reports) -> list:
    return [(r.name, "" if r.satisfied is None else str(r.satisfied),
             r.margin, "" if r.t_worst is None else r.t_worst)
            for r in reports]


def _worst(slacks):
    i = int(np.argmin([s for _, s in slacks]))
    return slacks[i][1], slacks[i][0]


def leray_decay_envelope(u_norms, u0_norm: float, f_norm: float,
                         lambda1: float, nu: float,
                         slack: float = 0.05) -> EstimateReport:
    """Check a norm series against the forced decay envelope.

    The envelope is |u0| e^(-lambda1 nu t) + f/(lambda1 nu) (1 - e^(...)),
    widened by the multiplicative slack. Rows are (t, l2) or
    (t, l2, grad_l2); when gradient norms are present the unit-window
    dissipation bound (integral of grad^2 over [t_end-1, t_end] below
    3 f^2 / (lambda1^2 nu^3)) is folded into the verdict, and the series
    must then span at least one time unit.
    """
    if not u_norms:
        raise ValueError("empty norm series")
    rate = lambda1 * nu
    slacks = []
    for row in u_norms:
        t, val = row[0], row[1]
        env = u0_norm * math.exp(-rate * t)
        if f_norm > 0.0:
            env += f_norm / rate * (1.0 - math.exp(-rate * t))
        slacks.append((t, env * (1.0 + slack) - val))
    margin, t_worst = _worst(slacks)

    has_grad = any(len(row) > 2 for row in u_norms)
    if has_grad:
        grows = [(row[0], row[2]) for row in u_norms if len(row) > 2]
        t_end = grows[-1][0]
        if t_end - grows[0][0] < 1.0:
            raise ValueError(
                "dissipation-window check needs at least one time unit")
        ts = np.array([t for t, _ in grows])
        gs = np.array([g for _, g in grows])
        sel = ts >= t_end - 1.0
        tw, gw = ts[sel], gs[sel] ** 2
        window = float(np.sum(0.5 * (gw[1:] + gw[:-1]) * np.diff(tw)))
        wbound = 3.0 * f_norm ** 2 / (lambda1 ** 2 * nu ** 3)
        wslack = wbound * (1.0 + slack) - window
        if wslack < margin:
            margin, t_worst = wslack, float(ts[sel][0])
    return EstimateReport("decay-envelope", margin >= 0.0, margin, t_worst)


def fit_decay_rate(series, floor: float = 1e-14) -> float:
    """Least-squares exponential rate of a decaying positive series.

    Fits log(v) = log(v0) - rate*t over the entries above the floor and
    returns the rate (positive for decay).
    """
    pts = [(t, v) for t, v in series if v > floor]
    if len(pts) < 2:
        raise ValueError("need at least two points above the floor")
    ts = np.array([t for t, _ in pts])
    vs = np.log([v for _, v in pts])
    slope = np.polyfit(ts, vs, 1)[0]
    return float(-slope)


def barrier_check(spec: BarrierSpec, v_series,
                  delta: float = 0.01) -> EstimateReport:
    """Verify the norm bound the barrier argument implies on a series.

    Inadmissible specs (forcing level at or above the barrier peak) and
    series entering at or above the peak location make the argument
    vacuous: the report is marked not-applicable, never a pass.
    """
    name = f"barrier k={spec.k}"
    if not spec.admissible:
        LOG.debug("%s: M=%.6g >= F(v_max)=%.6g, not applicable",
                  name, spec.M, spec.F_max)
        return EstimateReport(name, None, 0.0, None)
    if not v_series:
        raise ValueError("empty barrier series")
    if not v_series[0][1] < spec.v_max:
        LOG.debug("%s: initial value %.6g >= v_max=%.6g, not applicable",
                  name, v_series[0][1], spec.v_max)
        return EstimateReport(name, None, 0.0, None)
    cap = spec.bound * (1.0 + delta)
    slacks = [(t, cap - v) for t, v in v_series]
    margin, t_worst = _worst(slacks)
    return EstimateReport(name, margin >= 0.0, margin, t_worst)


def absorbing_constants(params, delta: float = 0.0,
                        aspect_threshold: float = 10.0) -> dict:
    """Exact closed-form constants of the absorbing-set estimates.

    Returns K (the buoyancy forcing bound), the absorbing radius, the
    eventual enstrophy level K1, the barrier coefficients for the
    gradient-norm argument, and the aspect-ratio gate data. beta is the
    halved decay rate the proofs use.
    """
    ga, dT = params.g_alpha, params.T1 - params.T2
    L, h = params.L, params.h
    lam, nu, kappa = params.lambda1_effective, params.nu, params.kappa
    if ga <= 0:
        raise ValueError("buoyancy coefficient must be positive")
    K = ga * dT * L / math.sqrt(3.0)
    LOG.debug("forcing bound K uses the linear temperature-difference "
              "form; the square-root variant would give %.6e",
              ga * math.sqrt(dT) * L / math.sqrt(3.0))
    radius = (1.0 / ga + 1.0 / (lam * nu)) * K * math.sqrt(h) + delta
    K1 = 3.0 * K ** 2 / (lam ** 2 * nu ** 2) * (
        h / nu + dT ** 2 / (lam ** 2 * kappa ** 3 * h))
    beta = lam * nu / 2.0
    a7 = K ** 2 * h / (2.0 * lam ** 2 * nu ** 2 * beta)
    M7 = 2.0 * ga * dT ** 2 * L / (math.sqrt(3.0) * lam * nu * math.sqrt(h))
    aspect_lhs = L / h
    aspect_rhs = ga ** 2 * dT ** 2 * L ** 3 / (nu * kappa)
    ratio = aspect_lhs / aspect_rhs if aspect_rhs > 0 else math.inf
    return {
        "K": K,
        "absorbing_radius": radius,
        "K1": K1,
        "beta": beta,
        "a_thm33": a7,
        "M_thm33": M7,
        "lambda1": lam,
        "aspect_lhs": aspect_lhs,
        "aspect_rhs": aspect_rhs,
        "aspect_ratio": ratio,
        "aspect_gate": ratio > aspect_threshold,
    }


def energy_barrier(u0_norm: float, f_norm: float, beta: float,
                   C1: float = 1.0, C2: float = 1.0,
                   t0: float = 0.0) -> BarrierSpec:
    """Quartic barrier for the squared energy norm.

    C1 and C2 are the interpolation constants the derivation never
    fixes; defaults of 1 leave the spec unnormalized (structural, not
    quantitative). t0 is the waiting time discounting the initial data.
    """
    coef = f_norm ** 2 + u0_norm ** 2 * math.exp(-4.0 * beta * t0)
    if coef <= 0.0:
        raise ValueError("need nonzero data or forcing for a barrier level")
    return BarrierSpec(a=4.0 * C1 * coef / beta,
                       M=6.0 * C2 * coef / beta, k=4)


def gradient_barrier(params) -> BarrierSpec:
    """Degree-seven barrier for the gradient norm, from the closed-form
    absorbing-set constants."""
    out = absorbing_constants(params)
    return BarrierSpec(a=out["a_thm33"], M=out["M_thm33"], k=7)


def settling_time(params, u0_norm: float) -> float:
    """Time for decaying initial data to reach the absorbing-set scale.

    (1/(lambda1 nu)) * ln(sqrt(3) lambda1 nu |u0| /
    (g alpha (T1-T2) L sqrt(h))); zero when the argument is at most one
    (the data already starts inside).
    """
    ga, dT = params.g_alpha, params.T1 - params.T2
    if ga <= 0:
        raise ValueError("buoyancy coefficient must be positive")
    rate = params.lambda1_effective * params.nu
    arg = math.sqrt(3.0) * rate * u0_norm / (
        ga * dT * params.L * math.sqrt(params.h))
    if arg <= 1.0:
        return 0.0
    return math.log(arg) / rate


def maximum_principle_monitor(T_series, T1: float, T2: float,
                              tol: float = 1e-8) -> EstimateReport:
    """Check recorded temperature extrema against the admissible range.

    Rows are (t, T_min, T_max); the range is [T2 - tol, T1 + tol] and
    the margin is the worst distance of either extremum to its wall.
    """
    if not T_series:
        raise ValueError("empty temperature series")
    slacks = []
    for t, tmin, tmax in T_series:
        slacks.append((t, min(tmin - (T2 - tol), (T1 + tol) - tmax)))
    margin, t_worst = _worst(slacks)
    return EstimateReport("maximum-principle", margin >= 0.0, margin, t_worst)


def overshoot_decay_rate(series, floor: float = 1e-14) -> float:
    """Fitted exponential decay rate of an overshoot-norm series."""
    return fit_decay_rate(series, floor=floor)
