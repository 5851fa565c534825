"""Estimate calculators and monitors: barrier algebra, decay envelopes,
absorbing-set constants, settling time, and the temperature-range
monitor."""

import math

import numpy as np
import pytest

from benard.bounds import (
    REPORT_COLUMNS,
    BarrierSpec,
    EstimateReport,
    absorbing_constants,
    barrier_check,
    energy_barrier,
    fit_decay_rate,
    gradient_barrier,
    leray_decay_envelope,
    maximum_principle_monitor,
    overshoot_decay_rate,
    report_rows,
    settling_time,
)
from benard.solver import PhysicalParams

# arbitrary-precision evaluations of the closed forms, frozen
VMAX_K4_A1 = 0.62996052494743658238
FMAX_K4_A1 = 0.47247039371057743679
VMAX_K7_A1 = 0.72302002639948377625
FMAX_K7_A1 = 0.61973145119955752250
VMAX_K4_A03 = 0.94103602888102850269
FMAX_K4_A03 = 0.70577702166077137701
VMAX_K7_A25 = 0.62062175043325363936
FMAX_K7_A25 = 0.53196150037136026231


def make_params(**kw):
    base = dict(nu=0.5, kappa=0.5, g_alpha=2.0, T1=1.0, T2=0.0,
                h=1.0, L=2.0, lambda1=0.0)
    base.update(kw)
    return PhysicalParams(**base)


class TestBarrierSpec:
    def test_frozen_closed_forms(self):
        for a, k, vm, fm in [
            (1.0, 4, VMAX_K4_A1, FMAX_K4_A1),
            (1.0, 7, VMAX_K7_A1, FMAX_K7_A1),
            (0.3, 4, VMAX_K4_A03, FMAX_K4_A03),
            (2.5, 7, VMAX_K7_A25, FMAX_K7_A25),
        ]:
            spec = BarrierSpec(a=a, M=0.01, k=k)
            assert abs(spec.v_max - vm) < 1e-14
            assert abs(spec.F_max - fm) < 1e-14

    def test_peak_identity_random_coefficients(self):
        # F evaluated at v_max must equal ((k-1)/k) v_max, and the peak
        # must dominate its neighborhood
        rng = np.random.default_rng(8)
        for _ in range(40):
            k = int(rng.integers(2, 10))
            a = float(10.0 ** rng.uniform(-3, 3))
            spec = BarrierSpec(a=a, M=1e-12, k=k)
            vm = spec.v_max
            assert abs(float(spec.F(vm)) - spec.F_max) < 1e-14 * max(1.0, vm)
            eps = 1e-5 * vm
            assert spec.F(vm) >= spec.F(vm - eps)
            assert spec.F(vm) >= spec.F(vm + eps)

    def test_concavity_on_positive_axis(self):
        rng = np.random.default_rng(3)
        spec = BarrierSpec(a=0.7, M=0.01, k=4)
        for _ in range(50):
            x, y = rng.uniform(0.0, 3.0, size=2)
            mid = spec.F(0.5 * (x + y))
            assert mid >= 0.5 * (spec.F(x) + spec.F(y)) - 1e-12

    def test_validation(self):
        with pytest.raises(ValueError, match="positive"):
            BarrierSpec(a=0.0, M=0.1, k=4)
        with pytest.raises(ValueError, match="positive"):
            BarrierSpec(a=1.0, M=0.0, k=4)
        with pytest.raises(ValueError, match="integer"):
            BarrierSpec(a=1.0, M=0.1, k=1)

    def test_admissibility_and_bound(self):
        spec = BarrierSpec(a=1.0, M=0.1, k=4)
        assert spec.admissible
        assert spec.bound == pytest.approx(0.4 / 3.0, rel=1e-15)
        assert not BarrierSpec(a=1.0, M=0.5, k=4).admissible


class TestEstimateReport:
    def test_satisfied_requires_nonnegative_margin(self):
        with pytest.raises(ValueError, match="slack"):
            EstimateReport("x", True, -1e-3, 0.0)
        EstimateReport("x", False, -1e-3, 0.0)
        EstimateReport("x", None, 0.0, None)

    def test_report_rows_format(self):
        rows = report_rows([EstimateReport("a", True, 0.5, 1.0),
                            EstimateReport("b", None, 0.0, None)])
        assert len(rows[0]) == len(REPORT_COLUMNS)
        assert rows[0][1] == "True"
        assert rows[1][1] == "" and rows[1][3] == ""


class TestLerayEnvelope:
    rate = 1.25  # lambda1 * nu for lambda1=2.5, nu=0.5

    def series(self, fn, n=40, t_end=2.0):
        ts = np.linspace(0.0, t_end, n)
        return [(float(t), float(fn(t))) for t in ts]

    def test_zero_data_zero_forcing(self):
        rows = self.series(lambda t: 0.0)
        rep = leray_decay_envelope(rows, 0.0, 0.0, 2.5, 0.5)
        assert rep.satisfied
        assert rep.margin == 0.0

    def test_exact_decay_inside_envelope(self):
        rows = self.series(lambda t: 3.0 * math.exp(-self.rate * t))
        rep = leray_decay_envelope(rows, 3.0, 0.0, 2.5, 0.5)
        assert rep.satisfied
        assert rep.margin >= 0.0

    def test_super_envelope_series_rejected(self):
        # negative control: inflate the true decay beyond the slack
        rows = self.series(lambda t: 3.0 * 1.2 * math.exp(-self.rate * t))
        rep = leray_decay_envelope(rows, 3.0, 0.0, 2.5, 0.5)
        assert not rep.satisfied
        assert rep.margin < 0.0

    def test_forced_asymptote(self):
        f = 0.8
        limit = f / self.rate
        rows = self.series(lambda t: limit * (1.0 - math.exp(-self.rate * t)))
        rep = leray_decay_envelope(rows, 0.0, f, 2.5, 0.5)
        assert rep.satisfied
        rows = self.series(lambda t: 1.06 * limit)
        rep = leray_decay_envelope(rows, 0.0, f, 2.5, 0.5)
        assert not rep.satisfied

    def test_window_check_folds_in(self):
        f, lam, nu = 0.5, 2.5, 0.5
        wbound = 3.0 * f ** 2 / (lam ** 2 * nu ** 3)
        ts = np.linspace(0.0, 2.0, 41)
        good = [(float(t), 0.01, math.sqrt(wbound * 0.5)) for t in ts]
        rep = leray_decay_envelope(good, 1.0, f, lam, nu)
        assert rep.satisfied
        bad = [(float(t), 0.01, math.sqrt(wbound * 2.0)) for t in ts]
        rep = leray_decay_envelope(bad, 1.0, f, lam, nu)
        assert not rep.satisfied
        assert rep.t_worst == pytest.approx(1.0)

    def test_window_needs_one_time_unit(self):
        ts = np.linspace(0.0, 0.5, 11)
        rows = [(float(t), 0.0, 0.0) for t in ts]
        with pytest.raises(ValueError, match="time unit"):
            leray_decay_envelope(rows, 1.0, 0.1, 2.5, 0.5)

    def test_empty_series(self):
        with pytest.raises(ValueError, match="empty"):
            leray_decay_envelope([], 1.0, 0.0, 2.5, 0.5)

    def test_fit_decay_rate_recovers_exponent(self):
        rows = [(t, 2.0 * math.exp(-0.75 * t)) for t in np.linspace(0, 4, 30)]
        assert fit_decay_rate(rows) == pytest.approx(0.75, rel=1e-10)

    def test_fit_decay_rate_needs_points(self):
        with pytest.raises(ValueError, match="two points"):
            fit_decay_rate([(0.0, 1e-20), (1.0, 1e-21)])


class TestBarrierCheck:
    def test_inadmissible_is_not_applicable(self):
        spec = BarrierSpec(a=1.0, M=0.7, k=7)
        assert spec.M >= spec.F_max
        rep = barrier_check(spec, [(0.0, 0.1)])
        assert rep.satisfied is None
        assert rep.t_worst is None

    def test_bisection_root_stays_below_bound(self):
        # first root of v - v^4 = M sits under (k/(k-1)) M (1+delta)
        spec = BarrierSpec(a=1.0, M=0.1, k=4)
        lo, hi = 0.0, spec.v_max
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(spec.F(mid)) < spec.M:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        cap = spec.bound * 1.01
        assert root < cap
        rows = [(float(t), float(v))
                for t, v in enumerate(np.linspace(0.0, root, 60))]
        rep = barrier_check(spec, rows)
        assert rep.satisfied
        assert rep.margin >= 0.0

    def test_violating_series_flagged(self):
        spec = BarrierSpec(a=1.0, M=0.1, k=4)
        cap = spec.bound * 1.01
        rows = [(0.0, 0.0), (1.0, cap * 0.9), (2.0, cap * 1.5), (3.0, 0.1)]
        rep = barrier_check(spec, rows)
        assert rep.satisfied is False
        assert rep.t_worst == 2.0
        assert rep.margin < 0.0

    def test_series_starting_at_peak_not_applicable(self):
        spec = BarrierSpec(a=1.0, M=0.1, k=4)
        rep = barrier_check(spec, [(0.0, spec.v_max), (1.0, 0.0)])
        assert rep.satisfied is None

    def test_empty_series_raises(self):
        with pytest.raises(ValueError, match="empty"):
            barrier_check(BarrierSpec(a=1.0, M=0.1, k=4), [])

    def test_k7_admissible_passes(self):
        spec = BarrierSpec(a=1.0, M=0.2, k=7)
        assert spec.admissible
        rows = [(float(t), 0.9 * spec.bound) for t in range(5)]
        rep = barrier_check(spec, rows)
        assert rep.satisfied


class TestAbsorbingConstants:
    def test_unit_forcing_bound(self):
        p = make_params(g_alpha=1.0, T1=1.0, T2=0.0, L=math.sqrt(3.0))
        out = absorbing_constants(p)
        assert out["K"] == pytest.approx(1.0, rel=1e-15)

    def test_exponent_audit_on_temperature_gap(self):
        p1 = make_params(T1=1.0, T2=0.0)
        p2 = make_params(T1=2.0, T2=0.0)
        o1, o2 = absorbing_constants(p1), absorbing_constants(p2)
        assert o2["K"] / o1["K"] == pytest.approx(2.0, rel=1e-12)
        assert o2["a_thm33"] / o1["a_thm33"] == pytest.approx(4.0, rel=1e-12)
        assert o2["M_thm33"] / o1["M_thm33"] == pytest.approx(4.0, rel=1e-12)

    def test_closed_forms_recomputed(self):
        p = make_params(nu=0.3, kappa=0.7, g_alpha=1.5, T1=2.0, T2=0.5,
                        h=1.2, L=3.0)
        out = absorbing_constants(p)
        lam = math.pi ** 2 / 1.2 ** 2
        K = 1.5 * 1.5 * 3.0 / math.sqrt(3.0)
        assert out["lambda1"] == pytest.approx(lam, rel=1e-14)
        assert out["K"] == pytest.approx(K, rel=1e-14)
        assert out["beta"] == pytest.approx(lam * 0.3 / 2.0, rel=1e-14)
        radius = (1.0 / 1.5 + 1.0 / (lam * 0.3)) * K * math.sqrt(1.2)
        assert out["absorbing_radius"] == pytest.approx(radius, rel=1e-14)
        K1 = 3.0 * K ** 2 / (lam ** 2 * 0.3 ** 2) * (
            1.2 / 0.3 + 1.5 ** 2 / (lam ** 2 * 0.7 ** 3 * 1.2))
        assert out["K1"] == pytest.approx(K1, rel=1e-14)
        a7 = K ** 2 * 1.2 / (2.0 * lam ** 2 * 0.3 ** 2 * out["beta"])
        assert out["a_thm33"] == pytest.approx(a7, rel=1e-14)
        M7 = 2.0 * 1.5 * 1.5 ** 2 * 3.0 / (
            math.sqrt(3.0) * lam * 0.3 * math.sqrt(1.2))
        assert out["M_thm33"] == pytest.approx(M7, rel=1e-14)

    def test_radius_monotonicity(self):
        base = absorbing_constants(make_params())["absorbing_radius"]
        hotter = absorbing_constants(make_params(T1=1.5))["absorbing_radius"]
        stiffer = absorbing_constants(make_params(nu=1.0))["absorbing_radius"]
        assert hotter > base
        assert stiffer < base

    def test_aspect_gate(self):
        wide = make_params(g_alpha=1e-3, L=4.0, h=0.1, nu=1.0, kappa=1.0)
        out = absorbing_constants(wide)
        assert out["aspect_lhs"] == pytest.approx(40.0)
        assert out["aspect_gate"]
        narrow = make_params(g_alpha=10.0, L=2.0, h=1.0)
        assert not absorbing_constants(narrow)["aspect_gate"]

    def test_delta_widens_radius(self):
        p = make_params()
        assert (absorbing_constants(p, delta=0.5)["absorbing_radius"]
                == pytest.approx(
                    absorbing_constants(p)["absorbing_radius"] + 0.5))

    def test_nonpositive_buoyancy_rejected(self):
        class Fake:
            g_alpha, T1, T2, L, h = 0.0, 1.0, 0.0, 2.0, 1.0
            nu = kappa = 0.5
            lambda1_effective = 1.0

        with pytest.raises(ValueError, match="buoyancy"):
            absorbing_constants(Fake())


class TestSettlingTime:
    def test_boundary_argument_one(self):
        p = make_params()
        rate = p.lambda1_effective * p.nu
        u0 = p.g_alpha * (p.T1 - p.T2) * p.L * math.sqrt(p.h) / (
            math.sqrt(3.0) * rate)
        assert settling_time(p, u0) == 0.0
        assert settling_time(p, 0.5 * u0) == 0.0

    def test_argument_e_gives_inverse_rate(self):
        p = make_params()
        rate = p.lambda1_effective * p.nu
        u0 = math.e * p.g_alpha * (p.T1 - p.T2) * p.L * math.sqrt(p.h) / (
            math.sqrt(3.0) * rate)
        assert settling_time(p, u0) == pytest.approx(1.0 / rate, rel=1e-12)

    def test_monotone_in_initial_size(self):
        p = make_params()
        t1 = settling_time(p, 100.0)
        t2 = settling_time(p, 1000.0)
        assert t2 > t1 > 0.0


class TestMaximumPrincipleMonitor:
    def test_in_range_series(self):
        rows = [(0.0, 0.1, 0.9), (1.0, 0.2, 0.8)]
        rep = maximum_principle_monitor(rows, 1.0, 0.0)
        assert rep.satisfied
        assert rep.margin == pytest.approx(0.1 + 1e-8)
        assert rep.t_worst == 0.0

    def test_violation_located(self):
        rows = [(0.0, 0.1, 0.9), (1.0, 0.1, 1.2), (2.0, 0.1, 0.9)]
        rep = maximum_principle_monitor(rows, 1.0, 0.0)
        assert rep.satisfied is False
        assert rep.t_worst == 1.0

    def test_tolerance_admits_roundoff(self):
        rows = [(0.0, -5e-9, 1.0 + 5e-9)]
        rep = maximum_principle_monitor(rows, 1.0, 0.0)
        assert rep.satisfied

    def test_empty_raises(self):
        with pytest.raises(ValueError, match="empty"):
            maximum_principle_monitor([], 1.0, 0.0)

    def test_overshoot_rate_recovered(self):
        rows = [(t, 0.1 * math.exp(-2.2 * t)) for t in np.linspace(0, 3, 25)]
        assert overshoot_decay_rate(rows) == pytest.approx(2.2, rel=1e-10)


class TestBarrierBuilders:
    def test_energy_barrier_coefficients(self):
        spec = energy_barrier(u0_norm=2.0, f_norm=0.5, beta=0.8)
        coef = 0.5 ** 2 + 2.0 ** 2  # t0 = 0 keeps the data undiscounted
        assert spec.k == 4
        assert spec.a == pytest.approx(4.0 * coef / 0.8, rel=1e-15)
        assert spec.M == pytest.approx(6.0 * coef / 0.8, rel=1e-15)

    def test_energy_barrier_waiting_time_discount(self):
        early = energy_barrier(2.0, 0.5, 0.8, t0=0.0)
        late = energy_barrier(2.0, 0.5, 0.8, t0=3.0)
        # discounting the data lowers both coefficients toward the
        # forcing-only floor
        floor = energy_barrier(1e-300, 0.5, 0.8)
        assert late.a < early.a
        assert late.M < early.M
        assert late.a > floor.a

    def test_energy_barrier_interpolation_constants_scale(self):
        base = energy_barrier(1.0, 1.0, 1.0)
        scaled = energy_barrier(1.0, 1.0, 1.0, C1=3.0, C2=5.0)
        assert scaled.a == pytest.approx(3.0 * base.a, rel=1e-15)
        assert scaled.M == pytest.approx(5.0 * base.M, rel=1e-15)

    def test_energy_barrier_zero_data_raises(self):
        with pytest.raises(ValueError, match="nonzero"):
            energy_barrier(0.0, 0.0, 1.0)

    def test_gradient_barrier_matches_constants(self):
        p = make_params()
        spec = gradient_barrier(p)
        out = absorbing_constants(p)
        assert spec.k == 7
        assert spec.a == out["a_thm33"]
        assert spec.M == out["M_thm33"]
