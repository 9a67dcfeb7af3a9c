import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massera.dynamics import ConfigurationError, IntegratorConfig, ScalarField, integrate, iterate_map
from massera.period import (
    AnalysisConfig,
    Convergence,
    FixedPointRecord,
    SCheck,
    Series,
    Stability,
    Verdict,
    build_period_map,
    check_monotone,
    classify_asymptotic,
    classify_s_asymptotic,
    classify_stability,
    estimate_delta,
    find_fixed_points,
    full_analysis,
    iterates,
    residual_series,
)
from massera.presets import beverton_holt_field, get_preset

E_RATIO = math.e / (1 + math.e)
BH_LIMIT = 90 / 13  # fixed point of 1/u -> 1/(4u) + 1/40 + 1/12


@pytest.fixture(scope="module")
def logistic_pm():
    return build_period_map(get_preset("logistic").build())


class TestPeriodMap:
    def test_logistic_closed_form(self, logistic_pm):
        assert abs(logistic_pm(0.5) - E_RATIO) < 1e-9
        assert abs(logistic_pm.inverse(E_RATIO) - 0.5) < 1e-9

    def test_map_inverse(self):
        pm = build_period_map(beverton_holt_field())
        u = 3.7
        assert abs(pm.inverse(pm(u)) - u) < 1e-9

    def test_bh_limiting_fixed_point(self):
        pm = build_period_map(beverton_holt_field())
        assert abs(pm(BH_LIMIT) - BH_LIMIT) < 1e-12

    def test_uses_limiting_equation(self):
        f = ScalarField.from_strings("ode", "-x + exp(-t)", tau=1.0)
        pm = build_period_map(f)
        assert abs(pm(1.0) - math.exp(-1.0)) < 1e-10

    def test_requires_periodicity(self):
        with pytest.raises(ConfigurationError):
            build_period_map(ScalarField.from_strings("ode", "t*x"), 1.0)
        pm = build_period_map(ScalarField.from_strings("ode", "sin(t)-x"), 2 * math.pi)
        assert pm.tau == 2 * math.pi

    def test_monotone(self, logistic_pm):
        us = np.linspace(-0.4, 1.4, 30)
        assert check_monotone(logistic_pm, zip(us[:-1], us[1:])) == []
        assert check_monotone(lambda u: -u, [(0.0, 1.0)]) == [(0.0, 1.0)]

    @settings(max_examples=30)
    @given(st.floats(0.01, 0.99))
    def test_iterates_are_monotone(self, u0):
        # for an increasing scalar map the orbit moves in one direction
        pm = build_period_map(get_preset("logistic").build())
        orbit = np.array(iterates(pm, u0, 15))
        d = np.diff(orbit)
        assert np.all(d >= -1e-12) or np.all(d <= 1e-12)

    def test_blow_up_cuts_orbit(self):
        pm = build_period_map(ScalarField.from_strings("ode", "x^2", tau=1.0))
        orbit = iterates(pm, 0.5, 5)
        assert orbit.blew_up and len(orbit) == 2


class TestFixedPoints:
    def test_logistic(self, logistic_pm):
        scan = find_fixed_points(logistic_pm, -0.5, 1.5, classify=True)
        assert [round(r.u_star, 9) for r in scan] == [0.0, 1.0]
        assert [r.stability for r in scan] == [Stability.NEGATIVE, Stability.POSITIVE]
        assert all(r.transverse for r in scan)
        assert scan[0].isolation_gap == pytest.approx(1.0)

    def test_identity_continuum(self):
        pm = build_period_map(ScalarField.from_strings("ode", "0", tau=1.0))
        scan = find_fixed_points(pm, -1, 1, n_grid=64)
        assert scan.has_continuum and scan.continuum == ((-1.0, 1.0),)

    def test_bh_constant_capacity(self):
        pm = build_period_map(beverton_holt_field(2.0, "100", 1))
        scan = find_fixed_points(pm, -1, 200, classify=True)
        assert [round(r.u_star, 6) for r in scan] == [0.0, 100.0]
        assert [r.stability for r in scan] == [Stability.NEGATIVE, Stability.POSITIVE]

    def test_semi_stable(self):
        pm = build_period_map(ScalarField.from_strings("map", "x + x^2", tau=1))
        rec = FixedPointRecord(0.0, 0.0, True, isolation_gap=math.inf)
        assert classify_stability(pm, rec, 0.01) is Stability.SEMI

    def test_probe_must_respect_gap(self, logistic_pm):
        rec = FixedPointRecord(0.0, 0.0, True, isolation_gap=1.0)
        with pytest.raises(ValueError):
            classify_stability(logistic_pm, rec, 0.6)

    def test_tangency_is_inconclusive(self):
        pm = build_period_map(ScalarField.from_strings("map", "x + x^2", tau=1))
        rec = FixedPointRecord(0.0, 0.0, False)
        assert classify_stability(pm, rec, 0.01) is Stability.INCONCLUSIVE


class TestClassifiers:
    def test_s_check(self):
        t = np.linspace(1, 100, 1000)
        assert classify_s_asymptotic(Series(t, 1 / t**2), 1e-3).status is SCheck.PASS
        assert classify_s_asymptotic(Series(t, np.full_like(t, 0.5)), 1e-3).status is SCheck.FAIL
        assert classify_s_asymptotic(Series(t, np.full_like(t, 2e-3)), 1e-3).status is SCheck.INCONCLUSIVE
        # flat residuals at round-off level count as decayed
        assert classify_s_asymptotic(Series(t, np.full_like(t, 1e-12)), 1e-3).status is SCheck.PASS

    def test_convergence(self):
        k = np.arange(100)
        res = classify_asymptotic(2 + 1e-9 * np.exp(-k))
        assert res.status is Convergence.CONVERGED and res.limit == pytest.approx(2.0)
        assert classify_asymptotic(np.sin(k)).status is Convergence.NOT_CONVERGED
        assert classify_asymptotic(1 / (k + 1) ** 2 + 0).status is Convergence.INCONCLUSIVE
        with pytest.raises(ValueError):
            classify_asymptotic([1.0] * 5)

    def test_residual_series_map(self):
        traj = iterate_map(ScalarField.from_strings("map", "x+1"), 0.0, 50)
        r = residual_series(traj, 7)
        assert np.all(r.values == 7.0) and len(r) == 44

    def test_residual_series_ode(self):
        traj = integrate(ScalarField.from_strings("ode", "cos(t)"), 0.0, 0.0, 40.0)
        r = residual_series(traj, 2 * math.pi)
        assert r.values.max() < 1e-7

    def test_delta_nesting(self):
        traj = integrate(ScalarField.from_strings("ode", "cos(t) - x/(1+t)"), 3.0, 0.0, 300.0)
        est = estimate_delta(traj)
        lows = [w[2] for w in est.windows]
        highs = [w[3] for w in est.windows]
        assert all(a <= b for a, b in zip(lows, lows[1:]))
        assert all(a >= b for a, b in zip(highs, highs[1:]))
        assert est.alpha <= est.beta


class TestFullAnalysis:
    def test_constant_solution(self):
        rep = full_analysis(ScalarField.from_strings("ode", "0", tau=1.0), 2.0)
        assert rep.verdict is Verdict.ASYMPTOTICALLY_PERIODIC and rep.iterate_limit == 2.0

    def test_unbounded(self):
        rep = full_analysis(ScalarField.from_strings("ode", "1+x^2", tau=1.0), 0.0)
        assert rep.verdict is Verdict.UNBOUNDED

    def test_periodic_forcing(self):
        # x' = -x + cos t has the attracting periodic solution (cos t + sin t)/2
        rep = full_analysis(ScalarField.from_strings("ode", "-x + cos(t) + exp(-t)", tau=2 * math.pi), 3.0)
        assert rep.verdict is Verdict.ASYMPTOTICALLY_PERIODIC
        assert abs(rep.iterate_limit - 0.5) < 1e-8

    def test_linear_growth_fails(self):
        rep = full_analysis(ScalarField.from_strings("ode", "1", tau=1.0), 0.0)
        assert rep.verdict is Verdict.INCONCLUSIVE
        assert rep.s_check.status is SCheck.FAIL

    def test_short_horizon(self):
        with pytest.raises(ValueError):
            full_analysis(ScalarField.from_strings("ode", "0", tau=1.0), 0.0, horizon=10.0)

    def test_logistic_with_scan(self):
        p = get_preset("logistic")
        rep = full_analysis(p.build(), 0.5, fixed_point_range=p.fixed_point_range)
        assert rep.verdict is Verdict.ASYMPTOTICALLY_PERIODIC
        assert rep.iterate_limit == pytest.approx(1.0, abs=1e-9)
        assert len(rep.fixed_points) == 2

    def test_deterministic(self):
        from massera.report import dumps, report_to_dict

        f = beverton_holt_field()
        cfg = AnalysisConfig(conv_tol=1e-4)
        a = dumps(report_to_dict(full_analysis(f, 5.0, horizon=20000, acfg=cfg)))
        b = dumps(report_to_dict(full_analysis(f, 5.0, horizon=20000, acfg=cfg)))
        assert a == b

    def test_bad_analysis_config(self):
        with pytest.raises(ConfigurationError):
            AnalysisConfig(s_tol=0)
        with pytest.raises(ConfigurationError):
            AnalysisConfig(tail_fraction=1.5)


def test_thread_count_does_not_change_results(monkeypatch):
    logistic = get_preset("logistic").build()
    monkeypatch.setenv("MASSERA_THREADS", "1")
    a = find_fixed_points(build_period_map(logistic), -0.5, 1.5, n_grid=256, classify=True)
    monkeypatch.setenv("MASSERA_THREADS", "4")
    b = find_fixed_points(build_period_map(logistic), -0.5, 1.5, n_grid=256, classify=True)
    assert a == b
