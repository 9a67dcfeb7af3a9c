import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massera.dynamics import (
    ConfigurationError,
    FieldEvaluationError,
    IntegrationError,
    IntegratorConfig,
    MapIterationError,
    ScalarField,
    advance,
    evaluate_field,
    integrate,
    iterate_map,
    reverse_field,
    sample,
    shift_field,
    split_asymptotic,
    verify_cocycle,
)
from massera.expr import Num, format_expr, parse
from massera.integrator import DENSE_P, dopri45


def ode(f, **kw):
    return ScalarField.from_strings("ode", f, **kw)


class TestIntegratorClosedForms:
    @pytest.mark.parametrize(
        "f, u0, T, exact",
        [
            ("x", 1.0, 5.0, lambda t: math.exp(t)),
            ("-2*t*x", 1.0, 3.0, lambda t: math.exp(-t * t)),
            ("cos(t)", 0.0, 50.0, math.sin),
            ("x*(1-x)", 0.5, 10.0, lambda t: math.exp(t) / (1 + math.exp(t))),
        ],
    )
    def test_nodes_and_dense_output(self, f, u0, T, exact):
        traj = integrate(ode(f), u0, 0.0, T, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
        assert traj.t_end == T
        ref = np.array([exact(t) for t in traj.t])
        assert np.max(np.abs(traj.x - ref) / np.maximum(1, np.abs(ref))) < 1e-8
        s = np.linspace(0, T, 997)
        ref_s = np.array([exact(t) for t in s])
        assert np.max(np.abs(traj(s) - ref_s) / np.maximum(1, np.abs(ref_s))) < 1e-8

    def test_dense_output_is_exact_at_nodes(self):
        traj = integrate(ode("sin(t)*x+1"), 0.3, 0.0, 7.0)
        assert np.array_equal(sample(traj, traj.t), traj.x)

    def test_dense_weights_reproduce_step(self):
        from massera.integrator import B1, B3, B4, B5, B6

        assert np.allclose(DENSE_P.sum(axis=1), [B1, 0.0, B3, B4, B5, B6, 0.0], atol=1e-15)

    def test_blow_up_is_flagged(self):
        traj = integrate(ode("x^2"), 1.0, 0.0, 2.0)
        assert traj.blew_up
        assert traj.blowup_time == pytest.approx(1.0, abs=1e-6)
        assert abs(traj.x[-1]) > 1e8

    def test_error_at_initial_state(self):
        with pytest.raises(IntegrationError):
            integrate(ode("sqrt(x)"), -1.0, 0.0, 1.0)

    def test_domain_edge_retried_with_smaller_steps(self):
        # x' = -sqrt(x) reaches 0 at t = 2 from x = 1; stepping past it must not crash silently
        with pytest.raises(IntegrationError):
            integrate(ode("-sqrt(x)"), 1.0, 0.0, 3.0)

    def test_max_steps(self):
        with pytest.raises(IntegrationError):
            dopri45(lambda t, x: math.cos(100 * t), 0.0, 0.0, 100.0, 1e-10, 1e-12, max_steps=10)


class TestField:
    def test_split(self):
        d = split_asymptotic("ode", parse("sin(t) + 1/(1+t) - x"), 2 * math.pi)
        assert format_expr(d.periodic) == "(sin(t)-x)"
        assert format_expr(d.remainder) == "(1/(1+t))"

    def test_split_rejects_growth(self):
        with pytest.raises(ConfigurationError):
            split_asymptotic("ode", parse("t*x"), 1.0)

    def test_inconsistent_decomposition(self):
        with pytest.raises(ConfigurationError):
            ode("sin(t)", P="t", R="sin(t)-t", tau=1.0)

    def test_map_period_must_be_integer(self):
        with pytest.raises(ConfigurationError):
            ScalarField.from_strings("map", "x", tau=1.5)

    def test_limiting(self):
        f = ode("cos(t) + exp(-t)", tau=2 * math.pi)
        assert f.decomposition.remainder == parse("exp(-t)")
        assert f.limiting().decomposition.remainder == Num(0.0)

    def test_evaluation_error(self):
        f = ode("log(x)")
        with pytest.raises(FieldEvaluationError) as info:
            evaluate_field(f, 1.0, -2.0)
        assert (info.value.t, info.value.x) == (1.0, -2.0)

    def test_bad_config(self):
        for kw in ({"rel_tol": 0}, {"abs_tol": -1}, {"x_max": 0}, {"max_steps": 0}, {"min_step": 0}):
            with pytest.raises(ConfigurationError):
                IntegratorConfig(**kw)

    def test_shift_and_reverse(self):
        f = ode("sin(t)*x")
        g = shift_field(f, 2.0)
        assert g(1.0, 3.0) == f(3.0, 3.0)
        r = reverse_field(f, 5.0)
        assert r(1.0, 3.0) == -f(4.0, 3.0)
        with pytest.raises(ConfigurationError):
            shift_field(ScalarField.from_strings("map", "x"), 0.5)


class TestMaps:
    def test_bit_exact_iteration(self):
        f = ScalarField.from_strings("map", "2*(8+2*cos(pi*t))*x/((8+2*cos(pi*t))+x)")
        traj = iterate_map(f, 5.0, 1000)
        x = 5.0
        for k in range(1000):
            K = 8 + 2 * math.cos(math.pi * k)
            assert traj.x[k] == x
            x = 2 * K * x / (K + x)
        assert traj.x[1000] == x
        assert traj.dx[0] == traj.x[1]

    def test_integer_sampling_only(self):
        traj = iterate_map(ScalarField.from_strings("map", "x/2"), 1.0, 10)
        assert sample(traj, 3) == 0.125
        with pytest.raises(ValueError):
            sample(traj, 2.5)
        with pytest.raises(ValueError):
            sample(traj, 11)

    def test_map_error_reports_step(self):
        with pytest.raises(MapIterationError) as info:
            iterate_map(ScalarField.from_strings("map", "x-1+0*sqrt(x)"), 2.5, 10)
        assert info.value.step == 3

    def test_blow_up(self):
        traj = iterate_map(ScalarField.from_strings("map", "10*x"), 1.0, 50)
        assert traj.blew_up and traj.blowup_time == 9.0

    def test_advance_matches_iteration(self):
        f = ScalarField.from_strings("map", "x/2 + sin(t)")
        traj = iterate_map(f, 1.0, 30)
        assert advance(f, 1.0, 0, 30)[0] == traj.x[-1]


def test_csv_export(tmp_path):
    traj = integrate(ode("cos(t)"), 0.0, 0.0, 1.0)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "x"]
    assert float(rows[-1][1]) == traj.x[-1]


bounded_fields = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 2.0), st.floats(-1, 1)
).map(lambda c: ode(f"{c[0]!r}*sin(t)+{c[1]!r}*cos({c[2]!r}*t)-x+{c[3]!r}*sin(x)"))


@settings(max_examples=25)
@given(bounded_fields, st.floats(-3, 3), st.floats(0.01, 3))
def test_order_preserved(field_, u, gap):
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-15)
    lo = integrate(field_, u, 0.0, 10.0, cfg)
    hi = integrate(field_, u + gap, 0.0, 10.0, cfg)
    s = np.linspace(0, 10, 201)
    assert np.all(lo(s) <= hi(s) + 1e-9)


@settings(max_examples=25)
@given(bounded_fields, st.floats(-3, 3), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_cocycle(field_, u, s, t):
    cfg = IntegratorConfig()
    assert verify_cocycle(field_, u, s, t, cfg) <= 10 * (cfg.rel_tol * (s + t) + cfg.abs_tol) + 1e-12
