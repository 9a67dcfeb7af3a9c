"""Right-hand sides, trajectories and the cocycle identity.

A :class:`ScalarField` is either an ODE ``x' = f(t, x)`` or a difference
equation ``x(t+1) = f(t, x(t))``. When the field is asymptotically
periodic it carries a :class:`Decomposition` ``f = P + R`` with ``P``
periodic of period ``tau`` and ``R`` vanishing as ``t -> +inf``.

Well-posedness (forward uniqueness and global existence) is assumed and
not checked; only blow-up past ``IntegratorConfig.x_max`` is detected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .expr import (
    BinOp,
    EvalError,
    Expr,
    Neg,
    Num,
    additive_terms,
    compile_expr,
    format_expr,
    parse,
    reflect_time,
    shift_time,
)
from .integrator import IntegrationError, dense_eval, dopri45

__all__ = [
    "IntegratorConfig",
    "Decomposition",
    "ScalarField",
    "Trajectory",
    "ConfigurationError",
    "FieldEvaluationError",
    "MapIterationError",
    "IntegrationError",
    "evaluate_field",
    "integrate",
    "iterate_map",
    "advance",
    "sample",
    "shift_field",
    "reverse_field",
    "verify_cocycle",
    "split_asymptotic",
    "decomposition_defect",
]


class ConfigurationError(ValueError):
    """A field or analysis was set up inconsistently."""


class FieldEvaluationError(ArithmeticError):
    """``f(t, x)`` is undefined at the reported point."""

    def __init__(self, t: float, x: float, cause: EvalError):
        self.t = t
        self.x = x
        self.cause = cause
        super().__init__(f"field undefined at t={t!r}, x={x!r}: {cause}")


class MapIterationError(RuntimeError):
    """Iteration of a difference equation failed at ``step`` from state ``x``."""

    def __init__(self, step: int, t: float, x: float, cause: Exception):
        self.step = step
        self.t = t
        self.x = x
        super().__init__(f"map undefined at step {step} (t={t!r}, x={x!r}): {cause}")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    x_max: float = 1e8
    max_steps: int = 10**9
    # None means 1e-13 * (t_end - t0)
    min_step: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("rel_tol and abs_tol must be positive")
        if not self.x_max > 0:
            raise ConfigurationError("x_max must be positive")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.min_step is not None and not self.min_step > 0:
            raise ConfigurationError("min_step must be positive")

    def min_step_for(self, span: float) -> float:
        return self.min_step if self.min_step is not None else 1e-13 * span


@dataclass(frozen=True)
class Decomposition:
    periodic: Expr
    remainder: Expr
    tau: float


@dataclass(frozen=True)
class ScalarField:
    """Right-hand side ``f(t, x)`` of an ODE (``kind="ode"``) or map (``kind="map"``)."""

    kind: str
    f: Expr
    decomposition: Decomposition | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("ode", "map"):
            raise ConfigurationError(f"kind must be 'ode' or 'map', got {self.kind!r}")
        if self.decomposition is not None:
            tau = self.decomposition.tau
            if not tau > 0:
                raise ConfigurationError("period tau must be positive")
            if self.kind == "map" and float(tau) != int(tau):
                raise ConfigurationError("period of a difference equation must be a positive integer")

    @classmethod
    def from_strings(
        cls,
        kind: str,
        f: str,
        P: str | None = None,
        R: str | None = None,
        tau: float | None = None,
        label: str = "",
    ) -> "ScalarField":
        """Build a field from expression text.

        With ``tau`` but neither ``P`` nor ``R`` the decomposition is found by
        :func:`split_asymptotic`; with only one of them the other is the
        difference ``f - P`` or ``f - R``.
        """
        f_expr = parse(f)
        if tau is None:
            if P is not None or R is not None:
                raise ConfigurationError("a periodic part needs a period tau")
            return cls(kind, f_expr, None, label or f)
        if kind == "map":
            tau = _as_int_period(tau)
        if P is None and R is None:
            decomposition = split_asymptotic(kind, f_expr, tau)
        else:
            p_expr = parse(P) if P is not None else BinOp("-", f_expr, parse(R))
            r_expr = parse(R) if R is not None else BinOp("-", f_expr, p_expr)
            decomposition = Decomposition(p_expr, r_expr, tau)
        field_ = cls(kind, f_expr, decomposition, label or f)
        defect = decomposition_defect(field_)
        if defect["sum"] > 1e-12 or defect["period"] > 1e-12:
            raise ConfigurationError(
                f"decomposition f = P + R with P {tau}-periodic does not hold "
                f"(sum defect {defect['sum']:.3g}, period defect {defect['period']:.3g})"
            )
        return field_

    @cached_property
    def fn(self) -> Callable[[float, float], float]:
        return compile_expr(self.f)

    @property
    def tau(self) -> float | None:
        return None if self.decomposition is None else self.decomposition.tau

    def __call__(self, t: float, x: float) -> float:
        return evaluate_field(self, t, x)

    def limiting(self) -> "ScalarField":
        """The limiting periodic equation ``x' = P(t, x)`` (or ``x(t+1) = P(t, x)``)."""
        if self.decomposition is None:
            raise ConfigurationError("field has no periodic part")
        d = self.decomposition
        return ScalarField(self.kind, d.periodic, Decomposition(d.periodic, Num(0.0), d.tau), f"limit of {self.label}")

    def describe(self) -> dict:
        out = {"kind": self.kind, "f": format_expr(self.f), "label": self.label}
        if self.decomposition is not None:
            out.update(
                P=format_expr(self.decomposition.periodic),
                R=format_expr(self.decomposition.remainder),
                tau=self.decomposition.tau,
            )
        return out


def _as_int_period(tau) -> int:
    if float(tau) != int(tau) or int(tau) < 1:
        raise ConfigurationError(f"period of a difference equation must be a positive integer, got {tau!r}")
    return int(tau)


def evaluate_field(field: ScalarField, t: float, x: float) -> float:
    """Return ``f(t, x)``; domain violations raise :class:`FieldEvaluationError`."""
    try:
        return field.fn(t, x)
    except EvalError as exc:
        raise FieldEvaluationError(t, x, exc) from exc


def shift_field(field: ScalarField, h: float) -> ScalarField:
    """The translate ``f^h(t, x) = f(t + h, x)``, with ``P`` and ``R`` shifted alike."""
    if field.kind == "map" and float(h) != int(h):
        raise ConfigurationError("difference equations shift by whole steps only")
    d = field.decomposition
    if d is not None:
        d = Decomposition(shift_time(d.periodic, h), shift_time(d.remainder, h), d.tau)
    return ScalarField(field.kind, shift_time(field.f, h), d, f"{field.label} shifted by {h}")


def reverse_field(field: ScalarField, T: float) -> ScalarField:
    """ODE field of the time-reversed flow on ``[0, T]``: ``y' = -f(T - s, y)``.

    If ``x`` solves ``x' = f`` then ``y(s) = x(T - s)`` solves the reversed
    equation, so integrating it from ``s = 0`` to ``T`` runs ``x`` backwards
    from ``t = T`` to ``t = 0``.
    """
    if field.kind != "ode":
        raise ConfigurationError("time reversal by reflection applies to ODEs")
    return ScalarField("ode", Neg(reflect_time(field.f, T)), None, f"reversal of {field.label}")


# -- decomposition helpers -----------------------------------------------------

_X_PROBE = np.linspace(-2.0, 2.0, 9)


def _term_values(fn, ts, xs):
    out = np.empty((len(ts), len(xs)))
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            try:
                out[i, j] = fn(float(t), float(x))
            except EvalError:
                out[i, j] = np.nan
    return out


def _period_grid(kind: str, tau: float) -> np.ndarray:
    if kind == "map":
        return np.arange(0, 20 * int(tau) + 1, dtype=float)
    return np.linspace(0.0, 20.0 * tau, 241)


def split_asymptotic(kind: str, f: Expr, tau: float) -> Decomposition:
    """Split ``f`` into periodic and vanishing parts by its top-level summands.

    Each summand is tested numerically: periodic when shifting by ``tau``
    leaves it unchanged on a probe grid, vanishing when its magnitude at
    ``t = 1e6, 1e8, 1e10`` falls below 1e-4 and does not grow. A summand
    that is neither makes the split fail; supply ``P`` explicitly then.
    """
    periodic, remainder = [], []
    ts = _period_grid(kind, tau)
    for term in additive_terms(f):
        fn = compile_expr(term)
        base = _term_values(fn, ts, _X_PROBE)
        shifted = _term_values(fn, ts + tau, _X_PROBE)
        ok = np.isfinite(base) & np.isfinite(shifted)
        if ok.any() and np.all(np.abs(shifted[ok] - base[ok]) <= 1e-12 * (1 + np.abs(base[ok]))):
            periodic.append(term)
            continue
        far = _term_values(fn, np.array([1e6, 1e8, 1e10]), _X_PROBE)
        if np.all(np.isfinite(far)):
            mags = np.abs(far).max(axis=1)
            if mags[-1] < 1e-4 and mags[2] <= mags[0] + 1e-300:
                remainder.append(term)
                continue
        raise ConfigurationError(
            f"cannot classify summand {format_expr(term)!r} as {tau}-periodic or vanishing; "
            "give the periodic part explicitly"
        )
    return Decomposition(_sum(periodic), _sum(remainder), tau)


def _sum(terms: Sequence[Expr]) -> Expr:
    if not terms:
        return Num(0.0)
    out = terms[0]
    for term in terms[1:]:
        if isinstance(term, Neg):
            out = BinOp("-", out, term.operand)
        else:
            out = BinOp("+", out, term)
    return out


def decomposition_defect(field: ScalarField, ts: Iterable[float] | None = None, xs: Iterable[float] | None = None) -> dict:
    """Largest relative violations of ``f = P + R`` and of ``P(t + tau) = P(t)``."""
    d = field.decomposition
    if d is None:
        raise ConfigurationError("field has no decomposition")
    ts = _period_grid(field.kind, d.tau) if ts is None else np.asarray(list(ts), dtype=float)
    xs = _X_PROBE if xs is None else np.asarray(list(xs), dtype=float)
    f = _term_values(field.fn, ts, xs)
    P_fn, R_fn = compile_expr(d.periodic), compile_expr(d.remainder)
    P = _term_values(P_fn, ts, xs)
    R = _term_values(R_fn, ts, xs)
    P_shift = _term_values(P_fn, ts + d.tau, xs)
    ok = np.isfinite(f) & np.isfinite(P) & np.isfinite(R)
    sum_defect = np.abs(f - (P + R))[ok] / (1 + np.abs(f[ok]))
    okp = np.isfinite(P) & np.isfinite(P_shift)
    per_defect = np.abs(P_shift - P)[okp] / (1 + np.abs(P[okp]))
    return {
        "sum": float(sum_defect.max()) if sum_defect.size else 0.0,
        "period": float(per_defect.max()) if per_defect.size else 0.0,
    }


# -- trajectories ------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution.

    ``dx`` holds ``f(t, x)`` at every node: the derivative for ODEs and the
    next state for maps. ``dense`` holds the per-step continuous extension
    (ODEs only).
    """

    kind: str
    t: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    dense: np.ndarray | None = None
    blew_up: bool = False
    blowup_time: float | None = None
    tolerance_used: float = 0.0
    notes: tuple = field(default_factory=tuple)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def nodes(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.dx.tolist()))

    def __len__(self) -> int:
        return len(self.t)

    def __call__(self, s):
        return sample(self, s)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x"])
            for t, x in zip(self.t.tolist(), self.x.tolist()):
                writer.writerow([f"{t:.17g}", f"{x:.17g}"])


def integrate(field: ScalarField, u0: float, t0: float, t_end: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Solve ``x' = f(t, x)``, ``x(t0) = u0`` on ``[t0, t_end]``.

    Adaptive Dormand-Prince 5(4) with dense output. If ``|x|`` exceeds
    ``cfg.x_max`` the trajectory ends at that step with ``blew_up`` set.
    """
    cfg = cfg or IntegratorConfig()
    if field.kind != "ode":
        raise ConfigurationError("integrate needs an ODE field; use iterate_map for difference equations")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    res = dopri45(
        field.fn,
        t0,
        u0,
        t_end,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.x_max,
        cfg.max_steps,
        cfg.min_step_for(t_end - t0),
    )
    dense = np.array(res.dense, dtype=float).reshape(-1, 4)
    dense.setflags(write=False)
    return Trajectory(
        "ode",
        _frozen(res.t),
        _frozen(res.x),
        _frozen(res.dx),
        dense,
        res.blew_up,
        res.t[-1] if res.blew_up else None,
        cfg.rel_tol,
    )


def advance(field: ScalarField, u0: float, t0: float, t1: float, cfg: IntegratorConfig | None = None) -> tuple[float, bool]:
    """Final state at ``t1`` without storing the path; returns ``(x, blew_up)``.

    For maps ``t0`` and ``t1`` are integers and the map is applied
    ``t1 - t0`` times.
    """
    cfg = cfg or IntegratorConfig()
    if field.kind == "map":
        fn = field.fn
        x = float(u0)
        for k in range(int(t0), int(t1)):
            try:
                x = fn(float(k), x)
            except EvalError as exc:
                raise MapIterationError(k - int(t0), float(k), x, exc) from exc
            if abs(x) > cfg.x_max:
                return x, True
        return x, False
    if t1 == t0:
        return float(u0), False
    res = dopri45(
        field.fn,
        t0,
        u0,
        t1,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.x_max,
        cfg.max_steps,
        cfg.min_step_for(t1 - t0),
        record=False,
    )
    return res.x[-1], res.blew_up


def iterate_map(field: ScalarField, u0: float, n: int, cfg: IntegratorConfig | None = None, t0: int = 0) -> Trajectory:
    """Exact forward iteration ``x(k+1) = f(k, x(k))`` for ``n`` steps from ``t0``."""
    cfg = cfg or IntegratorConfig()
    if field.kind != "map":
        raise ConfigurationError("iterate_map needs a difference-equation field")
    if n < 0:
        raise ValueError("n must be nonnegative")
    fn = field.fn
    x_max = cfg.x_max
    x = float(u0)
    xs = [x]
    blew_up = abs(x) > x_max
    k = int(t0)
    end = int(t0) + int(n)
    try:
        while k < end and not blew_up:
            x = fn(float(k), x)
            xs.append(x)
            k += 1
            if abs(x) > x_max:
                blew_up = True
    except EvalError as exc:
        raise MapIterationError(k - int(t0), float(k), x, exc) from exc
    try:
        tail_next = fn(float(k), x)
    except EvalError:
        tail_next = math.nan
    xs_arr = np.asarray(xs, dtype=float)
    nxt = np.append(xs_arr[1:], tail_next)
    ts = np.arange(int(t0), int(t0) + len(xs), dtype=float)
    return Trajectory("map", _frozen(ts), _frozen(xs_arr), _frozen(nxt), None, blew_up, float(ts[-1]) if blew_up else None, 0.0)


def sample(traj: Trajectory, s):
    """Value of the trajectory at time(s) ``s``.

    ODE trajectories use the dense output (exact at nodes); map
    trajectories accept only integer times. Scalars in, scalar out.
    """
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    lo, hi = traj.t0, traj.t_end
    if np.any(s_arr < lo) or np.any(s_arr > hi) or np.any(~np.isfinite(s_arr)):
        raise ValueError(f"sample time outside [{lo}, {hi}]")
    if traj.kind == "map":
        if np.any(s_arr != np.floor(s_arr)):
            raise ValueError("difference-equation trajectories are defined at integer times only")
        out = traj.x[(s_arr - lo).astype(np.int64)]
    else:
        out = dense_eval(traj.t, traj.x, traj.dense, s_arr)
    return float(out[0]) if scalar else out


def verify_cocycle(field: ScalarField, u0: float, s: float, t: float, cfg: IntegratorConfig | None = None) -> float:
    """``|phi(t + s, u0, f) - phi(t, phi(s, u0, f), f^s)|`` by two integration routes."""
    cfg = cfg or IntegratorConfig()
    if s < 0 or t < 0:
        raise ValueError("s and t must be nonnegative")
    direct, blown1 = advance(field, u0, 0.0, s + t, cfg)
    mid, blown2 = advance(field, u0, 0.0, s, cfg)
    split, blown3 = advance(shift_field(field, s), mid, 0.0, t, cfg)
    if blown1 or blown2 or blown3:
        raise IntegrationError("solution blew up during the cocycle check", s + t, direct)
    return abs(direct - split)
