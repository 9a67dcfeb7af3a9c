"""Scalar Dormand-Prince 5(4) integrator with 4th-order dense output.

Written for a single real state: every stage is a float operation, so a
step costs six calls of the right-hand side plus a few dozen flops (the
seventh stage is reused as the first stage of the next step). Step-size
control follows Hairer, Norsett & Wanner, *Solving ODEs I*, II.4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84

# difference between the 5th and embedded 4th order weights
E1, E3, E4, E5, E6, E7 = (
    -71 / 57600,
    71 / 16695,
    -71 / 1920,
    17253 / 339200,
    -22 / 525,
    1 / 40,
)

# continuous extension (Shampine 1986): y(t + th*h) = y + h * sum_j Q_j th^(j+1)
DENSE_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)
_P = DENSE_P.tolist()

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    """Integration stopped early; ``t`` and ``x`` hold the last accepted state."""

    def __init__(self, message: str, t: float, x: float):
        self.t = t
        self.x = x
        super().__init__(f"{message} (last good state t={t!r}, x={x!r})")


@dataclass
class DopriResult:
    t: list
    x: list
    dx: list
    dense: list  # per step: (h*Q1, h*Q2, h*Q3, h*Q4)
    blew_up: bool
    n_rejected: int


def initial_step(fn, t0, x0, f0, direction_span, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * abs(x0)
    d0 = abs(x0) / scale
    d1 = abs(f0) / scale
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = fn(t0 + h0, x0 + h0 * f0)
    d2 = abs(f1 - f0) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, direction_span)


def dopri45(
    fn: Callable[[float, float], float],
    t0: float,
    x0: float,
    t_end: float,
    rel_tol: float,
    abs_tol: float,
    x_max: float = math.inf,
    max_steps: int = 10**9,
    min_step: float = 0.0,
    record: bool = True,
) -> DopriResult:
    """Integrate ``x' = fn(t, x)`` from ``t0`` to ``t_end > t0``.

    With ``record=False`` only the final state is kept (lists of length
    one), which is what period-map evaluations need.

    Raises
    ------
    IntegrationError
        When the step size falls below ``min_step`` (or below the float
        spacing of ``t``), when ``max_steps`` is exceeded, or when ``fn``
        fails at an accepted state.
    """
    t = float(t0)
    x = float(x0)
    t_end = float(t_end)
    try:
        k1 = fn(t, x)
    except ArithmeticError as exc:
        raise IntegrationError(f"right-hand side failed at the initial state: {exc}", t, x) from exc
    ts, xs, dxs, dense = [t], [x], [k1], []
    span = t_end - t
    if abs(x) > x_max:
        return DopriResult(ts, xs, dxs, dense, True, 0)
    h = initial_step(fn, t, x, k1, span, rel_tol, abs_tol)
    steps = 0
    rejected = 0
    blew_up = False
    while t < t_end:
        if steps >= max_steps:
            raise IntegrationError(f"maximum number of steps ({max_steps}) exceeded", t, x)
        last = False
        if h < min_step or t + h == t:
            raise IntegrationError(f"step size underflow (h={h!r})", t, x)
        # land exactly on t_end rather than leave a sliver below min_step
        if t + h >= t_end - max(min_step, 8 * math.ulp(t_end)):
            h = t_end - t
            last = True
        try:
            k2 = fn(t + C2 * h, x + h * (A21 * k1))
            k3 = fn(t + C3 * h, x + h * (A31 * k1 + A32 * k2))
            k4 = fn(t + C4 * h, x + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = fn(t + C5 * h, x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            t_new = t_end if last else t + h
            k6 = fn(t_new, x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            x_new = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = fn(t_new, x_new)
        except ArithmeticError as exc:
            # a trial stage left the field's domain; retry with a smaller step
            if h * MIN_FACTOR < min_step or t + h * MIN_FACTOR == t:
                raise IntegrationError(f"right-hand side failed near the current state: {exc}", t, x) from exc
            h *= MIN_FACTOR
            rejected += 1
            steps += 1
            continue
        err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = abs_tol + rel_tol * max(abs(x), abs(x_new))
        err_norm = abs(err) / scale
        if not math.isfinite(err_norm) or not math.isfinite(x_new):
            h *= MIN_FACTOR
            rejected += 1
            steps += 1
            continue
        steps += 1
        if err_norm > 1.0:
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            rejected += 1
            continue
        if record:
            p = _P
            ks = (k1, k2, k3, k4, k5, k6, k7)
            dense.append(
                tuple(h * sum(ks[i] * p[i][j] for i in (0, 2, 3, 4, 5, 6)) for j in range(4))
            )
            ts.append(t_new)
            xs.append(x_new)
            dxs.append(k7)
        else:
            ts[0], xs[0], dxs[0] = t_new, x_new, k7
        if err_norm == 0.0:
            factor = MAX_FACTOR
        else:
            factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
        t, x, k1 = t_new, x_new, k7
        h *= factor
        if abs(x) > x_max:
            blew_up = True
            break
    return DopriResult(ts, xs, dxs, dense, blew_up, rejected)


def dense_eval(t_nodes: np.ndarray, x_nodes: np.ndarray, dense: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Evaluate the piecewise quartic continuous extension at times ``s``.

    Values at node times are returned exactly.
    """
    s = np.asarray(s, dtype=float)
    n_steps = len(t_nodes) - 1
    idx = np.searchsorted(t_nodes, s, side="right") - 1
    at_end = idx >= n_steps
    idx = np.clip(idx, 0, max(n_steps - 1, 0))
    if n_steps == 0:
        return np.full_like(s, x_nodes[0])
    h = t_nodes[idx + 1] - t_nodes[idx]
    theta = (s - t_nodes[idx]) / h
    q = dense[idx]
    poly = theta * (q[..., 0] + theta * (q[..., 1] + theta * (q[..., 2] + theta * q[..., 3])))
    out = x_nodes[idx] + poly
    return np.where(at_end, x_nodes[-1], out)
