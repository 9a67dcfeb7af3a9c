"""Built-in equations with their recommended analysis settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .dynamics import ConfigurationError, ScalarField, split_asymptotic
from .expr import format_expr, parse

__all__ = ["Preset", "PRESETS", "get_preset", "preset_names", "beverton_holt_field", "EXP1_A", "EXDP1_A"]

# a(t) = cos(sqrt(pi^2 + t)) / (2 sqrt(pi^2 + t)); its integral from 0 is sin(sqrt(pi^2 + t))
EXP1_A = "cos(sqrt(pi^2+t))/(2*sqrt(pi^2+t))"
# A(k) = integral of a over [k, k+1]
EXDP1_A = "sin(sqrt(pi^2+t+1))-sin(sqrt(pi^2+t))"

BH_DEFAULT_K = "8+2*cos(pi*t)+5/(1+t)"


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    kind: str
    build: Callable[..., ScalarField]
    u0: float
    horizon: float
    analysis: dict = field(default_factory=dict)
    fixed_point_range: tuple[float, float] | None = None

    @property
    def tau(self) -> float:
        return self.build().tau


def _exp1(**_) -> ScalarField:
    return ScalarField.from_strings("ode", EXP1_A, P="0", R=EXP1_A, tau=2 * math.pi, label="exP1")


def _exdp1(tau: int = 7, **_) -> ScalarField:
    return ScalarField.from_strings("map", f"x+{EXDP1_A}", P="x", R=EXDP1_A, tau=tau, label="exDP1")


def _logistic(**_) -> ScalarField:
    return ScalarField.from_strings("ode", "x*(1-x)", P="x*(1-x)", R="0", tau=1.0, label="logistic")


def _zero(tau: float = 1.0, **_) -> ScalarField:
    return ScalarField.from_strings("ode", "0", P="0", R="0", tau=tau, label="zero")


def beverton_holt_field(mu: float = 2.0, K: str = BH_DEFAULT_K, tau: int = 2, K_periodic: str | None = None) -> ScalarField:
    """``u(t+1) = mu K(t) u / (K(t) + (mu - 1) u)`` with asymptotically periodic ``K``.

    The periodic part of ``K`` is ``K_periodic`` when given, otherwise the
    sum of the ``tau``-periodic summands of ``K``.
    """
    if not mu > 1:
        raise ConfigurationError("Beverton-Holt growth rate mu must exceed 1")
    K_expr = parse(K)
    if K_periodic is None:
        Kp_expr = split_asymptotic("map", K_expr, tau).periodic
    else:
        Kp_expr = parse(K_periodic)
    template = "({mu})*({K})*x/(({K})+(({mu})-1)*x)"
    f = template.format(mu=repr(float(mu)), K=format_expr(K_expr))
    P = template.format(mu=repr(float(mu)), K=format_expr(Kp_expr))
    return ScalarField.from_strings("map", f, P=P, tau=tau, label=f"beverton-holt mu={mu:g} K={K}")


def _beverton_holt(mu: float = 2.0, K: str = BH_DEFAULT_K, tau: int = 2, K_periodic: str | None = None, **_) -> ScalarField:
    return beverton_holt_field(mu, K, tau, K_periodic)


PRESETS: dict[str, Preset] = {
    "exP1": Preset(
        "exP1",
        "x' = cos(sqrt(pi^2+t))/(2 sqrt(pi^2+t)), tau = 2 pi: bounded, S-asymptotically periodic, not asymptotically periodic",
        "ode",
        _exp1,
        u0=0.0,
        horizon=4e5,
        # residuals decay like t^(-1/2): the tail-vs-middle ratio is about 2/3 at any horizon
        analysis={"s_tol": 1e-2, "decay_ratio": 0.75},
        fixed_point_range=(-1.5, 1.5),
    ),
    "exDP1": Preset(
        "exDP1",
        "x(k+1) = x(k) + A(k), A(k) = sin(sqrt(pi^2+k+1)) - sin(sqrt(pi^2+k)): difference analogue of exP1",
        "map",
        _exdp1,
        u0=0.0,
        horizon=400_000,
        analysis={"s_tol": 1e-2, "decay_ratio": 0.75},
        fixed_point_range=(-1.5, 1.5),
    ),
    "beverton-holt": Preset(
        "beverton-holt",
        "u(t+1) = mu K(t) u/(K(t) + (mu-1) u), K(t) = 8 + 2 cos(pi t) + 5/(1+t), mu = 2, tau = 2",
        "map",
        _beverton_holt,
        u0=5.0,
        horizon=400_000,
        # K approaches its periodic part like 1/t, so phi(k tau) settles like 1/t
        analysis={"conv_tol": 1e-4},
        fixed_point_range=(-1.0, 30.0),
    ),
    "logistic": Preset(
        "logistic",
        "x' = x(1-x), tau = 1: period map with fixed points 0 (repelling) and 1 (attracting)",
        "ode",
        _logistic,
        u0=0.5,
        horizon=50.0,
        fixed_point_range=(-0.5, 1.5),
    ),
    "zero": Preset(
        "zero",
        "x' = 0, tau = 1: every solution is constant",
        "ode",
        _zero,
        u0=0.0,
        horizon=50.0,
        fixed_point_range=(-1.0, 1.0),
    ),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
