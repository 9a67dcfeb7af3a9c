"""Period map, Massera-type classification and fixed-point analysis.

The period map ``P(u) = phi(tau, u)`` is always built from the *limiting*
periodic equation ``x' = P(t, x)`` (or its difference analogue), while the
solution being classified is integrated with the full right-hand side
``f = P + R``. Verdicts are three-valued at every stage: a finite horizon
can support but never certify a limit.
"""

from __future__ import annotations

import csv
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .dynamics import (
    ConfigurationError,
    IntegrationError,
    IntegratorConfig,
    MapIterationError,
    ScalarField,
    Trajectory,
    advance,
    integrate,
    iterate_map,
    reverse_field,
    sample,
    split_asymptotic,
)
from .expr import EvalError, Num

__all__ = [
    "Verdict",
    "SCheck",
    "Convergence",
    "Stability",
    "AnalysisConfig",
    "PeriodMap",
    "PeriodMapBlowUp",
    "Orbit",
    "Series",
    "SCheckResult",
    "ConvergenceResult",
    "LimitSetEstimate",
    "FixedPointRecord",
    "FixedPointScan",
    "ClassificationReport",
    "build_period_map",
    "iterates",
    "residual_series",
    "classify_s_asymptotic",
    "classify_asymptotic",
    "estimate_delta",
    "find_fixed_points",
    "classify_stability",
    "check_monotone",
    "full_analysis",
    "worker_count",
]


class Verdict(str, Enum):
    S_ASYMPTOTICALLY_PERIODIC = "S_ASYMPTOTICALLY_PERIODIC"
    ASYMPTOTICALLY_PERIODIC = "ASYMPTOTICALLY_PERIODIC"
    NOT_ASYMPTOTICALLY_PERIODIC = "NOT_ASYMPTOTICALLY_PERIODIC"
    UNBOUNDED = "UNBOUNDED"
    INCONCLUSIVE = "INCONCLUSIVE"


class SCheck(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


class Convergence(str, Enum):
    CONVERGED = "CONVERGED"
    NOT_CONVERGED = "NOT_CONVERGED"
    INCONCLUSIVE = "INCONCLUSIVE"


class Stability(str, Enum):
    POSITIVE = "positively_asymptotically_stable"
    NEGATIVE = "negatively_asymptotically_stable"
    SEMI = "semi_stable"
    INCONCLUSIVE = "inconclusive"


def worker_count() -> int:
    """Worker threads allowed by ``MASSERA_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("MASSERA_THREADS", "1")))
    except ValueError:
        return 1


def _map_parallel(fn, items: Sequence, workers: int | None = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 64:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class AnalysisConfig:
    """Tolerances and windows of the classification pipeline.

    ``s_fail_tol`` defaults to ``10 * s_tol`` and ``s_noise_floor`` to
    ``1e-3 * s_tol``; a residual tail below the noise floor counts as
    decayed even when it no longer shrinks relative to the middle third.
    """

    conv_tol: float = 1e-6
    div_threshold: float = 1e-2
    s_tol: float = 1e-4
    tail_fraction: float = 0.25
    decay_ratio: float = 0.5
    s_fail_tol: float | None = None
    s_noise_floor: float | None = None
    iterate_tail_start: float = 0.5
    n_windows: int = 8
    residual_grid_step: float | None = None
    max_residual_samples: int = 100_000
    n_grid: int = 4096
    root_tol: float = 1e-10

    def __post_init__(self):
        for name in ("conv_tol", "div_threshold", "s_tol", "tail_fraction", "decay_ratio", "root_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigurationError("tail_fraction must lie in (0, 1]")
        if not 0 <= self.iterate_tail_start < 1:
            raise ConfigurationError("iterate_tail_start must lie in [0, 1)")
        if self.n_windows < 2 or self.n_grid < 2:
            raise ConfigurationError("n_windows and n_grid must be at least 2")

    @property
    def fail_tol(self) -> float:
        return 10 * self.s_tol if self.s_fail_tol is None else self.s_fail_tol

    @property
    def noise_floor(self) -> float:
        return 1e-3 * self.s_tol if self.s_noise_floor is None else self.s_noise_floor

    def as_dict(self) -> dict:
        out = asdict(self)
        out["s_fail_tol"] = self.fail_tol
        out["s_noise_floor"] = self.noise_floor
        return out


# -- period map ----------------------------------------------------------------


class PeriodMapBlowUp(ArithmeticError):
    def __init__(self, u: float, value: float):
        self.u = u
        self.value = value
        super().__init__(f"period map blew up from u={u!r} (reached {value!r})")


class PeriodMap:
    """``u -> phi(tau, u)`` for the limiting periodic equation, started at ``t = 0``.

    Results are memoized; the cache is guarded by a lock and, since values
    are deterministic, concurrent writers of one key store identical values.
    """

    def __init__(self, source: ScalarField, tau: float, cfg: IntegratorConfig | None = None):
        self.source = source
        self.tau = int(tau) if source.kind == "map" else float(tau)
        self.cfg = cfg or IntegratorConfig()
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()
        self._reverse = reverse_field(source, self.tau) if source.kind == "ode" else None

    @property
    def kind(self) -> str:
        return self.source.kind

    def __call__(self, u: float) -> float:
        u = float(u)
        with self._lock:
            hit = self._cache.get(u)
        if hit is not None:
            return hit
        value, blew_up = advance(self.source, u, 0, self.tau, self.cfg)
        if blew_up:
            raise PeriodMapBlowUp(u, value)
        with self._lock:
            self._cache[u] = value
        return value

    def displacement(self, u: float) -> float:
        return self(u) - u

    def power(self, u: float, k: int) -> float:
        for _ in range(k):
            u = self(u)
        return u

    def inverse(self, u: float) -> float:
        """``P^{-1}(u)``: backward integration for ODEs, stepwise bisection for maps.

        Map inversion assumes every step ``x -> f(k, x)`` is strictly
        increasing near the preimage.
        """
        if self.kind == "ode":
            value, blew_up = advance(self._reverse, u, 0.0, self.tau, self.cfg)
            if blew_up:
                raise PeriodMapBlowUp(u, value)
            return value
        fn = self.source.fn
        y = float(u)
        for k in range(self.tau - 1, -1, -1):
            y = _invert_increasing(lambda v: fn(float(k), v), y, self.cfg.x_max)
        return y

    @property
    def cache_size(self) -> int:
        return len(self._cache)


def _invert_increasing(step, target: float, x_max: float) -> float:
    # grow each side of the bracket separately so it stays clear of poles
    lo_w = hi_w = 1e-3 * max(1.0, abs(target))
    lo, hi = target - lo_w, target + hi_w
    while step(lo) > target:
        lo_w *= 2
        if lo_w > x_max:
            raise ArithmeticError(f"no preimage of {target!r} within |x| <= {x_max}")
        lo = target - lo_w
    while step(hi) < target:
        hi_w *= 2
        if hi_w > x_max:
            raise ArithmeticError(f"no preimage of {target!r} within |x| <= {x_max}")
        hi = target + hi_w
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if step(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _is_periodic(field_: ScalarField, tau: float) -> bool:
    try:
        d = split_asymptotic(field_.kind, field_.f, tau)
    except ConfigurationError:
        return False
    return d.remainder == Num(0.0)


def build_period_map(field_: ScalarField, tau: float | None = None, cfg: IntegratorConfig | None = None) -> PeriodMap:
    """Period map of the limiting equation of ``field_``.

    Raises
    ------
    ConfigurationError
        If the field has no decomposition and is not itself ``tau``-periodic,
        or ``tau`` disagrees with the decomposition.
    """
    if field_.decomposition is not None:
        d = field_.decomposition
        if tau is not None and not math.isclose(float(tau), float(d.tau), rel_tol=1e-12):
            raise ConfigurationError(f"tau={tau} does not match the decomposition period {d.tau}")
        return PeriodMap(field_.limiting(), d.tau, cfg)
    if tau is None:
        raise ConfigurationError("field has no decomposition; a period tau is required")
    if not _is_periodic(field_, tau):
        raise ConfigurationError(f"field has no periodic part and is not verified {tau}-periodic")
    return PeriodMap(field_, tau, cfg)


class Orbit(list):
    """List of iterates; ``blew_up`` marks a sequence cut short by blow-up."""

    blew_up: bool = False


def iterates(pm: PeriodMap, u0: float, k_max: int) -> Orbit:
    """``[u0, P(u0), ..., P^k_max(u0)]``, truncated at blow-up."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    out = Orbit([float(u0)])
    u = float(u0)
    for _ in range(k_max):
        try:
            u = pm(u)
        except PeriodMapBlowUp:
            out.blew_up = True
            break
        out.append(u)
    return out


def check_monotone(pm, pairs: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    """Pairs ``u1 < u2`` with ``P(u1) >= P(u2) - 1e-12`` (sampled order violations)."""
    bad = []
    for u1, u2 in pairs:
        if not u1 < u2:
            raise ValueError(f"pair ({u1}, {u2}) is not ordered")
        if pm(u1) >= pm(u2) - 1e-12:
            bad.append((u1, u2))
    return bad


# -- residuals and iterate tails ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class Series:
    """Sampled scalar series with CSV export (header ``<index_name>,<value_name>``)."""

    index: np.ndarray
    values: np.ndarray
    index_name: str = "t"
    value_name: str = "r"

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.index.tolist(), self.values.tolist()))

    def to_csv(self, path) -> None:
        integer_index = self.index_name == "k"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.index_name, self.value_name])
            for i, v in zip(self.index.tolist(), self.values.tolist()):
                writer.writerow([str(int(i)) if integer_index else f"{i:.17g}", f"{v:.17g}"])


def residual_series(traj: Trajectory, tau: float, grid_step: float | None = None, max_samples: int = 100_000) -> Series:
    """``r(t) = |phi(t + tau) - phi(t)|`` on a uniform grid over ``[t0, t_end - tau]``.

    ``grid_step`` defaults to ``tau / 8`` (one step for maps), coarsened so at
    most ``max_samples`` points are taken.
    """
    span = traj.t_end - traj.t0
    if not span > tau:
        raise ValueError(f"trajectory horizon {span} does not exceed tau={tau}")
    usable = span - tau
    if traj.kind == "map":
        tau = int(tau)
        step = 1 if grid_step is None else max(1, int(grid_step))
        step = max(step, math.ceil((usable + 1) / max_samples))
        k = np.arange(0, int(usable) + 1, step)
        r = np.abs(traj.x[k + tau] - traj.x[k])
        return Series(traj.t[k].copy(), r)
    step = tau / 8 if grid_step is None else float(grid_step)
    if not step > 0:
        raise ValueError("grid_step must be positive")
    step = max(step, usable / max_samples)
    n = int(math.floor(usable / step)) + 1
    ts = traj.t0 + step * np.arange(n)
    ts = ts[ts <= traj.t_end - tau]
    r = np.abs(sample(traj, ts + tau) - sample(traj, ts))
    return Series(ts, r)


@dataclass(frozen=True)
class SCheckResult:
    status: SCheck
    tail_sup: float
    middle_sup: float


def classify_s_asymptotic(
    residuals,
    s_tol: float,
    tail_fraction: float = 0.25,
    decay_ratio: float = 0.5,
    fail_tol: float | None = None,
    noise_floor: float | None = None,
) -> SCheckResult:
    """Decide whether ``|phi(t + tau) - phi(t)|`` has decayed.

    PASS needs the sup over the trailing ``tail_fraction`` of the samples
    below ``s_tol`` and at most ``decay_ratio`` times the sup over the middle
    third (or below ``noise_floor``). FAIL when the tail sup reaches
    ``fail_tol`` (default ``10 * s_tol``); INCONCLUSIVE otherwise.
    """
    r = np.asarray(residuals.values if isinstance(residuals, Series) else residuals, dtype=float)
    if r.ndim == 2:
        r = r[:, 1]
    if r.size == 0:
        raise ValueError("residual series is empty")
    fail_tol = 10 * s_tol if fail_tol is None else fail_tol
    noise_floor = 1e-3 * s_tol if noise_floor is None else noise_floor
    n = r.size
    tail = r[n - max(1, math.ceil(tail_fraction * n)) :]
    middle = r[n // 3 : max(n // 3 + 1, (2 * n) // 3)]
    tail_sup = float(tail.max())
    middle_sup = float(middle.max())
    if tail_sup < s_tol and (tail_sup <= decay_ratio * middle_sup or tail_sup <= noise_floor):
        status = SCheck.PASS
    elif tail_sup >= fail_tol:
        status = SCheck.FAIL
    else:
        status = SCheck.INCONCLUSIVE
    return SCheckResult(status, tail_sup, middle_sup)


@dataclass(frozen=True)
class ConvergenceResult:
    status: Convergence
    span: float
    limit: float | None
    window_spans: tuple[float, float]


def classify_asymptotic(iterate_tail: Sequence[float], conv_tol: float = 1e-6, div_threshold: float = 1e-2) -> ConvergenceResult:
    """Convergence test for the tail of ``phi(k tau)``.

    CONVERGED (limit = tail mean) when the tail span is below ``conv_tol``;
    NOT_CONVERGED when both halves of the tail span more than
    ``div_threshold``; INCONCLUSIVE otherwise.
    """
    tail = np.asarray(iterate_tail, dtype=float)
    if tail.size < 10:
        raise ValueError("iterate tail needs at least 10 entries")
    span = float(tail.max() - tail.min())
    half = tail.size // 2
    spans = (float(np.ptp(tail[:half])), float(np.ptp(tail[half:])))
    if span < conv_tol:
        return ConvergenceResult(Convergence.CONVERGED, span, float(tail.mean()), spans)
    if min(spans) > div_threshold:
        return ConvergenceResult(Convergence.NOT_CONVERGED, span, None, spans)
    return ConvergenceResult(Convergence.INCONCLUSIVE, span, None, spans)


@dataclass(frozen=True)
class LimitSetEstimate:
    """Estimate ``[alpha, beta]`` of the set of accumulation values at ``+inf``.

    ``windows`` lists ``(T_start, T_end, min, max)`` over nested tails.
    """

    alpha: float
    beta: float
    windows: tuple[tuple[float, float, float, float], ...]


def _dense_points(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    if traj.kind == "map" or len(traj.t) < 2:
        return traj.t, traj.x
    theta = np.array([0.2, 0.4, 0.6, 0.8])
    h = np.diff(traj.t)
    inner_t = (traj.t[:-1, None] + theta[None, :] * h[:, None]).ravel()
    inner_t = np.minimum(inner_t, traj.t_end)
    inner_x = sample(traj, inner_t)
    t = np.concatenate([traj.t, inner_t])
    x = np.concatenate([traj.x, inner_x])
    order = np.argsort(t, kind="stable")
    return t[order], x[order]


def estimate_delta(traj: Trajectory, n_windows: int = 8, last_tail_start: float = 0.5) -> LimitSetEstimate:
    """Min and max of the solution over nested tails ``[T_i, t_end]``.

    ``T_i`` runs evenly from ``t0`` to ``t0 + last_tail_start * horizon``.
    The extremes are taken over one shared sample set (nodes plus four
    dense-output points per step), so window minima are nondecreasing and
    maxima nonincreasing exactly.
    """
    if n_windows < 2:
        raise ValueError("n_windows must be at least 2")
    t, x = _dense_points(traj)
    horizon = traj.t_end - traj.t0
    starts = traj.t0 + horizon * last_tail_start * np.arange(n_windows) / (n_windows - 1)
    # suffix extremes over the shared samples
    suffix_min = np.minimum.accumulate(x[::-1])[::-1]
    suffix_max = np.maximum.accumulate(x[::-1])[::-1]
    windows = []
    for T in starts:
        i = int(np.searchsorted(t, T, side="left"))
        i = min(i, len(t) - 1)
        windows.append((float(T), traj.t_end, float(suffix_min[i]), float(suffix_max[i])))
    lo, hi = windows[-1][2], windows[-1][3]
    return LimitSetEstimate(min(lo, hi), max(lo, hi), tuple(windows))


# -- fixed points ------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPointRecord:
    u_star: float
    residual: float
    transverse: bool
    stability: Stability = Stability.INCONCLUSIVE
    isolation_gap: float = math.inf
    probe: float | None = None


@dataclass(frozen=True)
class FixedPointScan:
    """Fixed points of ``P`` found on a grid, plus intervals where ``P(u) = u`` throughout."""

    records: tuple[FixedPointRecord, ...]
    continuum: tuple[tuple[float, float], ...] = ()
    grid: tuple[float, float, int] = (0.0, 0.0, 0)
    failures: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def has_continuum(self) -> bool:
        return bool(self.continuum)


def _safe_displacement(pm: PeriodMap, u: float) -> float:
    try:
        return pm(u) - u
    except (PeriodMapBlowUp, IntegrationError, MapIterationError, ArithmeticError):
        return math.nan


def _bisect_root(g, a: float, b: float, ga: float, gb: float, root_tol: float) -> tuple[float, float]:
    best = (a, ga) if abs(ga) <= abs(gb) else (b, gb)
    for _ in range(400):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        gm = g(mid)
        if not math.isfinite(gm):
            break
        if abs(gm) < abs(best[1]):
            best = (mid, gm)
        if gm == 0.0 or (b - a <= root_tol and abs(gm) <= root_tol):
            break
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b, gb = mid, gm
    return best[0], abs(best[1])


def find_fixed_points(
    pm: PeriodMap,
    lo: float,
    hi: float,
    n_grid: int = 4096,
    root_tol: float = 1e-10,
    classify: bool = False,
) -> FixedPointScan:
    """Roots of ``g(u) = P(u) - u`` on ``[lo, hi]``.

    Sign changes of ``g`` on a uniform grid are refined by bisection.
    Isolated grid points with ``|g| < root_tol`` and no sign change are
    tangency candidates (``transverse=False``); runs of two or more such
    points are reported as continuum intervals. With ``classify=True``
    each transverse record also gets a stability tag.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    grid = np.linspace(lo, hi, n_grid)
    g = np.array(_map_parallel(lambda u: _safe_displacement(pm, float(u)), grid.tolist()))
    failures = int(np.sum(~np.isfinite(g)))
    small = np.isfinite(g) & (np.abs(g) < root_tol)
    disp = lambda u: _safe_displacement(pm, u)  # noqa: E731

    roots: list[tuple[float, float, bool]] = []
    continuum: list[tuple[float, float]] = []
    i = 0
    while i < n_grid:
        if small[i]:
            j = i
            while j + 1 < n_grid and small[j + 1]:
                j += 1
            if j > i:
                continuum.append((float(grid[i]), float(grid[j])))
            else:
                left = g[i - 1] if i > 0 else math.nan
                right = g[i + 1] if i + 1 < n_grid else math.nan
                if np.isfinite(left) and np.isfinite(right) and (left > 0) != (right > 0):
                    u, res = _bisect_root(disp, grid[i - 1], grid[i + 1], left, right, root_tol)
                    roots.append((u, res, True))
                else:
                    roots.append((float(grid[i]), abs(float(g[i])), False))
            i = j + 1
            continue
        if i + 1 < n_grid and not small[i + 1] and np.isfinite(g[i]) and np.isfinite(g[i + 1]) and (g[i] > 0) != (g[i + 1] > 0):
            u, res = _bisect_root(disp, grid[i], grid[i + 1], g[i], g[i + 1], root_tol)
            roots.append((u, res, True))
        i += 1

    anchors = [r[0] for r in roots] + [e for c in continuum for e in c]
    records = []
    for k, (u, res, transverse) in enumerate(roots):
        others = [abs(a - u) for m, a in enumerate(anchors) if m != k]
        gap = min(others) if others else math.inf
        records.append(FixedPointRecord(float(u), float(res), transverse, Stability.INCONCLUSIVE, float(gap)))
    if classify:
        spacing = (hi - lo) / (n_grid - 1)
        out = []
        for rec in records:
            probe = default_probe(rec, spacing)
            out.append(
                FixedPointRecord(
                    rec.u_star, rec.residual, rec.transverse, classify_stability(pm, rec, probe, root_tol), rec.isolation_gap, probe
                )
            )
        records = out
    return FixedPointScan(tuple(records), tuple(continuum), (float(lo), float(hi), int(n_grid)), failures)


def default_probe(rec: FixedPointRecord, grid_spacing: float) -> float:
    """Probe offset for :func:`classify_stability`: a quarter grid cell, below a quarter of the gap."""
    probe = 0.25 * grid_spacing
    if math.isfinite(rec.isolation_gap):
        probe = min(probe, 0.25 * rec.isolation_gap)
    return probe


def _approaches(step, u_star: float, start: float, n: int) -> bool | None:
    u = start
    d0 = abs(start - u_star)
    try:
        for _ in range(n):
            u = step(u)
    except (PeriodMapBlowUp, IntegrationError, MapIterationError, ArithmeticError):
        return False
    if not math.isfinite(u):
        return False
    return abs(u - u_star) < d0


def classify_stability(pm: PeriodMap, fp: FixedPointRecord, probe: float, root_tol: float = 1e-10, n_check: int = 50) -> Stability:
    """Stability tag of a fixed point from the signs of ``P(u* +- probe) - (u* +- probe)``.

    ``(+, -)`` is positively asymptotically stable, ``(-, +)`` negatively
    asymptotically stable (attracting for ``P^{-1}``), equal signs
    semi-stable. The tag is confirmed by ``n_check`` iterations of ``P``
    (or ``P^{-1}`` for the negative case) from both probe points; a
    disagreement or a non-transverse point gives ``inconclusive``.
    """
    if not probe > 0:
        raise ValueError("probe must be positive")
    if math.isfinite(fp.isolation_gap) and probe >= fp.isolation_gap / 2:
        raise ValueError(f"probe {probe} too large for isolation gap {fp.isolation_gap}")
    if not fp.transverse:
        return Stability.INCONCLUSIVE
    u = fp.u_star
    g_minus = _safe_displacement(pm, u - probe)
    g_plus = _safe_displacement(pm, u + probe)
    if not (math.isfinite(g_minus) and math.isfinite(g_plus)):
        return Stability.INCONCLUSIVE
    if abs(g_minus) < root_tol or abs(g_plus) < root_tol:
        return Stability.INCONCLUSIVE
    s_minus, s_plus = g_minus > 0, g_plus > 0
    if s_minus and not s_plus:
        tag, step = Stability.POSITIVE, pm
    elif s_plus and not s_minus:
        tag, step = Stability.NEGATIVE, pm.inverse
    else:
        return Stability.SEMI
    for start in (u - probe, u + probe):
        if not _approaches(step, u, start, n_check):
            return Stability.INCONCLUSIVE
    return tag


# -- the full pipeline ---------------------------------------------------------------


@dataclass
class ClassificationReport:
    verdict: Verdict
    tau: float
    u0: float
    horizon: float
    s_check: SCheckResult | None = None
    convergence: ConvergenceResult | None = None
    residuals: Series | None = None
    iterate_series: Series | None = None
    iterate_limit: float | None = None
    iterate_tail_mean: float | None = None
    delta: LimitSetEstimate | None = None
    fixed_points: FixedPointScan | None = None
    fixed_point_consistency: float | None = None
    parameters_used: dict = field(default_factory=dict)
    evidence_notes: list[str] = field(default_factory=list)
    field_description: dict = field(default_factory=dict)

    @property
    def residual_tail_sup(self) -> float | None:
        return None if self.s_check is None else self.s_check.tail_sup

    @property
    def iterate_tail_span(self) -> float | None:
        return None if self.convergence is None else self.convergence.span

    @property
    def delta_estimate(self) -> tuple[float, float] | None:
        return None if self.delta is None else (self.delta.alpha, self.delta.beta)


def _solve(field_: ScalarField, u0: float, horizon: float, icfg: IntegratorConfig) -> Trajectory:
    if field_.kind == "map":
        return iterate_map(field_, u0, int(horizon), icfg)
    return integrate(field_, u0, 0.0, float(horizon), icfg)


def _iterate_values(traj: Trajectory, tau: float) -> tuple[np.ndarray, np.ndarray]:
    k_max = int(math.floor((traj.t_end - traj.t0) / tau + 1e-12))
    k = np.arange(k_max + 1)
    if traj.kind == "map":
        return k, traj.x[k * int(tau)]
    times = np.minimum(traj.t0 + k * tau, traj.t_end)
    return k, sample(traj, times)


def _refine_limit(pm: PeriodMap, mean: float, span: float, conv_tol: float, root_tol: float) -> float | None:
    g = lambda u: _safe_displacement(pm, u)  # noqa: E731
    g0 = g(mean)
    if not math.isfinite(g0):
        return None
    if g0 == 0.0:
        return mean
    width = max(span, conv_tol)
    for _ in range(12):
        a, b = mean - width, mean + width
        ga, gb = g(a), g(b)
        if math.isfinite(ga) and (ga > 0) != (g0 > 0):
            return _bisect_root(g, a, mean, ga, g0, root_tol)[0]
        if math.isfinite(gb) and (gb > 0) != (g0 > 0):
            return _bisect_root(g, mean, b, g0, gb, root_tol)[0]
        width *= 2
    return None


def _accumulation_values(tail: np.ndarray, count: int = 9) -> np.ndarray:
    return np.unique(np.quantile(tail, np.linspace(0.0, 1.0, count)))


def full_analysis(
    field_: ScalarField,
    u0: float,
    tau: float | None = None,
    horizon: float | None = None,
    acfg: AnalysisConfig | None = None,
    icfg: IntegratorConfig | None = None,
    fixed_point_range: tuple[float, float] | None = None,
) -> ClassificationReport:
    """Classify the solution from ``u0`` of an asymptotically periodic equation.

    Pipeline: solve on ``[0, horizon]`` -> blow-up check -> residual decay
    (S-asymptotic periodicity) -> convergence of ``phi(k tau)`` -> nested
    tail extremes -> verdict. ASYMPTOTICALLY_PERIODIC reports the fixed
    point of the limiting period map closest to the iterate tail as the
    limit; S-asymptotic periodicity with a persistently oscillating
    iterate tail gives NOT_ASYMPTOTICALLY_PERIODIC.
    """
    acfg = acfg or AnalysisConfig()
    icfg = icfg or IntegratorConfig()
    pm = build_period_map(field_, tau, icfg)
    tau = pm.tau
    if horizon is None:
        horizon = 50 * tau
    if horizon < 20 * tau:
        raise ValueError(f"horizon {horizon} is shorter than 20 periods ({20 * tau})")
    report = ClassificationReport(
        Verdict.INCONCLUSIVE,
        tau,
        float(u0),
        float(horizon),
        parameters_used={"analysis": acfg.as_dict(), "integrator": asdict(icfg)},
        field_description=field_.describe(),
    )
    notes = report.evidence_notes
    try:
        traj = _solve(field_, u0, horizon, icfg)
    except (IntegrationError, MapIterationError) as exc:
        notes.append(f"solver failed: {exc}")
        return report
    if traj.blew_up:
        report.verdict = Verdict.UNBOUNDED
        notes.append(f"|x| exceeded x_max={icfg.x_max:g} at t={traj.blowup_time!r}")
        return report

    residuals = residual_series(traj, tau, acfg.residual_grid_step, acfg.max_residual_samples)
    s_check = classify_s_asymptotic(
        residuals, acfg.s_tol, acfg.tail_fraction, acfg.decay_ratio, acfg.fail_tol, acfg.noise_floor
    )
    report.residuals, report.s_check = residuals, s_check

    k, values = _iterate_values(traj, tau)
    report.iterate_series = Series(k.astype(float), values, "k", "u")
    tail = values[int(math.ceil(acfg.iterate_tail_start * (len(values) - 1))) :]
    conv = classify_asymptotic(tail, acfg.conv_tol, acfg.div_threshold)
    report.convergence = conv
    report.delta = estimate_delta(traj, acfg.n_windows)

    if s_check.status is SCheck.PASS:
        reps = _accumulation_values(tail)
        defects = [abs(_safe_displacement(pm, float(v))) for v in reps]
        report.fixed_point_consistency = float(max(defects))
        if not report.fixed_point_consistency <= 10 * acfg.conv_tol:
            notes.append(
                f"tail values are not fixed points of the period map (max |P(v)-v| = {report.fixed_point_consistency:.3g})"
            )

    if s_check.status is SCheck.PASS and conv.status is Convergence.CONVERGED:
        report.iterate_tail_mean = conv.limit
        limit = _refine_limit(pm, conv.limit, conv.span, acfg.conv_tol, acfg.root_tol)
        if limit is None or abs(limit - conv.limit) > max(10 * conv.span, 10 * acfg.conv_tol):
            notes.append("no fixed point of the period map next to the iterate tail; using the tail mean")
            limit = conv.limit
        report.iterate_limit = limit
        end_residual = abs(float(sample(traj, traj.t_end)) - float(sample(traj, traj.t_end - tau)))
        fp_residual = abs(_safe_displacement(pm, limit))
        if fp_residual <= 10 * acfg.conv_tol and end_residual <= acfg.s_tol:
            report.verdict = Verdict.ASYMPTOTICALLY_PERIODIC
        else:
            notes.append(
                f"soundness check failed: |P(p)-p|={fp_residual:.3g}, |phi(T)-phi(T-tau)|={end_residual:.3g}"
            )
    elif s_check.status is SCheck.PASS and conv.status is Convergence.NOT_CONVERGED:
        report.verdict = Verdict.NOT_ASYMPTOTICALLY_PERIODIC
        notes.append("S-asymptotically periodic but phi(k tau) keeps oscillating: no periodic limit")
    elif s_check.status is SCheck.PASS:
        report.verdict = Verdict.S_ASYMPTOTICALLY_PERIODIC
        notes.append("residuals decayed; convergence of phi(k tau) undecided at this horizon")
    else:
        notes.append(f"residual decay test {s_check.status.value} (tail sup {s_check.tail_sup:.3g})")

    if fixed_point_range is not None:
        lo, hi = fixed_point_range
        scan = find_fixed_points(pm, lo, hi, acfg.n_grid, acfg.root_tol, classify=True)
        report.fixed_points = scan
        if scan.has_continuum:
            notes.append("period map fixes whole intervals: periodic solutions are not isolated")
        elif scan.records and all(r.transverse for r in scan.records):
            notes.append("periodic solutions of the limiting equation are isolated in the scanned range")
    return report
