"""Compact-open (Bebutov) distance between sampled functions.

For continuous ``phi, psi`` the distance is

    d(phi, psi) = sup_{L > 0} min( M(L), 1/L ),   M(L) = max_{|t| <= L} |phi(t) - psi(t)|,

with ``t`` restricted to the domain (``t >= 0`` on the half line). ``M`` is
nondecreasing and ``1/L`` decreasing, so the sup sits where the two graphs
cross, ``d = 1/L*`` with ``L* = inf{L : M(L) >= 1/L}``; it is located by
bisection on that monotone predicate. As a consequence ``d < eps``,
``d = eps`` or ``d > eps`` exactly when ``M(1/eps)`` compares to ``eps`` the
same way, which :func:`check_lemma_l1` checks on both sides independently.

Functions are piecewise linear between samples (exact at integers for
sequences); every result carries the grid step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SampledFunction",
    "BebutovDistance",
    "Relation",
    "TailShiftKind",
    "TailShiftResult",
    "bebutov_distance",
    "sup_gap",
    "check_lemma_l1",
    "shift_function",
    "tail_shift_classification",
]

DOMAINS = ("half_line", "full_line", "integers")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values on the uniform grid ``offset + h * i``, ``i = 0 .. n-1``."""

    domain_kind: str
    h: float
    offset: float
    values: np.ndarray

    def __post_init__(self):
        if self.domain_kind not in DOMAINS:
            raise ValueError(f"domain_kind must be one of {DOMAINS}")
        if not self.h > 0:
            raise ValueError("grid step must be positive")
        if self.domain_kind == "integers" and (self.h != 1 or self.offset != int(self.offset)):
            raise ValueError("sequences live on consecutive integers")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, fn: Callable, start: float, stop: float, h: float, domain_kind: str = "full_line") -> "SampledFunction":
        n = int(math.floor((stop - start) / h + 1e-9)) + 1
        t = start + h * np.arange(n)
        return cls(domain_kind, h, start, np.array([fn(float(s)) for s in t], dtype=float))

    @classmethod
    def constant(cls, c: float, start: float, stop: float, h: float, domain_kind: str = "full_line") -> "SampledFunction":
        n = int(math.floor((stop - start) / h + 1e-9)) + 1
        return cls(domain_kind, h, start, np.full(n, float(c)))

    @classmethod
    def from_csv(cls, path, domain_kind: str = "full_line") -> "SampledFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows and rows[0] and rows[0][0].strip() == "t":
            rows = rows[1:]
        t = np.array([float(r[0]) for r in rows])
        v = np.array([float(r[1]) for r in rows])
        if len(t) < 2:
            return cls(domain_kind, 1.0, float(t[0]), v)
        steps = np.diff(t)
        h = float(steps.mean())
        if np.max(np.abs(steps - h)) > 1e-9 * max(1.0, abs(h)):
            raise ValueError("CSV samples are not on a uniform grid")
        return cls(domain_kind, h, float(t[0]), v)

    @property
    def times(self) -> np.ndarray:
        return self.offset + self.h * np.arange(len(self.values))

    @property
    def start(self) -> float:
        return float(self.offset)

    @property
    def stop(self) -> float:
        return float(self.offset + self.h * (len(self.values) - 1))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.start - 1e-12) or np.any(t > self.stop + 1e-12):
            raise ValueError(f"time outside [{self.start}, {self.stop}]")
        if self.domain_kind == "integers":
            return self.values[np.rint(t - self.offset).astype(np.int64)]
        return np.interp(t, self.times, self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value"])
            for t, v in zip(self.times.tolist(), self.values.tolist()):
                writer.writerow([f"{t:.17g}", f"{v:.17g}"])


def _aligned(phi: SampledFunction, psi: SampledFunction):
    if phi.domain_kind != psi.domain_kind:
        raise ValueError("functions live on different domains")
    if not math.isclose(phi.h, psi.h, rel_tol=1e-12):
        raise ValueError("functions use different grid steps")
    shift = (psi.offset - phi.offset) / phi.h
    k = round(shift)
    if abs(shift - k) > 1e-9:
        raise ValueError("grids are not aligned")
    start = max(phi.start, psi.start)
    stop = min(phi.stop, psi.stop)
    if stop < start:
        raise ValueError("sample windows do not overlap")
    i0 = int(round((start - phi.offset) / phi.h))
    j0 = int(round((start - psi.offset) / psi.h))
    n = int(round((stop - start) / phi.h)) + 1
    t = start + phi.h * np.arange(n)
    diff = phi.values[i0 : i0 + n] - psi.values[j0 : j0 + n]
    return t, diff


class _Gap:
    """``M(L) = max_{|t| <= L} |phi - psi|`` over the sampled window; ``diff`` is signed."""

    def __init__(self, t: np.ndarray, diff: np.ndarray, domain_kind: str):
        self.domain_kind = domain_kind
        self.t = t
        self.diff = diff
        if domain_kind == "half_line":
            keep = t >= 0
            self.t, self.diff = t[keep], diff[keep]
            if self.t.size == 0:
                raise ValueError("no samples at t >= 0")
        self.reach = float(np.min(np.abs([self.t[0], self.t[-1]]))) if domain_kind == "full_line" else float(self.t[-1])
        if domain_kind == "full_line" and not (self.t[0] <= 0 <= self.t[-1]):
            raise ValueError("full-line functions must be sampled around t = 0")
        order = np.argsort(np.abs(self.t), kind="stable")
        self.abs_sorted = np.abs(self.t)[order]
        self.prefix_max = np.maximum.accumulate(np.abs(self.diff[order]))

    def __call__(self, L: float) -> float:
        L = min(L, self.reach)
        if L < 0:
            return 0.0
        k = int(np.searchsorted(self.abs_sorted, L, side="right"))
        best = float(self.prefix_max[k - 1]) if k > 0 else 0.0
        if self.domain_kind == "integers":
            return best
        # piecewise-linear |phi - psi| is maximal at nodes or at the window edges
        for edge in ((-L, L) if self.domain_kind == "full_line" else (L,)):
            best = max(best, abs(float(np.interp(edge, self.t, self.diff))))
        return best


def sup_gap(phi: SampledFunction, psi: SampledFunction, L: float) -> float:
    """``max_{|t| <= L} |phi(t) - psi(t)|`` over the common window."""
    t, diff = _aligned(phi, psi)
    return _Gap(t, diff, phi.domain_kind)(L)


@dataclass(frozen=True)
class BebutovDistance:
    value: float
    truncated: bool
    grid_step: float
    crossing: float | None

    def __float__(self) -> float:
        return self.value


def bebutov_distance(phi: SampledFunction, psi: SampledFunction, L_cap: float | None = None) -> BebutovDistance:
    """Sup-min distance, searched over ``L`` in ``(0, L_cap]``.

    If ``M(L) < 1/L`` up to ``L_cap`` (or the end of the sampled window)
    the crossing lies beyond the data and ``M(L_cap)``, a lower bound, is
    returned with ``truncated=True``.
    """
    t, diff = _aligned(phi, psi)
    M = _Gap(t, diff, phi.domain_kind)
    cap = M.reach if L_cap is None else min(float(L_cap), M.reach)
    if not cap > 0:
        raise ValueError("search window for L is empty")
    if not np.any(diff != 0):
        return BebutovDistance(0.0, False, phi.h, None)
    if M(cap) < 1.0 / cap:
        return BebutovDistance(M(cap), True, phi.h, None)
    # predicate M(L) >= 1/L is monotone in L; bracket its switch point
    lo = min(cap, 1.0 / max(float(np.abs(diff).max()), 1e-300))
    while lo > 0 and M(lo) >= 1.0 / lo:
        lo *= 0.5
    hi = cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if M(mid) >= 1.0 / mid:
            hi = mid
        else:
            lo = mid
    value = max(min(M(lo), 1.0 / lo), min(M(hi), 1.0 / hi)) if lo > 0 else 1.0 / hi
    return BebutovDistance(float(value), False, phi.h, float(hi))


class Relation(str, Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


def _relation(a: float, b: float, tol: float) -> Relation:
    if abs(a - b) <= tol:
        return Relation.EQUAL
    return Relation.LESS if a < b else Relation.GREATER


def check_lemma_l1(phi: SampledFunction, psi: SampledFunction, eps: float, tol: float = 1e-9) -> Relation:
    """Compare ``d(phi, psi)`` with ``eps`` and ``max_{|t| <= 1/eps} |phi - psi|`` with ``eps``.

    The two comparisons must agree (equality within ``tol``); the agreed
    relation is returned.

    Raises
    ------
    ValueError
        If the sampled window does not reach ``|t| = 1/eps``.
    AssertionError
        If the two sides disagree.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t, diff = _aligned(phi, psi)
    M = _Gap(t, diff, phi.domain_kind)
    if M.reach < 1.0 / eps:
        raise ValueError(f"window reaches |t| <= {M.reach}, needs {1.0 / eps}")
    d = bebutov_distance(phi, psi, 1.0 / eps)
    # beyond 1/eps the min is below eps, so capping the search there loses nothing relevant
    left = _relation(d.value, eps, tol)
    right = _relation(M(1.0 / eps), eps, tol)
    if left is not right:
        raise AssertionError(f"d={d.value!r} gives {left.value}, max over |t|<=1/eps gives {right.value}")
    return left


def shift_function(phi: SampledFunction, h: float) -> SampledFunction:
    """``phi^h(t) = phi(t + h)`` re-gridded onto the original grid positions that remain in range."""
    if phi.domain_kind == "integers":
        if h != int(h):
            raise ValueError("sequences shift by whole steps")
        return SampledFunction("integers", 1.0, float(phi.offset - int(h)), phi.values)
    grid = phi.times
    new_t = grid[(grid + h >= phi.start - 1e-12) & (grid + h <= phi.stop + 1e-12)]
    if new_t.size == 0:
        raise ValueError("shifted window is empty")
    vals = np.interp(new_t + h, phi.times, phi.values)
    return SampledFunction(phi.domain_kind, phi.h, float(new_t[0]), vals)


class TailShiftKind(str, Enum):
    CONSTANT = "constant"
    TAU_PERIODIC = "tau_periodic"
    NONE = "none"


@dataclass(frozen=True)
class TailShiftResult:
    kind: TailShiftKind
    constants: tuple[float, ...]
    per_shift: tuple[str, ...]


def tail_shift_classification(
    traj,
    h_list: Sequence[float],
    window: float,
    const_tol: float,
    tau: float | None = None,
    n_samples: int = 2001,
) -> TailShiftResult:
    """Classify the windows ``t -> phi(h + t)``, ``0 <= t <= window``, for each shift ``h``.

    A window is constant when its oscillation is within ``const_tol`` and
    ``tau``-periodic when ``|phi(t + tau) - phi(t)| <= const_tol`` across it.
    The result is CONSTANT when every window is constant (``constants``
    holds their means), TAU_PERIODIC when every window is at least
    periodic, NONE otherwise.
    """
    from .dynamics import sample

    if not h_list:
        raise ValueError("h_list must be non-empty")
    labels, consts = [], []
    for h in h_list:
        if h < traj.t0 or h + window > traj.t_end:
            raise ValueError(f"shift {h} with window {window} leaves the trajectory")
        if traj.kind == "map":
            ts = np.arange(math.ceil(h), math.floor(h + window) + 1, dtype=float)
        else:
            ts = np.linspace(h, h + window, n_samples)
        vals = np.asarray(sample(traj, ts))
        if np.ptp(vals) <= const_tol:
            labels.append(TailShiftKind.CONSTANT.value)
            consts.append(float(vals.mean()))
            continue
        if tau is not None and window > tau:
            inner = ts[ts + tau <= h + window]
            r = np.abs(np.asarray(sample(traj, inner + tau)) - np.asarray(sample(traj, inner)))
            if r.size and r.max() <= const_tol:
                labels.append(TailShiftKind.TAU_PERIODIC.value)
                continue
        labels.append(TailShiftKind.NONE.value)
    if all(lab == TailShiftKind.CONSTANT.value for lab in labels):
        kind = TailShiftKind.CONSTANT
    elif all(lab != TailShiftKind.NONE.value for lab in labels):
        kind = TailShiftKind.TAU_PERIODIC
    else:
        kind = TailShiftKind.NONE
    return TailShiftResult(kind, tuple(consts), tuple(labels))
