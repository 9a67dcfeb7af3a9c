"""Chain recurrence of a period map restricted to a finite sample.

An edge ``i -> j`` records an epsilon-jump: some iterate ``P^k(p_i)`` with
``n_min <= k <= n_max`` lands within epsilon of ``p_j``. A sample point is
chain recurrent when it lies on a directed cycle of this graph, and a
subset is internally chain transitive when its induced subgraph is
strongly connected with every node on a cycle.

Sample points only stand in for the continuum they are drawn from, so the
jump threshold is reduced by a grid slack (half the largest gap between
consecutive sample points by default). A self-loop therefore certifies
``|P^k(u) - u| < epsilon - slack``.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import IntegrationError, MapIterationError
from .period import PeriodMapBlowUp, _map_parallel

__all__ = [
    "ChainGraph",
    "CRReport",
    "build_chain_graph",
    "chain_recurrent_set",
    "is_internally_chain_transitive",
    "strongly_connected_components",
]


@dataclass(frozen=True, eq=False)
class ChainGraph:
    points: tuple[float, ...]
    epsilon: float
    n_min: int
    n_max: int
    edges: tuple[frozenset, ...]
    # witness[(i, j)] = smallest k realizing the edge
    witness: dict = field(repr=False)
    map_values: tuple[tuple[float, ...], ...] = field(repr=False)
    grid_slack: float = 0.0
    notes: tuple[str, ...] = ()

    @property
    def grid_spacing(self) -> float:
        return float(np.max(np.diff(self.points))) if len(self.points) > 1 else 0.0

    @property
    def effective_epsilon(self) -> float:
        return self.epsilon - self.grid_slack

    def __len__(self) -> int:
        return len(self.points)

    def successors(self, i: int) -> frozenset:
        return self.edges[i]

    def edge_list(self) -> list[tuple[int, int, int]]:
        return [(i, j, self.witness[(i, j)]) for i in range(len(self.points)) for j in sorted(self.edges[i])]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "k_witness"])
            writer.writerows(self.edge_list())


@dataclass(frozen=True)
class CRReport:
    recurrent_indices: frozenset
    scc_partition: tuple[tuple[int, ...], ...]
    internally_transitive: bool | None = None
    grid_spacing: float = 0.0
    epsilon: float = 0.0

    def as_dict(self, points: Sequence[float] | None = None) -> dict:
        out = {
            "recurrent_indices": sorted(self.recurrent_indices),
            "scc_partition": [list(c) for c in self.scc_partition],
            "internally_transitive": self.internally_transitive,
            "grid_spacing": self.grid_spacing,
            "epsilon": self.epsilon,
        }
        if points is not None:
            out["recurrent_points"] = [points[i] for i in sorted(self.recurrent_indices)]
        return out


def _orbit(pm, u: float, n_max: int) -> tuple[list[float], str | None]:
    values = []
    try:
        for _ in range(n_max):
            u = pm(u)
            values.append(u)
    except (PeriodMapBlowUp, IntegrationError, MapIterationError, ArithmeticError) as exc:
        return values, str(exc)
    return values, None


def build_chain_graph(
    pm,
    points: Iterable[float],
    epsilon: float,
    n_min: int = 1,
    n_max: int = 20,
    grid_slack: float | None = None,
) -> ChainGraph:
    """Chain graph of ``pm`` over the sorted, duplicate-free sample ``points``.

    ``pm`` is any callable ``u -> P(u)``. Each ``P^k(point)`` is computed once.
    A point whose orbit cannot be computed up to ``n_max`` keeps only the
    edges realized by the iterates that were obtained; this is noted.
    """
    pts = [float(p) for p in points]
    if not pts:
        raise ValueError("points must be non-empty")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("points must be strictly increasing")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    if grid_slack is None:
        grid_slack = 0.5 * max((b - a for a, b in zip(pts, pts[1:])), default=0.0)
    radius = epsilon - grid_slack
    orbits = _map_parallel(lambda u: _orbit(pm, u, n_max), pts)
    edges = []
    witness = {}
    notes = []
    for i, (values, failure) in enumerate(orbits):
        if failure is not None:
            notes.append(f"point {i} (u={pts[i]!r}): orbit stopped after {len(values)} iterates: {failure}")
        out = set()
        for k in range(n_min, len(values) + 1):
            v = values[k - 1]
            lo = bisect.bisect_left(pts, v - radius)
            hi = bisect.bisect_right(pts, v + radius)
            for j in range(lo, hi):
                if abs(v - pts[j]) < radius and j not in out:
                    out.add(j)
                    witness[(i, j)] = k
        edges.append(frozenset(out))
    return ChainGraph(
        tuple(pts),
        float(epsilon),
        int(n_min),
        int(n_max),
        tuple(edges),
        witness,
        tuple(tuple(v) for v, _ in orbits),
        float(grid_slack),
        tuple(notes),
    )


def strongly_connected_components(successors: Sequence[Iterable[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components come out in reverse topological order."""
    n = len(successors)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    adj = [sorted(s) for s in successors]
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(adj[v]):
                work[-1] = (v, pos + 1)
                w = adj[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
    return components


def chain_recurrent_set(g: ChainGraph) -> CRReport:
    """Sample points lying on a cycle: members of an SCC that contains an edge."""
    comps = strongly_connected_components(g.edges)
    recurrent = set()
    for comp in comps:
        if len(comp) > 1 or comp[0] in g.edges[comp[0]]:
            recurrent.update(comp)
    partition = tuple(tuple(c) for c in sorted(comps))
    return CRReport(frozenset(recurrent), partition, None, g.grid_spacing, g.epsilon)


def is_internally_chain_transitive(g: ChainGraph, subset: Iterable[int]) -> bool:
    """True iff the subgraph induced on ``subset`` is strongly connected with every node on a cycle."""
    nodes = sorted(set(subset))
    if not nodes:
        raise ValueError("subset must be non-empty")
    if nodes[0] < 0 or nodes[-1] >= len(g.points):
        raise ValueError("subset indices out of range")
    pos = {v: i for i, v in enumerate(nodes)}
    induced = [[pos[w] for w in g.edges[v] if w in pos] for v in nodes]
    comps = strongly_connected_components(induced)
    if len(comps) != 1:
        return False
    if len(nodes) == 1:
        return 0 in induced[0]
    return True
