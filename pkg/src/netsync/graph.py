"""Interaction graphs and constants C with  sum_pairs phi <= C * sum_edges phi.

Vertices are numbered 1..n. Both sums run over unordered pairs; since phi
is symmetric this gives the same constant as summing both orientations.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .domain import Sampler

Edge = tuple[int, int]
Path = tuple[int, ...]

EXHAUSTIVE_CAP = 7


class GraphError(ValueError):
    pass


def _norm_edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class UndirectedGraph:
    """Connected simple undirected graph on vertices 1..n."""

    n: int
    edges: frozenset[Edge]

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GraphError(f"graph needs n >= 2 vertices, got {self.n}")
        normalized = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge ({i}, {j}) has a vertex outside 1..{self.n}")
            normalized.add(_norm_edge(i, j))
        object.__setattr__(self, "edges", frozenset(normalized))
        seen = self._component(1)
        if len(seen) < self.n:
            missing = sorted(set(range(1, self.n + 1)) - seen)
            raise GraphError(
                f"graph is disconnected: vertices {missing} unreachable from vertex 1 "
                f"(component of 1: {sorted(seen)})"
            )

    def _component(self, start: int) -> set[int]:
        adj = {v: [] for v in range(1, self.n + 1)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen, stack = {start}, [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    @cached_property
    def edge_list(self) -> list[Edge]:
        return sorted(self.edges)

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj = {v: [] for v in range(1, self.n + 1)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return {v: tuple(sorted(ws)) for v, ws in adj.items()}

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def has_edge(self, i: int, j: int) -> bool:
        return _norm_edge(i, j) in self.edges

    @property
    def pairs(self) -> list[Edge]:
        return list(itertools.combinations(range(1, self.n + 1), 2))

    @cached_property
    def distances(self) -> np.ndarray:
        """(n+1) x (n+1) hop-count matrix; row/column 0 unused."""
        dist = np.full((self.n + 1, self.n + 1), -1, dtype=int)
        for s in range(1, self.n + 1):
            dist[s, s] = 0
            queue = deque([s])
            while queue:
                v = queue.popleft()
                for w in self.adjacency[v]:
                    if dist[s, w] < 0:
                        dist[s, w] = dist[s, v] + 1
                        queue.append(w)
        return dist

    def relabel(self, perm: Mapping[int, int]) -> "UndirectedGraph":
        return UndirectedGraph(self.n, frozenset(_norm_edge(perm[i], perm[j]) for i, j in self.edges))

    def to_text(self) -> str:
        lines = [f"n {self.n}"] + [f"{i} {j}" for i, j in self.edge_list]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "UndirectedGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or rows[0][0] != "n" or len(rows[0]) != 2:
            raise GraphError("edge-list text must start with a line 'n <count>'")
        n = int(rows[0][1])
        edges = []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != 2:
                raise GraphError(f"edge line {lineno}: expected 'i j', got {' '.join(row)!r}")
            edges.append((int(row[0]), int(row[1])))
        return build_graph("custom", n, edges)


def star(n: int) -> UndirectedGraph:
    """Star centered at vertex 1."""
    return UndirectedGraph(n, frozenset((1, k) for k in range(2, n + 1)))


def path(n: int) -> UndirectedGraph:
    return UndirectedGraph(n, frozenset((k, k + 1) for k in range(1, n)))


def cycle(n: int) -> UndirectedGraph:
    if n < 3:
        raise GraphError("a simple cycle needs n >= 3")
    return UndirectedGraph(n, frozenset([(k, k + 1) for k in range(1, n)] + [(1, n)]))


def complete(n: int) -> UndirectedGraph:
    return UndirectedGraph(n, frozenset(itertools.combinations(range(1, n + 1), 2)))


FAMILIES = {"star": star, "path": path, "cycle": cycle, "complete": complete}


def build_graph(family: str, n: int, edges=None) -> UndirectedGraph:
    """Build a named family member, or a validated ``custom`` graph from an edge list."""
    if family == "custom":
        if edges is None:
            raise GraphError("custom graph needs an edge list")
        seen = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            key = _norm_edge(i, j)
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        return UndirectedGraph(n, frozenset(seen))
    if edges is not None:
        raise GraphError(f"family {family!r} does not take an edge list")
    try:
        return FAMILIES[family](n)
    except KeyError:
        raise GraphError(f"unknown graph family {family!r}; expected one of {sorted(FAMILIES) + ['custom']}") from None


def random_connected_graph(n: int, rng: np.random.Generator, extra_edge_prob: float = 0.3) -> UndirectedGraph:
    """Random spanning tree plus independent extra edges."""
    order = rng.permutation(n) + 1
    edges = set()
    for k in range(1, n):
        edges.add(_norm_edge(int(order[k]), int(order[rng.integers(k)])))
    for i, j in itertools.combinations(range(1, n + 1), 2):
        if rng.uniform() < extra_edge_prob:
            edges.add((i, j))
    return UndirectedGraph(n, frozenset(edges))


def diameter(g: UndirectedGraph) -> int:
    return int(g.distances[1:, 1:].max())


# ---------------------------------------------------------------- path choices


@dataclass(frozen=True)
class PathChoice:
    """One simple path per unordered vertex pair, oriented from the smaller label."""

    paths: Mapping[Edge, Path]

    def __getitem__(self, pair: Edge) -> Path:
        i, j = pair
        p = self.paths[_norm_edge(i, j)]
        return p if p[0] == i else tuple(reversed(p))

    def validate(self, g: UndirectedGraph) -> None:
        expected = set(g.pairs)
        if set(self.paths) != expected:
            missing = sorted(expected - set(self.paths))
            extra = sorted(set(self.paths) - expected)
            raise GraphError(f"path choice must cover every pair exactly once (missing {missing}, extra {extra})")
        for (i, j), p in self.paths.items():
            if p[0] != i or p[-1] != j:
                raise GraphError(f"path for pair {(i, j)} must run from {i} to {j}, got {p}")
            if len(set(p)) != len(p):
                raise GraphError(f"path {p} repeats a vertex")
            for a, b in zip(p, p[1:]):
                if not g.has_edge(a, b):
                    raise GraphError(f"path {p} uses non-edge ({a}, {b})")


def lexicographic_shortest_path(g: UndirectedGraph, i: int, j: int) -> Path:
    """Among shortest i->j paths, the lexicographically smallest vertex sequence."""
    dist = g.distances
    p = [i]
    while p[-1] != j:
        v = p[-1]
        p.append(min(w for w in g.neighbors(v) if dist[w, j] == dist[v, j] - 1))
    return tuple(p)


def simple_paths(g: UndirectedGraph, i: int, j: int) -> list[Path]:
    out = []

    def walk(p: list[int], visited: set[int]):
        v = p[-1]
        if v == j:
            out.append(tuple(p))
            return
        for w in g.neighbors(v):
            if w not in visited:
                visited.add(w)
                p.append(w)
                walk(p, visited)
                p.pop()
                visited.remove(w)

    walk([i], {i})
    return out


def _path_edges(p: Path) -> list[Edge]:
    return [_norm_edge(a, b) for a, b in zip(p, p[1:])]


def choose_paths(g: UndirectedGraph, strategy: str = "bfs-min-length", rho=None, cap: int = EXHAUSTIVE_CAP) -> PathChoice:
    """Pick a path for every pair.

    ``bfs-min-length`` takes lexicographically smallest shortest paths.
    ``exhaustive-best`` returns a choice minimizing the connection-graph
    bound for ``rho`` (linear if omitted) by exact branch and bound.
    """
    if strategy == "bfs-min-length":
        return PathChoice({(i, j): lexicographic_shortest_path(g, i, j) for i, j in g.pairs})
    if strategy == "exhaustive-best":
        if g.n > cap:
            raise GraphError(f"exhaustive-best is limited to n <= {cap} (got n={g.n})")
        from .pseudometric import RhoSequence

        return _best_paths(g, rho if rho is not None else RhoSequence.linear())
    raise GraphError(f"unknown path strategy {strategy!r}")


def _best_paths(g: UndirectedGraph, rho) -> PathChoice:
    edge_index = {e: k for k, e in enumerate(g.edge_list)}
    seed = choose_paths(g, "bfs-min-length")
    best_loads = _loads(seed, rho, edge_index)
    best = [float(best_loads.max()), dict(seed.paths)]

    candidates = {}
    for i, j in g.pairs:
        opts = []
        for p in simple_paths(g, i, j):
            w = float(rho(len(p) - 1))
            opts.append((w * (len(p) - 1), w, p, [edge_index[e] for e in _path_edges(p)]))
        opts.sort(key=lambda o: (o[0], o[2]))
        candidates[(i, j)] = opts
    # few options first: tighter early pruning
    order = sorted(g.pairs, key=lambda pr: (len(candidates[pr]), pr))
    min_weight = {pr: candidates[pr][0][0] for pr in order}
    suffix = np.zeros(len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + min_weight[order[k]]
    n_edges = len(edge_index)
    # every pair puts rho(1) >= 1 on at least one edge
    floor = max(1.0, suffix[0] / n_edges)

    loads = np.zeros(n_edges)
    chosen: dict[Edge, Path] = {}

    def search(k: int, current_max: float, total: float) -> bool:
        if current_max >= best[0]:
            return False
        if (total + suffix[k]) / n_edges >= best[0]:
            return False
        if k == len(order):
            best[0], best[1] = current_max, dict(chosen)
            return best[0] <= floor
        pair = order[k]
        for weight, w, p, idx in candidates[pair]:
            if w >= best[0]:
                break
            loads[idx] += w
            new_max = max(current_max, float(loads[idx].max()))
            chosen[pair] = p
            done = search(k + 1, new_max, total + weight)
            loads[idx] -= w
            if done:
                return True
        chosen.pop(pair, None)
        return False

    if best[0] > floor:
        search(0, 0.0, 0.0)
    return PathChoice(best[1])


def _loads(paths: PathChoice, rho, edge_index: dict[Edge, int]) -> np.ndarray:
    loads = np.zeros(len(edge_index))
    for p in paths.paths.values():
        w = float(rho(len(p) - 1))
        for e in _path_edges(p):
            loads[edge_index[e]] += w
    return loads


# ---------------------------------------------------------------- bounds


@dataclass(frozen=True)
class BoundReport:
    """An upper bound on the smallest valid constant C(G), not C(G) itself."""

    c_value: float
    method: str
    per_edge_load: dict[Edge, float] | None = None
    path_choice: PathChoice | None = None

    def to_text(self) -> str:
        lines = [f"method: {self.method}", f"c_value: {self.c_value:.17g}"]
        if self.per_edge_load is not None:
            lines.append("per_edge_load:")
            lines += [f"  {i} {j}: {v:.17g}" for (i, j), v in sorted(self.per_edge_load.items())]
        return "\n".join(lines) + "\n"


def generic_bound(g: UndirectedGraph, rho) -> BoundReport:
    """n(n-1)/2 * diam * rho(diam); valid for every connected graph."""
    delta = diameter(g)
    c = g.n * (g.n - 1) / 2 * delta * float(rho(delta))
    return BoundReport(c, "generic")


def connection_graph_bound(g: UndirectedGraph, rho, paths: PathChoice | None = None) -> BoundReport:
    """max over edges of B(e) = sum of rho(|P|) over chosen paths P through e."""
    if paths is None:
        paths = choose_paths(g)
    paths.validate(g)
    edge_index = {e: k for k, e in enumerate(g.edge_list)}
    loads = _loads(paths, rho, edge_index)
    per_edge = {e: float(loads[k]) for e, k in edge_index.items()}
    return BoundReport(float(loads.max()), "connection-graph", per_edge, paths)


def user_bound(c: float) -> BoundReport:
    if c < 0:
        raise GraphError("a bound constant must be nonnegative")
    return BoundReport(float(c), "user-supplied")


@dataclass
class BoundVerification:
    trials: int
    c_value: float
    max_ratio: float
    violation_count: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0


def verify_bound_sampled(
    g: UndirectedGraph, phi, c: float, sampler: Sampler, count: int, rtol: float = 1e-12, max_witnesses: int = 10
) -> BoundVerification:
    """Sample n states per trial and test sum_pairs phi <= c * sum_edges phi."""
    if c < 0:
        raise GraphError("c must be nonnegative")
    sampler.require_within(phi.domain)
    z = sampler.points(count, per_draw=g.n)
    pi, pj = np.array(g.pairs).T - 1
    ei, ej = np.array(g.edge_list).T - 1
    lhs = phi(z[:, pi], z[:, pj]).sum(axis=1)
    rhs = phi(z[:, ei], z[:, ej]).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    bad = np.flatnonzero(lhs > c * rhs * (1 + rtol))
    witnesses = [
        {"trial": int(k), "states": z[k].tolist(), "pair_sum": float(lhs[k]), "edge_sum": float(rhs[k])}
        for k in bad[:max_witnesses]
    ]
    return BoundVerification(count, float(c), float(ratio.max()) if count else 0.0, int(len(bad)), witnesses)
