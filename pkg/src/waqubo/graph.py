"""Graphs, optical path instances, random generation and the LDF baseline.

A wavelength-assignment instance is a physical network plus a list of
pre-routed paths. Two paths conflict when they share a fiber (an undirected
network edge), so assigning wavelengths is the same as coloring the conflict
graph built by :func:`conflict_graph`.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .solution import ColoringSolution

Edge = tuple[int, int]

# Resample budget for erdos_renyi; G(10, 0.1) needs a few hundred draws per
# connected graph, so this is generous for the default dataset grid.
MAX_RESAMPLES = 1_000_000


class InstanceGenerationError(RuntimeError):
    """Raised when no connected graph is drawn within the resample budget."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n_vertices-1``.

    ``edges`` is normalized to a sorted tuple of ``(u, v)`` pairs with
    ``u < v``. ``seed`` records the generator seed that produced the graph,
    when it came from :func:`erdos_renyi`.
    """

    n_vertices: int
    edges: tuple[Edge, ...] = ()
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n_vertices < 0:
            raise ValueError("n_vertices must be non-negative")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.n_vertices} vertices")
            e = (u, v) if u < v else (v, u)
            if e in normalized:
                raise ValueError(f"duplicate edge {e}")
            normalized.add(e)
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray, seed: int | None = None) -> Graph:
        a = np.asarray(adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T) or a.diagonal().any():
            raise ValueError("adjacency must be symmetric with zero diagonal")
        us, vs = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], tuple(zip(us.tolist(), vs.tolist())), seed=seed)

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, tuple(combinations(range(n), 2)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        if self.edges:
            e = np.array(self.edges)
            a[e[:, 0], e[:, 1]] = True
            a[e[:, 1], e[:, 0]] = True
        a.flags.writeable = False
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1).astype(np.int64)
        d.flags.writeable = False
        return d

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Edges as an ``(N_E, 2)`` integer array."""
        arr = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    def density(self) -> float:
        """Fraction of the ``n(n-1)/2`` vertex pairs that are edges."""
        pairs = self.n_vertices * (self.n_vertices - 1) // 2
        return self.n_edges / pairs if pairs else 0.0

    def is_connected(self) -> bool:
        if self.n_vertices <= 1:
            return True
        seen = [False] * self.n_vertices
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(v)
        return count == self.n_vertices


def _draw_gnp(n: int, p: float, seed: int, iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    rng = np.random.default_rng(seed)
    keep = rng.random(iu[0].size) < p
    a = np.zeros((n, n), dtype=bool)
    a[iu[0][keep], iu[1][keep]] = True
    return a | a.T


def _connected(a: np.ndarray) -> bool:
    n = a.shape[0]
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    frontier = np.zeros(n, dtype=bool)
    frontier[0] = seen[0] = True
    while frontier.any():
        reached = a[frontier].any(axis=0) & ~seen
        seen |= reached
        frontier = reached
    return bool(seen.all())


def erdos_renyi(n: int, p: float, seed: int, max_resamples: int = MAX_RESAMPLES) -> Graph:
    """Draw a connected G(n, p) graph.

    Each of the ``n(n-1)/2`` vertex pairs (in lexicographic order) becomes an
    edge when its uniform draw from ``default_rng(seed)`` is below ``p``.
    Disconnected draws are discarded and the whole graph is redrawn with
    ``seed + 1``, ``seed + 2``, ... The accepted seed is stored on the graph.

    Raises:
        InstanceGenerationError: no connected graph within ``max_resamples``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0 and n > 1:
        raise InstanceGenerationError(f"G({n}, 0) is never connected")
    iu = np.triu_indices(n, 1)
    for k in range(max_resamples):
        a = _draw_gnp(n, p, seed + k, iu)
        if _connected(a):
            return Graph.from_adjacency(a, seed=seed + k)
    raise InstanceGenerationError(
        f"no connected G({n}, {p}) graph in {max_resamples} draws starting at seed {seed}"
    )


@dataclass(frozen=True)
class PathInstance:
    """Physical network plus transmission paths given as vertex sequences."""

    network: Graph
    paths: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(tuple(int(v) for v in p) for p in self.paths))
        edge_set = set(self.network.edges)
        for idx, path in enumerate(self.paths):
            if len(path) < 2:
                raise ValueError(f"path {idx} has fewer than 2 vertices")
            seen = set()
            for hop in path_edges(path):
                if hop not in edge_set:
                    raise ValueError(f"path {idx} uses non-edge {hop}")
                if hop in seen:
                    raise ValueError(f"path {idx} repeats edge {hop}")
                seen.add(hop)

    def to_dict(self) -> dict:
        return {
            "network": {"n": self.network.n_vertices, "edges": [list(e) for e in self.network.edges]},
            "paths": [list(p) for p in self.paths],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> PathInstance:
        net = doc["network"]
        network = Graph(int(net["n"]), tuple(tuple(e) for e in net["edges"]))
        return cls(network, tuple(tuple(p) for p in doc["paths"]))


def path_edges(path: Sequence[int]) -> list[Edge]:
    """Undirected fibers traversed by ``path``, in order."""
    return [(a, b) if a < b else (b, a) for a, b in zip(path[:-1], path[1:])]


def conflict_graph(instance: PathInstance) -> Graph:
    """One vertex per path; an edge wherever two paths share a fiber."""
    users: dict[Edge, list[int]] = {}
    for idx, path in enumerate(instance.paths):
        for e in set(path_edges(path)):
            users.setdefault(e, []).append(idx)
    conflicts = set()
    for idxs in users.values():
        conflicts.update(combinations(sorted(idxs), 2))
    return Graph(len(instance.paths), tuple(conflicts))


def ldf_order(g: Graph) -> list[int]:
    """Vertices by non-increasing degree, ties by lowest id."""
    return sorted(range(g.n_vertices), key=lambda v: (-int(g.degrees[v]), v))


def ldf_coloring(g: Graph) -> ColoringSolution:
    """Largest-degree-first greedy coloring (always proper)."""
    start = time.perf_counter()
    colors = [-1] * g.n_vertices
    for v in ldf_order(g):
        taken = {colors[u] for u in g.neighbors[v]}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    n_colors = max(colors) + 1 if colors else 0
    return ColoringSolution(
        colors=tuple(colors),
        n_colors=n_colors,
        feasible=True,
        energy=None,
        solver="ldf",
        wall_time=time.perf_counter() - start,
    )


# -- file formats -------------------------------------------------------------


def format_dimacs(g: Graph, comments: Iterable[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p edge {g.n_vertices} {g.n_edges}")
    lines.extend(f"e {u + 1} {v + 1}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Graph:
    """Parse DIMACS coloring format (``p edge N M`` header, 1-based ``e u v``)."""
    n = None
    declared = None
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise ValueError(f"line {lineno}: bad problem line {raw!r}")
            n, declared = int(parts[2]), int(parts[3])
        elif parts[0] == "e":
            if n is None:
                raise ValueError(f"line {lineno}: edge before problem line")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: bad edge line {raw!r}")
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
        else:
            raise ValueError(f"line {lineno}: unknown record {parts[0]!r}")
    if n is None:
        raise ValueError("missing 'p edge N M' line")
    # some files list both orientations; keep one
    unique = {(min(u, v), max(u, v)) for u, v in edges}
    g = Graph(n, tuple(unique))
    if declared not in (len(edges), g.n_edges):
        raise ValueError(f"header declares {declared} edges, found {len(edges)}")
    return g


def write_dimacs(g: Graph, path: str | Path, comments: Iterable[str] = ()) -> None:
    Path(path).write_text(format_dimacs(g, comments))


def read_dimacs(path: str | Path) -> Graph:
    return parse_dimacs(Path(path).read_text())


def read_path_instance(path: str | Path) -> PathInstance:
    return PathInstance.from_dict(json.loads(Path(path).read_text()))


def write_path_instance(instance: PathInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2) + "\n")
