"""Ground-truth oracles: exact chromatic number and exhaustive QUBO minimization."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .qubo import QuboProblem, energy

EXHAUSTIVE_MAX_K = 26
# number of low-order bits evaluated as one vectorized block
_LOW_BITS = 12


@dataclass(frozen=True)
class ExactResult:
    """Optimum plus a witness that attains it.

    For a chromatic-number run that hit its budget, ``timed_out`` is set,
    ``optimum`` is the best (upper) bound found and ``lower_bound`` the
    proven lower bound.
    """

    optimum: float
    witness: tuple[int, ...]
    nodes_explored: int
    wall_time: float
    timed_out: bool = False
    lower_bound: float | None = None

    @property
    def exact(self) -> bool:
        return not self.timed_out


class _Timeout(Exception):
    pass


def dsatur_coloring(g: Graph) -> list[int]:
    """Greedy DSATUR coloring, used as the initial upper bound."""
    n = g.n_vertices
    colors = [-1] * n
    neighbor_colors: list[set[int]] = [set() for _ in range(n)]
    deg = g.degrees.tolist()
    for _ in range(n):
        v = max(
            (u for u in range(n) if colors[u] < 0),
            key=lambda u: (len(neighbor_colors[u]), deg[u], -u),
        )
        c = 0
        while c in neighbor_colors[v]:
            c += 1
        colors[v] = c
        for u in g.neighbors[v]:
            neighbor_colors[u].add(c)
    return colors


def greedy_clique(g: Graph) -> list[int]:
    """Largest clique found by greedy growth from every starting vertex."""
    nbrs = [set(nb) for nb in g.neighbors]
    deg = g.degrees.tolist()
    best: list[int] = [0] if g.n_vertices else []
    for start in range(g.n_vertices):
        clique = [start]
        cand = set(nbrs[start])
        while cand:
            v = max(cand, key=lambda u: (len(nbrs[u] & cand), deg[u], -u))
            clique.append(v)
            cand &= nbrs[v]
        if len(clique) > len(best):
            best = clique
    return sorted(best)


def chromatic_number(g: Graph, budget: float | None = None) -> ExactResult:
    """Exact chromatic number by DSATUR branch and bound.

    Branches on the uncolored vertex of highest saturation (ties: degree,
    then lowest id), trying each color already in use plus one new color.
    A greedy clique gives the lower bound and greedy DSATUR the initial upper
    bound; the search stops as soon as the two meet.

    Args:
        g: graph to color.
        budget: wall-clock seconds; when exceeded the current bounds are
            returned with ``timed_out=True``.
    """
    start = time.perf_counter()
    n = g.n_vertices
    if n == 0:
        return ExactResult(0, (), 0, 0.0)

    best = dsatur_coloring(g)
    ub = max(best) + 1
    clique = greedy_clique(g)
    lb = len(clique)
    nodes = 0
    if lb == ub:
        return ExactResult(ub, tuple(best), nodes, time.perf_counter() - start, lower_bound=lb)

    nbrs = g.neighbors
    deg = g.degrees.tolist()
    colors = [-1] * n
    # sat[v][c] = number of colored neighbors of v with color c
    sat = [[0] * ub for _ in range(n)]
    satcount = [0] * n

    def assign(v: int, c: int) -> None:
        colors[v] = c
        for u in nbrs[v]:
            if sat[u][c] == 0:
                satcount[u] += 1
            sat[u][c] += 1

    def unassign(v: int, c: int) -> None:
        colors[v] = -1
        for u in nbrs[v]:
            sat[u][c] -= 1
            if sat[u][c] == 0:
                satcount[u] -= 1

    # pre-color the clique: any optimal coloring can be renamed to agree
    for c, v in enumerate(clique):
        assign(v, c)

    def search(n_colored: int, n_used: int) -> None:
        nonlocal ub, best, nodes
        nodes += 1
        if budget is not None and nodes % 512 == 0 and time.perf_counter() - start > budget:
            raise _Timeout
        if n_colored == n:
            ub = n_used
            best = colors.copy()
            return
        v = -1
        key = (-1, -1)
        for u in range(n):
            if colors[u] < 0:
                k = (satcount[u], deg[u])
                if k > key:
                    key, v = k, u
        for c in range(min(n_used + 1, ub - 1)):
            if sat[v][c]:
                continue
            assign(v, c)
            search(n_colored + 1, max(n_used, c + 1))
            unassign(v, c)
            if ub == lb:
                return

    timed_out = False
    try:
        search(len(clique), lb)
    except _Timeout:
        timed_out = True
    return ExactResult(
        optimum=ub,
        witness=tuple(best),
        nodes_explored=nodes,
        wall_time=time.perf_counter() - start,
        timed_out=timed_out,
        lower_bound=lb,
    )


def _all_bits(k: int) -> np.ndarray:
    """All ``2**k`` binary vectors; row ``r`` holds the bits of ``r`` (LSB first)."""
    r = np.arange(2**k, dtype=np.int64)[:, None]
    return ((r >> np.arange(k)) & 1).astype(np.float64)


def exhaustive_qubo_min(q: QuboProblem) -> ExactResult:
    """Global minimum of ``s^T Q s + offset`` over all ``2**K`` binary vectors.

    The first ``min(K, 12)`` variables are evaluated as one vectorized block;
    the remaining high variables are walked in Gray-code order, so each step
    flips one bit and updates the high-part energy and the cross-coupling
    vector incrementally. Ties keep the first minimizer in walk order.

    Raises:
        ValueError: if ``K`` exceeds 26.
    """
    start = time.perf_counter()
    K = q.dimension
    if K > EXHAUSTIVE_MAX_K:
        raise ValueError(f"exhaustive minimization refused: K={K} exceeds cap {EXHAUSTIVE_MAX_K}")
    if K == 0:
        return ExactResult(q.offset, (), 1, time.perf_counter() - start)

    L = min(K, _LOW_BITS)
    H = K - L
    Q = q.Q
    Q_ll, Q_hl, Q_hh = Q[:L, :L], Q[L:, :L], Q[L:, L:]
    lo = _all_bits(L)
    e_lo = np.einsum("ij,ij->i", lo @ Q_ll, lo)

    hi = np.zeros(H)
    e_hi = 0.0
    cross = np.zeros(L)  # 2 * Q_lh @ hi
    best_val = np.inf
    best_lo = 0
    best_hi = hi.copy()
    for step in range(2**H):
        if step:
            b = (step & -step).bit_length() - 1  # bit flipped between Gray codes step-1, step
            sign = 1.0 - 2.0 * hi[b]
            # delta of hi^T Q_hh hi when hi_b flips: sign * (Q_bb + 2 sum_{j != b} Q_bj hi_j)
            e_hi += sign * (Q_hh[b, b] + 2.0 * (Q_hh[b] @ hi - Q_hh[b, b] * hi[b]))
            cross += sign * 2.0 * Q_hl[b]
            hi[b] += sign
        vals = e_lo + lo @ cross
        idx = int(np.argmin(vals))
        if vals[idx] + e_hi < best_val:
            best_val = vals[idx] + e_hi
            best_lo = idx
            best_hi = hi.copy()

    witness = np.concatenate([lo[best_lo], best_hi]).astype(np.int64)
    return ExactResult(
        optimum=energy(q, witness),
        witness=tuple(witness.tolist()),
        nodes_explored=2**K,
        wall_time=time.perf_counter() - start,
    )
