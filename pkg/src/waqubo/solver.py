"""End-to-end coloring / wavelength-assignment solvers built on the annealer."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Union

import numpy as np

from .annealer import AnnealParams, AnnealResult, default_params, simcim_solve
from .exact import chromatic_number
from .graph import Graph, ldf_coloring
from .qubo import (
    PenaltyCoefficients,
    QuboProblem,
    build_original_qubo,
    build_proposed_qubo,
    certified_penalties,
    energy,
    heuristic_penalties,
    spins_to_binary,
    to_ising,
)
from .solution import ColoringSolution, relabel

logger = logging.getLogger(__name__)

PenaltyPolicy = Union[str, PenaltyCoefficients, Callable[[Graph, int], PenaltyCoefficients]]


def coloring_params(problem_size: int, seed: int = 0) -> AnnealParams:
    """Annealer preset for coloring QUBOs of dimension ``problem_size``.

    Coloring energies are dominated by the one-hot penalty, whose coupling
    is the largest entry of ``J``; tying ``zeta`` to that entry rather than
    to the spectral norm keeps the dynamics equally stiff on sparse and
    dense graphs. Mild noise and a pump that stops at zero let the one-hot
    rows settle without being kicked apart late in the run.
    """
    return default_params(problem_size, seed=seed).with_updates(
        zeta_rule="max-coupling", zeta_scale=0.7, sigma=0.4, pump_end=0.0
    )


def check_coloring(g: Graph, x) -> bool:
    """True iff every vertex has exactly one color and no edge is monochromatic."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != g.n_vertices:
        raise ValueError(f"x must have shape ({g.n_vertices}, W)")
    x = x != 0
    if not np.all(x.sum(axis=1) == 1):
        return False
    if g.n_edges == 0:
        return True
    e = g.edge_array
    return not np.any(x[e[:, 0]] & x[e[:, 1]])


def colors_to_matrix(colors, W: int) -> np.ndarray:
    """One-hot ``(N_V, W)`` matrix for a color vector (``-1`` gives an empty row)."""
    colors = np.asarray(colors, dtype=np.int64)
    x = np.zeros((colors.size, W), dtype=np.int8)
    ok = colors >= 0
    x[np.flatnonzero(ok), colors[ok]] = 1
    return x


@dataclass(frozen=True)
class Decoded:
    w: np.ndarray
    x: np.ndarray
    candidate: ColoringSolution


def decode(g: Graph, q: QuboProblem, s, solver: str = "simcim-proposed") -> Decoded:
    """Split a binary vector into ``(w, x)`` and build a repaired candidate.

    Repair sets ``w_i = max_v x[v, i]``; used colors are relabeled onto
    ``0..k-1``. Feasibility of the candidate is judged on ``x`` alone. The
    candidate energy is the Hamiltonian of the repaired vector.
    """
    layout = q.layout
    if layout is None:
        raise ValueError("QUBO has no variable layout")
    if layout.n_vertices != g.n_vertices:
        raise ValueError("graph does not match the QUBO layout")
    s = np.asarray(s, dtype=np.int64)
    _, x = layout.split(s)
    x = x.copy()
    w = x.max(axis=0) if x.size else np.zeros(layout.W, dtype=np.int64)

    raw = np.where(x.sum(axis=1) == 1, x.argmax(axis=1), -1)
    colors, _ = relabel(raw.tolist())
    repaired = s.copy()
    if layout.encoding == "proposed":
        repaired[: layout.W] = w
    cand = ColoringSolution(
        colors=colors,
        n_colors=int(w.sum()),
        feasible=check_coloring(g, x),
        energy=energy(q, repaired),
        solver=solver,
        wall_time=0.0,
    )
    return Decoded(w=w, x=x, candidate=cand)


def _penalties_for(g: Graph, W: int, policy: PenaltyPolicy, p: float | None) -> PenaltyCoefficients:
    if isinstance(policy, PenaltyCoefficients):
        return policy
    if callable(policy):
        return policy(g, W)
    if policy == "heuristic":
        return heuristic_penalties(max(g.n_vertices, 1), g.density() if p is None else p)
    if policy == "certified":
        return certified_penalties(W, g.n_edges)
    raise ValueError(f"unknown penalty policy {policy!r}")


def _coloring_check(g: Graph, q: QuboProblem) -> Callable[[np.ndarray], bool]:
    """Feasibility predicate on +-1 spins for the annealer."""
    layout = q.layout
    xo, W = layout.x_offset, layout.W
    e = g.edge_array

    def feasible(spins: np.ndarray) -> bool:
        x = spins[xo:].reshape(g.n_vertices, W) > 0
        if not np.all(x.sum(axis=1) == 1):
            return False
        return not np.any(x[e[:, 0]] & x[e[:, 1]])

    return feasible


def _anneal(
    q: QuboProblem,
    g: Graph,
    anneal: AnnealParams | None,
    overrides: Mapping[str, Any] | None,
    seed: int,
    retries: int,
    deadline: float | None,
) -> tuple[AnnealResult | None, bool]:
    """Anneal ``q`` with the coloring feasibility filter; returns (result, truncated)."""
    ising = to_ising(q)
    base = anneal if anneal is not None else coloring_params(q.dimension, seed=seed)
    if overrides:
        base = base.with_updates(**overrides)
    check = _coloring_check(g, q)
    result = None
    for r in range(retries):
        remaining = None if deadline is None else deadline - time.perf_counter()
        if remaining is not None and remaining <= 0:
            return result, True
        limit = remaining if base.time_limit is None else min(base.time_limit, remaining or math.inf)
        params = base.with_updates(seed=base.seed + r, time_limit=limit)
        result = simcim_solve(ising, params, feasible=check)
        if result.best_feasible_spins is not None or result.truncated:
            return result, result.truncated
    return result, False


def _from_spins(q: QuboProblem, g: Graph, spins: np.ndarray, solver: str) -> ColoringSolution:
    d = decode(g, q, spins_to_binary(spins), solver=solver)
    if not d.candidate.feasible:
        raise AssertionError("annealer reported an infeasible snapshot as feasible")
    return d.candidate


def solve_wa(
    g: Graph,
    anneal: AnnealParams | None = None,
    penalties: PenaltyPolicy = "heuristic",
    *,
    p: float | None = None,
    seed: int = 0,
    overrides: Mapping[str, Any] | None = None,
    retries_per_level: int = 1,
    time_limit: float | None = None,
    literal_blocks: bool = False,
) -> ColoringSolution:
    """Minimize colors with the proposed encoding, shrinking the bound each round.

    Starts from the LDF color count ``W``. Each round builds the QUBO for
    the current bound, anneals it and, if a proper coloring is found,
    records it and lowers the bound to (colors used) - 1. The first round
    that finds nothing ends the loop.

    Args:
        g: graph to color (the conflict graph of a WA instance).
        anneal: fixed annealer parameters for every round; None picks
            :func:`coloring_params` for each QUBO size with ``seed``.
        overrides: annealer fields replaced on top of either choice,
            e.g. ``{"workers": 4}``.
        penalties: "heuristic", "certified", fixed coefficients, or a
            callable ``(graph, W) -> PenaltyCoefficients``.
        p: generator edge probability for heuristic penalties; defaults to
            the graph density.
        retries_per_level: annealer runs (with successive seeds) before a
            round counts as failed.
        time_limit: wall-clock budget in seconds for the whole solve.
        literal_blocks: build the QUBO blocks verbatim, without the
            diagonal ``H3`` correction.

    Returns:
        The best coloring found; the LDF coloring (tagged "ldf") when the
        first round fails. ``wall_time`` is the time to that solution.
    """
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    ldf = ldf_coloring(g)
    best = ldf.with_updates(wall_time=time.perf_counter() - start)
    if g.n_vertices == 0:
        return best
    W = ldf.n_colors
    rounds = 0
    truncated = False
    while W >= 1:
        c = _penalties_for(g, W, penalties, p)
        q = build_proposed_qubo(g, W, c, literal_blocks=literal_blocks)
        result, truncated = _anneal(q, g, anneal, overrides, seed, retries_per_level, deadline)
        rounds += 1
        if result is None or result.best_feasible_spins is None:
            break
        cand = _from_spins(q, g, result.best_feasible_spins, "simcim-proposed")
        logger.debug("W=%d -> feasible with %d colors", W, cand.n_colors)
        if best.solver == "ldf" or cand.n_colors < best.n_colors:
            best = cand.with_updates(wall_time=time.perf_counter() - start)
        W = cand.n_colors - 1
        if truncated:
            break
    return best.with_updates(outer_iterations=rounds, truncated=truncated)


def solve_wa_binary_search(
    g: Graph,
    anneal: AnnealParams | None = None,
    penalty: float = 1.0,
    *,
    seed: int = 0,
    overrides: Mapping[str, Any] | None = None,
    retries_per_level: int = 1,
    time_limit: float | None = None,
) -> ColoringSolution:
    """Binary search over ``W`` with the decision encoding.

    The LDF count is a known-feasible upper bound. Each probe anneals the
    decision QUBO for the midpoint ``W`` and keeps any proper coloring seen;
    a success moves the upper bound to the colors actually used.
    """
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    ldf = ldf_coloring(g)
    best = ldf.with_updates(wall_time=time.perf_counter() - start)
    if g.n_vertices == 0:
        return best
    lo, hi = 1, ldf.n_colors
    probes = 0
    truncated = False
    while lo < hi:
        mid = (lo + hi) // 2
        q = build_original_qubo(g, mid, penalty)
        result, truncated = _anneal(q, g, anneal, overrides, seed, retries_per_level, deadline)
        probes += 1
        if result is not None and result.best_feasible_spins is not None:
            cand = _from_spins(q, g, result.best_feasible_spins, "simcim-binary-search")
            best = cand.with_updates(wall_time=time.perf_counter() - start)
            hi = cand.n_colors
        else:
            lo = mid + 1
        if truncated:
            break
    return best.with_updates(outer_iterations=probes, truncated=truncated)


def solve_exact(g: Graph, time_limit: float | None = None) -> ColoringSolution:
    """Chromatic-number oracle wrapped as a :class:`ColoringSolution`."""
    res = chromatic_number(g, budget=time_limit)
    colors, k = relabel(res.witness)
    return ColoringSolution(
        colors=colors,
        n_colors=k,
        feasible=True,
        energy=None,
        solver="exact",
        wall_time=res.wall_time,
        truncated=res.timed_out,
    )
