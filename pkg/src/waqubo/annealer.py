"""SimCIM-style annealing of Ising problems with continuous spin amplitudes.

Each attempt evolves amplitudes ``s`` in ``[-1, 1]`` from ``s = 0``::

    phi   = -(J s + h)                       # downhill mean field
    ds    = p_t s + zeta phi + noise          # noise ~ N(0, sigma) * |zeta phi| / sqrt(K)
    ds    = clip(ds, -cap, cap)               # gradient quantization
    s     = clip(s + step ds, -1, 1)          # activation

with a linear pump ramp ``p_t``. After every iteration the sign pattern of
``s`` is a candidate spin configuration; the lowest-energy one is kept, and
when a feasibility callback is given, so is the lowest-energy feasible one.

Attempts are processed in fixed blocks of :data:`ATTEMPT_BLOCK` rows and each
attempt draws noise from its own RNG stream, so results do not depend on how
many workers process the blocks.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .qubo import IsingProblem

logger = logging.getLogger(__name__)

ATTEMPT_BLOCK = 32
# noise floor relative to the normalized gradient; breaks the s = 0 symmetry
# of field-free problems where the gradient norm starts at exactly zero
NOISE_FLOOR = 1e-2
_NOISE_CHUNK = 64
ZETA_RULES = ("spectral", "max-coupling")
# With sigma = 0.15 the attempts stay close to the mean-field trajectory and
# all fall into the basin favored by the fields; on random Ising instances
# with Gaussian couplings and fields about 1 in 8 runs then misses the
# ground state. sigma = 4 restores attempt diversity.
DEFAULT_SIGMA = 4.0

FeasibilityCheck = Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class AnnealParams:
    """Hyperparameters for :func:`simcim_solve`.

    ``zeta=None`` derives the feedforward factor from the couplings at
    solve time: ``zeta_scale / lambda`` where ``lambda`` is the spectral
    norm of ``J`` (``zeta_rule="spectral"``) or its largest entry magnitude
    (``zeta_rule="max-coupling"``). ``time_limit`` is wall-clock seconds for
    the whole solve.
    """

    n_iterations: int
    n_attempts: int = 64
    zeta: float | None = None
    zeta_rule: str = "spectral"
    zeta_scale: float = 1.0
    sigma: float = DEFAULT_SIGMA
    pump_start: float = -1.0
    pump_end: float = 1.0
    step: float = 0.05
    quantization_cap: float = 1.0
    seed: int = 0
    time_limit: float | None = None
    workers: int = 1
    record_traces: bool = False

    def __post_init__(self) -> None:
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.n_attempts < 1:
            raise ValueError("n_attempts must be >= 1")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.quantization_cap <= 0:
            raise ValueError("quantization_cap must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.zeta_rule not in ZETA_RULES:
            raise ValueError(f"zeta_rule must be one of {ZETA_RULES}")
        if self.zeta_scale <= 0:
            raise ValueError("zeta_scale must be positive")

    def with_updates(self, **changes) -> AnnealParams:
        return replace(self, **changes)


def default_params(problem_size: int, seed: int = 0) -> AnnealParams:
    """Generic defaults scaled to size: ``1000 + 10 K`` iterations, 64 attempts.

    ``zeta`` is left to the spectral rule; see :data:`DEFAULT_SIGMA` for the
    noise level. Structured problems may prefer a preset such as
    :func:`waqubo.solver.coloring_params`.
    """
    if problem_size < 1:
        raise ValueError("problem_size must be >= 1")
    return AnnealParams(n_iterations=1000 + 10 * problem_size, seed=seed)


def spectral_norm_estimate(J: np.ndarray, iterations: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of the largest absolute eigenvalue of ``J``."""
    K = J.shape[0]
    if K == 0 or not np.any(J):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(K)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        u = J @ v
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            return 0.0
        v = u / norm
        if abs(norm - lam) <= 1e-9 * norm:
            lam = norm
            break
        lam = norm
    return lam


def resolve_zeta(problem: IsingProblem, params: AnnealParams) -> float:
    """Feedforward factor: ``params.zeta`` or ``zeta_scale`` over the coupling scale."""
    if params.zeta is not None:
        return params.zeta
    if params.zeta_rule == "spectral":
        scale = spectral_norm_estimate(problem.J)
    else:
        scale = float(np.max(np.abs(problem.J)))
    if scale == 0.0:
        # uncoupled spins: scale by the field instead
        scale = float(np.max(np.abs(problem.h)))
    return params.zeta_scale / scale if scale > 0 else 1.0


@dataclass
class AnnealResult:
    """Outcome of :func:`simcim_solve`.

    ``trace_best`` holds the best energy seen so far after each iteration
    (minimum over all attempts). ``attempt_traces``/``attempt_feasible`` are
    ``(n_attempts, iterations_run)`` arrays of snapshot energies and
    feasibility verdicts, filled only when ``record_traces`` is set.
    """

    best_spins: np.ndarray
    best_energy: float
    best_feasible_spins: np.ndarray | None
    best_feasible_energy: float | None
    iterations_run: int
    truncated: bool = False
    aborted_attempts: tuple[int, ...] = ()
    trace_best: np.ndarray = field(default_factory=lambda: np.empty(0))
    attempt_traces: np.ndarray | None = None
    attempt_feasible: np.ndarray | None = None
    zeta: float = 1.0

    def write_traces(self, path: str | Path) -> None:
        """Dump ``attempt,iteration,energy,feasible`` rows as CSV."""
        if self.attempt_traces is None:
            raise ValueError("no traces recorded; set record_traces=True")
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["attempt", "iteration", "energy", "feasible"])
            for a, row in enumerate(self.attempt_traces):
                for t, e in enumerate(row):
                    if np.isnan(e):
                        continue
                    out.writerow([a, t, repr(float(e)), int(self.attempt_feasible[a, t])])


@dataclass
class _BlockOutcome:
    best_spins: np.ndarray
    best_energy: float
    feas_spins: np.ndarray | None
    feas_energy: float
    iterations: int
    truncated: bool
    aborted: list[int]
    trace_best: np.ndarray
    traces: np.ndarray | None
    feasible_flags: np.ndarray | None


def _pump(params: AnnealParams, t: int) -> float:
    if params.n_iterations == 1:
        return params.pump_start
    frac = t / (params.n_iterations - 1)
    return params.pump_start + (params.pump_end - params.pump_start) * frac


class _NoiseStream:
    """Per-attempt Gaussian streams, drawn in chunks of iterations."""

    def __init__(self, seeds: list[np.random.SeedSequence], K: int) -> None:
        self.rngs = [np.random.default_rng(s) for s in seeds]
        self.K = K
        self.buf = np.empty((len(seeds), _NOISE_CHUNK, K))
        self.pos = _NOISE_CHUNK

    def next(self) -> np.ndarray:
        if self.pos == _NOISE_CHUNK:
            for r, rng in enumerate(self.rngs):
                self.buf[r] = rng.standard_normal((_NOISE_CHUNK, self.K))
            self.pos = 0
        out = self.buf[:, self.pos, :]
        self.pos += 1
        return out


def _run_block(
    problem: IsingProblem,
    params: AnnealParams,
    zeta: float,
    attempt_ids: range,
    seeds: list[np.random.SeedSequence],
    feasible: FeasibilityCheck | None,
    deadline: float | None,
) -> _BlockOutcome:
    J, h = problem.J, problem.h
    K = problem.dimension
    B = len(attempt_ids)
    T = params.n_iterations
    noise = _NoiseStream(seeds, K)
    sqrt_k = math.sqrt(K)

    s = np.zeros((B, K))
    alive = np.ones(B, dtype=bool)
    prev = np.zeros((B, K))
    snap_e = np.full(B, np.inf)
    best_e = np.inf
    best_spins = -np.ones(K)
    feas_e = np.inf
    feas_spins = None
    trace_best = np.empty(T)
    traces = np.full((B, T), np.nan) if params.record_traces else None
    flags = np.zeros((B, T), dtype=bool) if params.record_traces else None
    aborted: list[int] = []
    truncated = False

    t = 0
    for t in range(T):
        if deadline is not None and time.perf_counter() > deadline:
            truncated = True
            break
        grad = -zeta * (s @ J + h)
        scale = params.sigma * np.maximum(np.linalg.norm(grad, axis=1) / sqrt_k, NOISE_FLOOR)
        ds = _pump(params, t) * s + grad + scale[:, None] * noise.next()
        np.clip(ds, -params.quantization_cap, params.quantization_cap, out=ds)
        s += params.step * ds
        np.clip(s, -1.0, 1.0, out=s)

        bad = alive & ~np.isfinite(s).all(axis=1)
        if bad.any():
            for r in np.flatnonzero(bad):
                aborted.append(attempt_ids[r])
                logger.warning("attempt %d aborted: non-finite amplitudes", attempt_ids[r])
            alive &= ~bad
            s[bad] = 0.0

        spins = np.where(s >= 0, 1.0, -1.0)
        changed = alive & (spins != prev).any(axis=1) if t else alive.copy()
        if changed.any():
            rows = np.flatnonzero(changed)
            sub = spins[rows]
            snap_e[rows] = sub @ h + 0.5 * np.einsum("ij,ij->i", sub @ J, sub) + problem.offset
            prev[rows] = sub
            r_best = rows[np.argmin(snap_e[rows])]
            if snap_e[r_best] < best_e:
                best_e = float(snap_e[r_best])
                best_spins = spins[r_best].copy()
            if feasible is not None:
                for r in rows:
                    # a snapshot not below the incumbent cannot change the result
                    if params.record_traces or snap_e[r] < feas_e:
                        ok = bool(feasible(spins[r]))
                        if flags is not None:
                            flags[r, t] = ok
                        if ok and snap_e[r] < feas_e:
                            feas_e = float(snap_e[r])
                            feas_spins = spins[r].copy()
        if traces is not None:
            traces[alive, t] = snap_e[alive]
            if feasible is not None:
                unchanged = alive & ~changed
                flags[unchanged, t] = flags[unchanged, t - 1] if t else False
        trace_best[t] = best_e
    else:
        t = T

    return _BlockOutcome(
        best_spins=best_spins,
        best_energy=best_e,
        feas_spins=feas_spins,
        feas_energy=feas_e,
        iterations=t,
        truncated=truncated,
        aborted=aborted,
        trace_best=trace_best[:t],
        traces=None if traces is None else traces[:, :t],
        feasible_flags=None if flags is None else flags[:, :t],
    )


def simcim_solve(
    problem: IsingProblem,
    params: AnnealParams,
    feasible: FeasibilityCheck | None = None,
) -> AnnealResult:
    """Run ``params.n_attempts`` annealing attempts and reduce to the best spins.

    Args:
        problem: Ising problem to minimize.
        params: hyperparameters; ``workers > 1`` processes attempt blocks on
            a thread pool without changing the result.
        feasible: optional predicate on a +-1 spin vector. The lowest-energy
            snapshot for which it returns True (over every iteration of every
            attempt) is reported as ``best_feasible_spins``.
    """
    K = problem.dimension
    if K < 1:
        raise ValueError("problem dimension must be >= 1")
    zeta = resolve_zeta(problem, params)
    deadline = None if params.time_limit is None else time.perf_counter() + params.time_limit
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_attempts)
    blocks = [
        range(lo, min(lo + ATTEMPT_BLOCK, params.n_attempts))
        for lo in range(0, params.n_attempts, ATTEMPT_BLOCK)
    ]

    def run(ids: range) -> _BlockOutcome:
        return _run_block(problem, params, zeta, ids, seeds[ids.start : ids.stop], feasible, deadline)

    if params.workers > 1 and len(blocks) > 1:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1), ThreadPoolExecutor(params.workers) as pool:
            outcomes = list(pool.map(run, blocks))
    else:
        outcomes = [run(b) for b in blocks]

    # reduction in block order; strict "<" keeps the lowest block on ties
    best = outcomes[0]
    feas = outcomes[0] if outcomes[0].feas_spins is not None else None
    for o in outcomes[1:]:
        if o.best_energy < best.best_energy:
            best = o
        if o.feas_spins is not None and (feas is None or o.feas_energy < feas.feas_energy):
            feas = o

    iterations = max(o.iterations for o in outcomes)
    trace = np.full(iterations, np.inf)
    for o in outcomes:
        n = o.trace_best.size
        part = np.concatenate([o.trace_best, np.full(iterations - n, o.trace_best[-1] if n else np.inf)])
        trace = np.minimum(trace, part)

    aborted = tuple(a for o in outcomes for a in o.aborted)
    if len(aborted) == params.n_attempts:
        logger.warning("all %d attempts aborted", params.n_attempts)

    result = AnnealResult(
        best_spins=best.best_spins,
        best_energy=problem.energy(best.best_spins),
        best_feasible_spins=None if feas is None else feas.feas_spins,
        best_feasible_energy=None if feas is None else problem.energy(feas.feas_spins),
        iterations_run=iterations,
        truncated=any(o.truncated for o in outcomes),
        aborted_attempts=aborted,
        trace_best=trace,
        zeta=zeta,
    )
    if params.record_traces:
        result.attempt_traces = _stack([o.traces for o in outcomes], iterations, np.nan)
        result.attempt_feasible = _stack([o.feasible_flags for o in outcomes], iterations, False)
    return result


def _stack(parts: list[np.ndarray], width: int, fill) -> np.ndarray:
    rows = []
    for p in parts:
        pad = np.full((p.shape[0], width - p.shape[1]), fill, dtype=p.dtype)
        rows.append(np.concatenate([p, pad], axis=1))
    return np.concatenate(rows, axis=0)


def simcim_dynamics(
    problem: IsingProblem,
    params: AnnealParams,
    initial: np.ndarray,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Evolve one amplitude vector from ``initial``; returns the ``(T+1, K)`` trajectory.

    Exposes the raw update rule, e.g. to study convergence from a
    symmetry-broken start. :func:`simcim_solve` always starts from zero.
    """
    rng = rng or np.random.default_rng(params.seed)
    zeta = resolve_zeta(problem, params)
    s = np.clip(np.asarray(initial, dtype=np.float64).copy(), -1.0, 1.0)
    K = s.size
    out = [s.copy()]
    for t in range(params.n_iterations):
        grad = -zeta * (problem.J @ s + problem.h)
        scale = params.sigma * max(float(np.linalg.norm(grad)) / math.sqrt(K), NOISE_FLOOR)
        ds = _pump(params, t) * s + grad + scale * rng.standard_normal(K)
        ds = np.clip(ds, -params.quantization_cap, params.quantization_cap)
        s = np.clip(s + params.step * ds, -1.0, 1.0)
        out.append(s.copy())
    return np.array(out)
