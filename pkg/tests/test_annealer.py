import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waqubo.annealer import (
    AnnealParams,
    default_params,
    resolve_zeta,
    simcim_dynamics,
    simcim_solve,
    spectral_norm_estimate,
)
from waqubo.qubo import IsingProblem

from oracles import brute_force_ising_min


def random_ising(K, seed):
    rng = np.random.default_rng(seed)
    J = np.triu(rng.normal(size=(K, K)), 1)
    return IsingProblem(J + J.T, rng.normal(size=K))


def strip(result):
    """Result fields that must be reproducible (everything but timing)."""
    return (
        result.best_spins.tolist(),
        result.best_energy,
        None if result.best_feasible_spins is None else result.best_feasible_spins.tolist(),
        result.best_feasible_energy,
        result.iterations_run,
        result.trace_best.tolist(),
    )


# -- parameters ----------------------------------------------------------------------


def test_default_params_scaling():
    assert default_params(44).n_iterations == 1440
    p1 = default_params(1)
    assert p1.n_attempts == 64 and p1.n_iterations == 1010
    assert default_params(4848).n_iterations == 49480


def test_default_params_rejects_empty():
    with pytest.raises(ValueError):
        default_params(0)


@pytest.mark.parametrize(
    "bad",
    [{"n_iterations": 0}, {"n_attempts": 0}, {"step": 0}, {"sigma": -1}, {"quantization_cap": 0}, {"workers": 0}],
)
def test_param_validation(bad):
    with pytest.raises(ValueError):
        AnnealParams(**{"n_iterations": 10, **bad})


def test_spectral_norm_estimate():
    M = random_ising(12, 0).J
    assert spectral_norm_estimate(M, iterations=500) == pytest.approx(np.abs(np.linalg.eigvalsh(M)).max(), rel=1e-3)
    assert spectral_norm_estimate(np.zeros((3, 3))) == 0.0


def test_zeta_rule():
    prob = random_ising(6, 1)
    base = default_params(6)
    lam = np.abs(np.linalg.eigvalsh(prob.J)).max()
    assert resolve_zeta(prob, base) == pytest.approx(1.0 / lam, rel=1e-3)
    maxc = base.with_updates(zeta_rule="max-coupling", zeta_scale=0.5)
    assert resolve_zeta(prob, maxc) == pytest.approx(0.5 / np.abs(prob.J).max())
    assert resolve_zeta(prob, base.with_updates(zeta=0.3)) == 0.3
    fields_only = IsingProblem(np.zeros((2, 2)), [2.0, -4.0])
    assert resolve_zeta(fields_only, base) == pytest.approx(1.0 / 4.0)
    assert resolve_zeta(fields_only, maxc) == pytest.approx(0.5 / 4.0)
    with pytest.raises(ValueError):
        base.with_updates(zeta_rule="trace")
    with pytest.raises(ValueError):
        base.with_updates(zeta_scale=0.0)


# -- small exact cases ---------------------------------------------------------------


def test_single_spin_follows_field():
    r = simcim_solve(IsingProblem(np.zeros((1, 1)), [1.0]), default_params(1))
    assert r.best_spins.tolist() == [-1.0]
    assert r.best_energy == -1.0


def test_ferromagnetic_pair():
    J = np.array([[0.0, -1.0], [-1.0, 0.0]])
    r = simcim_solve(IsingProblem(J, [0.0, 0.0]), default_params(2))
    assert r.best_spins[0] == r.best_spins[1]
    assert r.best_energy == -1.0


def test_ferromagnetic_saturation_from_broken_symmetry():
    J = np.array([[0.0, -1.0], [-1.0, 0.0]])
    params = AnnealParams(n_iterations=200, sigma=0.0, pump_start=0.5, pump_end=0.5)
    traj = simcim_dynamics(IsingProblem(J, [0.0, 0.0]), params, np.array([0.1, 0.05]))
    assert np.allclose(np.abs(traj[-1]), 1.0)
    assert np.all(np.sign(traj[-1]) == 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_best_energy_consistent_and_bounded(K, seed):
    prob = random_ising(K, seed)
    r = simcim_solve(prob, default_params(K, seed=seed).with_updates(n_attempts=8, n_iterations=200))
    assert r.best_energy == pytest.approx(prob.energy(r.best_spins))
    assert r.best_energy >= brute_force_ising_min(prob.J, prob.h) - 1e-9
    assert set(np.unique(r.best_spins)) <= {-1.0, 1.0}


def test_trace_is_monotone():
    r = simcim_solve(random_ising(10, 3), AnnealParams(n_iterations=300, n_attempts=40))
    assert r.trace_best.size == 300
    assert np.all(np.diff(r.trace_best) <= 0)
    assert r.trace_best[-1] == pytest.approx(r.best_energy, rel=1e-12)


def test_amplitudes_stay_in_box():
    params = AnnealParams(n_iterations=300, sigma=2.0, step=0.5, quantization_cap=5.0)
    traj = simcim_dynamics(random_ising(8, 4), params, np.zeros(8))
    assert traj.shape == (301, 8)
    assert np.all(np.abs(traj) <= 1.0)


# -- feasibility filtering -----------------------------------------------------------


def test_feasible_snapshot_is_lowest_passing():
    prob = random_ising(8, 5)
    # accept only configurations with spin 0 up
    check = lambda s: s[0] > 0  # noqa: E731
    params = AnnealParams(n_iterations=150, n_attempts=4, record_traces=True)
    r = simcim_solve(prob, params, feasible=check)
    assert r.best_feasible_spins[0] > 0
    assert r.best_feasible_energy == pytest.approx(prob.energy(r.best_feasible_spins))
    assert r.best_feasible_energy >= r.best_energy
    passing = r.attempt_traces[r.attempt_feasible]
    assert r.best_feasible_energy == pytest.approx(passing.min())


def test_feasible_pruning_does_not_change_result():
    prob = random_ising(9, 6)
    check = lambda s: s.sum() >= 0  # noqa: E731
    params = AnnealParams(n_iterations=200, n_attempts=16)
    fast = simcim_solve(prob, params, feasible=check)
    full = simcim_solve(prob, params.with_updates(record_traces=True), feasible=check)
    assert strip(fast) == strip(full)


def test_never_feasible():
    r = simcim_solve(random_ising(4, 0), AnnealParams(n_iterations=50, n_attempts=2), feasible=lambda s: False)
    assert r.best_feasible_spins is None and r.best_feasible_energy is None


def test_write_traces(tmp_path):
    r = simcim_solve(
        random_ising(5, 1), AnnealParams(n_iterations=20, n_attempts=3, record_traces=True), feasible=lambda s: True
    )
    r.write_traces(tmp_path / "t.csv")
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert len(rows) == 60
    assert set(rows[0]) == {"attempt", "iteration", "energy", "feasible"}
    with pytest.raises(ValueError):
        simcim_solve(random_ising(3, 0), AnnealParams(n_iterations=5)).write_traces(tmp_path / "x.csv")


# -- determinism, limits, failures ---------------------------------------------------


def test_deterministic_for_fixed_seed():
    prob = random_ising(12, 8)
    params = AnnealParams(n_iterations=200, n_attempts=70, seed=11)
    assert strip(simcim_solve(prob, params)) == strip(simcim_solve(prob, params))


@pytest.mark.parametrize("workers", [2, 3])
def test_parallel_attempts_bit_identical(workers):
    prob = random_ising(14, 9)
    check = lambda s: s[1] < 0  # noqa: E731
    params = AnnealParams(n_iterations=150, n_attempts=100, seed=4)
    serial = simcim_solve(prob, params, feasible=check)
    parallel = simcim_solve(prob, params.with_updates(workers=workers), feasible=check)
    assert strip(serial) == strip(parallel)


def test_seed_changes_noise():
    prob = random_ising(16, 2)
    a = simcim_solve(prob, AnnealParams(n_iterations=100, n_attempts=1, seed=0, record_traces=True))
    b = simcim_solve(prob, AnnealParams(n_iterations=100, n_attempts=1, seed=1, record_traces=True))
    assert not np.array_equal(a.attempt_traces, b.attempt_traces)


def test_time_limit_truncates():
    prob = random_ising(200, 0)
    r = simcim_solve(prob, AnnealParams(n_iterations=10**6, n_attempts=64, time_limit=0.2))
    assert r.truncated
    assert r.iterations_run < 10**6
    assert r.best_energy == pytest.approx(prob.energy(r.best_spins))


def test_nan_attempts_are_aborted():
    prob = IsingProblem(np.zeros((2, 2)), [np.nan, 1.0])
    r = simcim_solve(prob, AnnealParams(n_iterations=10, n_attempts=3, zeta=1.0))
    assert r.aborted_attempts == (0, 1, 2)


def test_empty_problem_rejected():
    with pytest.raises(ValueError):
        simcim_solve(IsingProblem(np.zeros((0, 0)), []), AnnealParams(n_iterations=1))
