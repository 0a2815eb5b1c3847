import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waqubo.exact import EXHAUSTIVE_MAX_K, chromatic_number, dsatur_coloring, exhaustive_qubo_min, greedy_clique
from waqubo.graph import Graph, erdos_renyi
from waqubo.qubo import QuboProblem, build_original_qubo, build_proposed_qubo, certified_penalties, energy

from oracles import brute_force_chromatic, brute_force_qubo_min, is_proper
from test_graph import graphs


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_complete_graph(n):
    r = chromatic_number(Graph.complete(n))
    assert r.optimum == n and r.exact


@pytest.mark.parametrize(
    "g",
    [
        Graph(2, ((0, 1),)),
        Graph(6, tuple((i, (i + 1) % 6) for i in range(6))),  # even cycle
        Graph(7, tuple((0, i) for i in range(1, 7))),  # star
        Graph(6, tuple((a, b) for a in range(3) for b in range(3, 6))),  # K_{3,3}
    ],
    ids=["K2", "C6", "star", "K33"],
)
def test_bipartite(g):
    assert chromatic_number(g).optimum == 2


def test_odd_cycle_and_petersen():
    assert chromatic_number(Graph(5, tuple((i, (i + 1) % 5) for i in range(5)))).optimum == 3
    r = chromatic_number(petersen())
    assert r.optimum == 3
    assert is_proper(petersen().edges, r.witness)


def test_empty_graphs():
    assert chromatic_number(Graph(0)).optimum == 0
    assert chromatic_number(Graph(3)).optimum == 1


def test_matches_brute_force_on_100_random_n8():
    rng = np.random.default_rng(2024)
    for k in range(100):
        p = float(rng.uniform(0.1, 0.9))
        a = np.triu(rng.random((8, 8)) < p, 1)
        g = Graph.from_adjacency(a | a.T)
        r = chromatic_number(g)
        assert r.optimum == brute_force_chromatic(8, g.edges), k
        assert is_proper(g.edges, r.witness)
        assert max(r.witness) + 1 == r.optimum


@settings(max_examples=50, deadline=None)
@given(graphs(max_n=9))
def test_witness_reevaluates(g):
    r = chromatic_number(g)
    assert is_proper(g.edges, r.witness)
    assert len(set(r.witness)) == r.optimum
    assert r.lower_bound <= r.optimum


def test_bounds_helpers():
    g = erdos_renyi(12, 0.5, 3)
    clique = greedy_clique(g)
    assert all(g.adjacency[u, v] for i, u in enumerate(clique) for v in clique[i + 1 :])
    assert is_proper(g.edges, dsatur_coloring(g))


def test_budget_timeout_gives_interval():
    g = erdos_renyi(70, 0.5, 1)
    r = chromatic_number(g, budget=0.05)
    assert r.timed_out and not r.exact
    assert r.lower_bound <= r.optimum
    assert is_proper(g.edges, r.witness)


# -- exhaustive QUBO minimum ---------------------------------------------------------


def test_zero_matrix_with_offset():
    r = exhaustive_qubo_min(QuboProblem(np.zeros((5, 5)), 5.0))
    assert r.optimum == 5.0


def test_k2_certified_minimum():
    g = Graph(2, ((0, 1),))
    c = certified_penalties(2, 1)
    q = build_proposed_qubo(g, 2, c)
    r = exhaustive_qubo_min(q)
    assert r.optimum == 2 * c.c0
    x = np.array(r.witness[2:]).reshape(2, 2)
    assert x.sum(axis=1).tolist() == [1, 1] and (x[0] & x[1]).sum() == 0


@pytest.mark.parametrize("seed", range(3))
def test_original_at_chromatic_is_zero(seed):
    g = erdos_renyi(5, 0.7, seed)
    chi = int(chromatic_number(g).optimum)
    assert exhaustive_qubo_min(build_original_qubo(g, chi)).optimum == 0


def test_cap_enforced():
    with pytest.raises(ValueError, match="exceeds cap"):
        exhaustive_qubo_min(QuboProblem(np.zeros((EXHAUSTIVE_MAX_K + 1,) * 2), 0.0))


def test_empty_problem():
    assert exhaustive_qubo_min(QuboProblem(np.zeros((0, 0)), 1.5)).optimum == 1.5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_gray_code_matches_naive_enumeration(K, seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-5, 6, size=(K, K)).astype(float)
    q = QuboProblem(M + M.T, float(rng.integers(-3, 4)))
    r = exhaustive_qubo_min(q)
    best, _ = brute_force_qubo_min(q.Q, q.offset)
    assert r.optimum == best
    assert energy(q, r.witness) == r.optimum


def test_gray_code_beyond_low_block():
    # 16 variables exercise the incremental high-bit walk
    rng = np.random.default_rng(7)
    M = rng.normal(size=(16, 16))
    q = QuboProblem(M + M.T, 0.0)
    r = exhaustive_qubo_min(q)
    S = ((np.arange(2**16)[:, None] >> np.arange(16)) & 1).astype(float)
    naive = np.einsum("ij,ij->i", S @ q.Q, S).min()
    assert r.optimum == pytest.approx(naive, abs=1e-9)
