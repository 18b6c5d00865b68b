import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distopt import graph as gr
from distopt.errors import PreconditionError, ScheduleRangeError

from oracles import strongly_connected_bruteforce


def cycle(n, w=0.5):
    return gr.from_edges(n, [(i, (i + 1) % n) for i in range(n)], weight=w, undirected=False)


def test_laplacian_symmetric_pair():
    g = gr.from_edges(2, [(0, 1)], weight=0.5)
    np.testing.assert_array_equal(gr.laplacian(g), [[0.5, -0.5], [-0.5, 0.5]])


def test_laplacian_edgeless():
    np.testing.assert_array_equal(gr.laplacian(gr.WeightedDigraph(np.zeros((4, 4)))), np.zeros((4, 4)))


def test_laplacian_directed_cycle_rows_sum_to_zero():
    L = gr.laplacian(cycle(3))
    assert np.all(L.sum(axis=1) == 0)
    np.testing.assert_array_equal(L @ np.ones(3), 0)
    # a_{i,i+1} = 0.5 by construction: i hears i+1
    np.testing.assert_array_equal(L, [[0.5, -0.5, 0], [0, 0.5, -0.5], [-0.5, 0, 0.5]])


def test_balance():
    assert gr.is_balanced(gr.from_edges(4, gr.ring_edges(4)))
    assert gr.is_balanced(cycle(3))
    assert not gr.is_balanced(gr.from_edges(2, [(0, 1)], undirected=False))


def test_doubly_stochastic():
    assert gr.is_doubly_stochastic(gr.WeightedDigraph(np.eye(3), family=gr.DT))
    assert gr.is_doubly_stochastic(gr.WeightedDigraph(np.full((2, 2), 0.5), family=gr.DT))
    # zero diagonal cannot be a DT graph; as a CT graph it fails the diagonal requirement
    g = gr.WeightedDigraph(np.array([[0.0, 1.0], [1.0, 0.0]]), family=gr.CT)
    assert not gr.is_doubly_stochastic(g)
    with pytest.raises(ValueError):
        gr.WeightedDigraph(np.array([[0.0, 1.0], [1.0, 0.0]]), family=gr.DT)


def test_metropolis_examples():
    g = gr.metropolis_weights([(0, 1)], 2)
    np.testing.assert_allclose(g.weights, [[0.5, 0.5], [0.5, 0.5]])
    g = gr.metropolis_weights([(0, 1), (1, 2)], 3)
    # degrees (1, 2, 1): every edge weight is 1/(1+2)
    np.testing.assert_allclose(g.weights, [[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]])
    np.testing.assert_allclose(g.weights.sum(0), 1)
    np.testing.assert_allclose(g.weights.sum(1), 1)
    np.testing.assert_array_equal(gr.metropolis_weights([], 3).weights, np.eye(3))


edge_sets = st.integers(2, 9).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n),
    )
)


@settings(max_examples=200, deadline=None)
@given(edge_sets)
def test_metropolis_always_doubly_stochastic_and_symmetric(data):
    n, edges = data
    g = gr.metropolis_weights(edges, n)
    assert gr.is_doubly_stochastic(g, tol=1e-12)
    np.testing.assert_array_equal(g.weights, g.weights.T)


@settings(max_examples=200, deadline=None)
@given(edge_sets, st.booleans())
def test_laplacian_kills_ones_and_sym_part_is_psd(data, undirected):
    n, edges = data
    edges = [(i, j) for i, j in edges if i != j]
    g = gr.from_edges(n, edges, weight=0.5, undirected=undirected)
    L = gr.laplacian(g)
    assert np.all(L @ np.ones(n) == 0)
    if gr.is_balanced(g):
        np.testing.assert_allclose(np.ones(n) @ L, 0, atol=1e-12)
        x = np.random.default_rng(n).normal(size=n)
        assert x @ (0.5 * (L + L.T)) @ x >= -1e-12


@settings(max_examples=300, deadline=None)
@given(edge_sets)
def test_strong_connectivity_matches_closure(data):
    n, edges = data
    edges = [(i, j) for i, j in edges if i != j]
    g = gr.from_edges(n, edges, undirected=False)
    assert gr.is_strongly_connected(g) == strongly_connected_bruteforce(g.weights)


def test_strong_connectivity_examples():
    assert gr.is_strongly_connected(cycle(5))
    assert not gr.is_strongly_connected(gr.from_edges(2, [(0, 1)], undirected=False))
    assert gr.is_strongly_connected(gr.from_edges(5, gr.complete_edges(5)))


def two_epoch_schedule(g1, g2, **kw):
    return gr.GraphSchedule((0.0, 1.0), (g1, g2), 2.0, **kw)


def test_union_graph():
    g = cycle(3)
    s = gr.GraphSchedule.static(g)
    assert gr.union_graph(s, (0, 1)) == g
    e1 = gr.from_edges(3, [(0, 1)], undirected=False)
    e2 = gr.from_edges(3, [(1, 2)], undirected=False)
    u = gr.union_graph(two_epoch_schedule(e1, e2), (0, 2))
    assert u.weights[0, 1] == 0.5 and u.weights[1, 2] == 0.5
    # alternating halves of a directed 4-cycle
    h1 = gr.from_edges(4, [(0, 1), (2, 3)], undirected=False)
    h2 = gr.from_edges(4, [(1, 2), (3, 0)], undirected=False)
    sched = two_epoch_schedule(h1, h2)
    assert not gr.is_strongly_connected(h1) and not gr.is_strongly_connected(h2)
    u = gr.union_graph(sched, (0, 2))
    assert u == cycle(4)
    assert gr.is_strongly_connected(u)
    # replays cyclically
    assert gr.union_graph(sched, (2, 4)) == u
    assert gr.union_graph(sched, (0.5, 0.9)) == h1


def test_union_graph_range_errors():
    s = gr.GraphSchedule.static(cycle(3), cyclic=False)
    with pytest.raises(ScheduleRangeError):
        gr.union_graph(s, (0.5, 0.5))
    with pytest.raises(ScheduleRangeError):
        gr.union_graph(s, (-1, 0.5))
    with pytest.raises(ScheduleRangeError):
        gr.union_graph(s, (0.0, 3.0))


def test_validate_schedule_static():
    ring = gr.from_edges(5, gr.ring_edges(5))
    rep = gr.validate_schedule(gr.GraphSchedule.static(ring, dwell=0.5, window=1.0), gr.CT)
    assert rep.passed, rep.issues
    # agent 5 has no links at all
    broken = gr.from_edges(5, gr.path_edges(4))
    rep = gr.validate_schedule(gr.GraphSchedule.static(broken, dwell=0.5, window=1.0), gr.CT)
    assert not rep.passed
    assert [a for a, _ in rep.issues] == [gr.A_JOINT_CT]


def test_validate_schedule_flags_dwell_window_balance_and_stochasticity():
    h1 = gr.from_edges(4, [(0, 1), (2, 3)])
    h2 = gr.from_edges(4, [(1, 2), (3, 0)])
    sched = gr.GraphSchedule((0.0, 0.2), (h1, h2), 2.0, dwell=0.5, window=1.0)
    labels = {a for a, _ in gr.validate_schedule(sched).issues}
    assert gr.A_DWELL in labels
    assert gr.A_JOINT_CT in labels  # first window [0, 2) longer than M = 1

    unbalanced = gr.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 2)], undirected=False)
    rep = gr.validate_schedule(gr.GraphSchedule.static(unbalanced))
    assert gr.A_BALANCED in {a for a, _ in rep.issues}

    w = gr.metropolis_weights(gr.ring_edges(4), 4).weights.copy()
    w[0, 2] = 0.2  # column 3 and row 1 now sum to 1.2
    rep = gr.validate_schedule(gr.GraphSchedule.static(gr.WeightedDigraph(w, family=gr.DT)))
    assert [a for a, _ in rep.issues] == [gr.A_STOCHASTIC]
    assert "column 3 sums to 1.2" in rep.issues[0][1]


def test_laplacian_spectrum():
    g2 = gr.from_edges(2, [(0, 1)], weight=0.5)
    np.testing.assert_allclose(np.linalg.eigvalsh(g2.laplacian), [0, 1], atol=1e-15)
    assert gr.laplacian_spectrum_check(g2)
    k3 = gr.from_edges(3, gr.complete_edges(3), weight=1.0)
    np.testing.assert_allclose(np.linalg.eigvalsh(k3.laplacian), [0, 3, 3], atol=1e-12)
    assert gr.laplacian_spectrum_check(k3)
    c = cycle(3)
    ev = np.linalg.eigvalsh(0.5 * (c.laplacian + c.laplacian.T))
    # symmetric part = 0.25 * Laplacian of the unit triangle: {0, 0.75, 0.75}
    np.testing.assert_allclose(ev, [0, 0.75, 0.75], atol=1e-12)
    assert gr.laplacian_spectrum_check(c)
    with pytest.raises(PreconditionError):
        gr.laplacian_spectrum_check(gr.from_edges(3, [(0, 1)]))


def test_ct_graph_rejects_self_loops_and_small_weights():
    with pytest.raises(ValueError):
        gr.WeightedDigraph(np.eye(2))
    with pytest.raises(ValueError):
        gr.WeightedDigraph(np.array([[0, 0.1], [0.5, 0]]), eta=0.2)
