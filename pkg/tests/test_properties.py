"""Property tests over small random graphs."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from oracles import closed_walks_brute, delta_brute, floyd_warshall, power_adjacency

from powerlab.bounds import closed_walk_counts, even_partition_bound, tree_like_lower_bound, tree_like_walk_oracle
from powerlab.detection import decide
from powerlab.graph import build_graph, delta_profile
from powerlab.models import Perturbation, apply_perturbation
from powerlab.powering import power_graph
from powerlab.spectral import lambda2_powered, weyl_gap

pytestmark = pytest.mark.filterwarnings("ignore:r=.*reaches the diameter")

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def graphs(draw, min_n=2, max_n=12):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return build_graph(n, chosen)


@st.composite
def graph_and_perturbation(draw):
    g = draw(graphs(min_n=3))
    verts = draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=g.n, unique=True))
    vs = sorted(verts)
    pairs = [(u, v) for i, u in enumerate(vs) for v in vs[i + 1:]]
    toggles = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return g, Perturbation(tuple(vs), tuple(toggles))


def edge_set(g):
    return {tuple(e) for e in g.edges().tolist()}


@SETTINGS
@given(graphs(), st.integers(1, 4))
def test_power_matches_floyd_warshall(g, r):
    pg = power_graph(g, r).graph
    assert np.array_equal(pg.adjacency_matrix().toarray().astype(np.int64), power_adjacency(g, r))


@SETTINGS
@given(graphs(), st.integers(1, 3))
def test_power_is_monotone_in_r(g, r):
    lo = power_graph(g, r).graph.adjacency_matrix().toarray()
    hi = power_graph(g, r + 1).graph.adjacency_matrix().toarray()
    assert np.all(lo <= hi)


@SETTINGS
@given(graph_and_perturbation())
def test_perturbation_is_involution(gh):
    g, h = gh
    assert edge_set(apply_perturbation(apply_perturbation(g, h), h)) == edge_set(g)


@SETTINGS
@given(graph_and_perturbation(), st.randoms(use_true_random=False))
def test_perturbation_commutes_with_relabeling(gh, rnd):
    g, h = gh
    perm = list(range(g.n))
    rnd.shuffle(perm)

    def relabel_graph(x):
        return build_graph(x.n, [(perm[u], perm[v]) for u, v in x.edges().tolist()])

    h_perm = Perturbation(tuple(perm[v] for v in h.vertices), tuple((perm[u], perm[v]) for u, v in h.toggled_edges))
    left = relabel_graph(apply_perturbation(g, h))
    right = apply_perturbation(relabel_graph(g), h_perm)
    assert edge_set(left) == edge_set(right)


@SETTINGS
@given(graph_and_perturbation(), st.integers(1, 3))
def test_weyl_bound(gh, k):
    g, h = gh
    assume(k <= g.n)
    lhs, rhs = weyl_gap(g, h, k)
    assert lhs <= rhs + 1e-8


@SETTINGS
@given(
    st.lists(st.fractions(min_value=0, max_value=5, max_denominator=7), min_size=1, max_size=5),
    st.integers(0, 6),
)
def test_even_partition(xs, n):
    lhs, rhs = even_partition_bound(xs, 2 * n)
    assert isinstance(lhs, Fraction)
    assert lhs >= rhs


@SETTINGS
@given(graphs(max_n=10), st.integers(1, 3), st.integers(1, 3))
def test_walk_table_matches_brute_force(g, r, k):
    table = closed_walk_counts(g, r, k)
    assert table.t[2 * k] == min(closed_walks_brute(power_adjacency(g, r), 2 * k))


@SETTINGS
@given(graphs(max_n=12), st.integers(1, 3))
def test_delta_profile_matches_brute_force(g, r):
    assume(g.num_edges > 0)
    assert list(delta_profile(g, r).delta) == delta_brute(g, r)


@st.composite
def sparse_connected(draw):
    """A cycle with a few chords: connected and usually of large radius."""
    n = draw(st.integers(6, 16))
    pairs = [(u, v) for u in range(n) for v in range(u + 2, n) if (u, v) != (0, n - 1)]
    chords = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=3))
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)] + chords)


@SETTINGS
@given(sparse_connected(), st.integers(1, 3), st.integers(1, 3))
def test_walk_sandwich(g, r, k):
    D = floyd_warshall(g)
    assume(np.isfinite(D).all() and D.max(axis=1).min() >= r)
    lower = tree_like_lower_bound(delta_profile(g, r), r, k)
    oracle = min(tree_like_walk_oracle(g, x, r, k).count for x in range(g.n))
    assert lower <= oracle <= closed_walk_counts(g, r, k).t[2 * k]


@SETTINGS
@given(graphs(min_n=3), st.integers(1, 3))
def test_lambda2_is_label_free(g, r):
    assume(g.num_edges > 0)
    labelled = build_graph(g.n, g.edges().tolist(), np.arange(g.n) % 2 + 1)
    assert lambda2_powered(g, r) == lambda2_powered(labelled, r)


@given(st.floats(allow_nan=False), st.floats(allow_nan=False))
def test_decision_rule(stat, thr):
    assert (decide(stat, thr) == "structured") == (stat > thr)
