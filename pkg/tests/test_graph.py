import io

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infogap.generators import (GenerationError, GeneratorConfig, generate, powerlaw_pmf,
                                structural_cutoff)
from infogap.graph import (EdgeListParseError, Graph, GraphError, bfs_distances,
                           connected_components, core_decomposition, degree, giant_component,
                           load_edge_list, write_edge_list, write_label_map)


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(k):
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def clique_edges(nodes):
    return [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]


@st.composite
def random_graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    edges = draw(st.lists(pairs, max_size=3 * n))
    return Graph.from_edges(n, edges)


# -- loading ----------------------------------------------------------------

def test_load_simple_edge_list():
    g, rep = load_edge_list("0 1\n1 2")
    assert g.node_count == 3
    assert {tuple(e) for e in g.edges()} == {(0, 1), (1, 2)}
    assert rep.duplicate_edges == 0 and rep.self_loops == 0


def test_load_drops_and_counts_duplicates_and_loops():
    g, rep = load_edge_list("a b\nb a\na a")
    assert g.node_count == 2
    assert g.edge_count == 1
    assert rep.duplicate_edges == 1
    assert rep.self_loops == 1
    assert rep.label_to_id == {"a": 0, "b": 1}


def test_load_skips_comments_and_blank_lines():
    g, _ = load_edge_list("# header\n\nx y\n# more\ny z\n")
    assert g.labels == ("x", "y", "z")
    assert g.edge_count == 2


def test_load_malformed_line_reports_line_number():
    with pytest.raises(EdgeListParseError) as exc:
        load_edge_list("0 1\n1 2 3\n")
    assert exc.value.lineno == 2


def test_load_empty_is_error():
    with pytest.raises(GraphError):
        load_edge_list("# nothing here\n")


def test_edge_list_round_trip_with_labels():
    g, _ = load_edge_list("alice bob\nbob carol\ncarol alice\n")
    buf = io.StringIO()
    write_edge_list(g, buf)
    g2, _ = load_edge_list(buf.getvalue())
    assert g2.edge_count == 3
    assert set(g2.labels) == {"alice", "bob", "carol"}
    buf = io.StringIO()
    write_label_map(g, buf)
    assert buf.getvalue().splitlines()[:2] == ["label,id", "alice,0"]


# -- structure ----------------------------------------------------------------

def test_degree():
    assert degree(path(3), 1) == 2
    assert degree(Graph.from_edges(3, [(0, 1)]), 2) == 0
    assert degree(star(7), 0) == 7


def test_core_triangle_and_star():
    assert core_decomposition(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])).tolist() == [2, 2, 2]
    assert core_decomposition(star(5)).tolist() == [1] * 6


def test_core_k5_plus_pendant():
    g = Graph.from_edges(6, clique_edges(list(range(5))) + [(4, 5)])
    assert core_decomposition(g).tolist() == [4, 4, 4, 4, 4, 1]


@settings(max_examples=60, deadline=None)
@given(random_graphs(), st.integers(0, 2 ** 32 - 1))
def test_core_matches_networkx_and_is_relabel_invariant(g, seed):
    g.check_invariants()
    core = core_decomposition(g)
    ref = nx.core_number(nx.Graph(list(map(tuple, g.edges()))))
    for v, c in ref.items():
        assert core[v] == c
    perm = np.random.default_rng(seed).permutation(g.node_count)
    h = Graph.from_edges(g.node_count, perm[g.edges()] if g.edge_count else [])
    assert np.array_equal(core_decomposition(h)[perm], core)


def test_bfs_examples():
    g = path(4)
    assert bfs_distances(g, [0]).tolist() == [0, 1, 2, 3]
    assert bfs_distances(g, [0, 3]).tolist() == [0, 1, 1, 0]
    d = bfs_distances(Graph.from_edges(4, [(0, 1), (2, 3)]), [0])
    assert d[1] == 1 and np.isinf(d[2]) and np.isinf(d[3])


@settings(max_examples=60, deadline=None)
@given(random_graphs(), st.data())
def test_bfs_step_property(g, data):
    sources = data.draw(st.lists(st.integers(0, g.node_count - 1), min_size=1, max_size=3))
    d = bfs_distances(g, sources)
    for v in range(g.node_count):
        if d[v] in (0, np.inf):
            continue
        assert np.any(d[g.neighbors(v)] == d[v] - 1)


def test_giant_component_keeps_labels():
    g, _ = load_edge_list("a b\nb c\nc a\nx y\n")
    gc = giant_component(g)
    assert gc.node_count == 3
    assert set(gc.labels) == {"a", "b", "c"}
    assert connected_components(g).tolist() == [0, 0, 0, 1, 1]


@settings(max_examples=60, deadline=None)
@given(random_graphs())
def test_invariants_after_construction(g):
    g.check_invariants()
    assert g.edge_count * 2 == sum(len(a) for a in g.adjacency)
    for i, nb in enumerate(g.adjacency):
        assert i not in nb
        for j in nb:
            assert i in g.neighbors(j)


# -- generation -----------------------------------------------------------------

def _ccdf_slope(ccdf, kmin, kmax):
    k = np.arange(kmin, kmax + 1)
    return np.polyfit(np.log(k), np.log([ccdf(x) for x in k]), 1)[0]


def _truncated_powerlaw_mle(degrees, kmin, kmax):
    """Grid-search MLE of gamma for P(k) ~ k^-gamma on [kmin, kmax]."""
    d = degrees[(degrees >= kmin) & (degrees <= kmax)]
    k = np.arange(kmin, kmax + 1)
    grid = np.linspace(1.5, 4.0, 2501)
    ll = -grid * np.log(d).sum() - len(d) * np.log((k[None, :] ** -grid[:, None]).sum(axis=1))
    return grid[np.argmax(ll)]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_scale_free_ccdf_slope(seed):
    n = 10_000
    g = generate(GeneratorConfig(node_count=n, gamma=2.5, min_degree=1, rng_seed=seed))
    g.check_invariants()
    kmax = structural_cutoff(n)
    # CCDF slope of a power law is 1 - gamma
    assert abs((1 - _truncated_powerlaw_mle(g.degrees, 1, kmax)) - (-1.5)) < 0.05
    # log-log regression on the well-populated range vs. the same regression on the exact pmf
    support, prob = powerlaw_pmf(2.5, 1, kmax)
    exact = _ccdf_slope(lambda x: prob[support >= x].sum(), 2, 20)
    emp = _ccdf_slope(lambda x: (g.degrees >= x).mean(), 2, 20)
    assert abs(emp - exact) < 0.15


def test_normal_degree_mean():
    g = generate(GeneratorConfig(model="normal_degree", node_count=10_000, mean_degree=10,
                                 degree_stddev=2, min_degree=1, rng_seed=5))
    g.check_invariants()
    assert abs(g.degrees.mean() - 10) / 10 < 0.02


def test_generation_is_reproducible():
    cfg = GeneratorConfig(node_count=3000, rng_seed=11)
    a, b = generate(cfg), generate(cfg)
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
    c = generate(GeneratorConfig(node_count=3000, rng_seed=12))
    assert not (np.array_equal(a.indptr, c.indptr) and np.array_equal(a.indices, c.indices))


def test_invalid_gamma():
    with pytest.raises(ValueError):
        GeneratorConfig(gamma=0.5)


def test_unrealizable_parity_raises():
    # single odd degree on an odd node count: every sequence sums odd
    with pytest.raises(GenerationError):
        generate(GeneratorConfig(node_count=9, min_degree=3, gamma=2.5))
