from itertools import combinations

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udgembed.graph import (
    Graph,
    MalformedInputError,
    decompose,
    greedy_clique,
    is_clique,
    load_graph,
    parse_graph,
    stats,
)


def brute_force_clique(g: Graph) -> int:
    for k in range(g.n, 0, -1):
        for sub in combinations(range(g.n), k):
            if all(g.has_edge(u, v) for u, v in combinations(sub, 2)):
                return k
    return 1


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = list(combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, frozenset(p for p, keep in zip(pairs, mask) if keep))


def test_load_path_graph():
    g = load_graph({"n": 3, "edges": [[0, 1], [1, 2]]})
    assert g.n == 3 and g.edges == {(0, 1), (1, 2)}


def test_load_single_vertex():
    g = load_graph({"n": 1, "edges": []})
    assert g.n == 1 and g.m == 0


def test_duplicate_pairs_collapse():
    g = load_graph({"n": 2, "edges": [[0, 1], [1, 0]]})
    assert g.edges == {(0, 1)}


@pytest.mark.parametrize(
    "doc",
    [
        {"n": 2, "edges": [[0, 2]]},
        {"n": 2, "edges": [[1, 1]]},
        {"n": 0, "edges": []},
        {"n": 3, "edges": [[0, 1, 2]]},
        {"edges": []},
    ],
)
def test_malformed_documents(doc):
    with pytest.raises(MalformedInputError):
        load_graph(doc)


def test_line_format_and_json_agree(tmp_path):
    text = "n 4\n0 1\n1 2  # comment\n\n2 3\n"
    f = tmp_path / "g.txt"
    f.write_text(text)
    assert load_graph(f) == parse_graph('{"n": 4, "edges": [[0,1],[1,2],[2,3]]}')


def test_line_format_needs_header():
    with pytest.raises(MalformedInputError):
        parse_graph("0 1\n1 2\n")


def test_missing_file():
    with pytest.raises(MalformedInputError):
        load_graph("/nonexistent/graph.json")


def test_stats_complete():
    s = stats(Graph.complete(4))
    assert (s.max_degree, s.clique_lower_bound) == (3, 4)


def test_stats_star():
    s = stats(Graph(6, [(0, k) for k in range(1, 6)]))
    assert (s.max_degree, s.clique_lower_bound) == (5, 2)


def test_stats_triangle_with_pendant():
    g = Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    s = stats(g)
    assert brute_force_clique(g) == 3
    assert (s.max_degree, s.clique_lower_bound) == (3, 3)


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_clique_bound_exact_on_small_graphs(g):
    s = stats(g)
    assert s.clique_lower_bound == brute_force_clique(g)
    assert is_clique(g, s.clique)
    assert 1 <= s.clique_lower_bound <= s.max_degree + 1


@settings(max_examples=60, deadline=None)
@given(st.integers(13, 30), st.floats(0.1, 0.6), st.integers(0, 10_000))
def test_greedy_clique_is_a_witness(n, p, seed):
    g = Graph.from_networkx(nx.gnp_random_graph(n, p, seed=seed))
    c = greedy_clique(g)
    assert is_clique(g, c)
    s = stats(g)
    assert s.clique_lower_bound == len(c) <= s.max_degree + 1


def test_decompose_two_edges():
    d = decompose(Graph(4, [(0, 1), (2, 3)]))
    assert d.complete == [(0, 1), (2, 3)] and d.general == [] and d.isolated == []


def test_decompose_triangle_and_path():
    g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)])
    d = decompose(g)
    assert d.complete == [(0, 1, 2)]
    assert len(d.general) == 1
    comp = d.general[0]
    assert comp.vertices == (3, 4, 5)
    assert comp.graph.edges == {(0, 1), (1, 2)}
    assert comp.index_map == {0: 3, 1: 4, 2: 5}


@settings(max_examples=100, deadline=None)
@given(graphs(max_n=10), st.randoms(use_true_random=False))
def test_decompose_partitions_and_is_label_invariant(g, rnd):
    d = decompose(g)
    sizes = len(d.isolated) + sum(len(c) for c in d.complete) + sum(len(c.vertices) for c in d.general)
    assert sizes == g.n
    seen = set(d.isolated)
    for c in d.complete:
        seen |= set(c)
    for c in d.general:
        seen |= set(c.vertices)
        for u, v in c.graph.edges:
            assert g.has_edge(c.vertices[u], c.vertices[v])
    assert seen == set(range(g.n))

    perm = list(range(g.n))
    rnd.shuffle(perm)
    d2 = decompose(g.relabel(perm))

    def profile(dec):
        out = [(1, 0)] * len(dec.isolated)
        out += [(len(c), len(c) * (len(c) - 1) // 2) for c in dec.complete]
        out += [(len(c.vertices), c.graph.m) for c in dec.general]
        return sorted(out)

    assert profile(d) == profile(d2)
