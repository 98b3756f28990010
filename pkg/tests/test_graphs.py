import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirslab.errors import InvalidParameterError
from sirslab.graphs import (
    Graph,
    HrgParams,
    count_edges_between,
    disjoint_union,
    gen_erdos_renyi,
    gen_hyperbolic,
    gen_random_regular,
    giant_component,
    giant_component_diameter,
    graph_to_text,
    hill_tail_exponent,
    make_clique,
    make_cycle,
    make_path,
    make_star,
    read_graph,
    write_graph,
)


def assert_simple(G: Graph):
    src = np.repeat(np.arange(G.n), G.degrees)
    assert not np.any(src == G.indices)
    for v in range(G.n):
        nb = G.neighbors(v)
        assert np.all(np.diff(nb) > 0)
        for u in nb:
            assert G.has_edge(int(u), v)
    assert G.m * 2 == G.degrees.sum()


class TestFamilies:
    def test_star(self):
        G = make_star(3)
        assert (G.n, G.m, G.degrees[0]) == (4, 3, 3)
        assert list(G.degrees[1:]) == [1, 1, 1]

    def test_star_single_leaf_is_an_edge(self):
        G = make_star(1)
        assert (G.n, G.m) == (2, 1)

    def test_star_needs_leaves(self):
        with pytest.raises(InvalidParameterError):
            make_star(0)

    @pytest.mark.parametrize("k,m", [(4, 6), (1, 0), (2, 1)])
    def test_clique(self, k, m):
        G = make_clique(k)
        assert G.m == m
        assert np.all(G.degrees == k - 1)

    def test_clique_needs_vertices(self):
        with pytest.raises(InvalidParameterError):
            make_clique(0)

    def test_path_and_cycle(self):
        assert make_path(5).m == 4
        assert make_cycle(5).m == 5
        assert np.all(make_cycle(6).degrees == 2)

    def test_every_family_is_simple(self):
        for G in (make_star(7), make_clique(6), make_path(9), make_cycle(8),
                  gen_erdos_renyi(60, 0.2, 1), gen_random_regular(40, 5, 2)):
            assert_simple(G)

    def test_from_edges_rejects_bad_input(self):
        with pytest.raises(InvalidParameterError):
            Graph.from_edges(3, [(0, 0)])
        with pytest.raises(InvalidParameterError):
            Graph.from_edges(3, [(0, 1), (1, 0)])
        with pytest.raises(InvalidParameterError):
            Graph.from_edges(3, [(0, 3)])


class TestErdosRenyi:
    def test_p_zero_is_empty(self):
        assert gen_erdos_renyi(100, 0.0, 5).m == 0

    def test_p_one_is_complete(self):
        assert gen_erdos_renyi(100, 1.0, 5) == make_clique(100)

    def test_edge_count_binomial(self):
        G = gen_erdos_renyi(1000, 0.1, 11)
        pairs = 1000 * 999 // 2
        mean, sd = pairs * 0.1, np.sqrt(pairs * 0.1 * 0.9)
        assert abs(G.m - mean) <= 4 * sd

    def test_bad_probability(self):
        with pytest.raises(InvalidParameterError):
            gen_erdos_renyi(10, 1.5, 0)

    def test_deterministic(self):
        assert gen_erdos_renyi(200, 0.05, 9) == gen_erdos_renyi(200, 0.05, 9)
        assert gen_erdos_renyi(200, 0.05, 9) != gen_erdos_renyi(200, 0.05, 10)


class TestRandomRegular:
    def test_small(self):
        G = gen_random_regular(10, 3, 4)
        assert np.all(G.degrees == 3)
        assert_simple(G)

    def test_odd_product(self):
        with pytest.raises(InvalidParameterError):
            gen_random_regular(5, 3, 0)

    def test_degree_too_large(self):
        with pytest.raises(InvalidParameterError):
            gen_random_regular(6, 6, 0)

    def test_dense_case_terminates(self):
        G = gen_random_regular(2000, 50, 1)
        assert np.all(G.degrees == 50)
        assert_simple(G)

    def test_deterministic(self):
        assert gen_random_regular(100, 6, 3) == gen_random_regular(100, 6, 3)


class TestHyperbolic:
    def test_single_vertex(self):
        hg = gen_hyperbolic(HrgParams(1, 2.5, 10.0), 0)
        assert (hg.graph.n, hg.graph.m) == (1, 0)

    def test_gamma_outside_scope(self):
        with pytest.raises(InvalidParameterError):
            HrgParams(100, 3.5, 10.0)

    def test_alpha(self):
        assert HrgParams(10, 2.5, 5.0).alpha == pytest.approx(0.75)

    def test_tail_exponent(self):
        hg = gen_hyperbolic(HrgParams(1000, 2.5, 10.0), 7)
        deg = hg.graph.degrees
        gamma_hat = hill_tail_exponent(deg[deg > 0])
        assert 2.2 <= gamma_hat <= 2.8

    def test_average_degree_calibrated(self):
        hg = gen_hyperbolic(HrgParams(1000, 2.5, 10.0), 7)
        assert abs(hg.graph.degrees.mean() - 10.0) <= 1.0

    def test_threshold_rule(self):
        hg = gen_hyperbolic(HrgParams(300, 2.5, 8.0), 3)
        r, th, R = hg.radii, hg.angles, hg.disk_radius
        rng = np.random.default_rng(0)
        for _ in range(500):
            u, v = rng.choice(300, 2, replace=False)
            dth = np.pi - abs(np.pi - abs(th[u] - th[v]))
            cosh_d = np.cosh(r[u]) * np.cosh(r[v]) - np.sinh(r[u]) * np.sinh(r[v]) * np.cos(dth)
            d = np.arccosh(max(cosh_d, 1.0))
            if abs(d - R) > 1e-9:
                assert hg.graph.has_edge(int(u), int(v)) == (d <= R)

    def test_deterministic(self):
        p = HrgParams(400, 2.5, 6.0)
        assert gen_hyperbolic(p, 1).graph == gen_hyperbolic(p, 1).graph


class TestEdgeCounts:
    def test_clique_halves(self):
        assert count_edges_between(make_clique(4), [0, 1], [2, 3]) == 4

    def test_inside_edges_count_twice(self):
        assert count_edges_between(make_clique(3), [0, 1, 2], [0, 1, 2]) == 6

    def test_star_center_to_leaves(self):
        assert count_edges_between(make_star(9), [0], range(1, 10)) == 9

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            count_edges_between(make_path(3), [5], [0])

    def test_exhaustive_disjoint_pairs(self):
        G = gen_erdos_renyi(8, 0.5, 2)
        edges = [tuple(e) for e in G.edges().tolist()]
        for labels in itertools.product(range(3), repeat=G.n):
            X = [v for v in range(G.n) if labels[v] == 1]
            Y = [v for v in range(G.n) if labels[v] == 2]
            brute = sum((u in X and v in Y) or (v in X and u in Y) for u, v in edges)
            assert count_edges_between(G, X, Y) == brute

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 12))
    def test_cut_symmetric(self, seed, n):
        G = gen_erdos_renyi(n, 0.4, seed)
        rng = np.random.default_rng(seed)
        X = np.flatnonzero(rng.random(n) < 0.5)
        Xc = np.setdiff1d(np.arange(n), X)
        assert count_edges_between(G, X, Xc) == count_edges_between(G, Xc, X)


class TestComponents:
    def test_path(self):
        assert giant_component_diameter(make_path(5)) == (5, 4)

    def test_disjoint_cliques(self):
        assert giant_component_diameter(disjoint_union(make_clique(3), make_clique(5))) == (5, 1)

    def test_star(self):
        assert giant_component_diameter(make_star(12)) == (13, 2)

    def test_tie_broken_by_smallest_vertex(self):
        G = disjoint_union(make_path(3), make_cycle(3))
        assert list(giant_component(G)) == [0, 1, 2]


class TestTextFormat:
    def test_round_trip(self, tmp_path):
        G = gen_erdos_renyi(50, 0.1, 3)
        path = tmp_path / "g.txt"
        write_graph(G, path)
        assert read_graph(path) == G
        assert path.read_text() == graph_to_text(G)

    def test_layout(self):
        text = graph_to_text(make_path(3))
        assert text == "3 2\n0 1\n1 2\n"

    def test_empty_graph(self):
        G = Graph.from_edges(4, [])
        assert read_graph(io.StringIO(graph_to_text(G))) == G

    def test_truncated_file(self):
        with pytest.raises(InvalidParameterError):
            read_graph(io.StringIO("3 2\n0 1\n"))
