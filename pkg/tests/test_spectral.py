import numpy as np
import pytest

from sirslab.errors import DegenerateDegreeError
from sirslab.graphs import (
    Graph,
    HrgParams,
    disjoint_union,
    gen_erdos_renyi,
    gen_hyperbolic,
    gen_random_regular,
    make_clique,
    make_cycle,
    make_path,
    make_star,
)
from sirslab.spectral import (
    NotAnExpanderError,
    certify_expander,
    check_edge_density_bounds,
    cut_lower_bound,
    density_tolerance,
    find_dense_clique,
    laplacian_spectrum,
    normalized_laplacian,
    spectral_expansion,
)


def test_laplacian_of_an_edge():
    assert np.allclose(normalized_laplacian(make_path(2)), [[1, -1], [-1, 1]])


def test_star_spectrum():
    assert np.allclose(laplacian_spectrum(make_star(3)), [0, 1, 1, 2], atol=1e-12)


def test_isolated_vertex_rejected():
    with pytest.raises(DegenerateDegreeError):
        normalized_laplacian(Graph.from_edges(3, [(0, 1)]))


@pytest.mark.parametrize("k", [5, 20, 50])
def test_clique_expansion(k):
    assert abs(spectral_expansion(make_clique(k)) - 1.0 / (k - 1)) <= 1e-9


def test_star_and_even_cycle_expansion():
    assert spectral_expansion(make_star(30)) == pytest.approx(1.0, abs=1e-9)
    assert spectral_expansion(make_cycle(4)) == pytest.approx(1.0, abs=1e-9)


def test_disconnected_graph_has_expansion_one():
    G = disjoint_union(make_clique(3), make_clique(3))
    assert spectral_expansion(G) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("G", [gen_erdos_renyi(150, 0.1, 4), gen_random_regular(100, 6, 1), make_star(9)])
def test_eigenvalues_in_range(G):
    eig = laplacian_spectrum(G)
    assert eig.min() >= -1e-8 and eig.max() <= 2 + 1e-8
    assert abs(eig[0]) <= 1e-8


def test_certificate_for_clique():
    cert = certify_expander(make_clique(50), 49, 0.0)
    assert cert.delta == pytest.approx(1 / 49, abs=1e-9)
    assert cert.d_min == cert.d_max == 49


def test_certificate_failure_names_vertex():
    with pytest.raises(NotAnExpanderError) as info:
        certify_expander(make_star(100), 50, 0.5)
    assert info.value.vertex == 0 and info.value.degree == 100


def test_random_regular_is_certified():
    G = gen_random_regular(1000, 20, 3)
    cert = certify_expander(G, 20, 0.0)
    assert 0 < cert.delta < 1
    assert cert.d_min == G.degrees.min() and cert.d_max == G.degrees.max()


def test_density_bounds_on_clique():
    G = make_clique(20)
    rep = check_edge_density_bounds(G, certify_expander(G, 19, 0.0), 10_000, 1)
    assert rep.ok and rep.density_checked
    assert rep.pairs_checked >= 10_000


def test_empty_set_is_tight():
    cert = certify_expander(make_clique(10), 9, 0.0)
    assert cut_lower_bound(cert, 0) == 0
    assert density_tolerance(cert, 0, 5) == 0


def test_density_bounds_on_regular_graph():
    G = gen_random_regular(400, 12, 2)
    rep = check_edge_density_bounds(G, certify_expander(G, 12, 0.0), 2000, 5)
    assert rep.ok


def test_two_sided_bound_skipped_for_loose_degrees():
    G = gen_erdos_renyi(300, 0.2, 1)
    d = G.degrees.mean()
    eps = max(d / G.degrees.min() - 1, G.degrees.max() / d - 1) + 0.01
    rep = check_edge_density_bounds(G, certify_expander(G, d, eps), 200, 0)
    assert not rep.density_checked or eps <= 0.2
    assert rep.cut_violations == 0


def test_dense_clique_heuristic():
    assert len(find_dense_clique(make_clique(7))) == 7
    assert len(find_dense_clique(make_star(10))) == 2


def test_dense_clique_in_hyperbolic_graph():
    hg = gen_hyperbolic(HrgParams(2000, 2.5, 10.0), 5)
    clique = find_dense_clique(hg.graph, ranking=np.argsort(hg.radii))
    assert len(clique) >= 4
    for i, u in enumerate(clique):
        for v in clique[i + 1:]:
            assert hg.graph.has_edge(int(u), int(v))
