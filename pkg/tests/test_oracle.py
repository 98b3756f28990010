import math

import numpy as np
import pytest

from sirslab.dynamics import Mode, harmonic_number
from sirslab.errors import InvalidParameterError, SizeError
from sirslab.graphs import Graph, make_clique, make_cycle, make_path, make_star
from sirslab.oracle import (
    LumpedCliqueState,
    LumpedStarState,
    clique_exact_expected_survival,
    solve_absorption,
    star_exact_expected_survival,
    star_state_from_config,
    star_worst_start,
    tiny_exact_expected_survival,
)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


class TestStates:
    def test_star_absorbing(self):
        assert LumpedStarState(0, 5, 0, 0).absorbing
        assert LumpedStarState(2, 3, 0, 2).absorbing
        assert not LumpedStarState(1, 5, 0, 0).absorbing
        assert not LumpedStarState(0, 4, 1, 0).absorbing

    def test_negative_counts(self):
        with pytest.raises(InvalidParameterError):
            LumpedStarState(0, -1, 1, 0)
        with pytest.raises(InvalidParameterError):
            LumpedCliqueState(-1, 0)

    def test_lump_from_config(self):
        assert star_state_from_config([1, 0, 2, 1, 0]) == LumpedStarState(1, 2, 1, 1)


class TestStar:
    def test_absorbing_start(self):
        assert star_exact_expected_survival(5, 1, 1, LumpedStarState(0, 5, 0)).expected_T == 0

    def test_leaf_count_mismatch(self):
        with pytest.raises(InvalidParameterError):
            star_exact_expected_survival(5, 1, 1, LumpedStarState(1, 3, 0))

    @pytest.mark.parametrize("n_leaves", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("lam,rho", [(1.0, 1.0), (0.4, 2.0), (3.0, 0.5)])
    def test_matches_brute_force(self, n_leaves, lam, rho):
        G = make_star(n_leaves)
        rng = np.random.default_rng(n_leaves)
        for _ in range(3):
            cfg = rng.integers(0, 3, n_leaves + 1)
            cfg[rng.integers(0, n_leaves + 1)] = 1
            lumped = star_exact_expected_survival(n_leaves, lam, rho, star_state_from_config(cfg)).expected_T
            brute = tiny_exact_expected_survival(G, lam, rho, cfg).expected_T
            assert rel(lumped, brute) <= 1e-8

    def test_residual(self):
        res = star_exact_expected_survival(100, 2.0, 1.0, LumpedStarState(1, 100, 0))
        assert res.residual <= 1e-10
        assert res.states == 3 * 101 * 102 // 2 - 2 * 101

    def test_worst_start(self):
        state, res = star_worst_start(20, 1.0, 1.0)
        for center in (0, 1, 2):
            for i in range(21):
                for r in range(21 - i):
                    init = LumpedStarState(center, 20 - i - r, i, r)
                    assert star_exact_expected_survival(20, 1.0, 1.0, init).expected_T <= res.expected_T + 1e-9
        assert star_exact_expected_survival(20, 1.0, 1.0, state).expected_T == pytest.approx(res.expected_T)


class TestClique:
    def test_single_vertex(self):
        assert clique_exact_expected_survival(1, 3.0, 1.0, LumpedCliqueState(1)).expected_T == pytest.approx(1.0)

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_matches_brute_force(self, k):
        for i in range(1, k + 1):
            for r in range(k - i + 1):
                init = [1] * i + [2] * r + [0] * (k - i - r)
                lumped = clique_exact_expected_survival(k, 0.5, 1.0, LumpedCliqueState(i, r)).expected_T
                brute = tiny_exact_expected_survival(make_clique(k), 0.5, 1.0, init).expected_T
                assert rel(lumped, brute) <= 1e-8

    def test_too_many_vertices(self):
        with pytest.raises(InvalidParameterError):
            clique_exact_expected_survival(3, 1.0, 1.0, LumpedCliqueState(2, 2))

    def test_supercritical_is_large(self):
        res = clique_exact_expected_survival(60, 2.0 / 60 * 3, 1.0, LumpedCliqueState(1))
        assert res.expected_T > 1e3 and res.residual <= 1e-10


class TestTiny:
    def test_isolated_vertex(self):
        assert tiny_exact_expected_survival(Graph.from_edges(1, []), 1.0, 1.0, [1]).expected_T == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_isolated_vertices_give_harmonic_numbers(self, n):
        G = Graph.from_edges(n, [])
        for lam in (0.1, 5.0):
            assert tiny_exact_expected_survival(G, lam, 1.0, [1] * n).expected_T == pytest.approx(harmonic_number(n))

    def test_no_infection(self):
        assert tiny_exact_expected_survival(make_path(3), 1.0, 1.0, [0, 2, 0]).expected_T == 0.0

    def test_size_caps(self):
        with pytest.raises(SizeError):
            tiny_exact_expected_survival(make_path(11), 1.0, 1.0, [1] + [0] * 10)
        with pytest.raises(SizeError):
            tiny_exact_expected_survival(make_path(17), 1.0, 1.0, [1] + [0] * 16, Mode.SIS)

    def test_bad_init(self):
        with pytest.raises(InvalidParameterError):
            tiny_exact_expected_survival(make_path(3), 1.0, 1.0, [1, 0])
        with pytest.raises(InvalidParameterError):
            tiny_exact_expected_survival(make_path(3), 1.0, 1.0, [1, 2, 0], Mode.SIS)

    def test_largest_sirs_instance(self):
        res = tiny_exact_expected_survival(make_path(10), 1.0, 1.0, [1] + [0] * 9)
        assert res.states == 3**10 - 2**10 and res.residual <= 1e-10

    @pytest.mark.parametrize("G", [make_path(4), make_cycle(5), make_star(4), make_clique(4)])
    def test_sirs_below_sis(self, G):
        rng = np.random.default_rng(G.n)
        for lam in (0.5, 1.0, 3.0):
            for _ in range(3):
                init = rng.integers(0, 2, G.n)
                init[0] = 1
                sirs = tiny_exact_expected_survival(G, lam, 1.0, init, Mode.SIRS).expected_T
                sis = tiny_exact_expected_survival(G, lam, 1.0, init, Mode.SIS).expected_T
                assert sirs <= sis + 1e-9

    def test_values_positive_iff_infected(self):
        G = make_path(4)
        for code in range(3**4):
            init = [(code // 3**k) % 3 for k in range(4)]
            val = tiny_exact_expected_survival(G, 1.0, 1.0, init).expected_T
            assert (val > 0) == (1 in init)


def test_solver_detects_trap():
    # a transient state with no way out must fail loudly
    from sirslab.errors import NumericError
    rows = np.array([0])
    cols = np.array([-1])
    rates = np.array([0.0])
    with pytest.raises(NumericError):
        solve_absorption(rows, cols, rates, 1)


def test_solver_direct_and_krylov_agree():
    rng = np.random.default_rng(3)
    n = 200
    rows = np.repeat(np.arange(n), 3)
    cols = rng.integers(-1, n, size=3 * n)
    cols[::3] = -1
    rates = rng.uniform(0.1, 2.0, size=3 * n)
    a, ra = solve_absorption(rows, cols, rates, n, method="direct")
    b, rb = solve_absorption(rows, cols, rates, n, method="krylov")
    assert np.allclose(a, b, rtol=1e-9) and max(ra, rb) <= 1e-10
    with pytest.raises(InvalidParameterError):
        solve_absorption(rows, cols, rates, n, method="magic")


def test_supercritical_clique_grows_with_size():
    vals = [clique_exact_expected_survival(k, 4.0 / k, 1.0, LumpedCliqueState(1)).expected_T for k in (40, 60, 80)]
    assert all(math.isfinite(v) for v in vals)
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1e6
