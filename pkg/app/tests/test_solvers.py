import math

import numpy as np
import pytest

from src.bench import fit_log_slope
from src.errors import InvalidValues, InvariantBroken, NoPanchromaticCell
from src.geometry import l1_distance
from src.oracles import (
    QueryLedger,
    RkkmInstance,
    make_cube_sperner,
    make_piecewise_cake,
    make_triangle_sperner,
    make_weighted_argmax_rkkm,
    triangle_colors_from,
)
from src.reductions import SPERNER_KKM_EPSILON, backmap_chain, build_chain, rkkm_to_housing, sperner_side
from src.solvers import (
    max_envy,
    solve,
    solve_cake,
    solve_housing,
    solve_rkkm,
    solve_rkkm_2,
    solve_sperner_bruteforce,
    solve_sperner_triangle,
)
from src.verify import verify_solution


def edge_coloring(N):
    """Exactly one trichromatic cell, on the v2 = 0 edge at v0 = N/2"""
    t = N // 2

    def rule(v):
        if v[2] >= 1:
            return 2
        return 0 if v[0] >= t else 1

    return make_triangle_sperner(N, triangle_colors_from(N, rule))


class TestBinarySearch:
    def test_tiny_epsilon_within_query_bound(self, argmax12):
        ledger = QueryLedger()
        sol = solve_rkkm_2(argmax12, 1e-6, ledger)
        assert ledger.total() <= 4 * math.ceil(math.log2(2 / 1e-6)) + 4
        assert sol.point == pytest.approx([1 / 3, 2 / 3], abs=1e-6)
        assert verify_solution(argmax12, sol, 1e-6).passed

    def test_queries_grow_linearly_in_log_inverse_epsilon(self, argmax12):
        epsilons = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        counts = []
        for epsilon in epsilons:
            ledger = QueryLedger()
            solve_rkkm_2(argmax12, epsilon, ledger)
            counts.append(ledger.total())
        slope, r_squared = fit_log_slope(epsilons, counts)
        assert slope > 0
        assert r_squared >= 0.99

    def test_exact_solution_short_circuits(self):
        # midpoint (1/2, 1/2) is in neither C⁰₀ nor C¹₁
        inst = RkkmInstance(n=2, covering=lambda i, x, j: x[j] > 0.75, sparse=True)
        sol = solve_rkkm_2(inst, 1e-3)
        assert sol.perm == [1, 0]
        assert sol.point == [0.5, 0.5]

    def test_uncovered_corner(self):
        inst = RkkmInstance(n=2, covering=lambda i, x, j: False)
        with pytest.raises(InvariantBroken):
            solve_rkkm_2(inst, 0.1)

    def test_debug_invariants_do_not_change_the_answer(self, argmax12):
        plain = solve_rkkm_2(argmax12, 1e-3)
        checked = solve_rkkm_2(argmax12, 1e-3, debug=True)
        assert checked.point == plain.point
        assert checked.layer_total("rkkm") > plain.layer_total("rkkm")

    def test_needs_two_coverings(self, argmax123):
        with pytest.raises(InvalidValues):
            solve_rkkm_2(argmax123, 0.1)


class TestBruteForce:
    def test_first_panchromatic_cell_on_a_segment(self):
        inst = make_cube_sperner(1, 4, [0, 0, 1, 1, 1])
        sol = solve_sperner_bruteforce(inst)
        assert sol.cell == [[1], [2]]
        assert sol.colors == [0, 1]

    def test_square(self):
        N = 3
        colors = [0 if a >= 2 else (1 if b < 2 else 2) for a in range(N + 1) for b in range(N + 1)]
        inst = make_cube_sperner(2, N, colors)
        sol = solve_sperner_bruteforce(inst)
        assert sorted(sol.colors) == [0, 1, 2]

    def test_no_panchromatic_cell(self):
        inst = make_cube_sperner(1, 4, [0] * 5)
        with pytest.raises(NoPanchromaticCell):
            solve_sperner_bruteforce(inst)

    def test_parallel_scan_finds_a_cell(self, argmax123):
        from src.reductions import rkkm_to_sperner

        cube = rkkm_to_sperner(argmax123, 0.25).target
        ledger = QueryLedger()
        sol = solve_sperner_bruteforce(cube, ledger, workers=3, deterministic=False)
        assert sorted(sol.colors) == [0, 1, 2]
        assert ledger.count("color") >= 3

    def test_first_cell_where_the_coloring_switches(self):
        inst = make_cube_sperner(1, 4, [0, 0, 0, 1, 1])
        assert solve_sperner_bruteforce(inst).cell == [[2], [3]]

    @pytest.mark.parametrize("workers", [2, 4])
    def test_parallel_scan_stays_within_vertex_budget(self, workers):
        # a constant square has no panchromatic cell, so every vertex gets visited
        inst = make_cube_sperner(2, 8, [0] * 81)
        ledger = QueryLedger()
        with pytest.raises(NoPanchromaticCell):
            solve_sperner_bruteforce(inst, ledger, workers=workers, deterministic=False)
        assert ledger.count("color") == 81


class TestRainbowKkm:
    def test_three_agents(self, argmax123):
        ledger = QueryLedger()
        sol = solve_rkkm(argmax123, 0.25, ledger)
        assert verify_solution(argmax123, sol, 0.25).passed
        assert l1_distance(sol.point, [1 / 6, 1 / 3, 1 / 2]) <= 0.25
        assert [entry.layer for entry in sol.queries] == ["rkkm", "rkkm-sparse", "sperner-cube"]
        assert sol.queries[0].total == ledger.total()

    @pytest.mark.parametrize("n,epsilon", [(3, 0.5), (3, 0.25), (4, 0.5), (4, 0.25)])
    def test_query_ceiling(self, n, epsilon):
        inst = make_weighted_argmax_rkkm([[float(k + 1) for k in range(n)]] * n)
        ledger = QueryLedger()
        sol = solve_rkkm(inst, epsilon, ledger)
        N = sperner_side(n, epsilon / 2)
        assert ledger.total() <= n * (N + 1) ** (n - 1)
        assert verify_solution(inst, sol, epsilon).passed

    def test_memoize_never_costs_more(self, argmax123):
        plain, cached = QueryLedger(), QueryLedger()
        solve_rkkm(argmax123, 0.25, plain)
        solve_rkkm(argmax123, 0.25, cached, memoize=True)
        assert cached.total() <= plain.total()

    def test_single_agent(self):
        inst = make_weighted_argmax_rkkm([[1.0]])
        sol = solve_rkkm(inst, 0.1)
        assert sol.perm == [0]


class TestHousing:
    def test_two_agent_quasilinear(self, quasi2):
        sol = solve_housing(quasi2, 0.1)
        assert sol.problem == "housing"
        assert sol.perm == [0, 1]
        assert l1_distance(sol.point, [0.0, 0.0]) <= 0.1
        assert verify_solution(quasi2, sol, 0.1).passed
        assert sol.queries[0].layer == "housing"

    def test_brute_force_grid_confirms_equilibrium_region(self, quasi2):
        # every price on Σ₂ within 0.1 of the origin supports the identity assignment
        for t in np.arange(0.0, 0.1, 0.01):
            for p in ([t, 0.0], [0.0, t]):
                assert quasi2.preference(0, np.array(p), 0)
                assert quasi2.preference(1, np.array(p), 1)

    def test_dispatch(self, quasi2):
        assert solve(quasi2, 0.1).perm == [0, 1]

    def test_covering_survives_a_round_trip_through_housing(self, argmax12):
        reduction = rkkm_to_housing(argmax12, 0.1)
        sol = reduction.backmap(solve_housing(reduction.target, reduction.target_epsilon))
        assert sol.problem == "rkkm"
        assert verify_solution(argmax12, sol, 0.1).passed


class TestCake:
    def test_three_players(self, cake3):
        ledger = QueryLedger()
        sol = solve_cake(cake3, 0.2, ledger)
        assert sol.problem == "cake"
        assert sol.envy <= 0.2 + 1e-9
        assert verify_solution(cake3, sol, 0.2).passed

    def test_envy_report_costs_d_squared_evaluations(self, cake3):
        ledger = QueryLedger()
        max_envy(cake3, ledger, [1 / 3, 1 / 3, 1 / 3], [0, 1, 2])
        assert ledger.total() == 9

    def test_uniform_players_cut_near_thirds(self):
        cake = make_piecewise_cake([[(0.0, 1.0, 1.0)]] * 3)
        sol = solve_cake(cake, 0.2)
        assert l1_distance(sol.point, [1 / 3, 1 / 3, 1 / 3]) <= 0.4

    @pytest.mark.slow
    def test_three_players_fine_epsilon(self, cake3):
        sol = solve_cake(cake3, 0.05)
        assert verify_solution(cake3, sol, 0.05).passed


class TestSpernerTriangle:
    def test_fixture_coloring(self, triangle4):
        sol = solve_sperner_triangle(triangle4)
        assert sorted(sol.colors) == [0, 1, 2]
        assert verify_solution(triangle4, sol, SPERNER_KKM_EPSILON).passed
        assert sol.queries[0].layer == "sperner-triangle"

    def test_edge_coloring_through_rainbow_kkm(self):
        N = 16
        triangle = edge_coloring(N)
        reductions = build_chain(triangle, ["sperner2d_to_kkm", "kkm_to_rkkm"], SPERNER_KKM_EPSILON)
        target, epsilon = reductions[-1].target, reductions[-1].target_epsilon
        ledger = QueryLedger()
        sol = backmap_chain(reductions, solve_rkkm(target, epsilon, ledger))
        assert sorted(sol.colors) == [0, 1, 2]
        assert sorted(map(tuple, sol.cell)) == [(7, 8, 1), (7, 9, 0), (8, 8, 0)]
        induced = sperner_side(3, epsilon / 2)
        assert ledger.total() <= 3 * (induced + 1) ** 2

    @pytest.mark.slow
    def test_housing_level_composition(self):
        triangle = edge_coloring(2)
        chain = ["sperner2d_to_kkm", "kkm_to_rkkm", "rkkm_to_housing"]
        reductions = build_chain(triangle, chain, SPERNER_KKM_EPSILON)
        market, epsilon = reductions[-1].target, reductions[-1].target_epsilon
        sol = backmap_chain(reductions, solve_housing(market, epsilon))
        assert sorted(sol.colors) == [0, 1, 2]
