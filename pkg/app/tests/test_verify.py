import numpy as np
import pytest

from src.errors import MissingWitnesses, TooManySubsets
from src.oracles import (
    NOTHING,
    HousingInstance,
    make_cube_sperner,
    make_triangle_sperner,
    make_weighted_argmax_covering,
)
from src.reductions import rkkm_to_sperner
from src.schemas import Solution
from src.solvers import solve_rkkm
from src.verify import (
    check_gale_assumptions,
    check_instance,
    check_kkm_covering,
    check_sparseness,
    check_sperner_coloring,
    sample_face,
    verify_solution,
)


@pytest.fixture
def rkkm_solution(argmax123):
    return solve_rkkm(argmax123, 0.25)


class TestSampleFace:
    @pytest.mark.parametrize("sampler", ["halton", "uniform"])
    def test_points_lie_on_the_face(self, sampler):
        points = sample_face([0, 2], 4, 50, seed=3, sampler=sampler)
        assert points.shape == (50, 4)
        assert np.allclose(points.sum(axis=1), 1.0)
        assert np.all(points[:, [1, 3]] == 0.0)
        assert np.all(points >= 0.0)

    def test_deterministic_under_seed(self):
        a = sample_face([0, 1, 2], 3, 20, seed=5)
        b = sample_face([0, 1, 2], 3, 20, seed=5)
        assert np.array_equal(a, b)

    def test_vertex_face(self):
        assert sample_face([1], 3, 20, seed=0).tolist() == [[0.0, 1.0, 0.0]]


class TestCoveringChecks:
    def test_weighted_argmax_is_kkm(self):
        covering = make_weighted_argmax_covering([1.0, 2.0, 3.0])
        assert check_kkm_covering(covering, 3, samples=64).passed

    def test_empty_sets_fail_everywhere(self):
        report = check_kkm_covering(lambda x, j: False, 2, samples=10)
        assert not report.passed
        assert report.checks_failed() == ["kkm-covering"]
        # two vertex faces plus ten samples on the edge
        assert len(report.violations) == 12

    def test_single_set(self):
        assert check_kkm_covering(lambda x, j: x[0] == 1.0, 1, samples=5).passed

    def test_subset_guard(self):
        with pytest.raises(TooManySubsets):
            check_kkm_covering(lambda x, j: True, 13, samples=1)

    def test_weighted_argmax_is_sparse(self):
        covering = make_weighted_argmax_covering([2.0, 1.0, 1.0, 3.0])
        assert check_sparseness(covering, 4, samples=32).passed

    def test_full_sets_are_not_sparse(self):
        report = check_sparseness(lambda x, j: True, 3, samples=8)
        assert report.checks_failed() == ["sparseness"]


class TestGaleAssumptions:
    def test_quasilinear_market_passes(self, quasi2):
        report = check_gale_assumptions(quasi2, samples=200)
        assert report.passed
        assert any("not sample-testable" in note for note in report.notes)

    def test_demand_at_unit_price_fails(self):
        market = HousingInstance(n=2, preference=lambda i, p, j: True)
        assert "assumption-ii" in check_gale_assumptions(market, samples=20).checks_failed()

    def test_empty_demand_fails(self):
        market = HousingInstance(n=2, preference=lambda i, p, j: j == NOTHING)
        assert check_gale_assumptions(market, samples=20).checks_failed() == ["assumption-iii"]


class TestSpernerColoring:
    def test_fixture_triangle(self, triangle4):
        assert check_sperner_coloring(triangle4).passed

    def test_constant_triangle_breaks_boundary(self):
        report = check_sperner_coloring(make_triangle_sperner(3, [0] * 10))
        assert report.checks_failed() == ["triangle-boundary"]

    def test_constant_cube_breaks_far_faces(self):
        report = check_sperner_coloring(make_cube_sperner(2, 3, [0] * 16))
        assert report.checks_failed() == ["cube-boundary-max"]

    def test_reduction_coloring(self, argmax123):
        cube = rkkm_to_sperner(argmax123, 0.25).target
        assert check_sperner_coloring(cube).passed


class TestVerifySolution:
    def test_solver_output_passes(self, argmax123, rkkm_solution):
        assert verify_solution(argmax123, rkkm_solution, 0.25).passed

    def test_far_witness_fails_distance(self, argmax123, rkkm_solution):
        witnesses = [list(w) for w in rkkm_solution.witnesses]
        corner = [0.0, 0.0, 0.0]
        corner[rkkm_solution.perm[0]] = 1.0
        witnesses[0] = corner
        tampered = rkkm_solution.model_copy(update={"witnesses": witnesses})
        assert verify_solution(argmax123, tampered, 0.25).checks_failed() == ["distance"]

    def test_duplicate_assignment_fails_bijection(self, argmax123, rkkm_solution):
        tampered = rkkm_solution.model_copy(update={"perm": [0, 0, 1]})
        assert verify_solution(argmax123, tampered, 0.25).checks_failed() == ["bijection"]

    def test_witness_outside_its_set(self, argmax123, rkkm_solution):
        witnesses = [list(w) for w in rkkm_solution.witnesses]
        other = (rkkm_solution.perm[0] + 1) % 3
        corner = [0.0, 0.0, 0.0]
        corner[other] = 1.0
        witnesses[0] = corner
        tampered = rkkm_solution.model_copy(update={"witnesses": witnesses})
        assert "membership" in verify_solution(argmax123, tampered, 0.25).checks_failed()

    def test_missing_witnesses(self, argmax123):
        sol = Solution(problem="rkkm", epsilon=0.25, point=[1 / 3] * 3, perm=[0, 1, 2])
        with pytest.raises(MissingWitnesses):
            verify_solution(argmax123, sol, 0.25)

    def test_cake_envy_check(self, cake3):
        # player 1 values the left half at 0.75 and is handed the empty piece
        sol = Solution(problem="cake", epsilon=0.1, point=[0.5, 0.5, 0.0], perm=[0, 2, 1])
        report = verify_solution(cake3, sol, 0.1)
        assert report.checks_failed() == ["envy"]
        assert len(report.violations) == 1
        assert verify_solution(cake3, sol, 0.8).passed

    def test_point_of_the_wrong_dimension(self, argmax123, rkkm_solution):
        tampered = rkkm_solution.model_copy(update={"point": [0.5, 0.5]})
        assert verify_solution(argmax123, tampered, 0.25).checks_failed() == ["point-domain"]

    def test_cut_outside_the_cake(self, cake3):
        sol = Solution(problem="cake", epsilon=0.1, point=[-0.2, 0.7, 0.5], perm=[0, 1, 2])
        assert verify_solution(cake3, sol, 0.1).checks_failed() == ["cut-domain"]

    def test_sperner_cell_must_be_trichromatic(self, triangle4):
        good = Solution(problem="sperner", epsilon=0.125, cell=[[1, 1, 2], [1, 2, 1], [2, 1, 1]])
        assert verify_solution(triangle4, good, 0.125).passed
        bad = good.model_copy(update={"cell": [[0, 0, 4], [0, 1, 3], [1, 0, 3]]})
        assert verify_solution(triangle4, bad, 0.125).checks_failed() == ["panchromatic"]
        skewed = good.model_copy(update={"cell": [[0, 0, 4], [2, 1, 1], [1, 2, 1]]})
        assert verify_solution(triangle4, skewed, 0.125).checks_failed() == ["cell-shape"]


class TestCheckInstance:
    def test_dispatch(self, quasi2, argmax123, cake3, triangle4):
        for inst in (quasi2, argmax123, cake3, triangle4):
            assert check_instance(inst, samples=16).passed
