import itertools

import numpy as np
import pytest

from src.errors import DomainError
from src.triangulation import (
    Cell,
    barycentric,
    barycentric_numerators,
    cell_large_simplex,
    cell_vertices,
    containing_cell,
    in_large_simplex,
    iter_cells,
    iter_triangle_cells,
    iter_triangle_vertices,
    label,
    nearest_triangle_vertices,
    triangle_index,
    triangle_rounding_candidates,
    triangle_vertex_count,
)


class TestKuhnCells:
    def test_cell_vertices_walk_along_perm(self):
        assert cell_vertices(Cell((0, 0), (1, 0))) == [(0, 0), (0, 1), (1, 1)]

    def test_containing_cell_interior_point(self):
        cell = containing_cell([0.3, 0.7], 2)
        assert cell == Cell((0, 0), (1, 0))

    @pytest.mark.parametrize("x", [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [2.0, 0.5], [1.0, 0.25]])
    def test_containing_cell_holds_boundary_points(self, x):
        cell = containing_cell(x, 2)
        vertices = np.array(cell_vertices(cell), dtype=float)
        assert vertices.min() >= 0 and vertices.max() <= 2
        lower, upper = vertices.min(axis=0), vertices.max(axis=0)
        assert np.all(lower <= np.asarray(x)) and np.all(np.asarray(x) <= upper)

    def test_point_outside_cube(self):
        with pytest.raises(DomainError):
            containing_cell([2.5, 0.0], 2)

    def test_cell_count(self):
        assert len(list(iter_cells(3, 2))) == 2 ** 3 * 6

    def test_cells_stay_inside_one_large_simplex(self):
        for cell in iter_cells(3, 3):
            perm = cell_large_simplex(cell)
            assert all(in_large_simplex(v, perm) for v in cell_vertices(cell))


class TestBarycentric:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_numerators_are_integral_and_sum_to_N(self, d):
        N = 5
        for v in itertools.product(range(N + 1), repeat=d):
            numerators = barycentric_numerators(v, N)
            assert sum(numerators) == N
            assert min(numerators) >= 0
            assert np.allclose(barycentric(v, N) * N, numerators)

    def test_corner_values(self):
        assert barycentric_numerators((0, 0), 4) == (4, 0, 0)
        assert barycentric_numerators((4, 4), 4) == (0, 0, 4)
        assert barycentric_numerators((1, 3), 4) == (1, 2, 1)

    @pytest.mark.parametrize("d,N", [(1, 8), (2, 8), (3, 8), (2, 3)])
    def test_every_cell_carries_all_labels(self, d, N):
        for cell in iter_cells(d, N):
            labels = sorted(label(v, N) for v in cell_vertices(cell))
            assert labels == list(range(d + 1))

    @pytest.mark.parametrize("d,N", [(2, 8), (3, 8)])
    def test_adjacent_vertices_are_close(self, d, N):
        for cell in iter_cells(d, N):
            points = [barycentric(v, N) for v in cell_vertices(cell)]
            for a, b in itertools.combinations(points, 2):
                assert np.abs(a - b).sum() <= (d + 1) / N + 1e-12


class TestTriangleLattice:
    def test_vertex_count(self):
        assert triangle_vertex_count(4) == 15
        assert len(list(iter_triangle_vertices(4))) == 15

    def test_index_follows_enumeration(self):
        for index, v in enumerate(iter_triangle_vertices(6)):
            assert triangle_index(v, 6) == index

    def test_cell_count(self):
        cells = list(iter_triangle_cells(4))
        assert len(cells) == 16
        for cell in cells:
            assert all(sum(v) == 4 for v in cell)

    def test_rounding_candidates_of_interior_point(self):
        assert triangle_rounding_candidates([1.2, 1.5, 1.3], 4) == [(1, 1, 2), (1, 2, 1), (2, 1, 1)]

    def test_lattice_point_rounds_to_itself(self):
        assert triangle_rounding_candidates([1.0, 2.0, 1.0], 4) == [(1, 2, 1)]

    def test_nearest_vertex(self):
        assert nearest_triangle_vertices([1.2, 1.5, 1.3], 4) == [(1, 2, 1)]

    def test_point_between_two_vertices(self):
        assert nearest_triangle_vertices([1.5, 1.5, 1.0], 4) == [(1, 2, 1), (2, 1, 1)]

    def test_point_off_the_triangle(self):
        with pytest.raises(DomainError):
            triangle_rounding_candidates([1.0, 1.0, 1.0], 4)
