"""Kuhn triangulation of the cube [0,N]^d and the triangle lattice of NΔ₂.

A cell is an anchor vertex plus a permutation of the coordinates; its
vertices walk from the anchor adding one unit vector per step. The cube is
also split into d! large simplices NΔ̂_π = {x : N ≥ x_{π(1)} ≥ … ≥ x_{π(d)} ≥ 0}
and barycentric coordinates are taken against their corners, indexed by
position along π. All barycentric arithmetic is done on integers scaled by N.
"""
import itertools
import math
from typing import Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .geometry import Permutation
from .utils import TOL

Vertex = Tuple[int, ...]


class Cell(NamedTuple):
    anchor: Vertex
    perm: Permutation


def _check_vertex(v: Sequence[int], N: int) -> Vertex:
    vertex = tuple(int(c) for c in v)
    if any(c != float(orig) for c, orig in zip(vertex, v)):
        raise DomainError(f"vertex {list(v)} is not integral")
    if any(c < 0 or c > N for c in vertex):
        raise DomainError(f"vertex {list(v)} is outside the cube [0,{N}]^{len(vertex)}")
    return vertex


def containing_cell(x, N: int) -> Cell:
    """Lexicographically smallest cell (anchor, perm) containing x"""
    x = np.asarray(x, dtype=float)
    if np.any(x < -TOL) or np.any(x > N + TOL):
        raise DomainError(f"point {x.tolist()} is outside the cube [0,{N}]^{x.size}")
    x = np.clip(x, 0.0, float(N))
    # smallest unit cube still containing x: step down on integer coordinates
    anchor = tuple(max(int(math.ceil(c - TOL)) - 1, 0) for c in x)
    fractions = x - np.asarray(anchor, dtype=float)
    perm = tuple(int(i) for i in np.argsort(-fractions, kind="stable"))
    return Cell(anchor, perm)


def cell_vertices(cell: Cell) -> List[Vertex]:
    vertex = list(cell.anchor)
    vertices = [tuple(vertex)]
    for axis in cell.perm:
        vertex[axis] += 1
        vertices.append(tuple(vertex))
    return vertices


def iter_cells(d: int, N: int) -> Iterator[Cell]:
    """All cells in lexicographic (anchor, perm) order"""
    perms = list(itertools.permutations(range(d)))
    for anchor in itertools.product(range(N), repeat=d):
        for perm in perms:
            yield Cell(anchor, perm)


def iter_vertices(d: int, N: int) -> Iterator[Vertex]:
    return itertools.product(range(N + 1), repeat=d)


def large_simplex_of(v: Sequence[int]) -> Permutation:
    """A large simplex containing v: coordinates sorted descending, stable"""
    return tuple(sorted(range(len(v)), key=lambda i: -v[i]))


def in_large_simplex(v: Sequence[int], perm: Permutation) -> bool:
    ordered = [v[i] for i in perm]
    return all(a >= b for a, b in zip(ordered, ordered[1:]))


def barycentric_numerators_in(v: Sequence[int], N: int, perm: Permutation) -> Tuple[int, ...]:
    """N·α(v) against the corners of NΔ̂_perm, which must contain v"""
    ordered = [v[i] for i in perm]
    numerators = [N - ordered[0]]
    numerators.extend(a - b for a, b in zip(ordered, ordered[1:]))
    numerators.append(ordered[-1])
    return tuple(numerators)


def barycentric_numerators(v: Sequence[int], N: int) -> Tuple[int, ...]:
    vertex = _check_vertex(v, N)
    return barycentric_numerators_in(vertex, N, large_simplex_of(vertex))


def barycentric(v: Sequence[int], N: int) -> np.ndarray:
    return np.asarray(barycentric_numerators(v, N), dtype=float) / N


def label_from_numerators(numerators: Sequence[int]) -> int:
    return sum(i * a for i, a in enumerate(numerators)) % len(numerators)


def label(v: Sequence[int], N: int) -> int:
    """Simmons-Su label Σ i·N·α(v)_i mod (d+1)"""
    return label_from_numerators(barycentric_numerators(v, N))


def cell_large_simplex(cell: Cell) -> Permutation:
    """The large simplex containing a cell, read off an interior point"""
    d = len(cell.anchor)
    interior = [float(a) for a in cell.anchor]
    for rank, axis in enumerate(cell.perm):
        interior[axis] += (d - rank) / (d + 1)
    return tuple(sorted(range(d), key=lambda i: -interior[i]))


# 2D triangle lattice V_N = {v ∈ ℕ₀³ : v0 + v1 + v2 = N}

def triangle_vertex_count(N: int) -> int:
    return (N + 1) * (N + 2) // 2


def iter_triangle_vertices(N: int) -> Iterator[Vertex]:
    """Row-major order: v0 ascending, then v1 ascending"""
    for v0 in range(N + 1):
        for v1 in range(N - v0 + 1):
            yield (v0, v1, N - v0 - v1)


def triangle_index(v: Sequence[int], N: int) -> int:
    v0, v1 = int(v[0]), int(v[1])
    return v0 * (N + 1) - v0 * (v0 - 1) // 2 + v1


def iter_triangle_cells(N: int) -> Iterator[Tuple[Vertex, Vertex, Vertex]]:
    """Upward cells (a+1,b,c),(a,b+1,c),(a,b,c+1) and downward cells"""
    for a in range(N):
        for b in range(N - a):
            c = N - 1 - a - b
            yield ((a + 1, b, c), (a, b + 1, c), (a, b, c + 1))
    for a in range(N - 1):
        for b in range(N - 1 - a):
            c = N - 2 - a - b
            yield ((a + 1, b + 1, c), (a + 1, b, c + 1), (a, b + 1, c + 1))


def check_scaled_point(x, N: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    tol = TOL * max(N, 1)
    if x.shape != (3,) or np.any(x < -tol) or abs(x.sum() - N) > tol:
        raise DomainError(f"point {np.asarray(x).tolist()} is not in the triangle of side {N}")
    return np.clip(x, 0.0, None)


def triangle_rounding_candidates(x, N: int) -> List[Vertex]:
    """Every floor/ceil rounding of x whose entries sum to N"""
    x = check_scaled_point(x, N)
    choices = []
    for c in x:
        nearest = round(c)
        if abs(c - nearest) <= TOL * max(N, 1):
            choices.append((int(nearest),))
        else:
            choices.append((int(math.floor(c)), int(math.ceil(c))))
    candidates = {v for v in itertools.product(*choices) if sum(v) == N}
    return sorted(candidates)


def nearest_triangle_vertices(x, N: int) -> List[Vertex]:
    """Lattice vertices at minimal L1 distance from x"""
    x = check_scaled_point(x, N)
    candidates = triangle_rounding_candidates(x, N)
    distances = [float(np.abs(x - np.asarray(v)).sum()) for v in candidates]
    best = min(distances)
    return [v for v, dist in zip(candidates, distances) if dist <= best + TOL]
