"""Price and simplex domains, permutations, the homeomorphism φ and L1 metric.

Σₙ is the set of price vectors in [0,1]ⁿ with at least one zero entry and
Δₙ₋₁ the standard simplex. φ maps the region Σ_π (prices sorted descending
along π) linearly onto Δ_π (masses sorted ascending along the same π).
"""
import logging
from typing import Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, DomainError
from .utils import TOL

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]


def as_point(values) -> np.ndarray:
    """Convert to a finite 1-d float array"""
    point = np.asarray(values, dtype=float)
    if point.ndim != 1:
        raise DomainError(f"expected a vector, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise DomainError(f"non-finite entries in {point.tolist()}")
    return point


def unit_vector(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def in_sigma(p, tol: float = TOL) -> bool:
    """Membership in Σₙ: entries in [0,1] and some entry within tol of 0"""
    p = np.asarray(p, dtype=float)
    if p.size == 0 or not np.all(np.isfinite(p)):
        return False
    return bool(np.all(p >= -tol) and np.all(p <= 1.0 + tol) and p.min() <= tol)


def project_to_sigma(p) -> np.ndarray:
    """Clip to the unit cube and zero the smallest entry"""
    q = np.clip(as_point(p), 0.0, 1.0)
    q[int(np.argmin(q))] = 0.0
    return q


def to_sigma(p) -> np.ndarray:
    """Validate membership in Σₙ and project away accumulated float error"""
    p = as_point(p)
    if not in_sigma(p):
        raise DomainError(f"price vector {p.tolist()} is not in the price domain")
    return project_to_sigma(p)


def in_simplex(x, tol: float = TOL) -> bool:
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not np.all(np.isfinite(x)):
        return False
    return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)


def to_simplex(x) -> np.ndarray:
    """Validate membership in Δₙ₋₁ and renormalize"""
    x = as_point(x)
    if not in_simplex(x):
        raise DomainError(f"point {x.tolist()} is not in the simplex")
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def sort_permutation(p) -> Permutation:
    """Order indices by descending price, ties by smallest index first"""
    p = as_point(p)
    return tuple(int(i) for i in np.argsort(-p, kind="stable"))


def ascending_permutation(x) -> Permutation:
    x = as_point(x)
    return tuple(int(i) for i in np.argsort(x, kind="stable"))


def is_permutation(perm: Sequence[int], n: int) -> bool:
    return len(perm) == n and sorted(int(i) for i in perm) == list(range(n))


def inverse_permutation(perm: Sequence[int]) -> Permutation:
    inverse = [0] * len(perm)
    for position, image in enumerate(perm):
        inverse[image] = position
    return tuple(inverse)


def in_price_region(p, perm: Sequence[int], tol: float = TOL) -> bool:
    """p ∈ Σ_π: prices non-increasing along perm and the last one zero"""
    p = np.asarray(p, dtype=float)
    ordered = p[list(perm)]
    return bool(np.all(np.diff(ordered) <= tol) and abs(ordered[-1]) <= tol)


def in_simplex_region(x, perm: Sequence[int], tol: float = TOL) -> bool:
    """x ∈ Δ_π: masses non-decreasing along perm"""
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.diff(x[list(perm)]) >= -tol))


def phi(p) -> np.ndarray:
    """Map a price vector in Σₙ to the simplex.

    With p sorted descending along π, entry π(k) receives
    (1 − p_{π(1)})/n plus the gaps p_{π(l−1)} − p_{π(l)} for l ≤ k, each
    divided by the number of entries from position l onwards.
    """
    p = to_sigma(p)
    n = p.size
    order = sort_permutation(p)
    x = np.empty(n)
    acc = (1.0 - p[order[0]]) / n
    x[order[0]] = acc
    for k in range(1, n):
        acc += (p[order[k - 1]] - p[order[k]]) / (n - k)
        x[order[k]] = acc
    return x


def phi_inverse(x) -> np.ndarray:
    """Map a simplex point back to Σₙ.

    With x sorted ascending along π, entry π(k) is
    1 − x_{π(1)} − … − x_{π(k−1)} − (n−k+1)·x_{π(k)}.
    """
    x = to_simplex(x)
    n = x.size
    order = ascending_permutation(x)
    p = np.empty(n)
    prefix = 0.0
    for k, index in enumerate(order):
        p[index] = 1.0 - prefix - (n - k) * x[index]
        prefix += x[index]
    # the largest mass always maps to price zero
    p[order[-1]] = 0.0
    return np.clip(p, 0.0, 1.0)


def l1_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare points of shape {a.shape} and {b.shape}")
    return float(np.abs(a - b).sum())
