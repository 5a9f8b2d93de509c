"""Instance-to-instance reductions with solution back-maps.

Each builder returns a ``Reduction`` whose target oracles call the source
oracles through ``source_ledger``, so the cost of every target query is
visible on the source side. ``memoize=True`` caches source answers keyed by
the exact query; the ledger then counts only true oracle calls.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BackmapError,
    DegenerateInput,
    DomainError,
    IndexOutOfRange,
    InvalidValues,
    InvariantBroken,
    NoSuchReduction,
    NotSparse,
)
from .geometry import (
    in_sigma,
    l1_distance,
    phi,
    phi_inverse,
    project_to_sigma,
    to_simplex,
)
from .oracles import (
    NOTHING,
    CakeInstance,
    HousingInstance,
    KkmInstance,
    QueryLedger,
    RkkmInstance,
    SpernerInstance,
    eval_cake_utility,
    memoized,
    query_color,
    query_covering,
    query_kkm,
    query_preference,
)
from .schemas import Solution
from .triangulation import (
    barycentric_numerators,
    label_from_numerators,
    nearest_triangle_vertices,
    triangle_rounding_candidates,
)
from .utils import TOL

logger = logging.getLogger(__name__)

LIFT_THRESHOLD = 0.75
SPERNER_KKM_EPSILON = 1.0 / 8.0


@dataclass
class Reduction:
    name: str
    source: Any
    target: Any
    source_epsilon: float
    target_epsilon: float
    backmap: Callable[[Solution], Solution]
    source_ledger: QueryLedger
    source_layer: str
    target_layer: str


def _ask(query: Callable, inst: Any, ledger: QueryLedger, memoize: bool) -> Callable:
    def ask(*args):
        return query(inst, ledger, *args)

    return memoized(ask) if memoize else ask


def _solution(problem: str, epsilon: float, point, perm, witnesses, based_on: Solution, **extra) -> Solution:
    point = np.asarray(point, dtype=float)
    witnesses = [np.asarray(w, dtype=float) for w in witnesses]
    achieved = max((l1_distance(point, w) for w in witnesses), default=0.0)
    return Solution(
        problem=problem,
        epsilon=epsilon,
        point=point.tolist(),
        perm=[int(i) for i in perm],
        witnesses=[w.tolist() for w in witnesses],
        epsilon_achieved=achieved,
        queries=list(based_on.queries),
        **extra,
    )


def lift_market(inst: HousingInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                memoize: bool = False) -> Reduction:
    """Add agent n with a fresh house n; old agents never want house n unless q_n = 0"""
    ledger = ledger or QueryLedger()
    n = inst.n
    ask = _ask(query_preference, inst, ledger, memoize)

    def preference(i: int, q: np.ndarray, j: int) -> bool:
        if j == NOTHING:
            return True
        if i < n:
            if j < n:
                return ask(i, q[:n], j)
            return abs(q[n]) <= TOL
        if j < n:
            return abs(q[j]) <= TOL and q[n] >= LIFT_THRESHOLD
        return q[n] <= LIFT_THRESHOLD

    target = HousingInstance(n=n + 1, preference=preference)

    def backmap(sol: Solution) -> Solution:
        if len(sol.perm) != n + 1 or sol.perm[n] != n:
            raise BackmapError(f"lifted agent {n} was not assigned its own house: {sol.perm}")
        return _solution(
            "housing", epsilon, sol.point[:n], sol.perm[:n],
            [w[:n] for w in sol.witnesses[:n]], sol,
        )

    logger.info(f"Lifted market from {n} to {n + 1} agents")
    return Reduction("lift_market", inst, target, epsilon, epsilon, backmap, ledger, "housing", "housing")


def project_sparse(x, delta: float) -> np.ndarray:
    """Zero every entry at most delta and renormalize"""
    x = to_simplex(x)
    if not 0.0 < delta < 0.25:
        raise DomainError(f"threshold {delta} must lie in (0, 1/4)")
    kept = np.where(x <= delta, 0.0, x)
    total = kept.sum()
    if total <= 0.0:
        raise DegenerateInput(f"every entry of {x.tolist()} is at most {delta}")
    return kept / total


def sparsify(inst: RkkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
             memoize: bool = False) -> Reduction:
    """D_j = {x : x_j ≥ δ and τ(x) ∈ C_j} with δ = ε/(8n); target ε is ε/2"""
    ledger = ledger or QueryLedger()
    n = inst.n
    delta = epsilon / (8 * n)
    ask = _ask(query_covering, inst, ledger, memoize)

    def covering(i: int, x: np.ndarray, j: int) -> bool:
        if x[j] < delta:
            return False
        return ask(i, project_sparse(x, delta), j)

    target = RkkmInstance(n=n, covering=covering, sparse=True)

    def backmap(sol: Solution) -> Solution:
        return _solution(
            "rkkm", epsilon, project_sparse(sol.point, delta), sol.perm,
            [project_sparse(w, delta) for w in sol.witnesses], sol,
        )

    logger.info(f"Sparsified {n}-covering instance with delta={delta:.3g}")
    return Reduction("sparsify", inst, target, epsilon, epsilon / 2, backmap, ledger, "rkkm", "rkkm-sparse")


def housing_to_rkkm(inst: HousingInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                    memoize: bool = False) -> Reduction:
    """C^i_j = φ(P^i_j ∩ Σₙ); target ε is ε/n²"""
    ledger = ledger or QueryLedger()
    n = inst.n
    ask = _ask(query_preference, inst, ledger, memoize)

    def covering(i: int, x: np.ndarray, j: int) -> bool:
        return ask(i, phi_inverse(x), j)

    target = RkkmInstance(n=n, covering=covering, sparse=True)

    def backmap(sol: Solution) -> Solution:
        return _solution(
            "housing", epsilon, phi_inverse(sol.point), sol.perm,
            [phi_inverse(w) for w in sol.witnesses], sol,
        )

    return Reduction("housing_to_rkkm", inst, target, epsilon, epsilon / n ** 2, backmap, ledger,
                     "housing", "rkkm-sparse")


def rkkm_to_housing(inst: RkkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                    memoize: bool = False) -> Reduction:
    """P^i_j = φ⁻¹(C^i_j); prices off Σₙ demand nothing but the empty house"""
    if not inst.sparse:
        raise NotSparse("rkkm_to_housing needs a sparse covering; sparsify first")
    ledger = ledger or QueryLedger()
    n = inst.n
    ask = _ask(query_covering, inst, ledger, memoize)

    def preference(i: int, p: np.ndarray, j: int) -> bool:
        if j == NOTHING:
            return True
        if not in_sigma(p):
            return False
        return ask(i, phi(p), j)

    target = HousingInstance(n=n, preference=preference)

    def to_simplex_point(p) -> np.ndarray:
        if not in_sigma(p):
            logger.warning(f"Projecting price vector {list(p)} onto the price domain before mapping")
        return phi(project_to_sigma(p))

    def backmap(sol: Solution) -> Solution:
        return _solution(
            "rkkm", epsilon, to_simplex_point(sol.point), sol.perm,
            [to_simplex_point(w) for w in sol.witnesses], sol,
        )

    return Reduction("rkkm_to_housing", inst, target, epsilon, epsilon / n, backmap, ledger,
                     "rkkm-sparse", "housing")


def cut_piece(x, k: int) -> Tuple[float, float]:
    """The k-th piece [Σ_{j<k} x_j, Σ_{j≤k} x_j] of the cut x"""
    x = np.asarray(x, dtype=float)
    if not 0 <= k < x.size:
        raise IndexOutOfRange(f"piece {k} out of range [0, {x.size})")
    a = min(float(x[:k].sum()), 1.0)
    b = min(a + float(x[k]), 1.0)
    return a, b


def cake_to_rkkm(inst: CakeInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                 memoize: bool = False) -> Reduction:
    """C^i_j = cuts where piece j is weakly best for player i; target ε is ε/(4K)"""
    ledger = ledger or QueryLedger()
    d = inst.d
    ask = _ask(eval_cake_utility, inst, ledger, memoize)

    def covering(i: int, x: np.ndarray, j: int) -> bool:
        values = [ask(i, *cut_piece(x, k)) for k in range(d)]
        return values[j] >= max(values) - TOL

    # hungriness: an empty piece is never weakly best
    target = RkkmInstance(n=d, covering=covering, sparse=True)

    def backmap(sol: Solution) -> Solution:
        return _solution("cake", epsilon, sol.point, sol.perm, sol.witnesses, sol)

    return Reduction("cake_to_rkkm", inst, target, epsilon, epsilon / (4 * inst.K), backmap, ledger,
                     "cake", "rkkm-sparse")


def sperner2d_to_kkm(inst: SpernerInstance, epsilon: float = SPERNER_KKM_EPSILON,
                     ledger: Optional[QueryLedger] = None, memoize: bool = False) -> Reduction:
    """C_i = points of NΔ₂ whose nearest lattice vertex set contains an i-colored vertex"""
    if inst.variant != "triangle":
        raise InvalidValues("sperner2d_to_kkm needs a triangle coloring")
    ledger = ledger or QueryLedger()
    N = inst.N
    ask = _ask(query_color, inst, ledger, memoize)

    def covering(x: np.ndarray, i: int) -> bool:
        return any(ask(v) == i for v in nearest_triangle_vertices(x, N))

    # Sperner boundary colors make the nearest-vertex covering sparse
    target = KkmInstance(N=N, covering=covering, sparse=True)

    def backmap(sol: Solution) -> Solution:
        cell = triangle_rounding_candidates(sol.point, N)
        if len(cell) != 3:
            raise BackmapError(f"point {sol.point} is not interior to a cell")
        colors = [ask(v) for v in cell]
        return Solution(
            problem="sperner",
            epsilon=SPERNER_KKM_EPSILON,
            point=list(sol.point),
            cell=[list(v) for v in cell],
            colors=colors,
            queries=list(sol.queries),
        )

    return Reduction("sperner2d_to_kkm", inst, target, SPERNER_KKM_EPSILON, SPERNER_KKM_EPSILON, backmap,
                     ledger, "sperner-triangle", "kkm")


def kkm_to_rkkm(inst: KkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                memoize: bool = False) -> Reduction:
    """Three identical coverings D_i = C_i / N on Δ₂; target ε is ε/N"""
    ledger = ledger or QueryLedger()
    N = inst.N
    ask = _ask(query_kkm, inst, ledger, memoize)

    def covering(i: int, x: np.ndarray, j: int) -> bool:
        return ask(N * x, j)

    target = RkkmInstance(n=3, covering=covering, sparse=inst.sparse)

    def backmap(sol: Solution) -> Solution:
        by_set: List[Optional[np.ndarray]] = [None] * 3
        for i, j in enumerate(sol.perm):
            by_set[j] = N * np.asarray(sol.witnesses[i])
        if any(w is None for w in by_set):
            raise BackmapError(f"assignment {sol.perm} does not cover every set")
        return _solution("kkm", epsilon, N * np.asarray(sol.point), (0, 1, 2), by_set, sol)

    return Reduction("kkm_to_rkkm", inst, target, epsilon, epsilon / N, backmap, ledger, "kkm", "rkkm-sparse")


def sperner_side(n: int, epsilon: float) -> int:
    """N = ⌈n/ε⌉"""
    return int(math.ceil(round(n / epsilon, 9)))


def rkkm_to_sperner(inst: RkkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                    memoize: bool = False) -> Reduction:
    """Color v by the first set of covering L(v) containing α(v)"""
    if not inst.sparse:
        raise NotSparse("rkkm_to_sperner needs a sparse covering; sparsify first")
    n = inst.n
    if n < 2:
        raise InvalidValues("rkkm_to_sperner needs at least two coverings")
    ledger = ledger or QueryLedger()
    d = n - 1
    N = sperner_side(n, epsilon)
    ask = _ask(query_covering, inst, ledger, memoize)

    def color(v) -> int:
        numerators = barycentric_numerators(v, N)
        covering_index = label_from_numerators(numerators)
        x = np.asarray(numerators, dtype=float) / N
        for j in range(n):
            if ask(covering_index, x, j):
                return j
        raise InvariantBroken(f"no set of covering {covering_index} contains {x.tolist()}")

    target = SpernerInstance(variant="cube", d=d, N=N, color=color, boundary="simplex")

    def backmap(sol: Solution) -> Solution:
        if not sol.cell or len(sol.cell) != n:
            raise BackmapError("a panchromatic cell with n vertices is required")
        colors = sol.colors if sol.colors else [color(v) for v in sol.cell]
        by_label: Dict[int, Tuple[np.ndarray, int]] = {}
        for vertex, c in zip(sol.cell, colors):
            numerators = barycentric_numerators(vertex, N)
            by_label[label_from_numerators(numerators)] = (np.asarray(numerators, dtype=float) / N, c)
        if sorted(by_label) != list(range(n)):
            raise BackmapError(f"cell labels {sorted(by_label)} are not all distinct")
        perm = [by_label[i][1] for i in range(n)]
        if sorted(perm) != list(range(n)):
            raise BackmapError(f"cell colors {colors} are not panchromatic")
        witnesses = [by_label[i][0] for i in range(n)]
        return _solution("rkkm", epsilon, witnesses[0], perm, witnesses, sol)

    logger.info(f"Built Sperner cube d={d}, N={N} for epsilon={epsilon:.3g}")
    return Reduction("rkkm_to_sperner", inst, target, epsilon, epsilon, backmap, ledger, "rkkm-sparse",
                     "sperner-cube")


# Reduction graph

BUILDERS: Dict[str, Callable[..., Reduction]] = {
    "lift_market": lift_market,
    "sparsify": sparsify,
    "housing_to_rkkm": housing_to_rkkm,
    "rkkm_to_housing": rkkm_to_housing,
    "cake_to_rkkm": cake_to_rkkm,
    "sperner2d_to_kkm": sperner2d_to_kkm,
    "kkm_to_rkkm": kkm_to_rkkm,
    "rkkm_to_sperner": rkkm_to_sperner,
}

EDGES: Dict[str, Tuple[str, str]] = {
    "lift_market": ("housing", "housing"),
    "sparsify": ("rkkm", "rkkm-sparse"),
    "housing_to_rkkm": ("housing", "rkkm-sparse"),
    "rkkm_to_housing": ("rkkm-sparse", "housing"),
    "cake_to_rkkm": ("cake", "rkkm-sparse"),
    "sperner2d_to_kkm": ("sperner-triangle", "kkm"),
    "kkm_to_rkkm": ("kkm", "rkkm-sparse"),
    "rkkm_to_sperner": ("rkkm-sparse", "sperner-cube"),
}

KINDS = ("housing", "rkkm", "rkkm-sparse", "kkm", "cake", "sperner-triangle", "sperner-cube")


def kind_of(inst: Any) -> str:
    if isinstance(inst, HousingInstance):
        return "housing"
    if isinstance(inst, RkkmInstance):
        return "rkkm-sparse" if inst.sparse else "rkkm"
    if isinstance(inst, KkmInstance):
        return "kkm"
    if isinstance(inst, CakeInstance):
        return "cake"
    if isinstance(inst, SpernerInstance):
        return f"sperner-{inst.variant}"
    raise InvalidValues(f"unknown instance type {type(inst).__name__}")


def satisfies_kind(node: str, wanted: str) -> bool:
    return node == wanted or (wanted == "rkkm" and node == "rkkm-sparse")


def _outgoing(node: str) -> List[str]:
    sources = {node, "rkkm"} if node == "rkkm-sparse" else {node}
    return [name for name, (src, dst) in EDGES.items() if src in sources and src != dst]


def find_chain(from_kind: str, to_kind: str) -> List[str]:
    """Shortest reduction chain between two instance kinds"""
    for kind in (from_kind, to_kind):
        if kind not in KINDS:
            raise NoSuchReduction(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if from_kind == "housing" and to_kind == "housing":
        return ["lift_market"]
    queue = deque([(from_kind, [])])
    seen = {from_kind}
    while queue:
        node, path = queue.popleft()
        for name in _outgoing(node):
            nxt = EDGES[name][1]
            if satisfies_kind(nxt, to_kind):
                return path + [name]
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, path + [name]))
    raise NoSuchReduction(f"no reduction chain from {from_kind} to {to_kind}")


def build_chain(inst: Any, chain: Sequence[str], epsilon: float, memoize: bool = False) -> List[Reduction]:
    """Apply the named reductions in order, threading each target ε into the next step"""
    reductions: List[Reduction] = []
    current, current_epsilon = inst, epsilon
    for name in chain:
        if name not in BUILDERS:
            raise NoSuchReduction(f"unknown reduction {name!r}")
        expected = EDGES[name][0]
        if not satisfies_kind(kind_of(current), expected):
            raise NoSuchReduction(f"{name} expects a {expected} instance, got {kind_of(current)}")
        reduction = BUILDERS[name](current, current_epsilon, memoize=memoize)
        reductions.append(reduction)
        current, current_epsilon = reduction.target, reduction.target_epsilon
        logger.info(f"Applied {name}: epsilon {reduction.source_epsilon:.4g} -> {reduction.target_epsilon:.4g}")
    return reductions


def backmap_chain(reductions: Sequence[Reduction], sol: Solution) -> Solution:
    for reduction in reversed(reductions):
        sol = reduction.backmap(sol)
    return sol
