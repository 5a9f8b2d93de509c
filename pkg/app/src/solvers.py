"""Terminal search procedures and the end-to-end pipelines built on them.

Every solver takes the ledger charged for queries against the instance it is
handed and reports one ``LedgerEntry`` per layer it touched, outermost first.
"""
import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import InvalidValues, InvariantBroken, NoPanchromaticCell
from .geometry import l1_distance, unit_vector
from .oracles import (
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
)
from .reductions import (
    SPERNER_KKM_EPSILON,
    backmap_chain,
    cake_to_rkkm,
    cut_piece,
    housing_to_rkkm,
    kkm_to_rkkm,
    rkkm_to_sperner,
    sparsify,
    sperner2d_to_kkm,
)
from .schemas import LedgerEntry, Solution
from .triangulation import Cell, Vertex, cell_vertices
from .utils import config_value

logger = logging.getLogger(__name__)

DEBUG_INVARIANTS = bool(config_value("solver", "debug_invariants", False))


def _entry(layer: str, ledger: QueryLedger) -> LedgerEntry:
    return LedgerEntry(layer=layer, counts=ledger.snapshot())


def solve_rkkm_2(inst: RkkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                 debug: Optional[bool] = None, memoize: bool = False) -> Solution:
    """Bisect Δ₁ keeping x ∈ C⁰₀ and y ∈ C¹₁.

    Stops once ‖x − y‖₁ ≤ ε, or as soon as a midpoint avoids both sets, in
    which case it lies in C⁰₁ ∩ C¹₀ and is an exact solution.
    """
    if inst.n != 2:
        raise InvalidValues(f"binary search needs exactly two coverings, got {inst.n}")
    ledger = ledger or QueryLedger()
    debug = DEBUG_INVARIANTS if debug is None else debug

    def ask(i, x, j):
        return query_covering(inst, ledger, i, x, j)

    if memoize:
        ask = memoized(ask)

    x, y = unit_vector(2, 0), unit_vector(2, 1)
    if not ask(0, x, 0) or not ask(1, y, 1):
        raise InvariantBroken("simplex corners are not covered by their own sets")

    iterations = 0
    while l1_distance(x, y) > epsilon:
        z = (x + y) / 2
        in_first, in_second = ask(0, z, 0), ask(1, z, 1)
        iterations += 1
        if not in_first and not in_second:
            logger.info(f"Exact solution after {iterations} bisections")
            return Solution(
                problem="rkkm", epsilon=epsilon, point=z.tolist(), perm=[1, 0],
                witnesses=[z.tolist(), z.tolist()], queries=[_entry("rkkm", ledger)],
            )
        if in_first:
            x = z
        if in_second:
            y = z
        if debug and not (query_covering(inst, ledger, 0, x, 0) and query_covering(inst, ledger, 1, y, 1)):
            raise InvariantBroken(f"bisection endpoints left their sets after {iterations} steps")
        logger.debug(f"Bisection {iterations}: interval length {l1_distance(x, y):.3g}")

    logger.info(f"Binary search finished after {iterations} bisections")
    return Solution(
        problem="rkkm", epsilon=epsilon, point=x.tolist(), perm=[0, 1],
        witnesses=[x.tolist(), y.tolist()], epsilon_achieved=l1_distance(x, y),
        queries=[_entry("rkkm", ledger)],
    )


class VertexColors:
    """Color cache shared by scan workers; each vertex reaches the oracle at most once"""

    def __init__(self, inst: SpernerInstance, ledger: QueryLedger):
        self.inst = inst
        self.ledger = ledger
        self._colors: Dict[Vertex, int] = {}
        self._locks: Dict[Vertex, threading.Lock] = {}
        self._guard = threading.Lock()

    def __getitem__(self, v: Vertex) -> int:
        with self._guard:
            if v in self._colors:
                return self._colors[v]
            lock = self._locks.setdefault(v, threading.Lock())
        with lock:
            if v not in self._colors:
                self._colors[v] = query_color(self.inst, self.ledger, v)
        return self._colors[v]


def _scan(colors_of: VertexColors, anchors: Iterable[Vertex],
          stop: Optional[threading.Event] = None) -> Optional[Tuple[List[Vertex], List[int]]]:
    d = colors_of.inst.d
    perms = list(itertools.permutations(range(d)))
    full = list(range(d + 1))
    for anchor in anchors:
        if stop is not None and stop.is_set():
            return None
        for perm in perms:
            vertices = cell_vertices(Cell(anchor, perm))
            colors = [colors_of[v] for v in vertices]
            if sorted(colors) == full:
                return vertices, colors
    return None


def _chunks(N: int, workers: int) -> List[range]:
    size = -(-N // workers)
    return [range(start, min(start + size, N)) for start in range(0, N, size)]


def solve_sperner_bruteforce(inst: SpernerInstance, ledger: Optional[QueryLedger] = None,
                             workers: int = 1, deterministic: bool = True) -> Solution:
    """First panchromatic cell in lexicographic (anchor, perm) order"""
    if inst.variant != "cube":
        raise InvalidValues("the brute-force scan works on cube colorings")
    ledger = ledger or QueryLedger()
    d, N = inst.d, inst.N
    colors_of = VertexColors(inst, ledger)
    found = None
    if deterministic or workers <= 1:
        found = _scan(colors_of, itertools.product(range(N), repeat=d))
    else:
        stop = threading.Event()

        def scan_chunk(first: range):
            anchors = itertools.product(first, *([range(N)] * (d - 1)))
            return _scan(colors_of, anchors, stop)

        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(scan_chunk, chunk) for chunk in _chunks(N, workers)]
            for future in as_completed(futures):
                result = future.result()
                if result is not None and found is None:
                    found = result
                    stop.set()

    if found is None:
        raise NoPanchromaticCell(f"no panchromatic cell in the cube d={d}, N={N}")
    vertices, colors = found
    logger.info(f"Panchromatic cell at anchor {vertices[0]} after {ledger.total()} color queries")
    return Solution(
        problem="sperner", epsilon=0.0,
        cell=[list(v) for v in vertices], colors=colors,
        queries=[_entry(f"sperner-{inst.variant}", ledger)],
    )


def solve_rkkm(inst: RkkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
               workers: int = 1, deterministic: bool = True, memoize: bool = False) -> Solution:
    """sparsify → rkkm_to_sperner → brute force → back-map; n = 2 bisects"""
    ledger = ledger or QueryLedger()
    if inst.n == 1:
        return Solution(problem="rkkm", epsilon=epsilon, point=[1.0], perm=[0], witnesses=[[1.0]],
                        queries=[_entry("rkkm", ledger)])
    if inst.n == 2:
        return solve_rkkm_2(inst, epsilon, ledger, memoize=memoize)

    sparse = sparsify(inst, epsilon, ledger=ledger, memoize=memoize)
    to_sperner = rkkm_to_sperner(sparse.target, sparse.target_epsilon, memoize=memoize)
    color_ledger = QueryLedger()
    cell = solve_sperner_bruteforce(to_sperner.target, color_ledger, workers, deterministic)
    sol = backmap_chain([sparse, to_sperner], cell)
    return sol.model_copy(update={"queries": [
        _entry("rkkm", ledger),
        _entry("rkkm-sparse", to_sperner.source_ledger),
        _entry("sperner-cube", color_ledger),
    ]})


def solve_housing(inst: HousingInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
                  workers: int = 1, deterministic: bool = True, memoize: bool = False) -> Solution:
    ledger = ledger or QueryLedger()
    reduction = housing_to_rkkm(inst, epsilon, ledger=ledger, memoize=memoize)
    inner = solve_rkkm(reduction.target, reduction.target_epsilon, QueryLedger(), workers, deterministic, memoize)
    sol = reduction.backmap(inner)
    logger.info(f"Housing equilibrium prices {np.round(sol.point, 6).tolist()} assignment {sol.perm}")
    return sol.model_copy(update={"queries": [_entry("housing", ledger)] + inner.queries})


def envy_table(inst: CakeInstance, ledger: QueryLedger, cut) -> np.ndarray:
    """u^i(I_k(x)) for every player i and piece k (d² utility queries)"""
    pieces = [cut_piece(cut, k) for k in range(inst.d)]
    return np.array([[eval_cake_utility(inst, ledger, i, a, b) for a, b in pieces] for i in range(inst.d)])


def max_envy(inst: CakeInstance, ledger: QueryLedger, cut, perm) -> float:
    values = envy_table(inst, ledger, cut)
    own = values[np.arange(inst.d), list(perm)]
    return float(max(0.0, (values.max(axis=1) - own).max()))


def solve_cake(inst: CakeInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
               workers: int = 1, deterministic: bool = True, memoize: bool = False) -> Solution:
    ledger = ledger or QueryLedger()
    reduction = cake_to_rkkm(inst, epsilon, ledger=ledger, memoize=memoize)
    inner = solve_rkkm(reduction.target, reduction.target_epsilon, QueryLedger(), workers, deterministic, memoize)
    sol = reduction.backmap(inner)
    envy = max_envy(inst, ledger, sol.point, sol.perm)
    logger.info(f"Cake cut {np.round(sol.point, 6).tolist()} assignment {sol.perm} max envy {envy:.3g}")
    return sol.model_copy(update={"envy": envy, "queries": [_entry("cake", ledger)] + inner.queries})


def solve_kkm(inst: KkmInstance, epsilon: float, ledger: Optional[QueryLedger] = None,
              workers: int = 1, deterministic: bool = True, memoize: bool = False) -> Solution:
    ledger = ledger or QueryLedger()
    reduction = kkm_to_rkkm(inst, epsilon, ledger=ledger, memoize=memoize)
    inner = solve_rkkm(reduction.target, reduction.target_epsilon, QueryLedger(), workers, deterministic, memoize)
    sol = reduction.backmap(inner)
    return sol.model_copy(update={"queries": [_entry("kkm", ledger)] + inner.queries})


def solve_sperner_triangle(inst: SpernerInstance, ledger: Optional[QueryLedger] = None,
                           workers: int = 1, deterministic: bool = True, memoize: bool = False) -> Solution:
    """Trichromatic cell through the nearest-vertex covering"""
    ledger = ledger or QueryLedger()
    reduction = sperner2d_to_kkm(inst, ledger=ledger, memoize=memoize)
    inner = solve_kkm(reduction.target, SPERNER_KKM_EPSILON, QueryLedger(), workers, deterministic, memoize)
    sol = reduction.backmap(inner)
    return sol.model_copy(update={"queries": [_entry("sperner-triangle", ledger)] + inner.queries})


def solve(inst: Any, epsilon: float, ledger: Optional[QueryLedger] = None, workers: int = 1,
          deterministic: bool = True, memoize: bool = False) -> Solution:
    """Dispatch on the instance type"""
    options = dict(workers=workers, deterministic=deterministic, memoize=memoize)
    if isinstance(inst, HousingInstance):
        return solve_housing(inst, epsilon, ledger, **options)
    if isinstance(inst, RkkmInstance):
        return solve_rkkm(inst, epsilon, ledger, **options)
    if isinstance(inst, KkmInstance):
        return solve_kkm(inst, epsilon, ledger, **options)
    if isinstance(inst, CakeInstance):
        return solve_cake(inst, epsilon, ledger, **options)
    if isinstance(inst, SpernerInstance):
        if inst.variant == "triangle":
            return solve_sperner_triangle(inst, ledger, **options)
        return solve_sperner_bruteforce(inst, ledger, workers, deterministic)
    raise InvalidValues(f"cannot solve instances of type {type(inst).__name__}")
