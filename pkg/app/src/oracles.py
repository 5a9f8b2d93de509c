"""Black-box instances, the query ledger and the closed family of generators.

Every oracle is a pure function of its inputs. All oracle access goes through
the ``query_*`` helpers below, which validate the request and charge exactly
one query to the caller's ledger.
"""
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DomainError,
    IndexOutOfRange,
    InvalidDensity,
    InvalidInterval,
    InvalidValues,
    InvalidWeights,
)
from .geometry import as_point, in_simplex
from .triangulation import (
    Vertex,
    check_scaled_point,
    iter_triangle_vertices,
    triangle_index,
    triangle_vertex_count,
)
from .utils import TOL

logger = logging.getLogger(__name__)

# house index for "demand nothing"
NOTHING = -1

PreferenceOracle = Callable[[int, np.ndarray, int], bool]
CoveringOracle = Callable[[int, np.ndarray, int], bool]
Covering = Callable[[np.ndarray, int], bool]
UtilityOracle = Callable[[int, float, float], float]
ColorOracle = Callable[[Vertex], int]


class QueryLedger:
    """Per-oracle query counters, safe to share between worker threads"""

    def __init__(self):
        self._counts: Dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    def record(self, oracle_id: str, count: int = 1):
        with self._lock:
            self._counts[oracle_id] += count

    def count(self, oracle_id: str) -> int:
        with self._lock:
            return self._counts.get(oracle_id, 0)

    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return dict(sorted(self._counts.items()))

    def merge(self, other: "QueryLedger"):
        for oracle_id, count in other.snapshot().items():
            self.record(oracle_id, count)

    def __repr__(self):
        return f"QueryLedger({self.snapshot()})"


@dataclass(frozen=True)
class HousingInstance:
    n: int
    preference: PreferenceOracle
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)


@dataclass(frozen=True)
class RkkmInstance:
    n: int
    covering: CoveringOracle
    sparse: bool = False
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)


@dataclass(frozen=True)
class KkmInstance:
    """A single covering of the scaled triangle NΔ₂"""
    N: int
    covering: Covering
    sparse: bool = False
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return 3


@dataclass(frozen=True)
class CakeInstance:
    d: int
    utility: UtilityOracle
    K: float
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)


@dataclass(frozen=True)
class SpernerInstance:
    """Triangle variant: d = 2, colors on V_N. Cube variant: colors on {0..N}^d.

    ``boundary`` names the rule the coloring promises: "triangle",
    "cube" (c(v) ≠ k+1 when v_k = 0, c(v) ≠ 0 when some v_k = N) or
    "simplex" (c(v) ≠ k whenever the barycentric entry α(v)_k is 0).
    """
    variant: str
    d: int
    N: int
    color: ColorOracle
    boundary: str
    descriptor: Optional[Dict[str, Any]] = field(default=None, compare=False)


def _check_index(name: str, value: int, upper: int):
    if not 0 <= value < upper:
        raise IndexOutOfRange(f"{name} {value} out of range [0, {upper})")


def query_preference(inst: HousingInstance, ledger: QueryLedger, i: int, p, j: int) -> bool:
    _check_index("agent", i, inst.n)
    if j != NOTHING:
        _check_index("house", j, inst.n)
    p = as_point(p)
    if p.size != inst.n:
        raise DomainError(f"price vector has {p.size} entries, market has {inst.n} houses")
    ledger.record(f"preference[{i}]")
    return bool(inst.preference(i, p, j))


def query_covering(inst: RkkmInstance, ledger: QueryLedger, i: int, x, j: int) -> bool:
    _check_index("covering", i, inst.n)
    _check_index("set", j, inst.n)
    x = as_point(x)
    if x.size != inst.n or not in_simplex(x):
        raise DomainError(f"point {x.tolist()} is not in the {inst.n - 1}-simplex")
    ledger.record(f"covering[{i}]")
    return bool(inst.covering(i, x, j))


def query_kkm(inst: KkmInstance, ledger: QueryLedger, x, j: int) -> bool:
    _check_index("set", j, 3)
    x = check_scaled_point(x, inst.N)
    ledger.record("covering")
    return bool(inst.covering(x, j))


def query_color(inst: SpernerInstance, ledger: QueryLedger, v: Sequence[int]) -> int:
    vertex = tuple(int(c) for c in v)
    if inst.variant == "triangle":
        if len(vertex) != 3 or min(vertex) < 0 or sum(vertex) != inst.N:
            raise DomainError(f"{list(v)} is not a vertex of the triangle of side {inst.N}")
    elif len(vertex) != inst.d or min(vertex) < 0 or max(vertex) > inst.N:
        raise DomainError(f"{list(v)} is not a vertex of the cube [0,{inst.N}]^{inst.d}")
    ledger.record("color")
    return int(inst.color(vertex))


def eval_cake_utility(inst: CakeInstance, ledger: QueryLedger, i: int, a: float, b: float) -> float:
    _check_index("player", i, inst.d)
    if not (-TOL <= a <= b + TOL and b <= 1.0 + TOL):
        raise InvalidInterval(f"[{a}, {b}] is not a piece of [0,1]")
    a = min(max(a, 0.0), 1.0)
    b = min(max(b, a), 1.0)
    ledger.record(f"utility[{i}]")
    return float(inst.utility(i, a, b))


def memoized(oracle: Callable[..., Any]) -> Callable[..., Any]:
    """Cache oracle answers keyed by the exact query arguments"""
    cache: Dict[Tuple, Any] = {}

    def key_of(value):
        if isinstance(value, np.ndarray):
            return tuple(value.tolist())
        return value

    def cached(*args):
        key = tuple(key_of(a) for a in args)
        if key not in cache:
            cache[key] = oracle(*args)
        return cache[key]

    return cached


# Generators

def make_quasilinear_market(values: Sequence[Sequence[float]]) -> HousingInstance:
    """Agent i demands house j when v_ij − p_j is maximal and non-negative"""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] == 0:
        raise InvalidValues(f"values must be a non-empty square matrix, got shape {v.shape}")
    if not np.all((v > 0.0) & (v < 1.0)):
        raise InvalidValues("every value must lie strictly between 0 and 1")

    def preference(i: int, p: np.ndarray, j: int) -> bool:
        if j == NOTHING:
            return True
        surplus = v[i] - p
        return bool(surplus[j] >= 0.0 and surplus[j] >= surplus.max() - TOL)

    return HousingInstance(
        n=v.shape[0],
        preference=preference,
        descriptor={"kind": "housing-quasilinear", "values": v.tolist()},
    )


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)) or not np.all(w > 0.0):
        raise InvalidWeights(f"weights must be positive reals, got {list(weights)}")
    return w


def make_weighted_argmax_covering(weights: Sequence[float]) -> Covering:
    """C_j = {x : x_j/w_j ≥ x_k/w_k for all k}"""
    w = _check_weights(weights)

    def covering(x: np.ndarray, j: int) -> bool:
        ratios = x / w
        return bool(ratios[j] >= ratios.max() - TOL)

    return covering


def make_weighted_argmax_rkkm(weight_rows: Sequence[Sequence[float]]) -> RkkmInstance:
    """One weighted-argmax covering per agent"""
    if len(weight_rows) == 0:
        raise InvalidWeights("at least one covering is required")
    rows = [_check_weights(row) for row in weight_rows]
    n = len(rows)
    if any(row.size != n for row in rows):
        raise InvalidWeights(f"{n} coverings need {n} weights each")
    coverings = [make_weighted_argmax_covering(row) for row in rows]

    def covering(i: int, x: np.ndarray, j: int) -> bool:
        return coverings[i](x, j)

    return RkkmInstance(
        n=n,
        covering=covering,
        sparse=True,
        descriptor={"kind": "kkm-weighted-argmax", "weights": [row.tolist() for row in rows]},
    )


def _check_segments(player: int, segments: Sequence[Sequence[float]]) -> List[Tuple[float, float, float]]:
    cleaned = [(float(s), float(e), float(rho)) for s, e, rho in segments]
    if not cleaned:
        raise InvalidDensity(f"player {player} has no density segments")
    position = 0.0
    for start, end, rho in cleaned:
        if abs(start - position) > TOL:
            kind = "gap" if start > position else "overlap"
            raise InvalidDensity(f"player {player}: {kind} at {position}")
        if end <= start:
            raise InvalidDensity(f"player {player}: empty segment [{start}, {end}]")
        if rho <= 0.0:
            raise InvalidDensity(f"player {player}: density {rho} is not positive")
        position = end
    if abs(position - 1.0) > TOL:
        raise InvalidDensity(f"player {player}: segments end at {position}, not 1")
    return cleaned


def make_piecewise_cake(densities: Sequence[Sequence[Sequence[float]]]) -> CakeInstance:
    """Piecewise-constant densities; u^i([a,b]) is the integral over [a,b]"""
    players = [_check_segments(i, segs) for i, segs in enumerate(densities)]
    if not players:
        raise InvalidDensity("at least one player is required")

    def utility(i: int, a: float, b: float) -> float:
        total = 0.0
        for start, end, rho in players[i]:
            overlap = min(b, end) - max(a, start)
            if overlap > 0.0:
                total += rho * overlap
        return total

    K = max(rho for segs in players for _, _, rho in segs)
    return CakeInstance(
        d=len(players),
        utility=utility,
        K=K,
        descriptor={
            "kind": "cake-piecewise",
            "players": [
                [{"start": s, "end": e, "density": rho} for s, e, rho in segs] for segs in players
            ],
        },
    )


def make_triangle_sperner(N: int, colors: Sequence[int]) -> SpernerInstance:
    """Colors listed row-major over V_N"""
    if N < 1:
        raise InvalidValues(f"side length must be positive, got {N}")
    if len(colors) != triangle_vertex_count(N):
        raise InvalidValues(f"side {N} needs {triangle_vertex_count(N)} colors, got {len(colors)}")
    table = [int(c) for c in colors]

    def color(v: Vertex) -> int:
        return table[triangle_index(v, N)]

    return SpernerInstance(
        variant="triangle",
        d=2,
        N=N,
        color=color,
        boundary="triangle",
        descriptor={"kind": "sperner-triangle", "N": N, "colors": table},
    )


def triangle_colors_from(N: int, rule: Callable[[Vertex], int]) -> List[int]:
    return [rule(v) for v in iter_triangle_vertices(N)]


def make_cube_sperner(d: int, N: int, colors: Sequence[int]) -> SpernerInstance:
    """Colors listed in C order over {0..N}^d"""
    if d < 1 or N < 1:
        raise InvalidValues(f"dimension and side must be positive, got d={d}, N={N}")
    if len(colors) != (N + 1) ** d:
        raise InvalidValues(f"cube needs {(N + 1) ** d} colors, got {len(colors)}")
    table = [int(c) for c in colors]
    shape = (N + 1,) * d

    def color(v: Vertex) -> int:
        return table[int(np.ravel_multi_index(v, shape))]

    return SpernerInstance(
        variant="cube",
        d=d,
        N=N,
        color=color,
        boundary="cube",
        descriptor={"kind": "sperner-cube", "d": d, "N": N, "colors": table},
    )
