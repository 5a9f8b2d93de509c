"""Sampled checks of instance assumptions and exact checks of solutions.

Face samples come from a scrambled Halton sequence mapped onto the face
simplex by sorted spacings, so every run with the same seed sees the same
points. ``sampler="uniform"`` switches to Dirichlet draws.
"""
import itertools
import logging
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import MissingWitnesses, ToolkitError, TooManySubsets
from .geometry import is_permutation, l1_distance
from .oracles import (
    CakeInstance,
    HousingInstance,
    KkmInstance,
    QueryLedger,
    RkkmInstance,
    SpernerInstance,
    query_color,
    query_covering,
    query_kkm,
    query_preference,
)
from .reductions import cake_to_rkkm
from .schemas import Report, Solution
from .solvers import envy_table
from .triangulation import barycentric_numerators, iter_triangle_vertices, iter_vertices
from .utils import TOL, config_value

logger = logging.getLogger(__name__)

MAX_SUBSET_SIZE = int(config_value("verify", "max_subset_size", 12))
SAMPLER = config_value("verify", "sampler", "halton")
EXHAUSTIVE_MAX_N = int(config_value("verify", "exhaustive_sperner_max_N", 64))
EXHAUSTIVE_MAX_D = int(config_value("verify", "exhaustive_sperner_max_d", 3))
BOUNDARY_SAMPLES = int(config_value("verify", "boundary_samples", 4096))

Covering = Callable[[np.ndarray, int], bool]


def sample_face(face: Sequence[int], n: int, samples: int, seed: int, sampler: str = SAMPLER) -> np.ndarray:
    """Points of F_S = {x ∈ Δₙ₋₁ : x_i = 0 for i ∉ S}, one row per sample"""
    face = list(face)
    k = len(face)
    if k == 1:
        masses = np.ones((1, 1))
    else:
        mask = sum(1 << i for i in face)
        rng = np.random.default_rng([seed, mask])
        if sampler == "uniform":
            masses = rng.dirichlet(np.ones(k), size=samples)
        else:
            cube = qmc.Halton(d=k - 1, scramble=True, seed=rng).random(samples)
            cuts = np.sort(cube, axis=1)
            edges = np.hstack([np.zeros((samples, 1)), cuts, np.ones((samples, 1))])
            masses = np.diff(edges, axis=1)
    points = np.zeros((masses.shape[0], n))
    points[:, face] = masses
    return points


def check_kkm_covering(covering: Covering, n: int, samples: int, seed: int = 0,
                       sampler: str = SAMPLER) -> Report:
    """Every sampled point of every face F_S lies in some C_i with i ∈ S"""
    if n > MAX_SUBSET_SIZE:
        raise TooManySubsets(f"{2 ** n - 1} faces for n={n}; the limit is n={MAX_SUBSET_SIZE}")
    report = Report()
    for size in range(1, n + 1):
        for face in itertools.combinations(range(n), size):
            for x in sample_face(face, n, samples, seed, sampler):
                if not any(covering(x, j) for j in face):
                    report.add("kkm-covering", f"point on face {list(face)} is not covered", x)
    return report


def check_sparseness(covering: Covering, n: int, samples: int, seed: int = 0,
                     sampler: str = SAMPLER) -> Report:
    """C_i misses the opposite face F_{[n]∖{i}}"""
    report = Report()
    if n == 1:
        report.notes.append("a single set has no opposite face")
        return report
    for i in range(n):
        face = [k for k in range(n) if k != i]
        for x in sample_face(face, n, samples, seed, sampler):
            if covering(x, i):
                report.add("sparseness", f"set {i} meets its opposite face", x)
    return report


def covering_view(inst: RkkmInstance, ledger: QueryLedger, i: int) -> Covering:
    return lambda x, j: query_covering(inst, ledger, i, x, j)


def check_rkkm_instance(inst: RkkmInstance, samples: int, seed: int = 0, ledger: Optional[QueryLedger] = None,
                        sampler: str = SAMPLER) -> Report:
    """KKM check for every covering, plus sparseness when the instance claims it"""
    ledger = ledger or QueryLedger()
    report = Report()
    for i in range(inst.n):
        covering = covering_view(inst, ledger, i)
        report = report.merge(check_kkm_covering(covering, inst.n, samples, seed, sampler))
        if inst.sparse:
            report = report.merge(check_sparseness(covering, inst.n, samples, seed, sampler))
    return report


def check_gale_assumptions(inst: HousingInstance, samples: int, seed: int = 0,
                           ledger: Optional[QueryLedger] = None) -> Report:
    ledger = ledger or QueryLedger()
    rng = np.random.default_rng(seed)
    n = inst.n
    report = Report(notes=["assumption (i), closedness of the preference sets, is not sample-testable"])
    for s in range(samples):
        p = rng.uniform(0.0, 1.0, n)
        j = s % n
        p[j] = rng.uniform(1.0, 1.5)
        for i in range(n):
            if query_preference(inst, ledger, i, p, j):
                report.add("assumption-ii", f"agent {i} demands house {j} priced at {p[j]:.3f}", p)
    for _ in range(samples):
        p = rng.uniform(0.0, 1.0, n)
        p[rng.integers(n)] = 0.0
        for i in range(n):
            if not any(query_preference(inst, ledger, i, p, j) for j in range(n)):
                report.add("assumption-iii", f"agent {i} demands no house", p)
    return report


def _cube_rule_violation(v, c: int, N: int) -> Optional[str]:
    if c >= 1 and v[c - 1] == 0:
        return "cube-boundary-zero"
    if c == 0 and max(v) == N:
        return "cube-boundary-max"
    return None


def _cube_constrained(v, N: int, boundary: str) -> bool:
    if boundary == "simplex":
        return 0 in barycentric_numerators(v, N)
    return min(v) == 0 or max(v) == N


def _boundary_samples(d: int, N: int, count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        v = rng.integers(0, N + 1, size=d)
        v[rng.integers(d)] = 0 if rng.random() < 0.5 else N
        yield tuple(int(c) for c in v)


def check_sperner_coloring(inst: SpernerInstance, seed: int = 0, ledger: Optional[QueryLedger] = None) -> Report:
    ledger = ledger or QueryLedger()
    report = Report()
    if inst.variant == "triangle":
        for v in iter_triangle_vertices(inst.N):
            c = query_color(inst, ledger, v)
            if c not in (0, 1, 2):
                report.add("color-range", f"vertex {list(v)} has color {c}", v)
            elif v[c] == 0:
                report.add("triangle-boundary", f"vertex {list(v)} colored {c} but v_{c} = 0", v)
        return report

    d, N = inst.d, inst.N
    if N <= EXHAUSTIVE_MAX_N and d <= EXHAUSTIVE_MAX_D:
        vertices = iter_vertices(d, N)
    else:
        report.notes.append(f"cube too large for an exhaustive scan; sampled {BOUNDARY_SAMPLES} boundary vertices")
        vertices = _boundary_samples(d, N, BOUNDARY_SAMPLES, seed)
    for v in vertices:
        if not _cube_constrained(v, N, inst.boundary):
            continue
        c = query_color(inst, ledger, v)
        if not 0 <= c <= d:
            report.add("color-range", f"vertex {list(v)} has color {c}", v)
        elif inst.boundary == "simplex":
            if barycentric_numerators(v, N)[c] == 0:
                report.add("simplex-boundary", f"vertex {list(v)} colored {c} but α_{c} = 0", v)
        else:
            violation = _cube_rule_violation(v, c, N)
            if violation:
                report.add(violation, f"vertex {list(v)} colored {c}", v)
    return report


# Solutions

def _is_triangle_cell(cell: List[List[int]], N: int) -> bool:
    if len(cell) != 3 or len({tuple(v) for v in cell}) != 3:
        return False
    if any(len(v) != 3 or min(v) < 0 or sum(v) != N for v in cell):
        return False
    return all(l1_distance(a, b) == 2 for a, b in itertools.combinations(cell, 2))


def _is_cube_cell(cell: List[List[int]], d: int, N: int) -> bool:
    if len(cell) != d + 1 or any(len(v) != d or min(v) < 0 or max(v) > N for v in cell):
        return False
    ordered = sorted(cell, key=sum)
    axes = []
    for a, b in zip(ordered, ordered[1:]):
        step = np.asarray(b) - np.asarray(a)
        if sorted(step.tolist()) != [0] * (d - 1) + [1]:
            return False
        axes.append(int(np.argmax(step)))
    return len(set(axes)) == d


def _verify_cell(inst: SpernerInstance, sol: Solution, ledger: QueryLedger, report: Report):
    cell = sol.cell or []
    shaped = _is_triangle_cell(cell, inst.N) if inst.variant == "triangle" else _is_cube_cell(cell, inst.d, inst.N)
    if not shaped:
        report.add("cell-shape", f"{cell} is not a cell of the triangulation")
        return
    colors = [query_color(inst, ledger, v) for v in cell]
    if sorted(colors) != list(range(inst.d + 1)):
        report.add("panchromatic", f"cell colors {colors} do not exhaust 0..{inst.d}")


def _membership(inst: Any, ledger: QueryLedger, i: int, w, j: int) -> bool:
    if isinstance(inst, HousingInstance):
        return query_preference(inst, ledger, i, w, j)
    if isinstance(inst, RkkmInstance):
        return query_covering(inst, ledger, i, w, j)
    return query_kkm(inst, ledger, w, j)


def verify_solution(inst: Any, sol: Solution, epsilon: float, ledger: Optional[QueryLedger] = None) -> Report:
    """Check the assignment and every witness of a solution at ε"""
    ledger = ledger or QueryLedger()
    report = Report()
    if isinstance(inst, SpernerInstance):
        _verify_cell(inst, sol, ledger, report)
        return report

    n = inst.d if isinstance(inst, CakeInstance) else inst.n
    if not is_permutation(sol.perm, n):
        report.add("bijection", f"assignment {sol.perm} is not a permutation of {n} items")
        return report

    if isinstance(inst, CakeInstance):
        try:
            values = envy_table(inst, ledger, sol.point)
        except ToolkitError as e:
            report.add("cut-domain", f"cut {sol.point}: {e}")
            return report
        for i in range(n):
            envy = values[i].max() - values[i, sol.perm[i]]
            if envy > epsilon + TOL:
                report.add("envy", f"player {i} envies another piece by {envy:.4g}", sol.point)
        return report

    if not sol.witnesses:
        raise MissingWitnesses("solution carries no witness points")
    if len(sol.witnesses) != n:
        report.add("witness-count", f"{len(sol.witnesses)} witnesses for {n} agents")
        return report

    for i, witness in enumerate(sol.witnesses):
        # KKM witnesses are indexed by set, the others by agent
        j = i if isinstance(inst, KkmInstance) else sol.perm[i]
        try:
            member = _membership(inst, ledger, i, witness, j)
        except ToolkitError as e:
            report.add("witness-domain", f"witness {i}: {e}", witness)
            continue
        if not member:
            report.add("membership", f"witness {i} is not in set {j}", witness)
        try:
            distance = l1_distance(sol.point, witness)
        except ToolkitError as e:
            report.add("point-domain", f"point against witness {i}: {e}", witness)
            continue
        if distance > epsilon + TOL:
            report.add("distance", f"witness {i} is {distance:.4g} away, more than {epsilon:.4g}", witness)
    return report


def check_instance(inst: Any, samples: int, seed: int = 0, ledger: Optional[QueryLedger] = None) -> Report:
    """Run every assumption check that applies to the instance type"""
    ledger = ledger or QueryLedger()
    if isinstance(inst, HousingInstance):
        return check_gale_assumptions(inst, samples, seed, ledger)
    if isinstance(inst, RkkmInstance):
        return check_rkkm_instance(inst, samples, seed, ledger)
    if isinstance(inst, KkmInstance):
        covering = lambda x, j: query_kkm(inst, ledger, inst.N * x, j)  # noqa: E731
        report = check_kkm_covering(covering, 3, samples, seed)
        if inst.sparse:
            report = report.merge(check_sparseness(covering, 3, samples, seed))
        return report
    if isinstance(inst, CakeInstance):
        # the cut-space coverings are what the solvers rely on
        report = check_rkkm_instance(cake_to_rkkm(inst, 0.1, ledger=ledger).target, samples, seed)
        report.notes.append("cake checked through its cut-space coverings")
        return report
    return check_sperner_coloring(inst, seed, ledger)
