"""Query-count benchmarks over the generator families.

Each row aggregates ``repetitions`` random instances drawn from one seeded
generator; counts are the outermost ledger layer, i.e. calls to the oracle
of the benchmarked instance itself.
"""
import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidValues
from .oracles import QueryLedger, make_quasilinear_market, make_weighted_argmax_rkkm
from .reductions import sperner_side
from .solvers import solve_housing, solve_rkkm
from .utils import config_value

logger = logging.getLogger(__name__)

FAMILIES = ("weighted-argmax", "quasilinear")

COLUMNS = ["family", "n", "epsilon", "repetitions", "mean_queries", "max_queries", "bound", "within_bound"]


def binary_search_bound(epsilon: float) -> int:
    return 4 * math.ceil(math.log2(2.0 / epsilon)) + 4


def rkkm_query_bound(n: int, epsilon: float) -> int:
    """Ceiling on covering queries of solve_rkkm at ε"""
    if n == 1:
        return 0
    if n == 2:
        return binary_search_bound(epsilon)
    N = sperner_side(n, epsilon / 2)
    return n * (N + 1) ** (n - 1)


def query_bound(family: str, n: int, epsilon: float) -> int:
    if family == "weighted-argmax":
        return rkkm_query_bound(n, epsilon)
    # housing_to_rkkm charges one preference query per covering query at ε/n²
    return rkkm_query_bound(n, epsilon / n ** 2)


def _draw(family: str, n: int, rng: np.random.Generator):
    if family == "weighted-argmax":
        return make_weighted_argmax_rkkm(rng.uniform(0.5, 2.0, size=(n, n)))
    if family == "quasilinear":
        return make_quasilinear_market(rng.uniform(0.05, 0.95, size=(n, n)))
    raise InvalidValues(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def count_queries(family: str, inst, epsilon: float) -> int:
    ledger = QueryLedger()
    if family == "weighted-argmax":
        solve_rkkm(inst, epsilon, ledger)
    else:
        solve_housing(inst, epsilon, ledger)
    return ledger.total()


def run_query_bench(family: str = None, ns: Sequence[int] = None, epsilons: Sequence[float] = None,
                    repetitions: int = None, seed: int = None) -> pd.DataFrame:
    family = family or config_value("bench", "family", "weighted-argmax")
    ns = list(ns or config_value("bench", "n", [2]))
    epsilons = list(epsilons or config_value("bench", "epsilons", [1e-2, 1e-3, 1e-4]))
    repetitions = repetitions or int(config_value("bench", "repetitions", 3))
    seed = config_value("bench", "seed", 7) if seed is None else seed
    if family not in FAMILIES:
        raise InvalidValues(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")

    rows = []
    for n in ns:
        for epsilon in epsilons:
            # same instances for every ε so rows differ only in precision
            rng = np.random.default_rng([seed, n])
            counts = [count_queries(family, _draw(family, n, rng), epsilon) for _ in range(repetitions)]
            bound = query_bound(family, n, epsilon)
            rows.append({
                "family": family,
                "n": n,
                "epsilon": epsilon,
                "repetitions": repetitions,
                "mean_queries": float(np.mean(counts)),
                "max_queries": int(max(counts)),
                "bound": bound,
                "within_bound": bool(max(counts) <= bound),
            })
            logger.info(f"{family} n={n} epsilon={epsilon:g}: mean {np.mean(counts):.1f}, max {max(counts)}, bound {bound}")
    return pd.DataFrame(rows, columns=COLUMNS)


def fit_log_slope(epsilons: Sequence[float], queries: Sequence[float]) -> Tuple[float, float]:
    """Least-squares line of queries against log(1/ε); returns (slope, R²)"""
    x = np.log(1.0 / np.asarray(epsilons, dtype=float))
    y = np.asarray(queries, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = ((y - y.mean()) ** 2).sum()
    r_squared = 1.0 - (residual ** 2).sum() / total if total > 0 else 1.0
    return float(slope), float(r_squared)


def log_slopes(table: pd.DataFrame) -> List[Tuple[int, float, float]]:
    """Slope fit per n for tables with at least three ε values"""
    fits = []
    for n, group in table.groupby("n"):
        if len(group) >= 3:
            slope, r_squared = fit_log_slope(group["epsilon"], group["mean_queries"])
            fits.append((int(n), slope, r_squared))
            logger.info(f"n={n}: {slope:.2f} queries per unit of log(1/epsilon), R^2={r_squared:.4f}")
    return fits


def write_table(table: pd.DataFrame, path: str):
    table.to_csv(path, index=False)
    logger.info(f"Wrote {len(table)} benchmark rows to {path}")
