"""Subcommand handlers and the argument parser behind ``app.py``.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""
import argparse
import functools
import logging
import os
from datetime import datetime, timezone
from typing import Callable, List, Optional, Sequence

from pydantic import ValidationError

from .bench import FAMILIES, log_slopes, run_query_bench, write_table
from .errors import InvalidValues, NoSuchReduction, ToolkitError
from .oracles import QueryLedger, SpernerInstance
from .plotting import render
from .reductions import (
    KINDS,
    SPERNER_KKM_EPSILON,
    backmap_chain,
    build_chain,
    find_chain,
    kind_of,
    satisfies_kind,
)
from .schemas import LedgerEntry, Report, RunConfig, Solution
from .solvers import solve
from .storage import (
    LoadedInstance,
    build_instance,
    compose_doc,
    load_instance,
    load_solution,
    save_instance,
    save_model,
)
from .utils import config_value, resolve_path
from .verify import check_instance, verify_solution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERIFY = 2

PROBLEMS = ("housing", "rkkm", "kkm", "cake", "sperner")


def handles_errors(command: Callable[..., int]) -> Callable[..., int]:
    """Turn input and file errors into exit code 1"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except (ToolkitError, ValidationError, OSError) as e:
            logger.error(f"{command.__name__} failed: {e}")
            return EXIT_INPUT

    return wrapper


def problem_of(inst) -> str:
    kind = kind_of(inst)
    if kind.startswith("sperner"):
        return "sperner"
    return "rkkm" if kind.startswith("rkkm") else kind


def default_output(name: str) -> str:
    folder = config_value("filepaths", "outputs", "data/outputs")
    return resolve_path(os.path.join(folder, name))


def _load(config: RunConfig) -> LoadedInstance:
    if not config.instance:
        raise InvalidValues("--instance is required")
    return build_instance(load_instance(config.instance), memoize=config.memoize)


def _is_triangle(inst) -> bool:
    return isinstance(inst, SpernerInstance) and inst.variant == "triangle"


def _solve_epsilon(config: RunConfig, loaded: LoadedInstance) -> float:
    if loaded.reductions:
        if config.epsilon is not None and config.epsilon != loaded.epsilon:
            logger.warning(f"Composed instance fixes epsilon={loaded.epsilon:.4g}; ignoring --epsilon")
        return loaded.target_epsilon
    if config.epsilon is not None:
        return config.epsilon
    if isinstance(loaded.instance, SpernerInstance):
        return SPERNER_KKM_EPSILON
    raise InvalidValues("--epsilon is required for this instance")


def _report_failures(report: Report):
    for violation in report.violations:
        logger.error(f"{violation.check}: {violation.detail}")


@handles_errors
def cmd_solve(config: RunConfig, problem: str) -> int:
    loaded = _load(config)
    actual = problem_of(loaded.instance)
    if problem != actual:
        raise InvalidValues(f"instance is a {actual} instance, not {problem}")
    epsilon = _solve_epsilon(config, loaded)
    logger.info(f"Solving {actual} at epsilon={epsilon:.4g} with {config.workers} worker(s)")

    sol = solve(loaded.instance, epsilon, QueryLedger(), config.workers, config.deterministic, config.memoize)
    verify_epsilon = epsilon
    if loaded.reductions:
        source_entries = [
            LedgerEntry(layer=r.source_layer, counts=r.source_ledger.snapshot()) for r in loaded.reductions
        ]
        back = backmap_chain(loaded.reductions, sol)
        sol = back.model_copy(update={"queries": source_entries + sol.queries, "source": sol})
        verify_epsilon = loaded.epsilon

    report = verify_solution(loaded.base, sol, verify_epsilon)
    if not config.deterministic:
        sol = sol.model_copy(update={"created_at": datetime.now(timezone.utc).isoformat()})
    save_model(sol, config.out or default_output("solution.json"))

    total = sum(entry.total for entry in sol.queries)
    if not report.passed:
        _report_failures(report)
        return EXIT_VERIFY
    logger.info(f"Verified solution after {total} queries across {len(sol.queries)} layer(s)")
    return EXIT_OK


@handles_errors
def cmd_reduce(config: RunConfig, from_kind: Optional[str], to_kind: str) -> int:
    doc = load_instance(config.instance) if config.instance else None
    if doc is None:
        raise InvalidValues("--instance is required")
    loaded = build_instance(doc, memoize=config.memoize)
    source_kind = kind_of(loaded.instance)
    if from_kind and not satisfies_kind(source_kind, from_kind):
        raise NoSuchReduction(f"instance is {source_kind}, not {from_kind}")
    chain = find_chain(from_kind or source_kind, to_kind)

    if config.epsilon is not None:
        epsilon = config.epsilon
    elif _is_triangle(loaded.instance):
        epsilon = SPERNER_KKM_EPSILON
    elif loaded.reductions:
        epsilon = loaded.target_epsilon
    else:
        raise InvalidValues("--epsilon is required for this reduction")

    reductions = build_chain(loaded.instance, chain, epsilon, memoize=config.memoize)
    composed = compose_doc(doc, reductions, epsilon)
    save_instance(composed, config.out or default_output("composed.json"))
    epsilons = ", ".join(f"{e:.4g}" for e in composed.epsilons)
    logger.info(f"Reduced {source_kind} to {to_kind} via {' -> '.join(chain)}; epsilons ({epsilons})")
    return EXIT_OK


@handles_errors
def cmd_verify(config: RunConfig, solution_path: Optional[str] = None, samples: Optional[int] = None) -> int:
    loaded = _load(config)
    if solution_path:
        sol = load_solution(solution_path)
        epsilon = config.epsilon if config.epsilon is not None else sol.epsilon
        report = verify_solution(loaded.base, sol, epsilon)
    else:
        samples = samples or int(config_value("verify", "samples_per_face", 64))
        report = check_instance(loaded.instance, samples, config.seed)
    save_model(report, config.out or default_output("report.json"))
    if not report.passed:
        _report_failures(report)
        return EXIT_VERIFY
    logger.info(f"All checks passed{' (' + '; '.join(report.notes) + ')' if report.notes else ''}")
    return EXIT_OK


@handles_errors
def cmd_bench_queries(config: RunConfig, family: Optional[str] = None, ns: Optional[Sequence[int]] = None,
                      epsilons: Optional[Sequence[float]] = None, repetitions: Optional[int] = None) -> int:
    table = run_query_bench(family, ns, epsilons, repetitions, config.seed)
    path = config.out or default_output("bench.csv")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    write_table(table, path)
    log_slopes(table)
    if not table["within_bound"].all():
        logger.error("Measured query counts exceed the bound")
        return EXIT_VERIFY
    return EXIT_OK


@handles_errors
def cmd_plot(config: RunConfig, solution_path: Optional[str] = None) -> int:
    loaded = _load(config)
    overlay: Optional[Solution] = load_solution(solution_path) if solution_path else None
    if overlay is not None and loaded.reductions and overlay.source is not None:
        overlay = overlay.source
    path = config.out or default_output("figure.svg")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    summary = render(loaded.instance, path, overlay)
    logger.info(f"Rendered {summary.kind} with {summary.vertices} points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON file")
    common.add_argument("--epsilon", type=float, help="approximation parameter in (0, 1/4)")
    common.add_argument("--seed", type=int, default=int(config_value("verify", "seed", 0)))
    common.add_argument("--workers", type=int, default=int(config_value("solver", "workers", 1)))
    common.add_argument("--memoize", action=argparse.BooleanOptionalAction,
                        default=bool(config_value("solver", "memoize", False)))
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                        default=bool(config_value("solver", "deterministic", True)))
    common.add_argument("--out", help="output file")

    parser = argparse.ArgumentParser(description="Housing market, Rainbow-KKM, Sperner and cake-cutting toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", parents=[common], help="solve an instance and verify the result")
    solve_parser.add_argument("problem", choices=PROBLEMS)

    reduce_parser = commands.add_parser("reduce", parents=[common], help="write a composed instance")
    reduce_parser.add_argument("--from", dest="from_kind", choices=KINDS)
    reduce_parser.add_argument("--to", dest="to_kind", choices=KINDS, required=True)

    verify_parser = commands.add_parser("verify", parents=[common], help="check an instance or a solution")
    verify_parser.add_argument("--solution", help="solution JSON file")
    verify_parser.add_argument("--samples", type=int, help="samples per face")

    bench_parser = commands.add_parser("bench", parents=[common], help="query-count table")
    bench_parser.add_argument("--family", choices=FAMILIES)
    bench_parser.add_argument("--n", dest="ns", type=int, nargs="+")
    bench_parser.add_argument("--epsilons", type=float, nargs="+")
    bench_parser.add_argument("--repetitions", type=int)

    plot_parser = commands.add_parser("plot", parents=[common], help="SVG figure of a planar instance")
    plot_parser.add_argument("--solution", help="solution JSON file to overlay")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    # bench sweeps take their own ε list
    epsilon = None if args.command == "bench" else args.epsilon
    return RunConfig(
        command=args.command,
        instance=args.instance,
        epsilon=epsilon,
        seed=args.seed,
        deterministic=args.deterministic,
        workers=args.workers,
        memoize=args.memoize,
        out=args.out,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = run_config(args)
    except ValidationError as e:
        logger.error(f"Invalid options: {e.errors()[0]['msg']}")
        return EXIT_INPUT

    if args.command == "solve":
        return cmd_solve(config, args.problem)
    if args.command == "reduce":
        return cmd_reduce(config, args.from_kind, args.to_kind)
    if args.command == "verify":
        return cmd_verify(config, args.solution, args.samples)
    if args.command == "bench":
        return cmd_bench_queries(config, args.family, args.ns, args.epsilons, args.repetitions)
    return cmd_plot(config, args.solution)
