"""Command-line front end: ``eqrate <subcommand> [options]``.

Exit codes:
  0  success
  1  invalid request (for example MENE on a game that is not constant-sum)
  2  file or input-format error (missing file, bad JSON or CSV)
  3  the requested epsilon is infeasible
  4  a solver did not converge

Data goes to stdout (or ``--out``); diagnostics go to stderr. Set
``EQRATE_LOG`` to one of error, warn, info or debug for more detail.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .constraints import epsilon_min, epsilon_uniform
from .elimination import eliminate_exact_duplicates
from .errors import (ConvergenceError, EqRateError, GameFormatError, InfeasibleEpsilonError,
                     IngestError)
from .game import dump_game, read_game
from .ingest import BUILDERS, read_matches_csv
from .rating import (RatingReport, UndefinedPolicy, _jsonable, epsilon_sweep, rank_from_ratings,
                     rate)
from .solvers import MENE, EpsilonMode, SolveConfig, solve

log = logging.getLogger("eqrate")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FILE = 2
EXIT_INFEASIBLE = 3
EXIT_CONVERGENCE = 4

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


class _UsageError(Exception):
    pass


def _configure_logging():
    level = _LOG_LEVELS.get(os.environ.get("EQRATE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="eqrate: %(levelname)s: %(message)s")


def _solver_options(parser):
    parser.add_argument("--game", required=True, help="path to a game document (JSON)")
    parser.add_argument("--concept", choices=["ce", "cce", MENE], default="cce")
    parser.add_argument("--selection", choices=["max-entropy", "max-gini", "max-welfare"],
                        default="max-entropy")
    eps = parser.add_mutually_exclusive_group()
    eps.add_argument("--epsilon", default="eps-min-plus",
                     help="'eps-min-plus' or comma-separated per-player values")
    eps.add_argument("--epsilon-norm", type=float, default=None,
                     help="normalized epsilon rho; epsilon = rho * eps_uni")
    parser.add_argument("--delta-abs", type=float, default=1e-6)
    parser.add_argument("--delta-rel", type=float, default=1e-4)


def _output_options(parser, default):
    parser.add_argument("--output", choices=["json", "csv"], default=default)
    parser.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqrate",
                                     description="Equilibrium-based strategy rating.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="solve for an equilibrium and rate every strategy")
    _solver_options(p)
    p.add_argument("--undefined", choices=[u.value for u in UndefinedPolicy], default="mark")
    p.add_argument("--group-tol", type=float, default=None)
    _output_options(p, "csv")

    p = sub.add_parser("solve", help="solve for an equilibrium joint distribution")
    _solver_options(p)
    _output_options(p, "json")

    p = sub.add_parser("sweep", help="ratings over a grid of normalized epsilon")
    _solver_options(p)
    p.add_argument("--grid", required=True, help="start:stop:count")
    p.add_argument("--undefined", choices=[u.value for u in UndefinedPolicy], default="mark")
    _output_options(p, "csv")

    p = sub.add_parser("epsilon", help="minimum and uniform epsilon per player")
    p.add_argument("--game", required=True)
    p.add_argument("--concept", choices=["ce", "cce"], default="cce")
    _output_options(p, "json")

    p = sub.add_parser("ingest", help="build a game from a match CSV")
    p.add_argument("csv", help="match CSV with columns home,away,result")
    p.add_argument("--builder", choices=sorted(BUILDERS), default="winprob")
    p.add_argument("--out", default=None)

    p = sub.add_parser("eliminate", help="merge payoff-identical strategies")
    p.add_argument("--game", required=True)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--out", default=None,
                   help="write the reduced game here and the mapping next to it")
    return parser


def _epsilon_mode(args):
    if args.epsilon_norm is not None:
        return EpsilonMode.normalized(args.epsilon_norm)
    if args.epsilon.strip().lower() == "eps-min-plus":
        return EpsilonMode.eps_min_plus(args.delta_abs, args.delta_rel)
    try:
        values = [float(v) for v in args.epsilon.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"--epsilon {args.epsilon!r} is neither eps-min-plus nor a float list")
    return EpsilonMode.absolute(values)


def _config(args):
    try:
        return SolveConfig(concept=args.concept, selection=args.selection,
                           epsilon_mode=_epsilon_mode(args))
    except ValueError as exc:
        raise _UsageError(str(exc))


def _load(path):
    try:
        return read_game(path)
    except FileNotFoundError:
        raise GameFormatError(f"{path}: no such file") from None
    except OSError as exc:
        raise GameFormatError(f"{path}: {exc.strerror}") from None
    except GameFormatError as exc:
        raise GameFormatError(f"{path}: {exc}") from None


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


def report_csv(report: RatingReport) -> str:
    rows = [(p, label, _fmt(r), str(d).lower(), _fmt(m))
            for p, label, r, d, m in report.rows()]
    return _csv_text(["player", "strategy", "rating", "defined", "mass"], rows)


def cmd_rate(args) -> int:
    game = _load(args.game)
    config = _config(args)
    report = rate(game, config, UndefinedPolicy(args.undefined))
    if args.output == "json":
        doc = report.to_dict()
        doc["ranking"] = rank_from_ratings(report, args.group_tol)
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(report_csv(report), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    game = _load(args.game)
    sol = solve(game, _config(args))
    if args.output == "json":
        doc = {
            "concept": sol.concept,
            "selection": sol.selection,
            "epsilon": sol.epsilon,
            "joint": sol.dist.probs,
            "marginals": [sol.dist.marginal(p) for p in range(game.num_players)],
            "achieved_violation": sol.achieved_violation,
            "objective_value": sol.objective_value,
            "dual_variables": sol.dual_variables,
            "iterations": sol.iterations,
            "converged": sol.converged,
        }
        _emit(json.dumps(_jsonable(doc), indent=2) + "\n", args.out)
    else:
        labels = game.strategy_labels
        rows = [[labels[p][i] for p, i in enumerate(idx)] + [_fmt(sol.dist.probs[idx])]
                for idx in np.ndindex(*game.shape)]
        header = [f"player{p}" for p in range(game.num_players)] + ["probability"]
        _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def parse_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise _UsageError(f"--grid {spec!r} is not start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise _UsageError(f"--grid {spec!r} is not start:stop:count") from None
    if count < 2:
        raise _UsageError("--grid count must be at least 2")
    if start < 0 or stop < 0:
        raise _UsageError("--grid values must be nonnegative")
    return np.linspace(start, stop, count)


def cmd_sweep(args) -> int:
    grid = parse_grid(args.grid)
    game = _load(args.game)
    config = _config(args)
    if config.concept == MENE:
        raise _UsageError("sweeps need --concept ce or cce")
    mode = config.epsilon_mode
    if mode.kind != "eps-min-plus":
        mode = EpsilonMode.eps_min_plus(args.delta_abs, args.delta_rel)
    config = SolveConfig(concept=config.concept, selection=config.selection, epsilon_mode=mode)
    table = epsilon_sweep(game, config.concept, config.selection, grid,
                          UndefinedPolicy(args.undefined), config)
    for pt in table.points:
        if pt.clamped:
            log.info("rho=%g clamped to the minimum epsilon plus offset", pt.rho)
    if args.output == "json":
        doc = {"concept": table.concept, "selection": table.selection, "points": [
            {"rho": pt.rho, "epsilon": pt.epsilon, "clamped": pt.clamped,
             "converged": pt.converged, "error": pt.error, "entropy": pt.entropy,
             "masses": pt.masses, "ratings": pt.ratings}
            for pt in table.points]}
        _emit(json.dumps(_jsonable(doc), indent=2).replace("NaN", "null") + "\n", args.out)
    else:
        rows = [(_fmt(rho), p, label, _fmt(m), _fmt(r), str(ok).lower())
                for rho, p, label, m, r, ok in table.rows()]
        _emit(_csv_text(["rho", "player", "strategy", "mass", "rating", "converged"], rows),
              args.out)
    return EXIT_OK


def cmd_epsilon(args) -> int:
    game = _load(args.game)
    em, _ = epsilon_min(game, args.concept)
    eu = epsilon_uniform(game, args.concept)
    if args.output == "json":
        doc = {"concept": args.concept, "eps_min": em.tolist(), "eps_uni": eu.tolist()}
        _emit(json.dumps(doc) + "\n", args.out)
    else:
        rows = [(p, _fmt(em[p]), _fmt(eu[p])) for p in range(game.num_players)]
        _emit(_csv_text(["player", "eps_min", "eps_uni"], rows), args.out)
    return EXIT_OK


def cmd_ingest(args) -> int:
    try:
        records = read_matches_csv(args.csv)
    except FileNotFoundError:
        raise GameFormatError(f"{args.csv}: no such file") from None
    game = BUILDERS[args.builder](records)
    _emit(dump_game(game) + "\n", args.out)
    return EXIT_OK


def cmd_eliminate(args) -> int:
    if args.tol < 0:
        raise _UsageError("--tol must be nonnegative")
    game = _load(args.game)
    reduced, mapping = eliminate_exact_duplicates(game, args.tol)
    mapping_doc = mapping.to_dict([list(l) for l in game.strategy_labels])
    if args.out:
        out = Path(args.out)
        out.write_text(dump_game(reduced) + "\n", encoding="utf-8")
        out.with_name(out.stem + ".mapping.json").write_text(json.dumps(mapping_doc) + "\n",
                                                              encoding="utf-8")
    else:
        doc = {"game": json.loads(dump_game(reduced)), "mapping": mapping_doc}
        sys.stdout.write(json.dumps(doc) + "\n")
    return EXIT_OK


COMMANDS = {
    "rate": cmd_rate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "epsilon": cmd_epsilon,
    "ingest": cmd_ingest,
    "eliminate": cmd_eliminate,
}


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (GameFormatError, IngestError) as exc:
        print(f"eqrate: error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except InfeasibleEpsilonError as exc:
        print(f"eqrate: infeasible epsilon: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"eqrate: no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except _UsageError as exc:
        print(f"eqrate: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except EqRateError as exc:
        print(f"eqrate: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
