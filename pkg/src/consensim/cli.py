"""Command-line front end: constants, curves, validate, survival.

Exit codes: 0 success, 1 validation/estimation failure, 2 usage or
configuration error, 3 I/O error.  The seed can come from (in order of
increasing precedence) the config file, the CONSENSIM_SEED environment
variable, and the --seed flag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, apply_overrides, load_config
from .constants_io import (ConstantsFile, default_provenance, load_constants,
                           merge_entries, save_constants)
from .cost import curve_sweep
from .errors import ConfigurationError, ConsensimError, ParameterError
from .exit_analytics import IntervalExitQuery, survival_single
from .sampling import PathConfig, estimate_constants
from .validate import run_validation

__all__ = ["main", "cmd_constants", "cmd_curves", "cmd_validate", "cmd_survival"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

_DEFAULT_SURVIVAL_TIMES = tuple(float(t) for t in np.geomspace(0.05, 3.0, 25))


def cmd_constants(config: ExperimentConfig) -> ConstantsFile:
    """Estimate constants for every configured ensemble size and cache them.

    Existing entries for other sizes are kept; recomputed sizes are
    replaced.  Failures are reported per size without aborting the rest;
    they surface as a nonzero exit from main().
    """
    path_cfg = PathConfig(step=config.step,
                          bridge_correction=config.bridge_correction,
                          seed=config.seed)
    fresh = []
    failures = []
    print(f"{'n':>4s} {'mean_exit':>12s} {'se':>10s} {'base_cost':>12s} "
          f"{'se':>10s} {'reps':>8s}")
    for n in config.n_list:
        try:
            entry = estimate_constants(n, config.replications, path_cfg)
        except ConsensimError as exc:
            failures.append((n, str(exc)))
            print(f"{n:>4d} estimation failed: {exc}")
            continue
        fresh.append(entry)
        print(f"{n:>4d} {entry.mean_exit_time:>12.6f} {entry.mean_exit_se:>10.2e} "
              f"{entry.base_cost:>12.6f} {entry.base_cost_se:>10.2e} "
              f"{entry.replications:>8d}")

    existing = ()
    if os.path.exists(config.constants_path):
        existing = load_constants(config.constants_path).entries
    merged = merge_entries(existing, fresh)
    result = ConstantsFile(entries=merged,
                           provenance=default_provenance(config.digest(),
                                                         config.seed))
    save_constants(config.constants_path, result)
    print(f"wrote {config.constants_path} ({len(merged)} entries)")
    if failures:
        raise ConsensimError(
            "estimation failed for n in "
            f"{[n for n, _ in failures]}: {failures[0][1]}")
    return result


def cmd_curves(config: ExperimentConfig, constants: ConstantsFile) -> str:
    """Render the normalized cost-versus-load table as CSV text."""
    for n in config.n_list:
        if n < 2:
            raise ConfigurationError(
                f"curves need at least two agents per ensemble, got n={n}")
    points = curve_sweep(list(config.n_list), config.rho_grid(),
                         constants.by_agents())
    lines = [f"# consensim {__version__} curves",
             f"# seed: {config.seed}",
             f"# config_digest: {config.digest()}",
             "n,rho,cost_tt_tdma,cost_et_pa,p_pa"]
    for pt in points:
        tt = "" if pt.cost_tt_tdma is None else _fmt(pt.cost_tt_tdma)
        lines.append(f"{pt.num_agents},{_fmt(pt.rho)},{tt},"
                     f"{_fmt(pt.cost_et_pa)},{_fmt(pt.loss_prob_pa)}")
    return "\n".join(lines) + "\n"


def cmd_validate(config: ExperimentConfig, constants: ConstantsFile) -> dict:
    """Run the simulation-versus-analytics checks; see validate module."""
    return run_validation(config, constants)


def cmd_survival(n: int, t_grid: Sequence[float], tol: float) -> list[dict]:
    """Tabulate the no-crossing probability of the fastest of n walkers."""
    if not isinstance(n, int) or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n!r}")
    rows = []
    for t in t_grid:
        res = survival_single(IntervalExitQuery(start=1.0, width=2.0,
                                                time=float(t), tolerance=tol))
        rows.append({"time": float(t),
                     "survival": res.probability ** n,
                     "terms_used": res.terms_used})
    return rows


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, ".12g")


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config file")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--n", type=_int_list, metavar="LIST",
                        help="comma-separated ensemble sizes")
    common.add_argument("--rho-min", type=float)
    common.add_argument("--rho-max", type=float)
    common.add_argument("--rho-count", type=int)
    common.add_argument("--replications", type=int)
    common.add_argument("--step", type=float)
    common.add_argument("--out", metavar="PATH", help="artifact output path")
    common.add_argument("--constants", metavar="PATH",
                        help="constants cache file")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format for the survival command")

    parser = argparse.ArgumentParser(
        prog="consensim",
        description="Consensus-cost experiments: time-triggered vs "
                    "event-triggered control on a shared lossy channel.")
    parser.add_argument("--version", action="version",
                        version=f"consensim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common],
                   help="estimate and cache per-ensemble constants")
    sub.add_parser("curves", parents=[common],
                   help="emit the normalized cost-versus-load CSV")
    sub.add_parser("validate", parents=[common],
                   help="check simulations against the closed forms")
    surv = sub.add_parser("survival", parents=[common],
                          help="tabulate fastest-crossing survival values")
    surv.add_argument("--times", type=_float_list, metavar="LIST",
                      help="comma-separated evaluation times")
    surv.add_argument("--tol", type=float, default=1e-12,
                      help="series truncation tolerance")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config)
    env_seed = os.environ.get("CONSENSIM_SEED")
    if env_seed is not None:
        try:
            config = apply_overrides(config, seed=int(env_seed))
        except ValueError:
            raise ConfigurationError(
                f"CONSENSIM_SEED must be an integer, got {env_seed!r}")
    return apply_overrides(
        config, seed=args.seed, n_list=args.n, rho_min=args.rho_min,
        rho_max=args.rho_max, rho_count=args.rho_count,
        replications=args.replications, step=args.step,
        constants_path=args.constants, out_path=args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message
        return int(exc.code or 0)

    try:
        config = _resolve_config(args)
        if args.command == "constants":
            cmd_constants(config)
        elif args.command == "curves":
            constants = load_constants(config.constants_path)
            _write_text(config.out_path, cmd_curves(config, constants))
        elif args.command == "validate":
            constants = load_constants(config.constants_path)
            report = cmd_validate(config, constants)
            _write_text(config.out_path,
                        json.dumps(report, indent=2, sort_keys=True) + "\n")
            if not report["all_passed"]:
                failed = [c["name"] for c in report["checks"] if not c["passed"]]
                print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
                return EXIT_FAILURE
        elif args.command == "survival":
            sizes = args.n if args.n is not None else (1,)
            if len(sizes) != 1:
                raise ConfigurationError(
                    "survival takes exactly one ensemble size via --n")
            times = args.times if args.times is not None else _DEFAULT_SURVIVAL_TIMES
            rows = cmd_survival(sizes[0], times, args.tol)
            _write_text(config.out_path, _format_table(rows, args.format))
    except (ConfigurationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConsensimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _format_table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    lines = ["time,survival,terms_used"]
    lines += [f"{_fmt(r['time'])},{_fmt(r['survival'])},{r['terms_used']}"
              for r in rows]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
