"""Command-line entry point.

    infex run --config PATH [--workers N] [--svg]
    infex verify --suite {all,linalg,lemmas,equivalence} [--seed N] [--out DIR]
    infex lower-bound --gap G --c C --t-grid 1000,10000,100000 --reps N --out PATH

Exit codes: 0 success, 1 assertion or run failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from pathlib import Path
from typing import Any

from .errors import InvalidArgumentError
from .policies import PolicyConfig
from .schedules import Schedule
from .simulator import ExperimentResult, ExperimentSpec, lower_bound_experiment, run_experiment

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

RESULTS_COLUMNS = ("policy_label", "instance_seed", "final_regret", "total_ns", "n_opt", "n_explore")
SPEC_KEYS = {"dim", "n_arms", "horizon", "n_instances", "base_seed", "timing_enabled", "policies"}
RUN_KEYS = {"output_dir", "emit_svg", "workers"}


class ConfigError(Exception):
    pass


def fmt(value: float) -> str:
    """Render a number with 17 significant digits so it round-trips exactly."""
    return format(value, ".17g")


def slugify(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_")


def load_run_config(path: Path) -> tuple[ExperimentSpec, dict[str, Any]]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - SPEC_KEYS - RUN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = {"dim", "n_arms", "horizon", "n_instances"} - set(raw)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    policies = raw.get("policies") or []
    if not policies:
        raise ConfigError("no policies configured")
    base_seed = raw.get("base_seed", 0)
    if "INFEX_SEED" in os.environ:
        try:
            base_seed = int(os.environ["INFEX_SEED"])
        except ValueError as exc:
            raise ConfigError("INFEX_SEED must be an integer") from exc
    try:
        spec = ExperimentSpec(
            dim=_int(raw, "dim"),
            n_arms=_int(raw, "n_arms"),
            horizon=_int(raw, "horizon"),
            n_instances=_int(raw, "n_instances"),
            base_seed=int(base_seed),
            timing_enabled=bool(raw.get("timing_enabled", True)),
            policies=tuple(PolicyConfig.from_dict(p) for p in policies),
        )
    except (InvalidArgumentError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    options = {
        "output_dir": raw.get("output_dir", "results"),
        "emit_svg": bool(raw.get("emit_svg", False)),
        "workers": raw.get("workers", 1),
    }
    return spec, options


def _int(raw: dict, key: str) -> int:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer")
    return value


def write_results(result: ExperimentResult, out_dir: Path, emit_svg: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for row in result.traces:
            for tr in row:
                writer.writerow(
                    [tr.label, tr.instance_seed, fmt(tr.final_regret), tr.total_ns, tr.n_opt, tr.n_explore]
                )
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["policy_label", "n_runs", "n_failures", "mean_regret", "std_regret", "mean_ns", "std_ns"]
        )
        for agg in result.aggregates:
            writer.writerow(
                [agg.label, agg.n_runs, agg.n_failures, fmt(agg.mean_regret), fmt(agg.std_regret),
                 fmt(agg.mean_ns), fmt(agg.std_ns)]
            )
    trace_dir = out_dir / "traces"
    trace_dir.mkdir(exist_ok=True)
    for agg in result.aggregates:
        with open(trace_dir / f"{slugify(agg.label)}.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "cumulative_regret"])
            for t, value in zip(agg.checkpoints, agg.mean_curve):
                writer.writerow([int(t), fmt(value)])
    if emit_svg:
        from .plotting import plot_regret, plot_runtime

        spec = result.spec
        title = f"d={spec.dim}, K={spec.n_arms}, T={spec.horizon}, {spec.n_instances} instances"
        plot_regret(result.aggregates, out_dir / "regret.svg", title)
        plot_runtime(result.aggregates, out_dir / "runtime.svg", title)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        spec, options = load_run_config(Path(args.config))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    workers = args.workers if args.workers is not None else options["workers"]
    if not isinstance(workers, int) or workers < 1:
        print("error: workers must be a positive integer", file=sys.stderr)
        return EXIT_USAGE
    emit_svg = args.svg or options["emit_svg"]
    out_dir = Path(options["output_dir"])
    result = run_experiment(spec, workers=workers)
    write_results(result, out_dir, emit_svg)
    for agg in result.aggregates:
        print(
            f"{agg.label:28s} regret {agg.mean_regret:10.2f} ± {agg.std_regret:8.2f}   "
            f"time {agg.mean_ns / 1e9:8.3f}s"
        )
    if result.n_failures:
        print(f"error: {result.n_failures} runs failed", file=sys.stderr)
        for row in result.traces:
            for tr in row:
                if tr.failed:
                    print(f"  {tr.label} (seed {tr.instance_seed}): {tr.failure}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {out_dir / 'results.csv'}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from .verification import DETERMINISTIC, SUITES, run_suite

    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    reports = run_suite(args.suite, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "verification.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lemma", "trials", "violations", "worst_margin", "passed", "detail"])
        for rep in reports:
            writer.writerow(
                [rep.lemma, rep.trials, rep.violations, fmt(rep.worst_margin), int(rep.passed), rep.detail]
            )
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status}  {rep.lemma:28s} trials={rep.trials:<7d} worst_margin={rep.worst_margin:.3e}  {rep.detail}")
    failed = [rep for rep in reports if not rep.passed]
    if failed:
        hard = [rep for rep in failed if rep.lemma in DETERMINISTIC]
        print(f"error: {len(failed)} checks failed ({len(hard)} deterministic)", file=sys.stderr)
        for rep in failed:
            print(f"  {rep.lemma}: worst margin {rep.worst_margin:.3e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _parse_grid(text: str) -> list[int]:
    try:
        values = [int(float(part)) for part in text.replace(" ", "").split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"bad --t-grid {text!r}") from exc
    return values


def cmd_lower_bound(args: argparse.Namespace) -> int:
    try:
        grid = _parse_grid(args.t_grid)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if len(grid) < 3:
        print("error: --t-grid needs at least 3 horizons for a slope fit", file=sys.stderr)
        return EXIT_USAGE
    if args.reps < 1:
        print("error: --reps must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        schedule = Schedule.log_linear(args.c)
        report = lower_bound_experiment(
            args.gap, schedule, grid, args.reps,
            base_seed=args.seed, dim=args.dim, include_control=args.control, workers=args.workers,
        )
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["schedule", "T", "mean_regret", "std_regret"])
        for label, horizon, mean, std in report.rows:
            writer.writerow([label, horizon, fmt(mean), fmt(std)])
    slope_path = out.with_name(out.stem + "_slopes.csv")
    with open(slope_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["schedule", "slope"])
        for label, slope in report.slopes.items():
            writer.writerow([label, "" if slope is None else fmt(slope)])
    for label, horizon, mean, std in report.rows:
        print(f"{label:18s} T={horizon:<8d} mean regret {mean:12.3f} ± {std:.3f}")
    for label, slope in report.slopes.items():
        shown = "undefined" if slope is None else f"{slope:.4f}"
        print(f"log-log slope {label}: {shown}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--svg", action="store_true", help="also write regret.svg and runtime.svg")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run the numeric property suites")
    verify.add_argument("--suite", default="all")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", default=".")
    verify.set_defaults(func=cmd_verify)

    lb = sub.add_parser("lower-bound", help="regret growth under a logarithmic exploration schedule")
    lb.add_argument("--gap", type=float, required=True)
    lb.add_argument("--c", type=float, required=True)
    lb.add_argument("--t-grid", required=True, help="comma-separated horizons")
    lb.add_argument("--reps", type=int, required=True)
    lb.add_argument("--out", required=True, help="path of growth.csv")
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--dim", type=int, default=2)
    lb.add_argument("--workers", type=int, default=1)
    lb.add_argument("--no-control", dest="control", action="store_false")
    lb.set_defaults(func=cmd_lower_bound)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
