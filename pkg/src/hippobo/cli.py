"""Command-line entry point: ``hippobo run`` and ``hippobo plot``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .batch import OptimiserSettings
from .harness import (
    METHODS,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    emit_regret_plot,
    read_csv,
    run_experiment,
)
from .benchmarks import PROBLEMS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def parse_seeds(text: str) -> list[int]:
    """Parse ``"0..9"`` (inclusive), ``"1,4,7"`` or a single integer."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            lo_i, hi_i = int(lo.lstrip("s")), int(hi.lstrip("s"))
            if hi_i < lo_i:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo_i, hi_i + 1))
        elif part:
            seeds.append(int(part.lstrip("s")))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hippobo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an optimisation experiment")
    run.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    run.add_argument("--problem", choices=sorted(PROBLEMS))
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--init", type=int, dest="init_points")
    run.add_argument("--budget", type=int, dest="total_budget")
    run.add_argument("--seeds", help="e.g. 0..9 or 0,3,5")
    run.add_argument("--out", dest="output")
    run.add_argument("--opt-budget", type=int, help="acquisition screening samples")
    run.add_argument("--opt-restarts", type=int, help="pattern-search restarts")
    run.add_argument("--gp-restarts", type=int)
    run.add_argument("--no-timing", action="store_true", help="write 0 for wall times")

    plot = sub.add_parser("plot", help="plot regret curves from a run directory")
    plot.add_argument("--in", dest="input", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("problem", "method", "batch_size", "init_points", "total_budget", "output", "gp_restarts"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.seeds is not None:
        try:
            data["seeds"] = parse_seeds(args.seeds)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.no_timing:
        data["timing"] = False
    opt = dict(data.get("optimiser") or {})
    if args.opt_budget is not None:
        opt["budget"] = args.opt_budget
    if args.opt_restarts is not None:
        opt["restarts"] = args.opt_restarts
    if opt:
        data["optimiser"] = opt
    for key in ("problem", "method"):
        if key not in data:
            raise ConfigError(f"--{key} is required")
    return ExperimentConfig.from_dict(data)


def _plot(input_dir: Path, out: Path) -> int:
    groups = {}
    for path in sorted(input_dir.glob("*.csv")):
        label = path.stem
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            b = 1 if meta["method"] == "sequential-ehvi" else meta["batch_size"]
            label = f"{meta['method']} (b={b})"
        records = read_csv(path)
        if records:
            groups[label] = records
    if not groups:
        print(f"no records found in {input_dir}", file=sys.stderr)
        return EXIT_CONFIG
    emit_regret_plot(groups, out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    if args.command == "plot":
        return _plot(args.input, args.out)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_experiment(cfg)
    except ExperimentError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
