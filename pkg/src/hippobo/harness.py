"""Experiment loop, CSV records and regret plots.

One run = one problem, one method, one batch size, several seeds. For every
seed the loop is: initial design, then repeatedly fit one GP per objective,
build a batch, evaluate it and record the hypervolume regret of everything
observed so far.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import qmc

from .acquisition import AcquisitionContext
from .batch import OptimiserSettings, WarpFunction, build_hippo_batch, build_kb_batch, maximise_ehvi
from .benchmarks import PROBLEMS, BenchmarkProblem, get_problem
from .pareto import extract_front, hv_regret
from .surrogate import fit

__all__ = [
    "METHODS",
    "CSV_HEADER",
    "ConfigError",
    "ExperimentError",
    "ExperimentConfig",
    "StepRecord",
    "run_seed",
    "run_experiment",
    "emit_csv",
    "read_csv",
    "regret_bands",
    "emit_regret_plot",
]

logger = logging.getLogger(__name__)

METHODS = ("hippo", "kb", "random", "sequential-ehvi")
CSV_HEADER = ("seed", "step", "evaluations", "hv_regret", "step_wall_time_s")


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    """Raised when every seed of a run failed."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    method: str
    batch_size: int = 4
    init_points: int | None = None
    total_budget: int = 50
    seeds: tuple[int, ...] = (0,)
    optimiser: OptimiserSettings = OptimiserSettings()
    output: str | None = None
    gp_restarts: int = 5
    timing: bool = True

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {list(METHODS)}")
        if isinstance(self.optimiser, dict):
            try:
                object.__setattr__(self, "optimiser", OptimiserSettings(**self.optimiser))
            except TypeError as exc:
                raise ConfigError(f"bad optimiser settings: {exc}") from None
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.init_points is None:
            object.__setattr__(self, "init_points", 2 * get_problem(self.problem).n + 2)
        if self.init_points < 2:
            raise ConfigError("init_points must be at least 2")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.total_budget <= self.init_points:
            raise ConfigError("total_budget must exceed init_points")
        if self.gp_restarts < 1:
            raise ConfigError("gp_restarts must be at least 1")

    @property
    def effective_batch_size(self) -> int:
        return 1 if self.method == "sequential-ehvi" else self.batch_size

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        return d


@dataclass(frozen=True)
class StepRecord:
    """One optimisation step of one seed.

    ``fit_wall_time_s`` (the model-fitting part of ``step_wall_time_s``) is
    kept in memory only; it is not written to CSV and is ignored by equality.
    """

    seed: int
    step: int
    evaluations: int
    hv_regret: float
    step_wall_time_s: float
    fit_wall_time_s: float = field(default=0.0, compare=False)

    @property
    def batch_wall_time_s(self) -> float:
        return self.step_wall_time_s - self.fit_wall_time_s


def _derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


_INIT, _FIT, _BATCH, _RANDOM = 0, 1, 2, 3


def _initial_design(problem: BenchmarkProblem, size: int, seed: int) -> np.ndarray:
    sampler = qmc.Halton(d=problem.n, scramble=True, seed=_derive_seed(seed, _INIT))
    return sampler.random(size)


def _regret(problem: BenchmarkProblem, Y: np.ndarray) -> float:
    ref = problem.ref_point
    return hv_regret(extract_front(Y).within(ref), problem.true_front, ref)


def _batch_sizes(cfg: ExperimentConfig) -> list[int]:
    b = cfg.effective_batch_size
    remaining = cfg.total_budget - cfg.init_points
    sizes = [b] * (remaining // b)
    if remaining % b:
        warnings.warn(
            f"budget leaves a trailing partial batch of {remaining % b}",
            RuntimeWarning,
            stacklevel=3,
        )
        sizes.append(remaining % b)
    return sizes


def run_seed(cfg: ExperimentConfig, seed: int) -> list[StepRecord]:
    """Run the optimisation loop for one seed."""
    problem = get_problem(cfg.problem)
    U = _initial_design(problem, cfg.init_points, seed)  # unit-box inputs
    Y = problem(problem.from_unit(U))
    records = [StepRecord(seed, 0, len(U), _regret(problem, Y), 0.0)]

    for step, b in enumerate(_batch_sizes(cfg), start=1):
        t0 = time.perf_counter()
        fit_time = 0.0
        batch_seed = _derive_seed(seed, step, _BATCH)
        if cfg.method == "random":
            rng = np.random.default_rng(_derive_seed(seed, step, _RANDOM))
            batch = rng.random((b, problem.n))
        else:
            models = [
                fit(U, Y[:, i], restarts=cfg.gp_restarts, seed=_derive_seed(seed, step, _FIT, i))
                for i in range(problem.k)
            ]
            fit_time = time.perf_counter() - t0
            ctx = AcquisitionContext.from_observations(models, Y, problem.ref_point)
            if cfg.method == "hippo":
                batch = build_hippo_batch(ctx, b, cfg.optimiser, WarpFunction(), seed=batch_seed)
            elif cfg.method == "kb":
                batch = build_kb_batch(ctx, b, cfg.optimiser, seed=batch_seed)
            else:
                batch = maximise_ehvi(ctx, cfg.optimiser, seed=batch_seed)[None, :]
        elapsed = time.perf_counter() - t0
        if not cfg.timing:
            elapsed = fit_time = 0.0

        U = np.vstack([U, batch])
        Y = np.vstack([Y, problem(problem.from_unit(batch))])
        records.append(StepRecord(seed, step, len(U), _regret(problem, Y), elapsed, fit_time))
        logger.info(
            "%s/%s seed %d step %d: %d evals, regret %.5g, %.3fs",
            cfg.problem, cfg.method, seed, step, len(U), records[-1].hv_regret, elapsed,
        )
    return records


def run_experiment(cfg: ExperimentConfig) -> list[StepRecord]:
    """Run every seed; a failing seed is logged and skipped.

    Raises:
        ExperimentError: if no seed completed.
    """
    records: list[StepRecord] = []
    failures = []
    for seed in cfg.seeds:
        try:
            records.extend(run_seed(cfg, seed))
        except Exception as exc:  # noqa: BLE001 - a failed seed must not stop the run
            logger.exception("seed %d failed", seed)
            failures.append((seed, exc))
    if failures and len(failures) == len(cfg.seeds):
        raise ExperimentError(
            "all seeds failed: " + "; ".join(f"seed {s}: {e}" for s, e in failures)
        )
    if cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{cfg.problem}_{cfg.method}_b{cfg.effective_batch_size}"
        emit_csv(records, out / f"{stem}.csv")
        (out / f"{stem}.json").write_text(
            json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return records


def emit_csv(records: Iterable[StepRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [r.seed, r.step, r.evaluations, repr(float(r.hv_regret)), repr(float(r.step_wall_time_s))]
            )


def read_csv(path: str | Path) -> list[StepRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [
            StepRecord(int(s), int(st), int(ev), float(hv), float(t))
            for s, st, ev, hv, t in reader
        ]


def regret_bands(
    records: Sequence[StepRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Mean and 25th/75th percentile regret across seeds.

    Returns ``(evaluations, mean, p25, p75)``. When seeds disagree on their
    evaluation grids every seed is interpolated onto the shortest grid.
    """
    by_seed: dict[int, list[StepRecord]] = {}
    for r in records:
        by_seed.setdefault(r.seed, []).append(r)
    if not by_seed:
        raise ValueError("no records")
    curves = []
    for rs in by_seed.values():
        rs = sorted(rs, key=lambda r: r.evaluations)
        curves.append(
            (np.array([r.evaluations for r in rs], dtype=float), np.array([r.hv_regret for r in rs]))
        )
    grid = min((c[0] for c in curves), key=len)
    if any(len(c[0]) != len(grid) or np.any(c[0] != grid) for c in curves):
        warnings.warn("seeds use different evaluation grids; resampling", RuntimeWarning, stacklevel=2)
    values = np.array([np.interp(grid, ev, reg) for ev, reg in curves])
    p25, p75 = np.percentile(values, [25, 75], axis=0)
    return grid, values.mean(axis=0), p25, p75


def emit_regret_plot(groups: dict[str, Sequence[StepRecord]], path: str | Path) -> None:
    """Write an SVG with a mean regret line and 25-75% band per method."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    positive = True
    for label, recs in groups.items():
        grid, mean, p25, p75 = regret_bands(recs)
        positive = positive and bool(np.all(p25 > 0))
        (line,) = ax.plot(grid, mean, label=label)
        ax.fill_between(grid, p25, p75, color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_xlabel("evaluations")
    ax.set_ylabel("hypervolume regret")
    if positive:  # a log axis cannot show a regret of exactly zero
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
