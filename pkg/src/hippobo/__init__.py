"""Batch multi-objective Bayesian optimisation with HIPPO penalisation."""

from .acquisition import AcquisitionContext, ConstraintModel, constrained_ehvi, ehvi
from .batch import (
    OptimiserSettings,
    PenaltyState,
    WarpFunction,
    build_hippo_batch,
    build_kb_batch,
    objective_distance,
    penalised_acquisition,
)
from .benchmarks import BenchmarkProblem, get_problem
from .harness import ExperimentConfig, StepRecord, run_experiment
from .pareto import Dataset, ParetoFront, dominates, extract_front, hv_regret, hypervolume
from .surrogate import GpModel, KernelHyperparams, fit

__version__ = "0.1.0"
