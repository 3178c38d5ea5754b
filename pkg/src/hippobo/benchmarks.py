"""Bi-objective benchmark problems with reference Pareto fronts.

Evaluators are vectorised: they accept a single point or an (m, n) array
and return an (m, k) array. Every objective is minimised.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from .optimiser import SearchSpace
from .pareto import ParetoFront, extract_front

__all__ = [
    "BenchmarkProblem",
    "vlmop2",
    "dtlz2",
    "hartmann6",
    "ackley",
    "hartmann_ackley",
    "get_problem",
    "PROBLEMS",
    "read_front_csv",
    "write_front_csv",
    "reference_point",
]

FRONT_SAMPLES = 2000


def _as_2d(x: ArrayLike) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def vlmop2(x: ArrayLike) -> np.ndarray:
    x = _as_2d(x)
    c = 1.0 / np.sqrt(x.shape[1])
    f1 = 1.0 - np.exp(-np.sum((x - c) ** 2, axis=1))
    f2 = 1.0 - np.exp(-np.sum((x + c) ** 2, axis=1))
    return np.column_stack([f1, f2])


def dtlz2(x: ArrayLike, k: int = 2) -> np.ndarray:
    x = _as_2d(x)
    g = np.sum((x[:, k - 1 :] - 0.5) ** 2, axis=1)
    theta = x[:, : k - 1] * np.pi / 2
    f = np.empty((x.shape[0], k))
    for i in range(k):
        fi = 1.0 + g
        fi = fi * np.prod(np.cos(theta[:, : k - 1 - i]), axis=1)
        if i > 0:
            fi = fi * np.sin(theta[:, k - 1 - i])
        f[:, i] = fi
    return f


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_H6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)
HARTMANN6_MINIMISER = np.array([0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573])
HARTMANN6_MINIMUM = -3.32237


def hartmann6(x: ArrayLike) -> np.ndarray:
    """Six-dimensional Hartmann function on the unit cube (minimum -3.32237)."""
    x = _as_2d(x)
    inner = np.sum(_H6_A[None] * (x[:, None, :] - _H6_P[None]) ** 2, axis=2)
    return -np.sum(_H6_ALPHA * np.exp(-inner), axis=1)


def ackley(z: ArrayLike) -> np.ndarray:
    """Ackley function (a=20, b=0.2, c=2*pi), global minimum 0 at the origin."""
    z = _as_2d(z)
    term1 = 20.0 * -np.expm1(-0.2 * np.sqrt(np.mean(z**2, axis=1)))
    term2 = np.e - np.exp(np.mean(np.cos(2 * np.pi * z), axis=1))
    return term1 + term2


ACKLEY_DOMAIN = (-2.0, 2.0)


def hartmann_ackley(x: ArrayLike) -> np.ndarray:
    """Hartmann-6 and Ackley on a shared unit cube.

    Ackley's inputs are affinely mapped from [0, 1] to [-2, 2].
    """
    x = _as_2d(x)
    lo, hi = ACKLEY_DOMAIN
    return np.column_stack([hartmann6(x), ackley(lo + (hi - lo) * x)])


def write_front_csv(front: ParetoFront | np.ndarray, path: str | Path) -> None:
    members = front.members if isinstance(front, ParetoFront) else np.asarray(front)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i + 1}" for i in range(members.shape[1])])
        for row in members:
            writer.writerow([repr(float(v)) for v in row])


def read_front_csv(path) -> ParetoFront:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]).reshape(-1, len(header))
    return ParetoFront(data)


def reference_point(front: ParetoFront, margin: float = 0.1) -> np.ndarray:
    """Worst front value per objective, pushed out by ``margin`` of the range."""
    m = front.members
    worst, best = m.max(axis=0), m.min(axis=0)
    return worst + margin * (worst - best)


def _vlmop2_front(n: int = FRONT_SAMPLES) -> ParetoFront:
    c = 1.0 / np.sqrt(2.0)
    t = np.linspace(-c, c, n)
    return extract_front(vlmop2(np.column_stack([t, t])))


def _dtlz2_front(n: int = FRONT_SAMPLES) -> ParetoFront:
    theta = np.linspace(0.0, np.pi / 2, n)
    return extract_front(np.column_stack([np.cos(theta), np.sin(theta)]))


def _hartmann_ackley_front() -> ParetoFront:
    ref = resources.files("hippobo").joinpath("data/hartmann_ackley_front.csv")
    with resources.as_file(ref) as path:
        return read_front_csv(path)


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    n: int
    k: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    evaluate: Callable[[ArrayLike], np.ndarray]
    front_factory: Callable[[], ParetoFront]

    @property
    def bounds(self) -> SearchSpace:
        return SearchSpace.box(self.lower, self.upper)

    @cached_property
    def true_front(self) -> ParetoFront:
        return self.front_factory()

    @cached_property
    def ref_point(self) -> np.ndarray:
        return reference_point(self.true_front)

    def __call__(self, x: ArrayLike) -> np.ndarray:
        return self.evaluate(x)

    def to_unit(self, x: ArrayLike) -> np.ndarray:
        lo, hi = np.array(self.lower), np.array(self.upper)
        return (_as_2d(x) - lo) / (hi - lo)

    def from_unit(self, u: ArrayLike) -> np.ndarray:
        lo, hi = np.array(self.lower), np.array(self.upper)
        return lo + _as_2d(u) * (hi - lo)


PROBLEMS: dict[str, BenchmarkProblem] = {
    "vlmop2": BenchmarkProblem(
        "vlmop2", 2, 2, (-2.0, -2.0), (2.0, 2.0), vlmop2, _vlmop2_front
    ),
    "dtlz2": BenchmarkProblem(
        "dtlz2", 6, 2, (0.0,) * 6, (1.0,) * 6, dtlz2, _dtlz2_front
    ),
    "hartmann_ackley": BenchmarkProblem(
        "hartmann_ackley",
        6,
        2,
        (0.0,) * 6,
        (1.0,) * 6,
        hartmann_ackley,
        _hartmann_ackley_front,
    ),
}


def get_problem(name: str) -> BenchmarkProblem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
