"""Derivative-free box-constrained maximisation for acquisition functions.

A scrambled Halton design screens the space, then compass (pattern) search
refines the best few candidates. Discrete dimensions are moved one neighbour
at a time in their sorted value set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.stats import qmc

__all__ = [
    "Continuous",
    "Discrete",
    "SearchSpace",
    "OptimisationError",
    "maximise",
    "refine",
    "screen",
    "unit_box",
]


class OptimisationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Continuous:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Discrete:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(sorted(set(float(v) for v in self.values)))
        if not vals:
            raise ValueError("discrete dimension needs at least one value")
        object.__setattr__(self, "values", vals)


Dimension = Union[Continuous, Discrete]


class SearchSpace:
    """Product of continuous intervals and finite value sets."""

    def __init__(self, dims: Sequence[Dimension]):
        if not dims:
            raise ValueError("search space needs at least one dimension")
        self.dims = tuple(dims)
        self.continuous = np.array([isinstance(d, Continuous) for d in self.dims])
        self.lower = np.array([d.lo if isinstance(d, Continuous) else d.values[0] for d in self.dims])
        self.upper = np.array([d.hi if isinstance(d, Continuous) else d.values[-1] for d in self.dims])

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "SearchSpace":
        return cls([Continuous(float(lo), float(hi)) for lo, hi in zip(lower, upper)])

    def __len__(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"SearchSpace({list(self.dims)!r})"

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        """Map points of the unit cube onto the space."""
        u = np.atleast_2d(u)
        x = np.empty_like(u, dtype=float)
        for j, d in enumerate(self.dims):
            if isinstance(d, Continuous):
                x[:, j] = d.lo + u[:, j] * (d.hi - d.lo)
            else:
                idx = np.minimum((u[:, j] * len(d.values)).astype(int), len(d.values) - 1)
                x[:, j] = np.asarray(d.values)[idx]
        return x

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        ok = np.ones(len(x), dtype=bool)
        for j, d in enumerate(self.dims):
            if isinstance(d, Continuous):
                ok &= (x[:, j] >= d.lo) & (x[:, j] <= d.hi)
            else:
                ok &= np.isin(x[:, j], d.values)
        return ok


def unit_box(n: int) -> SearchSpace:
    return SearchSpace.box(np.zeros(n), np.ones(n))


def _neighbours(space: SearchSpace, x: np.ndarray, step: np.ndarray) -> np.ndarray:
    cands = []
    for j, d in enumerate(space.dims):
        if isinstance(d, Continuous):
            for sign in (-1.0, 1.0):
                y = x.copy()
                y[j] = np.clip(x[j] + sign * step[j], d.lo, d.hi)
                if y[j] != x[j]:
                    cands.append(y)
        else:
            i = d.values.index(x[j])
            for nb in (i - 1, i + 1):
                if 0 <= nb < len(d.values):
                    y = x.copy()
                    y[j] = d.values[nb]
                    cands.append(y)
    return np.array(cands).reshape(-1, len(space))


def screen(space: SearchSpace, budget: int, seed: int | None) -> np.ndarray:
    """Scrambled Halton screening design of ``budget`` points in ``space``."""
    sampler = qmc.Halton(d=len(space), scramble=True, seed=seed)
    return space.from_unit(sampler.random(max(int(budget), 1)))


def refine(
    f: Callable[[np.ndarray], np.ndarray],
    space: SearchSpace,
    starts: np.ndarray,
    start_values: np.ndarray,
    max_evals: int = 400,
    tol: float = 1e-6,
) -> tuple[np.ndarray, float]:
    """Compass search from several starts at once.

    All active starts are moved in lock-step so each iteration costs a single
    call to ``f``. A start improves by moving to its best neighbour and
    doubling its step, otherwise it halves its continuous steps; it stops
    when those fall below ``tol`` of the width or after ``max_evals``
    evaluations. Discrete dimensions step to adjacent values.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    width = space.upper - space.lower
    cont = space.continuous
    R = len(starts)
    xs = starts.copy()
    fs = np.asarray(start_values, dtype=float).copy()
    steps = np.where(cont, 0.05 * width, 0.0) * np.ones((R, 1))
    min_step = tol * width
    evals = np.zeros(R, dtype=int)
    active = np.ones(R, dtype=bool)
    # a start with only discrete dims stops after one non-improving sweep
    stalled = np.zeros(R, dtype=bool)
    while np.any(active):
        blocks, owners = [], []
        for r in np.flatnonzero(active):
            nb = _neighbours(space, xs[r], steps[r])
            if len(nb) == 0:
                active[r] = False
                continue
            blocks.append(nb)
            owners.append(np.full(len(nb), r))
        if not blocks:
            break
        cands = np.vstack(blocks)
        owner = np.concatenate(owners)
        vals = np.asarray(f(cands), dtype=float)
        vals = np.where(np.isfinite(vals), vals, -np.inf)
        for r in np.unique(owner):
            mask = owner == r
            evals[r] += int(mask.sum())
            j = int(np.argmax(vals[mask]))
            if vals[mask][j] > fs[r]:
                xs[r], fs[r] = cands[mask][j], vals[mask][j]
                steps[r] = np.minimum(np.where(cont, steps[r] * 2.0, 0.0), 0.25 * width)
                stalled[r] = False
            elif np.any(cont) and not np.all(steps[r][cont] <= min_step[cont]):
                steps[r] = np.where(cont, steps[r] * 0.5, 0.0)
            elif not np.any(cont) and not stalled[r]:
                stalled[r] = True
            else:
                active[r] = False
            if evals[r] >= max_evals:
                active[r] = False
    best = int(np.argmax(fs))
    return xs[best], float(fs[best])


def maximise(
    f: Callable[[np.ndarray], np.ndarray],
    space: SearchSpace,
    budget: int | None = None,
    restarts: int = 5,
    seed: int | None = 0,
    local_evals: int = 400,
    tol: float = 1e-6,
    screening: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, float]:
    """Maximise a vectorised function over ``space``.

    Args:
        f: maps an (m, n) array of points to (m,) values.
        space: the search domain.
        budget: number of quasi-random screening samples, default ``2000 * n``.
        restarts: number of best screening points refined by pattern search.
        seed: seed of the scrambled screening design.
        local_evals: evaluation cap per refinement.
        tol: final step size, relative to each dimension's width.
        screening: precomputed ``(points, f(points))``; replaces the
            screening design when given.

    Returns:
        The best point found and its value.
    """
    if screening is None:
        X = screen(space, 2000 * len(space) if budget is None else budget, seed)
        vals = np.asarray(f(X), dtype=float)
    else:
        X, vals = screening
        vals = np.asarray(vals, dtype=float)
    if vals.shape != (len(X),):
        raise ValueError(f"f returned shape {vals.shape}, expected ({len(X)},)")
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise OptimisationError("objective is non-finite at every screening point")
    vals = np.where(finite, vals, -np.inf)

    order = np.argsort(-vals, kind="stable")
    best_x, best_f = X[order[0]].copy(), float(vals[order[0]])
    starts: list[int] = []
    for i in order:
        if len(starts) >= restarts:
            break
        if not any(np.array_equal(X[i], X[j]) for j in starts):
            starts.append(int(i))
    if starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            x, fx = refine(f, space, X[starts], vals[starts], local_evals, tol)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f
