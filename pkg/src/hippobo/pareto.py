"""Dominance, Pareto-front extraction and hypervolume metrics.

All objectives follow the minimisation convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

__all__ = [
    "Dataset",
    "ParetoFront",
    "ReferencePointWarning",
    "dominates",
    "extract_front",
    "hypervolume",
    "hypervolume_mc",
    "hv_regret",
]

DEFAULT_MC_SAMPLES = 1_000_000


class ReferencePointWarning(UserWarning):
    """Emitted when front members do not dominate the reference point."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Design points paired with their observed objective vectors.

    Attributes:
        points: (N, n) design points.
        observations: (N, k) objective values.
    """

    points: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        obs = np.atleast_2d(np.asarray(self.observations, dtype=float))
        if points.shape[0] != obs.shape[0]:
            raise ValueError(
                f"{points.shape[0]} points but {obs.shape[0]} observations"
            )
        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "observations", _readonly(obs))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def k(self) -> int:
        return self.observations.shape[1]

    def append(self, points: ArrayLike, observations: ArrayLike) -> "Dataset":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        obs = np.atleast_2d(np.asarray(observations, dtype=float))
        return Dataset(
            np.vstack([self.points, points]), np.vstack([self.observations, obs])
        )


@dataclass(frozen=True)
class ParetoFront:
    """A set of mutually non-dominated, distinct objective vectors.

    Construct through :func:`extract_front` unless the members are already
    known to be non-dominated.
    """

    members: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        m = np.asarray(self.members, dtype=float)
        if m.ndim == 1:
            m = m.reshape(0, 2) if m.size == 0 else m[None, :]
        object.__setattr__(self, "members", _readonly(m))

    def __len__(self) -> int:
        return self.members.shape[0]

    def __iter__(self):
        return iter(self.members)

    @property
    def k(self) -> int:
        return self.members.shape[1]

    def within(self, ref_point: ArrayLike) -> "ParetoFront":
        """Members that strictly dominate ``ref_point`` in every objective."""
        ref = np.asarray(ref_point, dtype=float)
        keep = np.all(self.members < ref, axis=1)
        return ParetoFront(self.members[keep])


FrontLike = Union[ParetoFront, ArrayLike]


def dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def extract_front(observations: FrontLike) -> ParetoFront:
    """Return the non-dominated, de-duplicated subset of ``observations``.

    Members are returned sorted lexicographically (ascending first objective
    for bi-objective fronts).
    """
    if isinstance(observations, ParetoFront):
        y = observations.members
    else:
        y = np.asarray(observations, dtype=float)
    if y.size == 0:
        k = y.shape[1] if y.ndim == 2 else 2
        return ParetoFront(np.empty((0, k)))
    y = np.atleast_2d(y)
    if not np.all(np.isfinite(y)):
        raise ValueError("objective vectors must be finite")
    y = np.unique(y, axis=0)  # lexicographic sort, duplicates removed

    if y.shape[1] == 2:
        # After the lexicographic sort a point survives iff its second
        # objective is strictly below every earlier one.
        best_before = np.minimum.accumulate(np.concatenate([[np.inf], y[:-1, 1]]))
        return ParetoFront(y[y[:, 1] < best_before])

    keep = np.ones(len(y), dtype=bool)
    for i in range(len(y)):
        if not keep[i]:
            continue
        le = np.all(y <= y[i], axis=1)
        lt = np.any(y < y[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
            continue
        # y[i] knocks out everything it dominates
        dominated = np.all(y[i] <= y, axis=1) & np.any(y[i] < y, axis=1)
        keep[dominated] = False
    return ParetoFront(y[keep])


def _prepare(front: FrontLike, ref_point: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref_point, dtype=float).ravel()
    pf = extract_front(front)
    y = pf.members
    if len(y) and y.shape[1] != ref.shape[0]:
        raise ValueError(
            f"reference point has {ref.shape[0]} objectives, front has {y.shape[1]}"
        )
    inside = np.all(y < ref, axis=1)
    if not np.all(inside):
        warnings.warn(
            f"dropping {np.sum(~inside)} front member(s) that do not dominate "
            "the reference point",
            ReferencePointWarning,
            stacklevel=3,
        )
        y = y[inside]
    return y, ref


def _hv2(y: np.ndarray, ref: np.ndarray) -> float:
    # y: non-dominated, sorted by first objective ascending (so second descending)
    if len(y) == 0:
        return 0.0
    widths = np.diff(np.append(y[:, 0], ref[0]))
    heights = ref[1] - y[:, 1]
    return float(np.sum(widths * heights))


def _hv3(y: np.ndarray, ref: np.ndarray) -> float:
    # Slice along the third objective; each slab has a constant 2-D cross-section.
    if len(y) == 0:
        return 0.0
    order = np.argsort(y[:, 2], kind="stable")
    y = y[order]
    levels = np.append(y[:, 2], ref[2])
    total = 0.0
    for i in range(len(y)):
        height = levels[i + 1] - levels[i]
        if height <= 0:
            continue
        section = extract_front(y[: i + 1, :2]).members
        total += _hv2(section, ref[:2]) * height
    return float(total)


def hypervolume_mc(
    front: FrontLike,
    ref_point: ArrayLike,
    n_samples: int = DEFAULT_MC_SAMPLES,
    seed: int | None = 0,
) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate and its standard error.

    Samples uniformly in the box spanned by the front's ideal point and the
    reference point.
    """
    y, ref = _prepare(front, ref_point)
    if len(y) == 0:
        return 0.0, 0.0
    lo = y.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        z = lo + rng.random((m, y.shape[1])) * (ref - lo)
        covered = np.zeros(m, dtype=bool)
        for p in y:
            covered |= np.all(z >= p, axis=1)
        hits += int(covered.sum())
        done += m
    p_hat = hits / n_samples
    stderr = box * np.sqrt(p_hat * (1 - p_hat) / n_samples)
    return box * p_hat, float(stderr)


def hypervolume(
    front: FrontLike,
    ref_point: ArrayLike,
    n_samples: int = DEFAULT_MC_SAMPLES,
    seed: int | None = 0,
) -> float:
    """Hypervolume dominated by ``front`` and bounded by ``ref_point``.

    Exact for two and three objectives. For more objectives a Monte-Carlo
    estimate with ``n_samples`` points is returned; use :func:`hypervolume_mc`
    directly to obtain its standard error.

    Members that do not strictly dominate the reference point contribute
    nothing and are dropped with a :class:`ReferencePointWarning`.
    """
    y, ref = _prepare(front, ref_point)
    k = ref.shape[0]
    if len(y) == 0:
        return 0.0
    if k == 2:
        return _hv2(y, ref)
    if k == 3:
        return _hv3(y, ref)
    return hypervolume_mc(y, ref, n_samples=n_samples, seed=seed)[0]


def hv_regret(
    discovered: FrontLike, true_front: FrontLike, ref_point: ArrayLike
) -> float:
    """Hypervolume of ``true_front`` minus that of ``discovered``."""
    ref = np.asarray(ref_point, dtype=float)
    for f in (discovered, true_front):
        m = f.members if isinstance(f, ParetoFront) else np.asarray(f, dtype=float)
        if m.size and m.shape[-1] != ref.shape[0]:
            raise ValueError("front and reference point dimensions differ")
    return hypervolume(true_front, ref) - hypervolume(discovered, ref)
