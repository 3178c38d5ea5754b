"""Expected hypervolume improvement and probability of feasibility.

The bi-objective EHVI is exact: the non-dominated region below the
reference point is cut into vertical strips, each an axis-aligned box, and
the expected improvement integrates the product of the two Gaussian CDFs over
every strip in closed form. For three or more objectives a quasi-Monte-Carlo
average over fixed posterior samples is used instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .pareto import ParetoFront, extract_front
from .surrogate import VARIANCE_FLOOR, GpModel, predict_all

__all__ = [
    "AcquisitionContext",
    "ConstraintModel",
    "ehvi",
    "ehvi_gaussian",
    "ehvi_mc",
    "probability_of_feasibility",
    "constrained_ehvi",
]

MC_SAMPLES = 512

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _partial_expectation(u: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Integral of the Gaussian CDF from -inf to ``u``: E[max(u - Y, 0)]."""
    with np.errstate(invalid="ignore"):
        t = (u - mu) / sigma
        out = sigma * (t * ndtr(t) + _INV_SQRT_2PI * np.exp(-0.5 * t**2))
    # u = -inf contributes nothing; u = +inf never occurs (bounded by ref)
    return np.where(np.isneginf(u), 0.0, np.maximum(out, 0.0))


def _ehvi2(mean: np.ndarray, std: np.ndarray, front: np.ndarray, ref: np.ndarray) -> np.ndarray:
    # front sorted by f1 ascending, so f2 descending.
    # Strip i covers f1 in [a_i, a_{i+1}) and f2 below b_i, with a_0 = -inf,
    # a_{m+1} = ref_1 and b_0 = ref_2.
    a = np.concatenate([[-np.inf], front[:, 0], [ref[0]]])
    b = np.concatenate([[ref[1]], front[:, 1]])
    psi1 = _partial_expectation(a[None, :], mean[:, :1], std[:, :1])  # (m, S+2)
    psi2 = _partial_expectation(b[None, :], mean[:, 1:2], std[:, 1:2])  # (m, S+1)
    return np.sum((psi1[:, 1:] - psi1[:, :-1]) * psi2, axis=1)


def _nondominated_cells(front: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint boxes covering the region below ``ref`` not dominated by ``front``.

    Grid cells are formed from the front's coordinates on every axis; a cell
    is kept when no front member weakly dominates its lower corner.
    """
    k = ref.shape[0]
    axes = [np.concatenate([[-np.inf], np.unique(front[:, d]), [ref[d]]]) for d in range(k)]
    lows, highs = [], []
    for idx in itertools.product(*(range(len(ax) - 1) for ax in axes)):
        lo = np.array([axes[d][i] for d, i in enumerate(idx)])
        hi = np.array([axes[d][i + 1] for d, i in enumerate(idx)])
        if np.any(hi <= lo):
            continue
        if len(front) and np.any(np.all(front <= lo, axis=1)):
            continue
        lows.append(lo)
        highs.append(hi)
    return np.array(lows).reshape(-1, k), np.array(highs).reshape(-1, k)


def ehvi_mc(
    mean: np.ndarray,
    var: np.ndarray,
    front: ParetoFront | ArrayLike,
    ref_point: ArrayLike,
    n_samples: int = MC_SAMPLES,
    seed: int | None = 0,
) -> np.ndarray:
    """Quasi-Monte-Carlo EHVI for any number of objectives.

    The same scrambled Sobol normal draws are used for every candidate, so the
    surface is deterministic for a given ``seed``.
    """
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    std = np.sqrt(np.maximum(np.atleast_2d(np.asarray(var, dtype=float)), VARIANCE_FLOOR))
    ref = np.asarray(ref_point, dtype=float)
    y = _clean_front(front, ref)
    k = ref.shape[0]
    sobol = qmc.Sobol(d=k, scramble=True, seed=seed)
    u = sobol.random(n_samples)
    eps = np.clip(ndtri(np.clip(u, 1e-12, 1 - 1e-12)), -10, 10)  # (S, k)
    lo, hi = _nondominated_cells(y, ref)
    out = np.empty(mean.shape[0])
    chunk = max(1, 200_000 // max(1, n_samples * max(1, len(lo))))
    for start in range(0, mean.shape[0], chunk):
        sl = slice(start, start + chunk)
        samples = mean[sl, None, :] + std[sl, None, :] * eps[None, :, :]  # (c, S, k)
        # improvement of a sample = volume of cells intersected with [sample, ref]
        lower = np.maximum(lo[None, None, :, :], samples[:, :, None, :])
        edges = np.clip(hi[None, None, :, :] - lower, 0.0, None)
        out[sl] = np.prod(edges, axis=3).sum(axis=2).mean(axis=1)
    return out


def _clean_front(front, ref: np.ndarray) -> np.ndarray:
    pf = extract_front(front)
    y = pf.members
    if y.size and y.shape[1] != ref.shape[0]:
        raise ValueError("front and reference point dimensions differ")
    return y[np.all(y < ref, axis=1)] if y.size else y.reshape(0, ref.shape[0])


def ehvi_gaussian(
    mean: ArrayLike,
    var: ArrayLike,
    front: ParetoFront | ArrayLike,
    ref_point: ArrayLike,
    mc_seed: int | None = 0,
) -> np.ndarray:
    """EHVI for independent Gaussian objectives with the given moments.

    Args:
        mean: (m, k) posterior means.
        var: (m, k) posterior variances.
        front: current front (minimisation).
        ref_point: (k,) reference point.
        mc_seed: sample seed used when ``k > 2``.

    Returns:
        (m,) non-negative expected improvements.
    """
    ref = np.asarray(ref_point, dtype=float)
    return _ehvi_clean(mean, var, _clean_front(front, ref), ref, mc_seed)


def _ehvi_clean(mean, var, front: np.ndarray, ref: np.ndarray, mc_seed) -> np.ndarray:
    # front: non-dominated, strictly inside ref, sorted by first objective
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    var = np.atleast_2d(np.asarray(var, dtype=float))
    if mean.shape[1] != ref.shape[0]:
        raise ValueError("posterior and reference point dimensions differ")
    if ref.shape[0] != 2:
        return ehvi_mc(mean, var, front, ref, seed=mc_seed)
    std = np.sqrt(np.maximum(var, VARIANCE_FLOOR))
    return _ehvi2(mean, std, front, ref)


@dataclass(frozen=True)
class ConstraintModel:
    """A modelled constraint ``g(x) <= threshold`` (or ``>=``)."""

    model: GpModel
    threshold: float
    direction: Literal["<=", ">="] = "<="

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.direction not in ("<=", ">="):
            raise ValueError(f"unknown direction {self.direction!r}")


def _pof(mean: np.ndarray, var: np.ndarray, c: ConstraintModel) -> np.ndarray:
    z = (c.threshold - mean) / np.sqrt(np.maximum(var, VARIANCE_FLOOR))
    return ndtr(z) if c.direction == "<=" else ndtr(-z)


def probability_of_feasibility(c: ConstraintModel, x: ArrayLike) -> np.ndarray:
    mean, var = c.model.predict(x)
    return _pof(mean, var, c)


@dataclass(frozen=True)
class AcquisitionContext:
    """Everything EHVI needs: one model per objective, the front, a reference.

    Calling the context evaluates EHVI (times the probability of
    feasibility of any constraints) at the rows of ``x``.
    """

    models: Sequence[GpModel]
    current_front: ParetoFront
    ref_point: np.ndarray
    constraints: Sequence[ConstraintModel] = field(default_factory=tuple)
    mc_seed: int | None = 0

    def __post_init__(self):
        ref = np.asarray(self.ref_point, dtype=float)
        object.__setattr__(self, "ref_point", ref)
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.models) != ref.shape[0]:
            raise ValueError("need one model per objective")
        front = self.current_front
        if not isinstance(front, ParetoFront):
            front = extract_front(front)
        if len(front) and front.k != ref.shape[0]:
            raise ValueError("front and reference point dimensions differ")
        object.__setattr__(self, "current_front", front)
        object.__setattr__(self, "_front", _clean_front(front, ref))

    @classmethod
    def from_observations(
        cls,
        models: Sequence[GpModel],
        observations: ArrayLike,
        ref_point: ArrayLike,
        **kwargs,
    ) -> "AcquisitionContext":
        return cls(models, extract_front(observations), np.asarray(ref_point), **kwargs)

    @property
    def k(self) -> int:
        return self.ref_point.shape[0]

    def predict(self, x: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        return predict_all(self.models, x)

    def from_posterior(self, x: ArrayLike, mean: np.ndarray, var: np.ndarray) -> np.ndarray:
        """Acquisition value given precomputed objective posteriors at ``x``."""
        value = _ehvi_clean(mean, var, self._front, self.ref_point, self.mc_seed)
        for c in self.constraints:
            value = value * probability_of_feasibility(c, x)
        return value

    def __call__(self, x: ArrayLike) -> np.ndarray:
        mean, var = self.predict(x)
        return self.from_posterior(x, mean, var)


def ehvi(ctx: AcquisitionContext, x: ArrayLike) -> np.ndarray:
    """Unconstrained EHVI of ``ctx`` at the rows of ``x``."""
    mean, var = ctx.predict(x)
    return _ehvi_clean(mean, var, ctx._front, ctx.ref_point, ctx.mc_seed)


def constrained_ehvi(
    ctx: AcquisitionContext, constraints: Sequence[ConstraintModel], x: ArrayLike
) -> np.ndarray:
    """EHVI multiplied by the feasibility probability of every constraint."""
    value = ehvi(ctx, x)
    for c in constraints:
        value = value * probability_of_feasibility(c, x)
    return value
