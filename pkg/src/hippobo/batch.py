"""Greedy batch construction: HIPPO penalisation and the Kriging Believer.

HIPPO keeps the surrogate fixed for the whole batch. Every chosen point
multiplies the base acquisition by a warped distance between predicted
objectives, so candidates whose predictions resemble an already chosen
point are suppressed. The distance is a Mahalanobis-type distance that uses
the chosen point's posterior variance:

    d(x, x_j) = sqrt(sum_i (mu_i(x) - mu_i(x_j))**2 / var_i(x_j))

and the warped penalty is ``w(d)`` with ``w(0) = 0`` and ``w -> 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .acquisition import AcquisitionContext
from .optimiser import OptimisationError, SearchSpace, maximise, screen, unit_box
from .pareto import extract_front
from .surrogate import VARIANCE_FLOOR

__all__ = [
    "LOG_FLOOR",
    "OptimiserSettings",
    "PenaltyState",
    "WarpFunction",
    "BatchConstructionError",
    "objective_distance",
    "posterior_distance",
    "warp",
    "penalised_acquisition",
    "build_hippo_batch",
    "build_kb_batch",
    "maximise_ehvi",
]

logger = logging.getLogger(__name__)

LOG_FLOOR = -1e8


class BatchConstructionError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"batch point {step}: {cause}")
        self.step = step


@dataclass(frozen=True)
class OptimiserSettings:
    """Settings forwarded to :func:`hippobo.optimiser.maximise`.

    ``budget=None`` means ``2000 * n`` screening samples.
    """

    budget: int | None = None
    restarts: int = 5
    local_evals: int = 400


@dataclass(frozen=True)
class WarpFunction:
    """Map from a non-negative distance to a penalty factor in ``[0, 1)``.

    ``arctan`` is ``(2/pi) * arctan(d / scale)``; ``tanh`` is
    ``tanh(d / scale)``.
    """

    family: Literal["arctan", "tanh"] = "arctan"
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("arctan", "tanh"):
            raise ValueError(f"unknown warp family {self.family!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __call__(self, distance: ArrayLike) -> np.ndarray:
        return warp(self, distance)


def warp(w: WarpFunction, distance: ArrayLike) -> np.ndarray:
    d = np.asarray(distance, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("distances must be non-negative")
    d = d / w.scale
    if w.family == "arctan":
        return (2.0 / np.pi) * np.arctan(d)
    return np.tanh(d)


def posterior_distance(
    mean_x: ArrayLike, mean_y: ArrayLike, var_y: ArrayLike
) -> np.ndarray:
    """Distance from predictions ``mean_x`` (m, k) to one chosen point's posterior."""
    mean_x = np.atleast_2d(np.asarray(mean_x, dtype=float))
    diff = mean_x - np.asarray(mean_y, dtype=float)
    var = np.maximum(np.asarray(var_y, dtype=float), VARIANCE_FLOOR)
    return np.sqrt(np.sum(diff**2 / var, axis=1))


def objective_distance(models, x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """Objective-space distance from candidate(s) ``x`` to point ``y``.

    Not symmetric: only the variance at ``y`` enters the denominator.
    """
    ctx_models = models.models if isinstance(models, AcquisitionContext) else models
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    mean_x = np.column_stack([m.predict(x)[0] for m in ctx_models])
    post_y = [m.predict(y) for m in ctx_models]
    mean_y = np.array([p[0][0] for p in post_y])
    var_y = np.array([p[1][0] for p in post_y])
    d = posterior_distance(mean_x, mean_y, var_y)
    return np.where(np.all(x == y, axis=1), 0.0, d)


class PenaltyState:
    """Batch members chosen so far, with posteriors frozen at selection.

    Chosen points, means and variances are kept as stacked ``(t, n)`` and
    ``(t, k)`` arrays so a penalty evaluation is a single broadcast.
    """

    def __init__(self, batch_size: int):
        if batch_size < 1:
            raise ValueError("batch size must be at least 1")
        self.batch_size = batch_size
        self.points = np.empty((0, 0))
        self.means = np.empty((0, 0))
        self.variances = np.empty((0, 0))

    @property
    def t(self) -> int:
        return self.points.shape[0]

    def add(self, x: ArrayLike, mean: ArrayLike, var: ArrayLike) -> None:
        if self.t >= self.batch_size:
            raise ValueError("batch is already full")
        x = np.asarray(x, dtype=float).ravel()
        mean = np.asarray(mean, dtype=float).ravel()
        var = np.maximum(np.asarray(var, dtype=float).ravel(), VARIANCE_FLOOR)
        if self.t == 0:
            self.points, self.means, self.variances = x[None], mean[None], var[None]
        else:
            self.points = np.vstack([self.points, x])
            self.means = np.vstack([self.means, mean])
            self.variances = np.vstack([self.variances, var])

    def distances(self, x: np.ndarray, mean_x: np.ndarray) -> np.ndarray:
        """(m, t) distances from candidates to every chosen point."""
        diff = mean_x[:, None, :] - self.means[None, :, :]
        d = np.sqrt(np.sum(diff**2 / self.variances[None, :, :], axis=2))
        same = np.all(x[:, None, :] == self.points[None, :, :], axis=2)
        d[same] = 0.0
        return d

    def penalty(self, x: np.ndarray, mean_x: np.ndarray, w: WarpFunction) -> np.ndarray:
        """Product of warped distances to every chosen point, shape (m,)."""
        if self.t == 0:
            return np.ones(len(x))
        return np.prod(warp(w, self.distances(x, mean_x)), axis=1)

    def log_penalty(self, x: np.ndarray, mean_x: np.ndarray, w: WarpFunction) -> np.ndarray:
        if self.t == 0:
            return np.zeros(len(x))
        with np.errstate(divide="ignore"):
            out = np.sum(np.log(warp(w, self.distances(x, mean_x))), axis=1)
        return np.maximum(out, LOG_FLOOR)


def penalised_acquisition(
    base: AcquisitionContext,
    state: PenaltyState,
    w: WarpFunction,
    x: ArrayLike,
    log: bool = False,
) -> np.ndarray:
    """Base acquisition at ``x`` times the penalty of every chosen point.

    With ``log=True`` the logarithm is returned, floored at ``LOG_FLOOR``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mean, var = base.predict(x)
    alpha = base.from_posterior(x, mean, var)
    if log:
        with np.errstate(divide="ignore"):
            la = np.log(alpha)
        return np.maximum(la + state.log_penalty(x, mean, w), LOG_FLOOR)
    if state.t == 0:
        return alpha
    return alpha * state.penalty(x, mean, w)


def maximise_ehvi(
    ctx: AcquisitionContext,
    settings: OptimiserSettings = OptimiserSettings(),
    seed: int | None = 0,
    space: SearchSpace | None = None,
) -> np.ndarray:
    """Unpenalised acquisition argmax (one sequential step)."""
    space = space or unit_box(ctx.models[0].n)
    x, _ = maximise(
        ctx,
        space,
        budget=settings.budget,
        restarts=settings.restarts,
        seed=seed,
        local_evals=settings.local_evals,
    )
    return x


def _screening_set(ctx: AcquisitionContext, settings: OptimiserSettings, seed, space):
    budget = settings.budget if settings.budget is not None else 2000 * len(space)
    return screen(space, budget, seed)


def _maximise_step(f, space, settings, screening, t):
    try:
        x, _ = maximise(
            f,
            space,
            restarts=settings.restarts,
            local_evals=settings.local_evals,
            screening=screening,
        )
    except (OptimisationError, ValueError, np.linalg.LinAlgError) as exc:
        raise BatchConstructionError(t, exc) from exc
    return x


def build_hippo_batch(
    ctx: AcquisitionContext,
    b: int,
    settings: OptimiserSettings = OptimiserSettings(),
    w: WarpFunction = WarpFunction(),
    seed: int | None = 0,
    space: SearchSpace | None = None,
    log: bool = False,
) -> np.ndarray:
    """Select ``b`` points greedily with the penalised acquisition.

    The models are never refit within the batch; the only update between
    selections is the extra penalty factor. Because of that the screening
    design (drawn once from ``seed``) is predicted once, and each later
    selection only recomputes penalties on it before local refinement.

    Returns:
        (b, n) array of selected points.
    """
    space = space or unit_box(ctx.models[0].n)
    state = PenaltyState(batch_size=b)
    X = _screening_set(ctx, settings, seed, space)
    mean_X, var_X = ctx.predict(X)
    alpha_X = ctx.from_posterior(X, mean_X, var_X)
    if log:
        with np.errstate(divide="ignore"):
            log_alpha_X = np.log(alpha_X)

    for t in range(b):
        if log:
            vals = np.maximum(log_alpha_X + state.log_penalty(X, mean_X, w), LOG_FLOOR)
        elif t == 0:
            vals = alpha_X
        else:
            vals = alpha_X * state.penalty(X, mean_X, w)
        if t == 0 and not log:
            f = ctx
        else:
            f = lambda x: penalised_acquisition(ctx, state, w, x, log=log)  # noqa: E731
        x = _maximise_step(f, space, settings, (X, vals), t)
        mean, var = ctx.predict(x)
        state.add(x, mean[0], var[0])
        logger.debug("hippo point %d/%d: %s", t + 1, b, x)
    return state.points.copy()


def build_kb_batch(
    ctx: AcquisitionContext,
    b: int,
    settings: OptimiserSettings = OptimiserSettings(),
    seed: int | None = 0,
    space: SearchSpace | None = None,
) -> np.ndarray:
    """Kriging Believer: condition on the posterior mean after each selection.

    Every objective model receives the fantasy observation, and the front is
    updated with the fantasised objective vector. The screening design is
    shared across the batch but must be re-predicted after every update.
    """
    space = space or unit_box(ctx.models[0].n)
    X = _screening_set(ctx, settings, seed, space)
    chosen = []
    for t in range(b):
        x = _maximise_step(ctx, space, settings, (X, ctx(X)), t)
        chosen.append(x)
        if t == b - 1:
            break
        mean, _ = ctx.predict(x)
        models = [m.condition_on_fake(x) for m in ctx.models]
        members = ctx.current_front.members.reshape(-1, ctx.k)
        front = extract_front(np.vstack([members, mean]))
        ctx = AcquisitionContext(models, front, ctx.ref_point, ctx.constraints, ctx.mc_seed)
        logger.debug("kb point %d/%d: %s", t + 1, b, x)
    return np.array(chosen)
