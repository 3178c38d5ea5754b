"""Independent Gaussian-process surrogates with a Matérn 5/2 ARD kernel.

Each objective gets its own :class:`GpModel`. Inputs are expected on the
unit box. :func:`fit` standardises the targets internally and folds the
scaling back into the hyperparameters, so a fitted model predicts directly in
objective units.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

__all__ = [
    "KernelHyperparams",
    "GpModel",
    "NotPositiveDefiniteError",
    "matern52",
    "log_marginal_likelihood",
    "fit",
    "predict_all",
]

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
NOISE_FLOOR = 1e-6
LENGTHSCALE_BOUNDS = (1e-3, 1e2)
VARIANCE_BOUNDS = (1e-6, 1e3)
MEAN_BOUNDS = (-10.0, 10.0)
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
_SQRT5 = np.sqrt(5.0)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class KernelHyperparams:
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float = NOISE_FLOOR
    constant_mean: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        ls.setflags(write=False)
        object.__setattr__(self, "lengthscales", ls)
        if np.any(ls <= 0):
            raise ValueError("lengthscales must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")

    def to_vector(self) -> np.ndarray:
        """``[log lengthscales..., log signal var, log noise var, mean]``."""
        return np.concatenate(
            [
                np.log(self.lengthscales),
                [np.log(self.signal_variance), np.log(self.noise_variance)],
                [self.constant_mean],
            ]
        )

    @classmethod
    def from_vector(cls, theta: ArrayLike) -> "KernelHyperparams":
        theta = np.asarray(theta, dtype=float)
        return cls(
            lengthscales=np.exp(theta[:-3]),
            signal_variance=float(np.exp(theta[-3])),
            noise_variance=float(np.exp(theta[-2])),
            constant_mean=float(theta[-1]),
        )


def _scaled_sqdist(a: np.ndarray, b: np.ndarray, ls: np.ndarray) -> np.ndarray:
    a = a / ls
    b = b / ls
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    return np.maximum(d2, 0.0)


def matern52(a: ArrayLike, b: ArrayLike, hp: KernelHyperparams) -> np.ndarray:
    """Matérn 5/2 cross-covariance between the rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    r = np.sqrt(_scaled_sqdist(a, b, hp.lengthscales))
    s = _SQRT5 * r
    return hp.signal_variance * (1.0 + s + s**2 / 3.0) * np.exp(-s)


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    scale = max(float(np.mean(np.diag(K))), 1e-300)
    eye = np.eye(K.shape[0])
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(K + jitter * scale * eye), jitter * scale
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        f"kernel matrix not positive definite after jitter {_JITTERS[-1]:g}"
    )


class GpModel:
    """Exact GP regression for one objective.

    The Cholesky factor of ``K + noise*I`` and the weight vector are computed
    once at construction; the model is not mutated afterwards.
    """

    def __init__(
        self,
        X: ArrayLike,
        y: ArrayLike,
        hyperparams: KernelHyperparams,
        _chol: np.ndarray | None = None,
    ):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y lengths differ")
        if hyperparams.lengthscales.shape[0] != X.shape[1]:
            raise ValueError("one lengthscale per input dimension required")
        self.X = X
        self.y = y
        self.hyperparams = hyperparams
        if _chol is None:
            K = matern52(X, X, hyperparams)
            K[np.diag_indices_from(K)] += hyperparams.noise_variance
            _chol, self.jitter = _cholesky(K)
        else:
            self.jitter = 0.0
        self.L = _chol
        self.alpha = cho_solve((self.L, True), y - hyperparams.constant_mean)
        for a in (self.X, self.y, self.L, self.alpha):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __repr__(self) -> str:
        hp = self.hyperparams
        return (
            f"GpModel(N={len(self)}, n={self.n}, "
            f"lengthscales={np.array2string(hp.lengthscales, precision=3)}, "
            f"signal_variance={hp.signal_variance:.3g}, "
            f"noise_variance={hp.noise_variance:.3g}, "
            f"constant_mean={hp.constant_mean:.3g})"
        )

    def predict(self, x: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and latent variance at the rows of ``x``.

        A single point may be passed as a 1-D array; the outputs are always
        1-D with one entry per query point.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n:
            raise ValueError(f"expected {self.n} input dimensions, got {x.shape[1]}")
        Ks = matern52(x, self.X, self.hyperparams)
        mean = self.hyperparams.constant_mean + Ks @ self.alpha
        v = solve_triangular(self.L, Ks.T, lower=True, check_finite=False)
        var = self.hyperparams.signal_variance - np.sum(v**2, axis=0)
        return mean, np.maximum(var, VARIANCE_FLOOR)

    def condition_on_fake(self, x: ArrayLike) -> "GpModel":
        """New model with ``(x, posterior mean at x)`` appended to the data.

        Hyperparameters are kept. The Cholesky factor is extended by one
        block row rather than recomputed.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mean, _ = self.predict(x)
        hp = self.hyperparams
        k_cross = matern52(self.X, x, hp)  # (N, q)
        k_self = matern52(x, x, hp) + (hp.noise_variance + self.jitter) * np.eye(len(x))
        l21 = solve_triangular(self.L, k_cross, lower=True, check_finite=False).T
        schur = k_self - l21 @ l21.T
        try:
            l22 = np.linalg.cholesky(schur)
        except np.linalg.LinAlgError:
            # Fall back to a full refactorisation with jitter escalation.
            return GpModel(np.vstack([self.X, x]), np.append(self.y, mean), hp)
        N, q = len(self), len(x)
        L = np.zeros((N + q, N + q))
        L[:N, :N] = self.L
        L[N:, :N] = l21
        L[N:, N:] = l22
        model = GpModel(np.vstack([self.X, x]), np.append(self.y, mean), hp, _chol=L)
        model.jitter = self.jitter
        return model


def predict_all(models: list[GpModel], x: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-objective posteriors into ``(m, k)`` mean and variance arrays."""
    out = [m.predict(x) for m in models]
    return np.column_stack([o[0] for o in out]), np.column_stack([o[1] for o in out])


def log_marginal_likelihood(model: GpModel) -> tuple[float, np.ndarray]:
    """Log evidence and its gradient w.r.t. ``hyperparams.to_vector()``.

    The gradient is ordered as log lengthscales, log signal variance, log
    noise variance, constant mean.
    """
    X, hp, L, alpha = model.X, model.hyperparams, model.L, model.alpha
    N = len(model)
    resid = model.y - hp.constant_mean
    lml = -0.5 * resid @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * N * np.log(2 * np.pi)

    Kinv = cho_solve((L, True), np.eye(N))
    W = np.outer(alpha, alpha) - Kinv  # dLML/dtheta = 0.5 tr(W dK)

    diff2 = (X[:, None, :] - X[None, :, :]) ** 2 / hp.lengthscales**2  # (N, N, n)
    s = _SQRT5 * np.sqrt(np.sum(diff2, axis=2))
    e = np.exp(-s)
    Kf = hp.signal_variance * (1.0 + s + s**2 / 3.0) * e
    # dk/dlog(l_d) = sigma^2 * (5/3) * (1 + sqrt5 r) exp(-sqrt5 r) * diff_d^2 / l_d^2
    radial = hp.signal_variance * (5.0 / 3.0) * (1.0 + s) * e
    grad_ls = 0.5 * np.einsum("ij,ij,ijd->d", W, radial, diff2)
    grad_sv = 0.5 * np.sum(W * Kf)
    grad_nv = 0.5 * hp.noise_variance * np.trace(W)
    grad_mean = np.sum(alpha)
    return float(lml), np.concatenate([grad_ls, [grad_sv, grad_nv, grad_mean]])


def _median_heuristic(X: np.ndarray) -> np.ndarray:
    ls = np.empty(X.shape[1])
    for d in range(X.shape[1]):
        dist = pdist(X[:, d : d + 1])
        dist = dist[dist > 0]
        ls[d] = np.median(dist) if dist.size else 1.0
    return np.clip(ls, *LENGTHSCALE_BOUNDS)


def fit(
    X: ArrayLike,
    y: ArrayLike,
    restarts: int = 5,
    seed: int | None = 0,
    learn_noise: bool = False,
    noise_floor: float = NOISE_FLOOR,
) -> GpModel:
    """Fit a GP to one objective by multi-start maximum marginal likelihood.

    Targets are standardised before optimisation; the returned model carries
    hyperparameters in objective units. The first restart starts from a fixed
    default, the others from log-uniform draws.

    Args:
        X: (N, n) inputs, normalised to the unit box.
        y: (N,) targets.
        restarts: number of L-BFGS-B runs.
        seed: seed for the restart initialisations.
        learn_noise: optimise the noise variance instead of fixing it at
            ``noise_floor``.
        noise_floor: noise variance on the standardised scale.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 2:
        raise ValueError("at least two training points are required")
    n = X.shape[1]
    offset = float(np.mean(y))
    scale = float(np.std(y))
    if not scale > 0:
        scale = 1.0
    z = (y - offset) / scale

    log_ls_b = tuple(np.log(LENGTHSCALE_BOUNDS))
    log_var_b = tuple(np.log(VARIANCE_BOUNDS))
    bounds = [log_ls_b] * n + [log_var_b]
    if learn_noise:
        bounds.append((np.log(noise_floor), log_var_b[1]))
    bounds.append(MEAN_BOUNDS)
    free = np.ones(n + 3, dtype=bool)
    if not learn_noise:
        free[n + 1] = False
    log_noise = np.log(noise_floor)

    def full(theta_free: np.ndarray) -> np.ndarray:
        theta = np.empty(n + 3)
        theta[free] = theta_free
        if not learn_noise:
            theta[n + 1] = log_noise
        return theta

    def objective(theta_free: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            model = GpModel(X, z, KernelHyperparams.from_vector(full(theta_free)))
            lml, grad = log_marginal_likelihood(model)
        except (np.linalg.LinAlgError, ValueError):
            return 1e25, np.zeros(int(free.sum()))
        if not np.isfinite(lml):
            return 1e25, np.zeros(int(free.sum()))
        return -lml, -grad[free]

    rng = np.random.default_rng(seed)
    starts = []
    for r in range(max(restarts, 1)):
        if r == 0:
            theta = np.concatenate([np.full(n, np.log(0.5)), [0.0, log_noise, 0.0]])
        else:
            theta = np.concatenate(
                [
                    rng.uniform(np.log(0.05), np.log(2.0), n),
                    [rng.uniform(np.log(0.2), np.log(5.0)), log_noise, 0.0],
                ]
            )
        starts.append(theta[free])

    best_val, best_theta = np.inf, None
    for start in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_val and res.fun < 1e24:
            best_val, best_theta = res.fun, res.x

    if best_theta is None:
        warnings.warn(
            "all hyperparameter restarts failed; using median-heuristic lengthscales",
            RuntimeWarning,
            stacklevel=2,
        )
        hp_std = KernelHyperparams(_median_heuristic(X), 1.0, noise_floor, 0.0)
    else:
        hp_std = KernelHyperparams.from_vector(full(best_theta))

    hp = replace(
        hp_std,
        signal_variance=hp_std.signal_variance * scale**2,
        noise_variance=hp_std.noise_variance * scale**2,
        constant_mean=offset + scale * hp_std.constant_mean,
    )
    model = GpModel(X, y, hp)
    logger.debug("fitted %r", model)
    return model
