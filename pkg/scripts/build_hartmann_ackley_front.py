"""Regenerate the shipped Hartmann-Ackley reference front.

Dense random sampling gives a rough front; epsilon-constraint solves
(minimise one objective with the other capped at a level) from the best
sampled preimages then tighten it. Everything is pooled and passed through
extract_front.

    python scripts/build_hartmann_ackley_front.py [--out PATH]
"""

import argparse
import logging
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from hippobo.benchmarks import (
    HARTMANN6_MINIMISER,
    hartmann_ackley,
    write_front_csv,
)
from hippobo.pareto import extract_front

log = logging.getLogger("front")
BOUNDS = [(0.0, 1.0)] * 6


def _front_preimages(X, F):
    front = extract_front(F).members
    idx = []
    for row in front:
        idx.append(int(np.flatnonzero(np.all(F == row, axis=1))[0]))
    return X[idx], F[idx]


def _eps_solve(capped, free, level, starts):
    """Minimise objective ``free`` subject to objective ``capped`` <= level."""
    best = []
    for x0 in starts:
        res = minimize(
            lambda x: hartmann_ackley(x)[0, free],
            x0,
            method="SLSQP",
            bounds=BOUNDS,
            constraints=[{"type": "ineq", "fun": lambda x: level - hartmann_ackley(x)[0, capped]}],
            options={"maxiter": 200, "ftol": 1e-10},
        )
        x = np.clip(res.x, 0.0, 1.0)
        best.append(x)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        type=Path,
        default=Path(__file__).resolve().parents[1] / "src/hippobo/data/hartmann_ackley_front.csv",
    )
    parser.add_argument("--samples", type=int, default=400_000)
    parser.add_argument("--levels", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rng = np.random.default_rng(args.seed)
    # the segment between the two single-objective minimisers seeds the search
    t = np.linspace(0, 1, 2001)[:, None]
    path = (1 - t) * HARTMANN6_MINIMISER + t * 0.5
    X = np.vstack([rng.random((args.samples, 6)), path])
    F = hartmann_ackley(X)
    Xp, Fp = _front_preimages(X, F)
    log.info("sampled front: %d points", len(Fp))

    pool_X = [X]
    lo1, hi1 = Fp[:, 0].min(), Fp[:, 0].max()
    lo2, hi2 = Fp[:, 1].min(), Fp[:, 1].max()
    for i, level in enumerate(np.linspace(lo1, hi1, args.levels)):
        feasible = Fp[:, 0] <= level
        cand = Xp[feasible][np.argsort(Fp[feasible, 1])[:3]]
        pool_X.append(np.array(_eps_solve(0, 1, level, cand)))
        if i % 50 == 0:
            log.info("hartmann-capped level %d/%d", i, args.levels)
    for i, level in enumerate(np.linspace(lo2, hi2, args.levels)):
        feasible = Fp[:, 1] <= level
        cand = Xp[feasible][np.argsort(Fp[feasible, 0])[:3]]
        pool_X.append(np.array(_eps_solve(1, 0, level, cand)))
        if i % 50 == 0:
            log.info("ackley-capped level %d/%d", i, args.levels)

    X = np.vstack(pool_X)
    F = hartmann_ackley(X)
    Xp, Fp = _front_preimages(X, F)
    log.info("refined front: %d points", len(Fp))

    # Densify: short local eps-solves between neighbouring front members.
    extra = []
    for a, b in zip(range(len(Fp) - 1), range(1, len(Fp))):
        gap = np.hypot(*(Fp[b] - Fp[a]))
        if gap > 0.01:
            for level in np.linspace(Fp[a, 0], Fp[b, 0], int(gap / 0.005) + 2)[1:-1]:
                extra.extend(_eps_solve(0, 1, level, [Xp[a], Xp[b]]))
    if extra:
        X = np.vstack([X, np.array(extra)])
        F = hartmann_ackley(X)
    front = extract_front(F)
    log.info("final front: %d points", len(front))
    write_front_csv(front, args.out)


if __name__ == "__main__":
    main()
