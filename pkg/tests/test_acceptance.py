"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The regret-trend and overhead-scaling runs take several minutes each and are
marked ``slow``; ``pytest -m "not slow"`` skips them.
"""

import dataclasses
import time

import numpy as np
import pytest

import hippobo.harness as harness
from hippobo.acquisition import AcquisitionContext, ConstraintModel, constrained_ehvi, ehvi, ehvi_gaussian
from hippobo.batch import PenaltyState, WarpFunction, objective_distance, penalised_acquisition, warp
from hippobo.harness import ExperimentConfig, run_experiment
from hippobo.pareto import extract_front, hypervolume
from hippobo.surrogate import GpModel, KernelHyperparams, fit, log_marginal_likelihood

from oracles import inclusion_exclusion_hv, mc_ehvi_oracle


def test_ehvi_against_monte_carlo(report):
    rng = np.random.default_rng(2024)
    ref = np.array([1.2, 1.2])
    t0 = time.perf_counter()
    agree = 0
    for _ in range(50):
        front = extract_front(rng.random((int(rng.integers(1, 11)), 2)))
        mu = rng.uniform(-0.2, 1.1, 2)
        sd = rng.uniform(0.02, 0.5, 2)
        exact = ehvi_gaussian(mu[None], sd[None] ** 2, front, ref)[0]
        est, se = mc_ehvi_oracle(mu, sd, front.members, ref, 1_000_000, rng)
        agree += abs(exact - est) <= 3 * se
    elapsed = time.perf_counter() - t0
    ok = agree >= 48 and elapsed < 120
    assert report(1, "EHVI vs 1e6-sample MC", ok, f"{agree}/50 within 3 SE, {elapsed:.1f}s")


def test_hypervolume_against_oracle(report):
    rng = np.random.default_rng(7)
    ref = np.array([1.05, 1.05])
    worst = 0.0
    for _ in range(50):
        front = extract_front(rng.random((int(rng.integers(1, 13)), 2))).members
        exact = hypervolume(front, ref)
        oracle = inclusion_exclusion_hv(front, ref)
        worst = max(worst, abs(exact - oracle) / oracle)
    two = hypervolume([(1, 2), (2, 1)], [3, 3])
    ok = worst < 1e-2 and abs(two - 3.0) <= 1e-10
    assert report(2, "hypervolume", ok, f"max rel err {worst:.1e}, two-point case {two!r}")


def _penalty_context():
    rng = np.random.default_rng(0)
    X = rng.random((6, 1))
    Y = np.column_stack([X[:, 0] ** 2, (X[:, 0] - 1) ** 2])
    hp = KernelHyperparams([0.3], 0.5, 1e-6, 0.4)
    models = [GpModel(X, Y[:, i], hp) for i in range(2)]
    return AcquisitionContext.from_observations(models, Y, [1.2, 1.2])


def test_penalty_invariants(report):
    ctx = _penalty_context()
    w = WarpFunction()
    x = np.linspace(0, 1, 501)[:, None]
    base = ctx(x)
    checks = {}

    checks["t=0 identity"] = np.array_equal(penalised_acquisition(ctx, PenaltyState(4), w, x), base)

    chosen = np.array([[0.15], [0.5], [0.83]])
    state = PenaltyState(4)
    for c in chosen:
        m, v = ctx.predict(c)
        state.add(c, m[0], v[0])
    pen = penalised_acquisition(ctx, state, w, x)
    checks["annihilation"] = all(penalised_acquisition(ctx, state, w, c)[0] == 0.0 for c in chosen)
    checks["0 <= a_t+1 <= a"] = bool(np.all((pen >= 0) & (pen <= base)))

    expected = base.copy()
    for c in chosen:
        expected = expected * warp(w, objective_distance(ctx, x, c))
    checks["compositional"] = np.allclose(pen, expected, rtol=1e-12, atol=0)

    xm = np.array([[0.4]])
    mean, _ = ctx.predict(xm)
    vals = []
    for shift in np.linspace(0, 10, 200):
        s = PenaltyState(2)
        s.add([0.9], [0.0, 0.0], [0.05, 0.05])
        s.add([0.2], mean[0] + shift, [0.01, 0.01])
        vals.append(penalised_acquisition(ctx, s, w, xm)[0])
    checks["monotone relaxation"] = bool(np.all(np.diff(vals) >= 0))
    checks["w(1) = 0.5"] = float(warp(w, 1.0)) == pytest.approx(0.5, abs=1e-15)

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    assert report(3, "penalty invariants", ok, "all hold" if ok else f"failed: {failed}")


def test_gp_numerics(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        N, n = int(rng.integers(5, 25)), int(rng.integers(1, 5))
        X = rng.random((N, n))
        y = np.sin(3 * X @ rng.normal(size=n)) + 0.05 * rng.standard_normal(N)
        hp = KernelHyperparams(
            rng.uniform(0.2, 2.0, n), rng.uniform(0.3, 3.0), rng.uniform(1e-4, 1e-1), rng.normal()
        )
        model = GpModel(X, y, hp)
        _, grad = log_marginal_likelihood(model)
        theta = hp.to_vector()
        fd = np.empty_like(theta)
        for i in range(len(theta)):
            e = np.zeros_like(theta)
            e[i] = h
            up = log_marginal_likelihood(GpModel(X, y, KernelHyperparams.from_vector(theta + e)))[0]
            dn = log_marginal_likelihood(GpModel(X, y, KernelHyperparams.from_vector(theta - e)))[0]
            fd[i] = (up - dn) / (2 * h)
        worst = max(worst, np.max(np.abs(grad - fd)) / np.max(np.abs(fd)))

    # interpolation with the noise term at jitter level
    interp = 0.0
    for s in range(5):
        r = np.random.default_rng(100 + s)
        X = r.random((15, 2))
        y = np.sin(5 * X[:, 0]) * np.cos(3 * X[:, 1])
        model = fit(X, y, restarts=2, seed=s, noise_floor=1e-10)
        interp = max(interp, np.max(np.abs(model.predict(X)[0] - y)))
    ok = worst < 1e-4 and interp < 1e-6
    assert report(4, "GP numerics", ok, f"max grad rel err {worst:.1e}, max interp residual {interp:.1e}")


@pytest.mark.slow
def test_regret_trend(report):
    t0 = time.perf_counter()
    finals = {}
    for method in ("hippo", "sequential-ehvi", "random"):
        cfg = ExperimentConfig("vlmop2", method, batch_size=4, init_points=10, total_budget=90, seeds=tuple(range(10)))
        records = run_experiment(cfg)
        finals[method] = np.median([r.hv_regret for r in records if r.evaluations == 90])
    elapsed = time.perf_counter() - t0
    h, s, r = finals["hippo"], finals["sequential-ehvi"], finals["random"]
    ok = h <= 1.5 * s and r >= 2 * h and elapsed < 20 * 60
    detail = f"median regret hippo {h:.4g}, sequential {s:.4g}, random {r:.4g}; {elapsed / 60:.1f} min"
    assert report(5, "VLMOP2 regret trend", ok, detail)


@pytest.mark.slow
def test_overhead_scaling(report):
    t0 = time.perf_counter()
    per_batch, per_point = {}, {}
    for b in (10, 25, 50):
        for method in ("hippo", "kb"):
            cfg = ExperimentConfig("vlmop2", method, batch_size=b, init_points=10, total_budget=160, seeds=(0, 1))
            times = [r.batch_wall_time_s for r in run_experiment(cfg) if r.step > 0]
            per_batch[method, b] = float(np.median(times))
            per_point[method, b] = per_batch[method, b] / b
    elapsed = time.perf_counter() - t0
    faster = per_batch["hippo", 50] < per_batch["kb", 50]
    slow_growth = per_point["hippo", 50] <= 2 * per_point["hippo", 10]
    ok = faster and slow_growth and elapsed < 30 * 60
    detail = (
        f"b=50 median batch time hippo {per_batch['hippo', 50]:.2f}s vs kb {per_batch['kb', 50]:.2f}s; "
        f"hippo per point b=10 {per_point['hippo', 10]:.4f}s, b=50 {per_point['hippo', 50]:.4f}s; "
        f"{elapsed / 60:.1f} min"
    )
    assert report(6, "overhead scaling", ok, detail)


def _recorded_inputs(monkeypatch, cfg):
    seen = []
    problem = harness.get_problem(cfg.problem)

    def evaluate(x):
        seen.append(np.array(x, copy=True))
        return problem.evaluate(x)

    recording = dataclasses.replace(problem, evaluate=evaluate)
    monkeypatch.setattr(harness, "get_problem", lambda name: recording)
    records = run_experiment(cfg)
    monkeypatch.undo()
    return np.vstack(seen), records


def test_reduction_identity(report, monkeypatch):
    common = dict(problem="vlmop2", batch_size=1, init_points=6, total_budget=16, seeds=(3,), timing=False)
    xa, ra = _recorded_inputs(monkeypatch, ExperimentConfig(method="hippo", **common))
    xb, rb = _recorded_inputs(monkeypatch, ExperimentConfig(method="sequential-ehvi", **common))
    ok = xa.shape == xb.shape == (16, 2) and np.array_equal(xa, xb) and ra == rb
    assert report(7, "HIPPO b=1 equals sequential EHVI", ok, f"{len(xa)} identical evaluations" if ok else "sequences differ")


def test_constrained_acquisition(report):
    rng = np.random.default_rng(5)
    X = rng.random((10, 2))
    Y = np.column_stack([np.sum(X**2, axis=1), np.sum((X - 1) ** 2, axis=1)])
    models = [fit(X, Y[:, i], restarts=2, seed=i) for i in range(2)]
    ctx = AcquisitionContext.from_observations(models, Y, Y.max(axis=0) + 0.1)
    # constraint model whose posterior mean sits exactly on the threshold everywhere
    flat = GpModel(X, np.full(10, 0.7), KernelHyperparams([0.3, 0.3], 1.0, 1e-6, 0.7))
    half = ConstraintModel(flat, 0.7)
    x = rng.random((100, 2))
    e = ehvi(ctx, x)
    err_empty = np.max(np.abs(constrained_ehvi(ctx, [], x) - e))
    err_half = np.max(np.abs(constrained_ehvi(ctx, [half], x) - 0.5 * e))
    ok = err_empty <= 1e-12 and err_half <= 1e-12
    assert report(8, "constrained EHVI", ok, f"max err empty {err_empty:.1e}, half {err_half:.1e}")


def test_end_to_end_determinism(report, tmp_path):
    paths = []
    for run in ("first", "second"):
        cfg = ExperimentConfig(
            "vlmop2", "hippo", batch_size=4, init_points=10, total_budget=30, seeds=(0, 1),
            output=str(tmp_path / run), timing=False,
        )
        run_experiment(cfg)
        paths.append(tmp_path / run / "vlmop2_hippo_b4.csv")
    a, b = (p.read_bytes() for p in paths)
    ok = a == b and len(a.splitlines()) == 1 + 2 * 6
    assert report(9, "byte-identical CSV", ok, f"{len(a)} bytes, identical={a == b}")
