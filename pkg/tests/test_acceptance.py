"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 7 and 8 need ``data/auto-mpg.csv`` and ``data/heart-disease.csv``
(``python scripts/fetch_datasets.py``).  Run alone with
``pytest tests/test_acceptance.py -v``.
"""
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE, DATA, FIXTURES
from helpers import fd_input_grad, fd_param_grads, near_kink, random_network

from mononet.activations import heavyside_approximant
from mononet.data import builtin_descriptor, load_csv
from mononet.experiments import cubic_fit_demo, dataset_protocol, synthetic_experiment
from mononet.layer import init_layer, layer_backward, layer_forward
from mononet.network import network_backward, network_forward, rescale_equivalent
from mononet.numeric import finite_difference_gradient, relative_error
from mononet.training import TrainConfig, train
from mononet.verification import check_pairwise_monotonicity, sampling_box, universal_fit_battery

KINDS = ("relu", "elu", "selu")


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_c01_monotone_by_construction():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0
    nets = 0
    for i in range(50):
        net = random_network(rng, ("type1", "type2")[i % 2], KINDS[i % 3])
        X = rng.normal(scale=rng.uniform(0.5, 3), size=(64, net.n_inputs))
        y = np.sin(X).sum(axis=1) + rng.normal(scale=0.1, size=64)
        box = sampling_box(X)
        before = check_pairwise_monotonicity(net, n_pairs=10_000, seed=i, box=box)
        train(net, (X, y), None, TrainConfig(epochs=200, lr=1e-2, seed=i))
        after = check_pairwise_monotonicity(net, n_pairs=10_000, seed=i + 1000, box=box)
        worst = max(worst, *(r.violations for r in before + after))
        nets += 1
    elapsed = time.perf_counter() - start
    record(1, worst == 0 and elapsed < 300,
           f"{nets} nets, max violations {worst} before/after 200 epochs, {elapsed:.0f}s (limit 300s)")


def test_c02_gradients_match_finite_differences():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    errs = []
    while len(errs) < 50:
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        k1 = int(rng.integers(0, m + 1))
        k2 = int(rng.integers(0, m - k1 + 1))
        layer = init_layer(n, m, indicator=rng.choice([-1, 0, 1], size=n), selector=(k1, k2, m - k1 - k2),
                           kind=KINDS[len(errs) % 3], rng=rng)
        layer.bias = rng.normal(size=m)
        x = rng.normal(size=(3, n))
        _, h = layer_forward(layer, x)
        if any(np.any(np.abs(h - k) < 1e-3) for k in (0, 1, -1)) or np.any(np.abs(layer.weights) < 1e-3):
            continue
        G = rng.normal(size=(3, m))
        gW, gb, gx = layer_backward(layer, x, h, G)

        def loss(W=layer.weights, b=layer.bias, v=x):
            saved = layer.weights, layer.bias
            layer.weights, layer.bias = W, b
            out = float(np.sum(layer_forward(layer, v)[0] * G))
            layer.weights, layer.bias = saved
            return out

        errs.append(max(relative_error(gW, finite_difference_gradient(lambda W: loss(W=W), layer.weights.copy())),
                        relative_error(gb, finite_difference_gradient(lambda b: loss(b=b), layer.bias.copy())),
                        relative_error(gx, finite_difference_gradient(lambda v: loss(v=v), x.copy()))))
    while len(errs) < 100:
        net = random_network(rng, ("type1", "type2")[len(errs) % 2], KINDS[len(errs) % 3])
        for layer in net.layers():
            layer.bias = rng.normal(scale=0.5, size=layer.n_out)
        X = rng.normal(size=(3, net.n_inputs))
        if near_kink(net, X):
            continue
        _, cache = network_forward(net, X, return_cache=True)
        G = rng.normal(size=cache["logits"].shape)
        grads, gx = network_backward(net, cache, G)
        e = relative_error(gx, fd_input_grad(net, X, G))
        for (dw, db), (fw, fb) in zip(grads, fd_param_grads(net, X, G)):
            e = max(e, relative_error(dw, fw), relative_error(db, fb))
        errs.append(e)
    elapsed = time.perf_counter() - start
    record(2, max(errs) < 1e-5 and elapsed < 60,
           f"100 instances, max relative error {max(errs):.2e} (limit 1e-5), {elapsed:.0f}s (limit 60s)")


def test_c03_rescaled_saturated_networks():
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(20):
        net = random_network(rng, ("type1", "type2")[i % 2], KINDS[i % 3], saturated_only=True)
        for layer in net.layers():
            layer.bias = rng.normal(size=layer.n_out)
        x = rng.normal(scale=2, size=(1000, net.n_inputs))
        for _ in range(10):
            alpha, beta = rng.uniform(0.1, 3), rng.uniform(-2, 2)
            twin = rescale_equivalent(net, alpha, beta)
            diff = network_forward(twin, x) - network_forward(net, x, activation_affine=(alpha, beta))
            worst = max(worst, float(np.max(np.abs(diff))))
    record(3, worst < 1e-9, f"20 nets x 10 (alpha, beta), max abs diff {worst:.2e} (limit 1e-9)")


def test_c04_heavyside_approximation():
    x = np.concatenate([np.linspace(-10, -0.1, 5000), np.linspace(0.1, 10, 5000)])
    step = (x > 0).astype(float)
    errs = {k: float(np.max(np.abs(heavyside_approximant(k, x, 1000.0) - step))) for k in ("elu", "selu")}
    mid = all(heavyside_approximant(k, 0.0, a) == 0.5 for k in KINDS for a in (1.0, 1000.0))
    ok = max(errs.values()) <= 1e-3 and mid
    record(4, ok, f"max |H_a(x) - H(x)| for |x|>=0.1, a=1000: elu {errs['elu']:.1e}, selu {errs['selu']:.1e}; "
                  f"midpoint exactly 0.5: {mid}")


def test_c05_cubic_fit():
    start = time.perf_counter()
    res = cubic_fit_demo(widths=(32,))
    three, convex = res[("three", 32)], res[("convex", 32)]
    ratio = convex["mse_left"] / three["mse_left"]
    elapsed = time.perf_counter() - start
    ok = three["mse"] < 1e-3 and ratio >= 10 and elapsed < 120
    record(5, ok, f"three-activation mse {three['mse']:.2e} (limit 1e-3); convex/three on [-1,0] = {ratio:.0f}x "
                  f"(need >=10); {elapsed:.0f}s (limit 120s)")


def test_c06_universal_fit_battery():
    parts, ok = [], True
    for kind in KINDS:
        rep = universal_fit_battery(kind, seed=0, targets=["convex", "concave", "sigmoidal", "sigmoidal-convex-only"])
        ok &= rep.passed
        parts.append(kind + " " + ",".join(f"{e['target']}={e['mse']:.1e}" for e in rep.entries))
    record(6, ok, "; ".join(parts))


def _dataset(name):
    path = DATA / f"{name}.csv"
    if not path.exists():
        pytest.fail(f"{path} missing; run python scripts/fetch_datasets.py")
    return load_csv(path, builtin_descriptor(name))


def test_c07_auto_mpg():
    start = time.perf_counter()
    res, _ = dataset_protocol(_dataset("auto-mpg"), TrainConfig(epochs=300, lr=1e-3, seed=0), split_seed=0)
    s = res["summary"]
    elapsed = time.perf_counter() - start
    record(7, s["mean"] <= 10.0 and elapsed < 900,
           f"best 5 of 10 test MSE {s['mean']:.3f} +/- {s['std']:.3f} (limit 10.0), cell {res['selected']}, "
           f"{elapsed:.0f}s (limit 900s)")


def test_c08_heart_disease():
    start = time.perf_counter()
    cfg = TrainConfig(loss="cross_entropy", epochs=100, lr=1e-3, seed=0)
    res, _ = dataset_protocol(_dataset("heart-disease"), cfg, split_seed=0)
    s = res["summary"]
    elapsed = time.perf_counter() - start
    record(8, s["mean"] >= 0.85 and elapsed < 600,
           f"best 5 of 10 test accuracy {s['mean']:.4f} +/- {s['std']:.4f} (need >=0.85), cell {res['selected']}, "
           f"{elapsed:.0f}s (limit 600s)")


def test_c09_synthetic_experiment():
    rep, _, _ = synthetic_experiment(seeds=tuple(range(5)))
    s = rep["summary"]
    gain = 1 - s["three"]["mean_grid_mse"] / s["convex"]["mean_grid_mse"]
    ok = (gain >= 0.25 and s["three"]["total_violations"] == 0 and s["convex"]["total_violations"] == 0
          and s["unconstrained"]["total_violations"] >= 1)
    record(9, ok, f"grid mse three {s['three']['mean_grid_mse']:.3f} vs convex {s['convex']['mean_grid_mse']:.3f} "
                  f"({gain:.0%} better, need >=25%); x-violations unconstrained "
                  f"{s['unconstrained']['total_violations']}, convex {s['convex']['total_violations']}, "
                  f"three {s['three']['total_violations']}")


def _cli(args, cwd):
    env = {**os.environ, "MONONET_SEED": "5"}
    out = subprocess.run([sys.executable, "-m", "mononet.cli", *args], cwd=cwd, env=env, capture_output=True,
                         text=True)
    assert out.returncode == 0, out.stderr
    return out.stdout


def _snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_c10_cli_determinism(tmp_path):
    data = ["--descriptor", str(FIXTURES / "smoke_descriptor.json"), "--csv", str(FIXTURES / "smoke.csv")]
    commands = [
        ["train", *data, "--width", "8,4", "--kind", "elu", "--epochs", "15", "--runs", "2", "--curve", "c.csv"],
        ["eval", "--model", "model.json", *data, "--out-report", "eval.json"],
        ["verify", "--model", "model.json", *data, "--pairs", "2000"],
        ["export-curve", "--model", "model.json", "--feature", "0", "--out", "curve.csv"],
        ["fit-demo", "--epochs", "20"],
        ["synth", "--epochs", "10", "--pairs", "1000", "--grid", "11"],
        ["grid", *data, "--widths", "2,4", "--depths", "1", "--epochs", "5", "--runs", "2", "--best", "1"],
    ]
    snaps, stdouts = [], []
    for rep in ("a", "b"):
        d = tmp_path / rep
        d.mkdir()
        stdouts.append([_cli(c, d) for c in commands])
        snaps.append(_snapshot(d))
    same = snaps[0] == snaps[1] and stdouts[0] == stdouts[1]
    record(10, same, f"{len(commands)} subcommands run twice in fresh processes, {len(snaps[0])} files, "
                     f"byte-identical: {same}")
