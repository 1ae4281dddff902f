"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

Every test prints a ``PASS``/``FAIL`` line (also collected in the terminal
summary). Set ``BRANN_NASA_FEATURES`` to a prepared NASA feature CSV to run
the dataset-dependent criterion 10.
"""

import functools
import os
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from brann import metrics, mrmr
from brann.classify import ConditionLabel, classification_report
from brann.cli import main
from brann.data import NASA, SplitSpec, load_features, split
from brann.experiment import fit, sine_benchmark
from brann.features import apply_scaler, fit_scaler, inverse_scaler
from brann.network import NetworkLayout, TransferKind, forward, gradient, init_weights, jacobian
from brann.synthetic import redundant_features, synthetic_cuts, write_manifest
from brann.trainers import AlgorithmKind, TrainingConfig, lm_step, train
from oracles import (brute_mi, brute_mrmr_order, dense_lm_solve, fd_gradient, fd_jacobian,
                     random_network, rel_error)

SEEDS = range(5)


def verdict(number, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} [{elapsed:.1f}s / {budget:.0f}s]"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def bench(algorithm, seed, transfer="tansig"):
    res = sine_benchmark(algorithm, seed, transfer)
    return res.metric("test", "rmse"), res.metric("train", "rmse"), res.trace.last.gamma, res.model.net.n_params


def test_c01_gradient_jacobian_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        net = random_network(rng)
        X = rng.normal(size=(6, net.layout.n_inputs))
        Y = rng.normal(size=(6, net.layout.n_outputs))
        worst = max(worst, rel_error(gradient(net, X, Y), fd_gradient(net, X, Y)),
                    rel_error(jacobian(net, X), fd_jacobian(net, X)))
    verdict(1, worst < 1e-6, f"worst relative error {worst:.2e} over 50 networks (< 1e-6)",
            time.perf_counter() - t0, 30)


def test_c02_lm_solve_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 51))
        m = int(rng.integers(1, 80))
        J, r, w = rng.normal(size=(m, k)), rng.normal(size=m), rng.normal(size=k)
        mu, alpha, beta = 10 ** rng.uniform(-3, 1), rng.uniform(0, 2), rng.uniform(0.1, 3)
        ref = dense_lm_solve(J, r, mu, alpha, beta, w)
        worst = max(worst, float(np.max(np.abs(lm_step(J, r, mu, alpha, beta, w) - ref))))
    verdict(2, worst <= 1e-10, f"max abs diff {worst:.2e} over 100 systems (<= 1e-10)",
            time.perf_counter() - t0, 5)


def test_c03_exact_fit():
    t0 = time.perf_counter()
    x = np.linspace(-2, 2, 25).reshape(-1, 1)
    net = init_weights(NetworkLayout((1, 1), ("purelin",)), 0)
    fitted, trace = train(net, (x, 1.7 * x - 0.4), TrainingConfig(algorithm="trainlm", max_epochs=50))
    err = metrics.rmse(1.7 * x - 0.4, forward(fitted, x))
    verdict(3, err < 1e-8 and len(trace) <= 50, f"train rmse {err:.1e} after {len(trace)} epochs",
            time.perf_counter() - t0, 1)


def test_c04_scaler_and_metrics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 10)) * rng.uniform(1, 1e3, 10) + rng.normal(0, 100, 10)
    p = fit_scaler(X)
    round_trip = float(np.max(np.abs(inverse_scaler(p, apply_scaler(p, X)) - X)))
    hand = (metrics.mae([1, 2, 3], [2, 2, 2]) == 2 / 3 and metrics.rmse([1, 2, 3], [2, 2, 2]) == np.sqrt(2 / 3)
            and metrics.r2([1, 2, 3], [2, 2, 2]) == 0.0 and metrics.mae([0] * 4, [1] * 4) == 1.0
            and metrics.rmse([0] * 4, [1] * 4) == 1.0 and metrics.r2([1, 5], [1, 5]) == 1.0)
    pairs_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        t, q = rng.normal(size=n), rng.normal(size=n) * 3
        pairs_ok &= metrics.mae(t, q) <= metrics.rmse(t, q) * (1 + 1e-12)
    verdict(4, round_trip < 1e-12 and hand and pairs_ok,
            f"round trip {round_trip:.1e}, hand examples {'exact' if hand else 'WRONG'}, "
            f"mae <= rmse on 1000 pairs: {pairs_ok}", time.perf_counter() - t0, 5)


@pytest.mark.slow
def test_c05_overfitting_suppression():
    t0 = time.perf_counter()
    failures, parts = [], []
    for seed in SEEDS:
        br_test, _, gamma, k = bench("trainbr", seed)
        lm_test = bench("trainlm", seed)[0]
        parts.append(f"s{seed}: br {br_test:.3f} lm {lm_test:.3f} gamma {gamma:.1f}/{k}")
        if not (br_test <= lm_test and gamma < 0.25 * k and br_test < 0.12):
            failures.append(seed)
    verdict(5, not failures, "; ".join(parts) + (f"; failing seeds {failures}" if failures else ""),
            time.perf_counter() - t0, 120)


@pytest.mark.slow
def test_c06_algorithm_ordering():
    t0 = time.perf_counter()
    med_test, med_train = {}, {}
    for kind in AlgorithmKind:
        runs = [bench(kind.value, s) for s in SEEDS]
        med_test[kind.value] = statistics.median(r[0] for r in runs)
        med_train[kind.value] = statistics.median(r[1] for r in runs)
    test_rank = sorted(med_test, key=med_test.get)
    train_rank = sorted(med_train, key=med_train.get)
    br_beats = med_test["trainbr"] < med_test["traingdm"] and med_test["trainbr"] < med_test["traingda"]
    lm_rank = test_rank.index("trainlm") + 1
    detail = (f"trainbr {med_test['trainbr']:.4f} vs traingdm {med_test['traingdm']:.4f}, "
              f"traingda {med_test['traingda']:.4f}; trainlm test rank {lm_rank}/11 "
              f"(median test rmse {med_test['trainlm']:.3f}), train rank "
              f"{train_rank.index('trainlm') + 1}/11; test order {' < '.join(test_rank)}")
    verdict(6, br_beats and lm_rank <= 3, detail, time.perf_counter() - t0, 600)


@pytest.mark.slow
def test_c07_transfer_grid():
    t0 = time.perf_counter()
    med = {k.value: statistics.median(bench("trainbr", s, k.value)[0] for s in SEEDS) for k in TransferKind}
    good, bad = ("tansig", "elliotsig"), ("compet", "hardlim", "purelin")
    ok = all(med[g] < med[b] for g in good for b in bad)
    detail = ", ".join(f"{k} {med[k]:.4f}" for k in good + bad)
    verdict(7, ok, detail, time.perf_counter() - t0, 600)


def test_c08_mrmr_oracle():
    t0 = time.perf_counter()
    X, y = redundant_features()
    ranking = mrmr.rank_features(X, y)
    bins = mrmr.default_bins(len(y))
    labels = [mrmr.discretize(X[:, j], bins) for j in range(X.shape[1])]
    yl = mrmr.discretize(y, bins)
    oracle = brute_mrmr_order(labels, yl)
    rel_ok = all(abs(ranking.relevance[j] - brute_mi(list(labels[j]), list(yl))) < 1e-12 for j in range(3))
    ok = (ranking.order[0] == 0 and ranking.order.index(1) > ranking.order.index(0)
          and list(ranking.order) == oracle and rel_ok)
    verdict(8, ok, f"order {list(ranking.order)}, brute-force order {oracle}", time.perf_counter() - t0, 5)


def test_c09_classification_arithmetic():
    t0 = time.perf_counter()
    B, U = ConditionLabel.BROKEN, ConditionLabel.UNBROKEN
    true = [B] * 4 + [U] * 11
    pred = [B, B, B, U] + [U] * 8 + [B] * 3
    rep = classification_report(pred, true)
    got = (100 * rep.per_class[B], 100 * rep.per_class[U], 100 * rep.overall)
    ok = all(abs(g - w) <= 0.01 for g, w in zip(got, (75.00, 72.73, 73.33)))
    verdict(9, ok, "broken {:.2f}%, unbroken {:.2f}%, overall {:.2f}%".format(*got),
            time.perf_counter() - t0, 1)


def test_c10_nasa_dataset():
    path = os.environ.get("BRANN_NASA_FEATURES")
    if not path:
        line = "SKIP criterion 10: BRANN_NASA_FEATURES not set (dataset-dependent, optional)"
        print(line)
        conftest.ACCEPTANCE_LINES.append(line)
        pytest.skip(line)
    t0 = time.perf_counter()
    ds = load_features(Path(path), NASA)
    maes, r2s = [], []
    for seed in SEEDS:
        tr, te = split(ds, SplitSpec(0.7, "random", seed))
        res = fit(tr, te, (32,), "tansig", TrainingConfig(seed=seed), seed)
        maes.append(res.metric("test", "mae"))
        r2s.append(res.metric("test", "r2"))
    mae, r2 = statistics.median(maes), statistics.median(r2s)
    verdict(10, mae <= 0.06 and r2 >= 0.9, f"median test mae {mae:.4f} mm, r2 {r2:.4f}",
            time.perf_counter() - t0, float("inf"))


def test_c11_determinism(tmp_path):
    t0 = time.perf_counter()
    manifest = write_manifest(tmp_path / "data", NASA, synthetic_cuts(NASA, n_cases=3, n_cuts=8, samples=10))
    assert main(["prepare", str(manifest), "--out", str(tmp_path / "prep")]) == 0
    features = next((tmp_path / "prep").glob("prepare-*")) / "features.csv"
    commands = [
        ["train", str(features), "--hidden", "6", "--max-epochs", "60", "--repeats", "2"],
        ["sweep", str(features), "--preset", "algorithm", "--hidden", "4", "--max-epochs", "40"],
    ]
    mismatched, compared = [], 0
    for argv in commands:
        outs = [tmp_path / f"{argv[0]}{i}" for i in range(2)]
        for out in outs:
            assert main(argv + ["--no-plots", "--out", str(out)]) == 0
        first = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("trace_*.csv"))
        second = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("trace_*.csv"))
        if first != second:
            mismatched.append(f"{argv[0]}: different trace files")
            continue
        for rel in first:
            compared += 1
            if (outs[0] / rel).read_bytes() != (outs[1] / rel).read_bytes():
                mismatched.append(str(rel))
    verdict(11, compared > 0 and not mismatched,
            f"{compared} trace CSVs compared, mismatches: {mismatched or 'none'}",
            time.perf_counter() - t0, 120)
