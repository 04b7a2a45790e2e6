"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 8 and 9 share one set of image-model runs (three protocols x 20
epochs), the slow part of the suite.
"""
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import rel_error
from splitsim.data import Dataset, Partition, gen_blobs, gen_synth_images, partition_iid
from splitsim.metrics import cohens_kappa, linfit
from splitsim.nn import Dense, ModelSpec, ReLU, count_params, estimate_flops, image_conv, init_params, mlp_2808
from splitsim.nn.model import Parameters
from splitsim.privacy import min_data_size
from splitsim.protocols import (TrainConfig, run_centralized, run_fedavg, run_protocol, run_sl_sequential,
                                run_splitfed, split_model)
from splitsim.protocols import fedavg as fedavg_mod
from splitsim.protocols import splitfed as splitfed_mod
from splitsim.tensor import SeededRng
from test_metrics import brute_all, ours_all, random_instance
from test_nn import LAYER_CASES, TRIALS, fd_check_layer
from splitsim.nn import loss_and_grad
from oracles import central_difference

RESULTS: list[str] = []

IMAGE_NOISE = 0.8


def verdict(capsys, number: int, ok: bool, detail: str):
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    with capsys.disabled():
        sys.stdout.write("\n" + line + "\n")
    assert ok, line


def test_criterion_01_parameter_counts(capsys):
    got = (count_params(image_conv(3).sub(0, 5, None)), count_params(image_conv(1).sub(0, 5, None)),
           count_params(mlp_2808().sub(0, 1, None)))
    verdict(capsys, 1, got == (2_832, 2_544, 179_776), f"client params {got}, want (2832, 2544, 179776)")


def test_criterion_02_min_data_size(capsys):
    got = (min_data_size(235_225, 2_304), min_data_size(186_049, 64), min_data_size(1_558_556, 128))
    verdict(capsys, 2, got == (102, 2_907, 12_176), f"min data sizes {got}, want (102, 2907, 12176)")


def test_criterion_03_flops(capsys):
    cases = [(image_conv(3).sub(0, 5, None), 1_726_208), (image_conv(1).sub(0, 5, None), 1_531_520),
             (mlp_2808().sub(0, 1, None), 179_904)]
    devs = [abs(estimate_flops(spec) - want) / want for spec, want in cases]
    got = [estimate_flops(spec) for spec, _ in cases]
    verdict(capsys, 3, max(devs) <= 0.01, f"client FLOPs {got}, max deviation {max(devs):.4%} (limit 1%)")


def test_criterion_04_single_client_equivalence(capsys):
    train = gen_blobs(3, 20, 200, spread=1.0, seed=1)
    model = ModelSpec((Dense(20, 32), ReLU(), Dense(32, 16), ReLU(), Dense(16, 3)), (20,))
    cfg = TrainConfig(epochs=5, batch_size=64, lr=1e-3, seed=3, record_trajectory=True)
    part = Partition.whole(len(train))
    base = run_centralized(model, train, cfg).trajectory
    worst = 0.0
    for report in (run_sl_sequential(split_model(model, 2), train, part, cfg),
                   run_splitfed(split_model(model, 2), train, part, cfg)):
        assert len(report.trajectory) == 5
        for a, b in zip(base, report.trajectory):
            worst = max(worst, float(np.abs(a.flat(True) - b.flat(True)).max()))
    verdict(capsys, 4, worst <= 1e-6, f"max-abs trajectory gap over 5 epochs {worst:.3e} (limit 1e-6)")


def test_criterion_05_gradient_checks(capsys):
    worst = {}
    for case, (layer, in_shape) in LAYER_CASES.items():
        worst[case] = max(fd_check_layer(layer, in_shape, seed) for seed in range(TRIALS))
    for kind, classes in (("softmax-cross-entropy", 4), ("sigmoid-binary-cross-entropy", 1)):
        errs = []
        for seed in range(TRIALS):
            rng = SeededRng(seed)
            logits = rng.normal((5, classes)) * 3
            labels = (rng.uniform([5]) * max(classes, 2)).astype(int)
            _, grad = loss_and_grad(kind, logits, labels)
            errs.append(rel_error(grad, central_difference(lambda: loss_and_grad(kind, logits, labels)[0], logits)))
        worst[kind] = max(errs)
    top = max(worst, key=worst.get)
    verdict(capsys, 5, worst[top] <= 1e-4,
            f"{len(worst)} cases x {TRIALS} trials, worst relative error {worst[top]:.2e} ({top})")


def test_criterion_06_aggregation_algebra(capsys, monkeypatch):
    # FedAvg: capture the aggregation inside a real 2-client run
    data = gen_blobs(3, 4, 6, seed=2)
    model = ModelSpec((Dense(4, 3),), (4,))
    part = Partition((np.arange(0, 5), np.arange(5, 18)))
    seen = []
    real_aggregate = fedavg_mod.aggregate

    def spy(params, weights):
        out = real_aggregate(params, weights)
        seen.append((params, weights, out))
        return out
    monkeypatch.setattr(fedavg_mod, "aggregate", spy)
    run_fedavg(model, data, part, TrainConfig(epochs=2, batch_size=4, lr=1e-2, seed=0))
    fed_err = 0.0
    for params, weights, out in seen:
        assert weights == [5 / 18, 13 / 18]
        flats = [p.flat().tolist() for p in params]
        oracle = [sum(w * f[j] for w, f in zip(weights, flats)) for j in range(len(flats[0]))]
        fed_err = max(fed_err, max(abs(a - b) for a, b in zip(out.flat().tolist(), oracle)))

    # SplitFed: two scalar Dense layers, gradients derived by hand
    x = np.array([0.5, -1.0, 2.0, 0.3, -0.7, 1.5, -2.0, 0.1])
    y = np.array([1, 0, 1, 0, 1, 1, 0, 0])
    tiny = ModelSpec((Dense(1, 1), Dense(1, 1)), (1,), "sigmoid-binary-cross-entropy")
    shards = (np.arange(0, 3), np.arange(3, 8))
    applied = []
    real_step = splitfed_mod.adam_step

    def step_spy(params, grads, opt):
        applied.append(grads)
        return real_step(params, grads, opt)
    monkeypatch.setattr(splitfed_mod, "adam_step", step_spy)
    cfg = TrainConfig(epochs=1, batch_size=8, lr=1e-2, seed=4)
    run_splitfed(split_model(tiny, 1), Dataset(x[:, None], y, 2), Partition(shards), cfg)
    p0 = init_params(tiny, SeededRng(4).split("init")).trainable
    w1, b1 = float(p0[0]["weight"][0, 0]), float(p0[0]["bias"][0])
    w2, b2 = float(p0[1]["weight"][0, 0]), float(p0[1]["bias"][0])
    expect_s, expect_c = np.zeros(2), np.zeros(2)
    for shard in shards:
        gs, gc = np.zeros(2), np.zeros(2)
        for i in shard:
            z1 = w1 * x[i] + b1
            p = 1.0 / (1.0 + np.exp(-(w2 * z1 + b2)))
            dz2 = (p - y[i]) / len(shard)
            gs += [dz2 * z1, dz2]
            gc += [dz2 * w2 * x[i], dz2 * w2]
        expect_s += len(shard) / 8 * gs
        expect_c += len(shard) / 8 * gc
    server_g, client_g = applied[0], applied[1]
    sf_err = max(float(np.abs(np.array([server_g[1]["weight"][0, 0], server_g[1]["bias"][0]]) - expect_s).max()),
                 float(np.abs(np.array([client_g[0]["weight"][0, 0], client_g[0]["bias"][0]]) - expect_c).max()))
    ok = fed_err <= 1e-12 and sf_err <= 1e-12 and len(seen) == 2
    verdict(capsys, 6, ok, f"FedAvg vs weighted-sum oracle {fed_err:.1e}; SplitFed applied gradients vs "
                           f"hand derivation {sf_err:.1e} (limit 1e-12)")


def test_criterion_07_metric_oracles(capsys):
    worst, mismatched = 0.0, []
    for seed in range(100):
        scores, labels, classes = random_instance(seed)
        ours, ref = ours_all(scores, labels), brute_all(scores, labels, classes)
        for name, value in ref.items():
            if value is None or ours[name] is None:
                if value is not ours[name]:
                    mismatched.append((seed, name))
                continue
            worst = max(worst, abs(ours[name] - value))
    kappa = cohens_kappa([[20, 5], [10, 15]])
    ok = not mismatched and worst <= 1e-12 and kappa == 0.4
    verdict(capsys, 7, ok, f"100 random instances, worst gap {worst:.1e}, undefined mismatches {len(mismatched)}; "
                           f"kappa([[20,5],[10,15]]) = {kappa!r}")


@pytest.fixture(scope="module")
def image_runs():
    train = gen_synth_images(4, 3, 1000, seed=0, noise=IMAGE_NOISE)
    test = gen_synth_images(4, 3, 250, seed=0, noise=IMAGE_NOISE, split="test")
    model = image_conv(3, 4)
    part = partition_iid(train, 5, seed=0)
    cfg = TrainConfig(epochs=20, seed=0)
    runs, seconds = {}, {}
    for protocol in ("centralized", "fedavg", "splitfed"):
        start = time.perf_counter()
        runs[protocol] = run_protocol(protocol, model, train, part, cfg, test, cut=5)
        seconds[protocol] = time.perf_counter() - start
    return runs, seconds


@pytest.mark.slow
def test_criterion_08_desk_scale_accuracy(capsys, image_runs):
    runs, seconds = image_runs
    final = {p: r.final_metric("accuracy") for p, r in runs.items()}
    gaps = {p: abs(final[p] - final["centralized"]) * 100 for p in ("fedavg", "splitfed")}
    acc = ", ".join(f"{p} {v:.4f}" for p, v in final.items())
    verdict(capsys, 8, max(gaps.values()) <= 2.0,
            f"final accuracy {acc}; gaps (points) fedavg {gaps['fedavg']:.2f}, splitfed {gaps['splitfed']:.2f} "
            f"(limit 2); wall time {sum(seconds.values()):.0f} s")


@pytest.mark.slow
def test_criterion_09_convergence_regression(capsys, image_runs):
    runs, _ = image_runs
    fit = linfit(runs["fedavg"].metric_series("accuracy"), runs["splitfed"].metric_series("accuracy"))
    verdict(capsys, 9, fit.r2 > 0.9 and fit.slope < 1.2,
            f"SplitFed on FedAvg per-epoch accuracy: slope {fit.slope:.3f} (limit < 1.2), r2 {fit.r2:.4f} (> 0.9)")


def test_criterion_10_communication_accounting(capsys):
    data = gen_blobs(3, 6, 10, spread=0.8, seed=3)
    model = ModelSpec((Dense(6, 8), ReLU(), Dense(8, 3)), (6,))
    split = split_model(model, 2)
    part = Partition((np.arange(0, 12), np.arange(12, 20), np.arange(20, 28)))
    cfg = TrainConfig(epochs=2, batch_size=4, lr=1e-3)
    k, batches = 3, [3, 2, 2]  # 7 batches per epoch
    steps = max(batches)
    active_steps = sum(sum(1 for b in batches if s < b) for s in range(steps))
    expected = {"fedavg": 2 * k, "sl-sequential": 2 * sum(batches) + k, "splitfed": 4 * active_steps}
    got, bytes_ok = {}, True
    for protocol, report in (("fedavg", run_fedavg(model, data, part, cfg)),
                             ("sl-sequential", run_sl_sequential(split, data, part, cfg)),
                             ("splitfed", run_splitfed(split, data, part, cfg))):
        got[protocol] = [len(report.transcript.in_round(e)) for e in (1, 2)]
        msgs = report.transcript.messages
        bytes_ok &= all(m.nbytes == 8 * m.elements + 32 for m in msgs)
        bytes_ok &= report.transcript.total_bytes == sum(8 * m.elements + 32 for m in msgs)
    ok = bytes_ok and all(got[p] == [expected[p]] * 2 for p in expected)
    verdict(capsys, 10, ok, f"per-epoch messages {got}, closed forms {expected}; bytes = 8*elements+32: {bytes_ok}")


def test_criterion_11_determinism(capsys):
    data = gen_blobs(3, 6, 20, spread=0.8, seed=4)
    model = ModelSpec((Dense(6, 8), ReLU(), Dense(8, 3)), (6,))
    part = partition_iid(data, 3, seed=1)
    cfg = TrainConfig(epochs=2, batch_size=8, lr=1e-2, seed=7)
    same = {}
    for protocol in ("centralized", "fedavg", "sl-sequential", "splitfed"):
        texts = [run_protocol(protocol, model, data, part, c, data, cut=2).to_json()
                 for c in (cfg, cfg, replace(cfg, workers=3))]
        same[protocol] = len(set(texts)) == 1
    verdict(capsys, 11, all(same.values()), f"byte-identical report JSON (serial x2, threaded): {same}")
