"""Acceptance criteria 1 to 9, one test each; every test records a PASS/FAIL line.

The lines are printed (visible with ``-s``) and repeated in the terminal summary.
"""

import time
from fractions import Fraction

import numpy as np
import pytest
from clifixtures import SYNTH, TRAIN, run, synth_train_eval, tree_bytes, write_config
from gradfixtures import LAYER_KINDS, STEP, TOLERANCE, layer_case, sequence_case
from lstmoracle import random_params, scalar_lstm_step
from test_roc import pairwise_auc

from blinkscope.compositor import blend, gaussian_kernel, polygon_mask, warp_back
from blinkscope.evaluation.experiment import run_roc_experiment
from blinkscope.evaluation.roc import roc
from blinkscope.evaluation.synthetic import SynthConfig, face_template
from blinkscope.evaluation.training import TrainConfig
from blinkscope.geometry import LandmarkFrame, SimilarityTransform, ear, write_landmarks
from blinkscope.nn.gradcheck import grad_check
from blinkscope.nn.lstm import LstmState, lstm_step
from blinkscope.nn.models import ArchConfig, LrcnModel, frames_to_batch
from blinkscope.pipeline import StateSeries, blink_capture_probability, blink_statistics, segment_blinks

RESULTS = []


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_gradients():
    start = time.perf_counter()
    worst = {}
    for kind in LAYER_KINDS:
        net, x, labels = layer_case(kind)
        worst[kind] = grad_check(net, x, labels, step=STEP, tolerance=TOLERANCE).max_rel_error
    for length in (1, 5, 20):
        model, feats, labels = sequence_case(length)
        worst[f"bptt{length}"] = grad_check(model, feats, labels, step=STEP, tolerance=TOLERANCE).max_rel_error
    elapsed = time.perf_counter() - start
    top = max(worst.values())
    record(1, top < 1e-4 and elapsed < 60,
           f"max rel err {top:.2e} over {len(worst)} checks (< 1e-4), {elapsed:.1f} s (< 60 s)")


def test_criterion_2_lstm_oracle():
    worst = 0.0
    for H in (1, 2, 8):
        rng = np.random.default_rng(100 + H)
        p = random_params(H, 4, rng)
        state = LstmState(rng.normal(size=H), np.tanh(rng.normal(size=H)))
        c, h = state.cell.tolist(), state.hidden.tolist()
        for _ in range(10):
            x = rng.normal(size=4)
            state, _ = lstm_step(state, x, p)
            c, h = scalar_lstm_step(c, h, x.tolist(), p)
            worst = max(worst, np.max(np.abs(state.cell - c)), np.max(np.abs(state.hidden - h)))
    arch = ArchConfig(height=12, width=16, block_filters=(3, 4), feature_dim=6, fc7_units=5, hidden_size=5)
    model = LrcnModel(arch, seed=11)
    frames = frames_to_batch(np.random.default_rng(0).uniform(size=(20, 12, 16, 1)))
    whole, _ = model.run(frames)
    parts, st = [], None
    for a, b in ((0, 1), (1, 7), (7, 8), (8, 20)):
        out, st = model.run(frames[a:b], st)
        parts.append(out)
    chunk_err = float(np.max(np.abs(np.concatenate(parts) - whole)))
    record(2, worst < 1e-10 and chunk_err < 1e-9,
           f"scalar-oracle diff {worst:.1e} (< 1e-10), chunked vs whole {chunk_err:.1e} (< 1e-9)")


@pytest.fixture(scope="module")
def experiment():
    start = time.perf_counter()
    synth = SynthConfig(frames=2500, sequences=300, ambiguous_sequences=600, train_fraction=0.5)
    result = run_roc_experiment(
        seed=0, synth=synth, arch=ArchConfig(),
        cnn_cfg=TrainConfig(epochs=10, batch_size=16, seed=0),
        lrcn_cfg=TrainConfig(epochs=5, batch_size=4, augment=False, seed=1))
    return result, time.perf_counter() - start


def test_criterion_3_synthetic_roc(experiment):
    res, elapsed = experiment
    n_test = len(res.benchmarks.ambiguity_test)
    lrcn, cnn = res.auc[("lrcn", "ambiguity")], res.auc[("cnn", "ambiguity")]
    ear_clean = res.auc[("ear", "sequences")]
    cnn_seq = res.auc[("cnn", "sequences")]
    noisy = {s: a for s, a in res.ear_noise_auc.items() if s >= 2}
    ok = (n_test >= 200 and lrcn >= cnn + 0.02 and lrcn >= 0.95 and ear_clean >= 0.95
          and all(a < cnn_seq for a in noisy.values()) and elapsed < 900)
    noise_txt = ", ".join(f"sigma {s:g}: {a:.4f}" for s, a in sorted(res.ear_noise_auc.items()))
    record(3, ok, f"{n_test} test sequences; AUC lrcn {lrcn:.4f} vs cnn {cnn:.4f}; "
                  f"EAR clean {ear_clean:.4f}, noisy EAR ({noise_txt}) vs cnn {cnn_seq:.4f}; {elapsed:.0f} s")


def test_criterion_3_ambiguous_frames_smoothed(experiment):
    """Where the frame CNN calls an ambiguous open frame closed, the LRCN calls it open."""
    res, _ = experiment
    cnn, lrcn = res.models["cnn"], res.models["lrcn"]
    amb = res.benchmarks.ambiguity_test
    hits = total = 0
    for seq, mask in zip(amb.items, amb.ambiguous):
        batch = frames_to_batch(seq.frames)
        p_cnn = cnn.predict_proba(batch)[:, 1]
        p_lrcn = lrcn.run(batch)[0][:, 1]
        sel = mask & (seq.labels == 0) & (p_cnn > 0.5)
        total += int(sel.sum())
        hits += int((p_lrcn[sel] < 0.5).sum())
    frac = hits / total if total else 0.0
    record("3 (smoothing)", total >= 10 and frac >= 0.9,
           f"LRCN < 0.5 on {hits}/{total} ambiguous open frames the CNN scores > 0.5")


def test_criterion_4_roc_correctness():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        scores = np.round(rng.normal(size=n) + labels, int(rng.integers(0, 3)))
        worst = max(worst, abs(roc(scores, labels).auc - pairwise_auc(scores, labels)))
    example = roc([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0]).auc
    record(4, worst < 1e-9 and example == 0.75,
           f"max |trapezoid - pairwise| {worst:.1e} over 100 instances, example AUC {example!r}")


def test_criterion_5_ear():
    fixture = np.array([[0, 0], [1, 1], [3, 1], [4, 0], [3, -1], [1, -1]], dtype=float)
    base = ear(fixture)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        t = SimilarityTransform(float(rng.uniform(0.05, 20)), float(rng.uniform(-np.pi, np.pi)),
                                tuple(rng.uniform(-1000, 1000, 2)))
        worst = max(worst, abs(ear(t.apply(fixture)) - 0.5))
    record(5, abs(base - 0.5) < 1e-12 and worst < 1e-9,
           f"fixture EAR {base!r}, max deviation under 1000 similarities {worst:.1e}")


def test_criterion_6_blink_accounting(tmp_path):
    fps = 25.0
    p = np.zeros(750)
    for start in range(40, 750, 90):
        p[start:start + 4] = 1.0
    blinks, _ = segment_blinks(StateSeries(p, "cnn"), fps)
    rate = blink_statistics(blinks, 30.0, fps).blinks_per_minute
    still = [LandmarkFrame(k, k / fps, face_template()) for k in range(750)]
    write_landmarks(tmp_path / "still.jsonl", still)
    code = run("analyze", "--method", "ear", "--fps", fps, "--input", tmp_path / "still.jsonl",
               "--output", tmp_path / "report")
    duty = blink_capture_probability(17, 0.25)
    record(6, len(blinks) == 8 and rate == 16.0 and code == 2 and 0.06 <= duty <= 0.09,
           f"{len(blinks)} events -> {rate!r} blinks/min; blink-free clip exit code {code}; "
           f"duty cycle {duty:.4f}")


def test_criterion_7_compositing():
    rng = np.random.default_rng(7)
    size = (96, 96)
    mask = polygon_mask(rng.uniform(20, 76, (12, 2)), size)
    warped, target = rng.uniform(size=size), rng.uniform(size=size)
    comp = blend(warped, target, mask, 0.0).composite
    outside = mask.raster == 0
    identical = comp[outside].tobytes() == target[outside].tobytes()
    kernel_err = max(abs(gaussian_kernel(s).sum() - 1.0) for s in (0.0, 0.3, 1.0, 2.0, 3.7, 6.0))
    ys, xs = np.mgrid[0:96, 0:96]
    smooth = 0.5 + 0.3 * np.sin(xs / 7.0) * np.cos(ys / 9.0) + 0.1 * np.sin((xs + ys) / 13.0)
    worst = 0.0
    for _ in range(5):
        t = SimilarityTransform(float(rng.uniform(0.9, 1.1)), float(rng.uniform(-0.3, 0.3)),
                                tuple(rng.uniform(-5, 5, 2)))
        back = warp_back(warp_back(smooth, t, np.zeros(size)), t.inverse(), np.zeros(size))
        worst = max(worst, float(np.max(np.abs(back - smooth)[24:72, 24:72])))
    record(7, identical and kernel_err < 1e-9 and worst < 2 / 255,
           f"outside-mask bytes identical: {identical}; kernel sum error {kernel_err:.1e}; "
           f"round-trip error {worst * 255:.3f}/255")


def test_criterion_8_reproducibility(tmp_path):
    a = synth_train_eval(tmp_path / "run1", seed=8)
    b = synth_train_eval(tmp_path / "run2", seed=8)
    same = {d.name: tree_bytes(x) == tree_bytes(d) for x, d in zip(a, b)}
    counts = sum(len(tree_bytes(d)) for d in a)
    record(8, all(same.values()), f"byte-identical across two runs: {same} ({counts} files)")


def test_criterion_9_schedule(tmp_path):
    cfg = write_config(tmp_path / "t.json", {**TRAIN, "cnn": {"epochs": 30}, "lrcn": {"epochs": 30, "base_lr": 0.01}})
    synth = write_config(tmp_path / "s.json", SYNTH)
    assert run("synth", "--config", synth, "--output", tmp_path / "data") == 0
    assert run("train", "--config", cfg, "--input", tmp_path / "data", "--output", tmp_path / "m") == 0
    mismatches = []
    for log in ("cnn_log.csv", "lrcn_log.csv"):
        rows = [line.split(",") for line in (tmp_path / "m" / log).read_text().splitlines()[2:]]
        assert [int(r[0]) for r in rows] == list(range(30))
        for epoch, _, lr in rows:
            exact = Fraction(1, 100) * Fraction(9, 10) ** (int(epoch) // 2)
            expected = 0.01 * 0.9 ** (int(epoch) // 2)
            if float(lr) != expected or abs(Fraction(float(lr)) - exact) > exact * Fraction(1, 10 ** 14):
                mismatches.append((log, epoch, lr))
    record(9, not mismatches, f"60 logged epochs checked against 0.01*0.9^floor(epoch/2), "
                              f"{len(mismatches)} mismatches")

