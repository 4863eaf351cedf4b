"""The three-way ROC comparison (LRCN, CNN, EAR) on the synthetic benchmarks."""

import time
from dataclasses import dataclass, field

import numpy as np

from ..geometry import LandmarkFrame
from ..nn.models import frames_to_batch
from ..pipeline import ear_closed_score
from .roc import roc
from .synthetic import SynthConfig, make_synthetic_benchmarks
from .training import TrainConfig, train_cnn, train_lrcn


@dataclass
class ExperimentResult:
    auc: dict  # (method, set) -> AUC
    ear_noise_auc: dict  # landmark noise sigma (px) -> EAR AUC on the blink-sequence test set
    timings: dict
    models: dict = field(default_factory=dict)
    benchmarks: object = None


def cnn_scores(model, sset):
    return np.concatenate([model.predict_proba(frames_to_batch(s.frames))[:, 1] for s in sset.items])


def lrcn_scores(model, sset):
    return np.concatenate([model.run(frames_to_batch(s.frames))[0][:, 1] for s in sset.items])


def ear_scores(sset, window=3, noise_px=0.0, rng=None):
    parts = []
    for frames in sset.landmarks:
        if noise_px > 0:
            frames = [LandmarkFrame(f.frame_index, f.timestamp_s, f.points + rng.normal(0.0, noise_px, f.points.shape))
                      for f in frames]
        parts.append(ear_closed_score(frames, window, "left"))
    scores = np.concatenate(parts)
    # Frames without a usable EAR rank as open.
    return np.where(np.isfinite(scores), scores, np.nanmin(scores) - 1.0)


def run_roc_experiment(seed=0, synth=None, arch=None, cnn_cfg=None, lrcn_cfg=None,
                       noise_levels=(0.0, 1.0, 2.0, 3.0), ear_window=3):
    """Generate the benchmarks, train CNN then LRCN, and score every method.

    The LRCN trains on the temporal-ambiguity training split. The CNN and EAR
    baselines need no sequence training.
    """
    synth = synth or SynthConfig()
    timings = {}
    t0 = time.perf_counter()
    bench = make_synthetic_benchmarks(seed, synth)
    timings["synth_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    cnn, cnn_log = train_cnn(bench.frames_train, arch, cnn_cfg or TrainConfig(seed=seed))
    timings["cnn_train_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    lrcn, lrcn_log = train_lrcn(bench.ambiguity_train, cnn, lrcn_cfg or TrainConfig(batch_size=4, seed=seed + 1))
    timings["lrcn_train_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    auc = {}
    for set_name, sset in (("ambiguity", bench.ambiguity_test), ("sequences", bench.sequences_test)):
        labels = sset.all_labels()
        auc[("cnn", set_name)] = roc(cnn_scores(cnn, sset), labels).auc
        auc[("lrcn", set_name)] = roc(lrcn_scores(lrcn, sset), labels).auc
        auc[("ear", set_name)] = roc(ear_scores(sset, ear_window), labels).auc
    rng = np.random.default_rng(seed)
    seq_labels = bench.sequences_test.all_labels()
    noise_auc = {float(s): roc(ear_scores(bench.sequences_test, ear_window, s, rng), seq_labels).auc
                 for s in noise_levels}
    timings["eval_s"] = time.perf_counter() - t0
    return ExperimentResult(auc, noise_auc, timings,
                            {"cnn": cnn, "lrcn": lrcn, "cnn_log": cnn_log, "lrcn_log": lrcn_log}, bench)
