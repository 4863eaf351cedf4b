"""Eye-state classification, blink segmentation, blink statistics and the forensic verdict."""

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, ShapeError
from .geometry import ear
from .nn.models import frames_to_batch

REPORT_FORMAT_VERSION = 1


@dataclass
class StateSeries:
    p_closed: np.ndarray
    method: str
    invalid: np.ndarray = None  # frames whose input could not be scored

    def __post_init__(self):
        self.p_closed = np.asarray(self.p_closed, dtype=np.float64)
        if self.p_closed.ndim != 1:
            raise ShapeError("p_closed must be one-dimensional")
        if self.p_closed.size and (self.p_closed.min() < 0 or self.p_closed.max() > 1):
            raise ValueError("p_closed values must lie in [0, 1]")

    def __len__(self):
        return len(self.p_closed)


def _model_batch(seq, model):
    batch = frames_to_batch(seq.frames)
    if batch.shape[1:] != model.arch.input_shape:
        raise ShapeError(f"sequence frames {seq.frame_shape} (H, W, C) do not fit model input "
                         f"{model.arch.input_shape} (C, H, W)")
    return batch


def classify_cnn(seq, model):
    """Independent per-frame P(closed) from the frame classifier."""
    probs = model.predict_proba(_model_batch(seq, model))
    return StateSeries(probs[:, 1], "cnn")


def classify_lrcn(seq, model, state=None, return_state=False):
    """Causal per-frame P(closed) from the recurrent model.

    Passing the state returned by a previous call continues the recurrence, so
    a sequence may be processed in chunks.
    """
    if len(seq) < 1:
        raise ShapeError("LRCN needs at least one frame")
    probs, state = model.run(_model_batch(seq, model), state)
    series = StateSeries(probs[:, 1], "lrcn")
    return (series, state) if return_state else series


def ear_series(frames, eye="left"):
    """Per-frame EAR; NaN marks frames with degenerate eye landmarks."""
    values = np.empty(len(frames))
    for k, frame in enumerate(frames):
        try:
            values[k] = ear(frame.eye(eye))
        except DegenerateGeometryError:
            values[k] = np.nan
    return values


def windowed_median(values, window):
    """Centered running median; windows shrink at the ends and skip NaNs."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    half = window // 2
    n = len(values)
    out = np.full(n, np.nan)
    for t in range(n):
        chunk = values[max(0, t - half):t + half + 1]
        chunk = chunk[~np.isnan(chunk)]
        if chunk.size:
            out[t] = np.median(chunk)
    return out


def ear_closed_score(frames, window=3, eye="left"):
    """Continuous closedness score (negated windowed-median EAR) used for ROC sweeps."""
    med = windowed_median(ear_series(frames, eye), window)
    return -med


def classify_ear(frames, window=3, threshold=0.2, eye="left"):
    """P(closed) = 1 where the centered-window median EAR is below ``threshold``.

    Frames with degenerate landmarks score 0 (open) and are flagged in ``invalid``.
    """
    raw = ear_series(frames, eye)
    med = windowed_median(raw, window)
    invalid = np.isnan(raw)
    p = np.where(~invalid & (med < threshold), 1.0, 0.0)
    return StateSeries(p, "ear", invalid)


@dataclass
class SegmentConfig:
    enter: float = 0.6  # closed once p >= enter
    exit: float = 0.4  # open again once p <= exit
    min_dur_s: float = None  # defaults to one frame
    max_dur_s: float = 0.5

    def __post_init__(self):
        if not self.exit < self.enter:
            raise ValueError("exit threshold must be below enter threshold")


@dataclass
class BlinkEvent:
    start_frame: int
    end_frame: int
    duration_s: float

    def start_s(self, fps):
        return self.start_frame / fps

    def end_s(self, fps):
        return (self.end_frame + 1) / fps


def closed_runs(p_closed, enter=0.6, exit=0.4):
    """Maximal runs of the hysteresis 'closed' state as inclusive (start, end) frame pairs."""
    runs = []
    closed = False
    start = 0
    for t, p in enumerate(p_closed):
        if not closed and p >= enter:
            closed, start = True, t
        elif closed and p <= exit:
            closed = False
            runs.append((start, t - 1))
    if closed:
        runs.append((start, len(p_closed) - 1))
    return runs


def segment_blinks(series, fps, cfg=None):
    """Split the hysteresis-closed runs into blinks and duration anomalies.

    Returns ``(blinks, anomalies)``. Runs shorter than ``min_dur_s`` or longer
    than ``max_dur_s`` are anomalies.
    """
    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")
    cfg = cfg or SegmentConfig()
    min_dur = cfg.min_dur_s if cfg.min_dur_s is not None else 1.0 / fps
    p = series.p_closed if isinstance(series, StateSeries) else np.asarray(series, dtype=np.float64)
    blinks, anomalies = [], []
    eps = 1e-9
    for start, end in closed_runs(p, cfg.enter, cfg.exit):
        n = end - start + 1
        ev = BlinkEvent(start, end, n / fps)
        if ev.duration_s < min_dur - eps or ev.duration_s > cfg.max_dur_s + eps:
            anomalies.append(ev)
        else:
            blinks.append(ev)
    return blinks, anomalies


@dataclass
class BlinkStatistics:
    blinks_per_minute: float
    mean_duration_s: float
    max_blinkless_gap_s: float
    count: int
    total_duration_s: float


def blink_statistics(events, total_duration_s, fps):
    if not total_duration_s > 0:
        raise ValueError("total_duration_s must be positive")
    events = sorted(events, key=lambda e: e.start_frame)
    count = len(events)
    rate = 60.0 * count / total_duration_s
    mean_dur = float(np.mean([e.duration_s for e in events])) if events else 0.0
    edges = [0.0]
    for e in events:
        edges += [e.start_s(fps), e.end_s(fps)]
    edges.append(total_duration_s)
    gaps = [edges[k + 1] - edges[k] for k in range(0, len(edges), 2)]
    return BlinkStatistics(rate, mean_dur, float(max(gaps)), count, float(total_duration_s))


def blink_capture_probability(rate_per_min, mean_blink_s):
    """Approximate share of time the eyes are closed: (rate / 60) * mean blink duration, clamped to [0, 1]."""
    if rate_per_min < 0 or mean_blink_s < 0:
        raise ValueError("rate and duration must be non-negative")
    return float(min(1.0, max(0.0, rate_per_min / 60.0 * mean_blink_s)))


@dataclass
class VerdictThresholds:
    min_rate_per_min: float = 2.0
    max_gap_s: float = 15.0


AUTHENTIC = "authentic-consistent"
SUSPECT = "suspect"


@dataclass
class ForensicReport:
    verdict: str
    statistics: BlinkStatistics
    thresholds: VerdictThresholds
    events: list = field(default_factory=list)
    anomalies: list = field(default_factory=list)
    per_eye: dict = field(default_factory=dict)
    method: str = ""
    model_checksum: str = None
    fps: float = None
    config: dict = field(default_factory=dict)

    @property
    def blinks_per_minute(self):
        return self.statistics.blinks_per_minute

    @property
    def max_blinkless_gap_s(self):
        return self.statistics.max_blinkless_gap_s

    def to_dict(self):
        def events(evs):
            return [asdict(e) for e in evs]

        return {
            "format_version": REPORT_FORMAT_VERSION,
            "verdict": self.verdict,
            "method": self.method,
            "model_checksum": self.model_checksum,
            "fps": self.fps,
            "statistics": asdict(self.statistics),
            "thresholds": asdict(self.thresholds),
            "events": events(self.events),
            "anomalies": events(self.anomalies),
            "per_eye": {eye: {"events": events(v["events"]), "anomalies": events(v["anomalies"])}
                        for eye, v in self.per_eye.items()},
            "config": self.config,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def render_verdict(stats, thresholds=None, **report_fields):
    """Suspect iff the blink rate is below the minimum or the longest blink-free gap exceeds the maximum.

    Both comparisons are strict: a rate exactly at the minimum (or a gap exactly
    at the maximum) is authentic-consistent.
    """
    thresholds = thresholds or VerdictThresholds()
    suspect = (stats.blinks_per_minute < thresholds.min_rate_per_min
               or stats.max_blinkless_gap_s > thresholds.max_gap_s)
    return ForensicReport(SUSPECT if suspect else AUTHENTIC, stats, thresholds, **report_fields)


def fuse_series(series_by_eye):
    """Average P(closed) across eyes."""
    items = list(series_by_eye.values())
    lengths = {len(s) for s in items}
    if len(lengths) != 1:
        raise ShapeError(f"eye series lengths differ: {sorted(lengths)}")
    p = np.mean([s.p_closed for s in items], axis=0)
    return StateSeries(p, items[0].method)


def analyze_series(series_by_eye, fps, segment_cfg=None, thresholds=None, **report_fields):
    """Fuse the eyes, segment blinks, compute statistics and render the verdict."""
    fused = fuse_series(series_by_eye)
    blinks, anomalies = segment_blinks(fused, fps, segment_cfg)
    stats = blink_statistics(blinks, len(fused) / fps, fps)
    per_eye = {}
    for eye, s in series_by_eye.items():
        b, a = segment_blinks(s, fps, segment_cfg)
        per_eye[eye] = {"events": b, "anomalies": a}
    return render_verdict(stats, thresholds, events=blinks, anomalies=anomalies,
                          per_eye=per_eye, fps=fps, **report_fields)


def write_state_csv(path, series, fps, start_frame=0, comment=None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(["frame_index", "timestamp_s", "p_closed"])
        for k, p in enumerate(series.p_closed):
            idx = start_frame + k
            w.writerow([idx, f"{idx / fps:.6f}", f"{p:.9f}"])
