"""ROC curves with grouped tied scores and trapezoidal AUC."""

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # first entry is +inf, the (0, 0) corner
    auc: float
    n_pos: int
    n_neg: int

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))

    def write_csv(self, path, comment=None):
        """One row per curve point; an optional ``# comment`` line precedes the header."""
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(["threshold", "fpr", "tpr"])
            for thr, f, t in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow(["inf" if np.isinf(thr) else repr(float(thr)), repr(float(f)), repr(float(t))])

    def summary(self):
        return {"auc": self.auc, "n_pos": self.n_pos, "n_neg": self.n_neg}


def roc(scores, labels):
    """Sweep thresholds over the unique scores, highest first; predict positive when score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.size} scores but {labels.size} labels")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # Last index of each run of equal scores.
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tp[last] / n_pos]
    fpr = np.r_[0.0, fp[last] / n_neg]
    thr = np.r_[np.inf, s[last]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thr, auc, n_pos, n_neg)


def write_summary(path, curves, extra=None):
    """JSON summary with methods ordered by AUC, best first."""
    ranked = sorted(curves.items(), key=lambda kv: (-kv[1].auc, kv[0]))
    doc = {"methods": [dict(method=name, **c.summary()) for name, c in ranked]}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return doc
