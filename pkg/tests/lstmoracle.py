"""Scalar-loop LSTM cell used as an independent oracle."""

import math

from blinkscope.nn.lstm import GATES


def random_params(H, D, rng, scale=0.5):
    p = {}
    for g in GATES:
        p[f"W_{g}h"] = rng.normal(0, scale, (H, H))
        p[f"W_{g}x"] = rng.normal(0, scale, (H, D))
        p[f"b_{g}"] = rng.normal(0, scale, H)
    return p


def scalar_lstm_step(c_prev, h_prev, x, p):
    """Independent oracle: one cell update with explicit Python loops and math.* only."""
    H, D = len(h_prev), len(x)

    def pre(gate, k):
        s = p[f"b_{gate}"][k]
        for j in range(H):
            s += p[f"W_{gate}h"][k][j] * h_prev[j]
        for j in range(D):
            s += p[f"W_{gate}x"][k][j] * x[j]
        return s

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    c, h = [], []
    for k in range(H):
        f = sig(pre("f", k))
        i = sig(pre("i", k))
        g = math.tanh(pre("c", k))
        o = sig(pre("o", k))
        ck = f * c_prev[k] + i * g
        c.append(ck)
        h.append(o * math.tanh(ck))
    return c, h
