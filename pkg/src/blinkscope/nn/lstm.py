"""LSTM cell with forget, input and output gates, unrolled with BPTT.

The parameters keep one matrix per (gate, source) pair so that every weight
of the recurrence has its own name in checkpoints:

    f = sigmoid(W_fh h + W_fx x + b_f)
    i = sigmoid(W_ih h + W_ix x + b_i)
    g = tanh(W_ch h + W_cx x + b_c)
    C = f * C_prev + i * g
    o = sigmoid(W_oh h + W_ox x + b_o)
    h = o * tanh(C)
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .functional import sigmoid

GATES = ("f", "i", "c", "o")
PARAM_NAMES = tuple(f"W_{g}h" for g in GATES) + tuple(f"W_{g}x" for g in GATES) + tuple(
    f"b_{g}" for g in GATES)


@dataclass
class LstmState:
    cell: np.ndarray
    hidden: np.ndarray

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size), np.zeros(size))

    def copy(self):
        return LstmState(self.cell.copy(), self.hidden.copy())


def check_params(params, hidden_size=None, input_size=None):
    """Validate shapes and return (H, D)."""
    missing = [n for n in PARAM_NAMES if n not in params]
    if missing:
        raise ShapeError(f"missing LSTM parameter {missing[0]}")
    H = hidden_size if hidden_size is not None else np.shape(params["b_f"])[0]
    D = input_size if input_size is not None else np.shape(params["W_fx"])[1]
    for g in GATES:
        for name, shape in ((f"W_{g}h", (H, H)), (f"W_{g}x", (H, D)), (f"b_{g}", (H,))):
            if np.shape(params[name]) != shape:
                raise ShapeError(f"{name} has shape {np.shape(params[name])}, expected {shape}")
    return H, D


def lstm_step(prev, x_t, params):
    """Advance the cell by one time step.

    Returns the new :class:`LstmState` and the gate activations
    ``{"f", "i", "g", "o"}``.
    """
    x_t = np.asarray(x_t, dtype=np.float64).ravel()
    H = np.shape(prev.hidden)[0]
    if np.shape(prev.cell) != (H,):
        raise ShapeError(f"cell has shape {np.shape(prev.cell)}, hidden has ({H},)")
    check_params(params, H, x_t.size)
    h, c = prev.hidden, prev.cell
    f = sigmoid(params["W_fh"] @ h + params["W_fx"] @ x_t + params["b_f"])
    i = sigmoid(params["W_ih"] @ h + params["W_ix"] @ x_t + params["b_i"])
    g = np.tanh(params["W_ch"] @ h + params["W_cx"] @ x_t + params["b_c"])
    cell = f * c + i * g
    o = sigmoid(params["W_oh"] @ h + params["W_ox"] @ x_t + params["b_o"])
    hidden = o * np.tanh(cell)
    return LstmState(cell, hidden), {"f": f, "i": i, "g": g, "o": o}


class Lstm:
    """Sequence-level LSTM with stacked-gate arithmetic for speed."""

    def __init__(self, input_size, hidden_size, seed=None, forget_bias=1.0):
        self.input_size = int(input_size)
        self.hidden_size = int(hidden_size)
        H, D = self.hidden_size, self.input_size
        rng = np.random.default_rng(seed)
        self.params = {}
        lim_h = np.sqrt(6.0 / (H + H))
        lim_x = np.sqrt(6.0 / (D + H))
        for g in GATES:
            self.params[f"W_{g}h"] = rng.uniform(-lim_h, lim_h, (H, H))
            self.params[f"W_{g}x"] = rng.uniform(-lim_x, lim_x, (H, D))
        for g in GATES:
            self.params[f"b_{g}"] = np.full(H, forget_bias if g == "f" else 0.0)
        self.grads = {}

    def set_params(self, params):
        check_params(params, self.hidden_size, self.input_size)
        self.params = {n: np.asarray(params[n], dtype=np.float64).copy() for n in PARAM_NAMES}

    def _stacked(self):
        p = self.params
        wh = np.concatenate([p[f"W_{g}h"] for g in GATES])
        wx = np.concatenate([p[f"W_{g}x"] for g in GATES])
        b = np.concatenate([p[f"b_{g}"] for g in GATES])
        return wh, wx, b

    def forward(self, xs, state=None):
        """Run over ``xs`` of shape (T, D). Returns hidden states (T, H) and the final state."""
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.input_size:
            raise ShapeError(f"LSTM input must be (T, {self.input_size}), got {xs.shape}")
        H = self.hidden_size
        state = LstmState.zeros(H) if state is None else state
        wh, wx, b = self._stacked()
        ax = xs @ wx.T + b
        T = xs.shape[0]
        hs = np.empty((T, H))
        cs = np.empty((T, H))
        acts = np.empty((T, 4 * H))
        h, c = state.hidden, state.cell
        h_prev = np.empty((T, H))
        c_prev = np.empty((T, H))
        for t in range(T):
            h_prev[t], c_prev[t] = h, c
            a = ax[t] + wh @ h
            act = np.empty(4 * H)
            act[:2 * H] = sigmoid(a[:2 * H])
            act[2 * H:3 * H] = np.tanh(a[2 * H:3 * H])
            act[3 * H:] = sigmoid(a[3 * H:])
            f, i, g, o = act[:H], act[H:2 * H], act[2 * H:3 * H], act[3 * H:]
            c = f * c + i * g
            h = o * np.tanh(c)
            acts[t], cs[t], hs[t] = act, c, h
        self._cache = (xs, h_prev, c_prev, acts, cs, wh, wx)
        return hs, LstmState(c.copy(), h.copy())

    def backward(self, dhs):
        """Backpropagate through time. ``dhs`` is dLoss/dh_t for every step, shape (T, H).

        Fills ``self.grads`` and returns dLoss/dx of shape (T, D).
        """
        xs, h_prev, c_prev, acts, cs, wh, wx = self._cache
        H = self.hidden_size
        T = xs.shape[0]
        da = np.empty((T, 4 * H))
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t in range(T - 1, -1, -1):
            f, i, g, o = acts[t, :H], acts[t, H:2 * H], acts[t, 2 * H:3 * H], acts[t, 3 * H:]
            tc = np.tanh(cs[t])
            dh = dhs[t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc ** 2)
            da[t, :H] = dc * c_prev[t] * f * (1.0 - f)
            da[t, H:2 * H] = dc * g * i * (1.0 - i)
            da[t, 2 * H:3 * H] = dc * i * (1.0 - g ** 2)
            da[t, 3 * H:] = do * o * (1.0 - o)
            dc_next = dc * f
            dh_next = wh.T @ da[t]
        dwh = da.T @ h_prev
        dwx = da.T @ xs
        db = da.sum(axis=0)
        for k, g in enumerate(GATES):
            rows = slice(k * H, (k + 1) * H)
            self.grads[f"W_{g}h"] = dwh[rows]
            self.grads[f"W_{g}x"] = dwx[rows]
            self.grads[f"b_{g}"] = db[rows]
        return da @ wx
