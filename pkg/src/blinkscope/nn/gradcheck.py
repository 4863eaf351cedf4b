"""Central finite-difference verification of analytic gradients."""

from dataclasses import dataclass, field

import numpy as np

# Denominator floor for relative error. Below it O(step^2) truncation dominates
# the ratio, so tiny components are effectively held to an absolute bound.
ABS_FLOOR = 1e-4


@dataclass
class ParamReport:
    name: str
    max_rel_error: float
    flagged: list = field(default_factory=list)  # flat indices above tolerance


@dataclass
class GradCheckReport:
    step: float
    tolerance: float
    params: dict

    @property
    def passed(self):
        return all(not r.flagged for r in self.params.values())

    @property
    def max_rel_error(self):
        return max((r.max_rel_error for r in self.params.values()), default=0.0)

    def summary(self):
        lines = [f"{r.name}: max rel err {r.max_rel_error:.2e}" + (f"  FLAGGED {r.flagged[:5]}" if r.flagged else "")
                 for r in self.params.values()]
        return "\n".join(lines)


def relative_error(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), ABS_FLOOR)


def numeric_gradient(loss_fn, array, step):
    """Central differences of ``loss_fn()`` with respect to every entry of ``array`` (perturbed in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + step
        up = loss_fn()
        flat[k] = old - step
        down = loss_fn()
        flat[k] = old
        out[k] = (up - down) / (2.0 * step)
    return grad


def check_gradients(loss_fn, params, analytic, step=1e-3, tolerance=1e-4, names=None):
    """Compare ``analytic`` gradients against central differences of ``loss_fn``.

    ``params`` must be the live arrays the loss reads, so in-place perturbation
    is visible to ``loss_fn``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    reports = {}
    for name in names or sorted(params):
        numeric = numeric_gradient(loss_fn, params[name], step)
        err = relative_error(analytic[name], numeric).reshape(-1)
        flagged = [int(i) for i in np.flatnonzero(err > tolerance)]
        reports[name] = ParamReport(name, float(err.max()) if err.size else 0.0, flagged)
    return GradCheckReport(step, tolerance, reports)


def grad_check(model, inputs, labels, step=1e-3, tolerance=1e-4, seed=0, names=None, grads=None):
    """Finite-difference check for a :class:`Network`, CnnModel or LrcnModel.

    Train-mode dropout masks are drawn from a fresh ``seed`` rng on every loss
    evaluation, so all evaluations share one mask. Pass ``grads`` to check a
    precomputed (possibly corrupted) gradient map instead of recomputing it.
    """
    from .functional import batch_cross_entropy, cross_entropy_grad
    from .layers import Network
    from .models import LrcnModel

    labels = np.asarray(labels)
    if isinstance(model, LrcnModel):
        live = {**{f"lstm.{k}": v for k, v in model.lstm.params.items()},
                **{f"head.{k}": v for k, v in model.head.params.items()}}
        net, upto = model.cnn.net, model.cnn.feature_layers
        live.update({k: l.params[k.split(".", 1)[1]] for l in net.layers[:upto]
                     for k in (f"{l.name}.{p}" for p in l.params)})
        feature_input = inputs.ndim == 2 and inputs.shape[1] == model.arch.feature_dim

        def loss_fn():
            if feature_input:
                probs, _ = model.run_features(inputs)
            else:
                probs, _ = model.run(inputs)
            return batch_cross_entropy(probs, labels)

        if grads is None:
            if feature_input:
                _, grads = model.sequence_loss_and_grads(inputs, labels)
            else:
                _, grads = model.loss_and_grads(inputs, labels)
        if feature_input:
            live = {k: v for k, v in live.items() if k.startswith(("lstm.", "head."))}
    else:
        net = model if isinstance(model, Network) else model.net
        live = {f"{l.name}.{k}": v for l in net.layers for k, v in l.params.items()}

        def loss_fn():
            probs = net.forward(inputs, mode="train", rng=np.random.default_rng(seed))
            return batch_cross_entropy(probs, labels)

        if grads is None:
            probs = net.forward(inputs, mode="train", rng=np.random.default_rng(seed))
            net.backward(cross_entropy_grad(probs, labels))
            grads = {k: v.copy() for k, v in net.grads.items()}
    return check_gradients(loss_fn, live, grads, step, tolerance, names)
