"""Parameter update rules and the step-decay learning-rate schedule."""

import math

import numpy as np


def lr_schedule(base_lr, epoch, decay=0.9, every=2):
    """``base_lr * decay ** floor(epoch / every)``; 0.01 decayed by 0.9 every 2 epochs by default."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return base_lr * decay ** (epoch // every)


def _aligned(params, grads):
    for name in params:
        if name not in grads:
            raise KeyError(f"no gradient for parameter {name!r}")


class Sgd:
    """Plain SGD, with optional heavy-ball momentum (v = m*v + g; theta -= lr*v)."""

    def __init__(self, momentum=0.0):
        self.momentum = momentum
        self.velocity = {}

    def update(self, params, grads, lr):
        _aligned(params, grads)
        out = {}
        for name, theta in params.items():
            g = grads[name]
            if self.momentum:
                v = self.momentum * self.velocity.get(name, 0.0) + g
                self.velocity[name] = v
                g = v
            out[name] = theta - lr * g
        return out


class Adam:
    """Adam with bias-corrected first and second moments."""

    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {}
        self.v = {}

    def update(self, params, grads, lr):
        _aligned(params, grads)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        out = {}
        for name, theta in params.items():
            g = grads[name]
            m = self.beta1 * self.m.get(name, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self.v.get(name, 0.0) + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            out[name] = theta - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return out


def sgd_update(params, grads, lr, momentum=0.0, optimizer=None):
    """One SGD step; pass the same ``optimizer`` across calls to keep momentum."""
    return (optimizer or Sgd(momentum)).update(params, grads, lr)


def adam_update(params, grads, lr, optimizer):
    """One Adam step using (and advancing) the moment state held by ``optimizer``."""
    return optimizer.update(params, grads, lr)


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
