"""Parameter update rules: SGD, Adam and RMSprop.

Optimizers keep per-array state keyed by parameter name and apply updates
in place.  Defaults follow the usual conventions: Adam with beta1 = 0.9,
beta2 = 0.999, eps = 1e-8; RMSprop with decay 0.9 and eps = 1e-7.
"""

from __future__ import annotations

import numpy as np


class SGD:
    kind = "sgd"

    def __init__(self, lr: float):
        self.lr = lr

    def apply(self, named_params):
        for name, value, grad in named_params:
            value -= self.lr * grad


class Adam:
    kind = "adam"

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def apply(self, named_params):
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, value, grad in named_params:
            m = self.m.setdefault(name, np.zeros_like(value))
            v = self.v.setdefault(name, np.zeros_like(value))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


class RMSprop:
    kind = "rmsprop"

    def __init__(self, lr: float, rho: float = 0.9, eps: float = 1e-7):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.cache: dict[str, np.ndarray] = {}

    def apply(self, named_params):
        for name, value, grad in named_params:
            cache = self.cache.setdefault(name, np.zeros_like(value))
            cache *= self.rho
            cache += (1.0 - self.rho) * grad * grad
            value -= self.lr * grad / (np.sqrt(cache) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    if kind == "rmsprop":
        return RMSprop(lr)
    raise ValueError(f"unknown optimizer {kind!r}")
