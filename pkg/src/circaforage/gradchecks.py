"""End-to-end gradient verification suite.

Probes every analytic backward pass against central finite differences:
the convolution, dense layers, all three recurrent cells over a 10-step
BPTT window, the dueling heads, and the complete TD loss (network forward,
dueling combine, squared error on taken actions) on a small toy problem.
Random probes are drawn from fixed seeds chosen away from ReLU kinks.
"""

from __future__ import annotations

import numpy as np

from .nn.gradcheck import GradCheckReport, numeric_gradient, relative_error
from .nn.layers import (conv2d_backward, conv2d_forward, dense_backward,
                        dense_forward)
from .nn.recurrent import sequence_backward, sequence_forward
from .qnet import NetworkConfig, forward_batch, backward_batch, init_params
from .training import compute_targets, loss_and_gradients

TOLERANCE = 1e-4


def _check_op(report, name, loss_fn, named_arrays, analytic):
    for array_name, array in named_arrays:
        numeric = numeric_gradient(loss_fn, array)
        report.record(f"{name}.{array_name}",
                      relative_error(analytic[array_name], numeric))


def check_conv(report: GradCheckReport, seed: int = 11):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (3, 5, 5, 2))
    kernel = rng.normal(0.0, 0.4, (3, 3, 2, 6))
    bias = rng.normal(0.0, 0.1, 6)
    proj = rng.normal(0.0, 1.0, (3, 5, 5, 6))

    def loss():
        y, _ = conv2d_forward(x, kernel, bias, "relu")
        return float((y * proj).sum())

    _, cache = conv2d_forward(x, kernel, bias, "relu")
    dx, dk, db = conv2d_backward(proj, kernel, cache)
    _check_op(report, "conv2d", loss,
              [("kernel", kernel), ("bias", bias), ("input", x)],
              {"kernel": dk, "bias": db, "input": dx})


def check_dense(report: GradCheckReport, seed: int = 12):
    rng = np.random.default_rng(seed)
    for activation in ("tanh", "relu", "linear"):
        x = rng.uniform(-1.0, 1.0, (4, 7))
        w = rng.normal(0.0, 0.5, (7, 3))
        b = rng.normal(0.0, 0.1, 3)
        proj = rng.normal(0.0, 1.0, (4, 3))

        def loss():
            y, _ = dense_forward(x, w, b, activation)
            return float((y * proj).sum())

        _, cache = dense_forward(x, w, b, activation)
        dx, dw, db = dense_backward(proj, w, cache)
        _check_op(report, f"dense[{activation}]", loss,
                  [("w", w), ("b", b), ("x", x)],
                  {"w": dw, "b": db, "x": dx})


def check_recurrent(report: GradCheckReport, steps: int = 10, seed: int = 13):
    rng = np.random.default_rng(seed)
    mult = {"lstm": 4, "gru": 3, "rnn": 1}
    for kind in ("lstm", "gru", "rnn"):
        d, width, batch = 6, 5, 3
        x = rng.uniform(-1.0, 1.0, (steps, batch, d))
        wx = rng.normal(0.0, 0.4, (d, mult[kind] * width))
        wh = rng.normal(0.0, 0.4, (width, mult[kind] * width))
        b = rng.normal(0.0, 0.1, mult[kind] * width)
        proj = rng.normal(0.0, 1.0, (steps, batch, width))

        def loss():
            h = sequence_forward(kind, x, wx, wh, b)
            return float((h * proj).sum())

        _, cache = sequence_forward(kind, x, wx, wh, b, with_cache=True)
        dx, dwx, dwh, db = sequence_backward(kind, proj, wx, wh, cache)
        _check_op(report, f"{kind}_bptt{steps}", loss,
                  [("wx", wx), ("wh", wh), ("b", b), ("x", x)],
                  {"wx": dwx, "wh": dwh, "b": db, "x": dx})


def _toy_batch(config: NetworkConfig, steps: int, batch: int, seed: int):
    rng = np.random.default_rng(seed)
    spatial = np.zeros((steps, batch, 5, 5, 2))
    extra = np.zeros((steps, batch, 5))
    for t in range(steps):
        for b in range(batch):
            spatial[t, b, rng.integers(5), rng.integers(5), 0] = 1.0
            spatial[t, b, rng.integers(3), rng.integers(3), 1] = 1.0
            extra[t, b, 0] = rng.integers(2)
            extra[t, b, 1 + rng.integers(4)] = 1.0
    actions = rng.integers(0, 5, (steps, batch))
    rewards = rng.choice(np.array([0.0, 1.0, -2.5, -1.5]), (steps, batch))
    return spatial, extra, actions, rewards


def check_full_loss(report: GradCheckReport, seed: int = 14):
    """TD loss through the whole network (dueling heads included) on a
    5-step, width-4 toy configuration."""
    config = NetworkConfig(fc_widths=(6, 4), recurrent_width=4)
    online = init_params(config, seed)
    target = init_params(config, seed + 1)
    rng = np.random.default_rng(seed + 2)
    for params in (online, target):
        # zero-initialized biases put ReLU pre-activations exactly on the
        # kink; nudge every bias off it so central differences are valid
        for name in params.names():
            if name.endswith(".b") or name.endswith("value.b") or name.endswith("adv.b"):
                params[name].value += rng.normal(0.05, 0.02,
                                                 params[name].value.shape)
    spatial, extra, actions, rewards = _toy_batch(config, steps=5, batch=2,
                                                  seed=seed)
    y = compute_targets(target, spatial, extra, rewards, gamma=0.99)

    def loss():
        out = forward_batch(online, spatial, extra, onehot=True)
        q_taken = np.take_along_axis(out.q, actions[:, :, None], axis=2)[:, :, 0]
        return float(((q_taken - y) ** 2).mean())

    loss_and_gradients(online, spatial, extra, actions, y)
    analytic = {name: p.grad.copy() for name, p in online.arrays.items()}
    _check_op(report, "td_loss", loss,
              [(name, online[name].value) for name in online.names()],
              analytic)


def run_gradcheck_suite(tolerance: float = TOLERANCE) -> GradCheckReport:
    report = GradCheckReport(tolerance=tolerance)
    check_conv(report)
    check_dense(report)
    check_recurrent(report)
    check_full_loss(report)
    return report
