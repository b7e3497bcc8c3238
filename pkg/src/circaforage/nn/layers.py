"""Convolution and dense layers with analytic gradients.

Conventions: inputs carry a leading batch axis; convolution is stride-1 with
zero same-padding so a 5x5 input stays 5x5; kernels are stored channels-last
as (kh, kw, c_in, c_out).  Activation derivatives are computed from layer
outputs (tanh' = 1 - y^2, relu' = [y > 0]), so caches hold outputs only.
"""

from __future__ import annotations

import numpy as np


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form avoids exp overflow for large negative inputs
    return 0.5 * np.tanh(0.5 * x) + 0.5


def apply_activation(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return relu(x)
    if activation == "tanh":
        return np.tanh(x)
    if activation == "linear":
        return x
    raise ValueError(f"unknown activation {activation!r}")


def activation_grad_from_output(y: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return (y > 0).astype(np.float64)
    if activation == "tanh":
        return 1.0 - y * y
    if activation == "linear":
        return np.ones_like(y)
    raise ValueError(f"unknown activation {activation!r}")


# -- initializers -------------------------------------------------------------

def glorot_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def he_normal(shape, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def init_weight(shape, fan_in: int, fan_out: int, kind: str,
                rng: np.random.Generator) -> np.ndarray:
    if kind == "glorot_uniform":
        return glorot_uniform(shape, fan_in, fan_out, rng)
    if kind == "he_normal":
        return he_normal(shape, fan_in, rng)
    raise ValueError(f"unknown init {kind!r}")


# -- L1 + L2 weight penalty ---------------------------------------------------

def l1l2_penalty(w: np.ndarray, l1: float, l2: float) -> float:
    """l1 * sum|w| + l2 * sum w^2."""
    penalty = 0.0
    if l1:
        penalty += l1 * np.abs(w).sum()
    if l2:
        penalty += l2 * (w * w).sum()
    return penalty


def l1l2_grad(w: np.ndarray, l1: float, l2: float) -> np.ndarray:
    return l1 * np.sign(w) + 2.0 * l2 * w


# -- 2D convolution (stride 1, zero same-padding) -----------------------------

_COL_INDEX_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _col_indices(height: int, width: int, k: int) -> np.ndarray:
    """Gather indices (H*W, k*k) into the flattened zero-padded plane."""
    key = (height, width, k)
    cached = _COL_INDEX_CACHE.get(key)
    if cached is not None:
        return cached
    padded_w = width + k - 1
    idx = np.empty((height * width, k * k), dtype=np.intp)
    for i in range(height):
        for j in range(width):
            positions = [(i + ky) * padded_w + (j + kx)
                         for ky in range(k) for kx in range(k)]
            idx[i * width + j] = positions
    _COL_INDEX_CACHE[key] = idx
    return idx


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(N, H, W, C) -> (N, H*W, k*k*C) patch matrix with zero same-padding."""
    n, h, w, c = x.shape
    pad = (k - 1) // 2
    padded = np.zeros((n, h + 2 * pad, w + 2 * pad, c))
    padded[:, pad:pad + h, pad:pad + w, :] = x
    flat = padded.reshape(n, -1, c)
    cols = flat[:, _col_indices(h, w, k), :]
    return cols.reshape(n, h * w, k * k * c)


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray,
                   activation: str = "relu"):
    """x (N, H, W, Cin), kernel (k, k, Cin, Cout) -> y (N, H, W, Cout), cache."""
    n, h, w, c_in = x.shape
    k = kernel.shape[0]
    cols = _im2col(x, k)
    pre = cols @ kernel.reshape(-1, kernel.shape[-1]) + bias
    y = apply_activation(pre, activation).reshape(n, h, w, -1)
    cache = (x.shape, cols, y, activation, k)
    return y, cache


def conv2d_backward(dy: np.ndarray, kernel: np.ndarray, cache):
    """Gradients of a conv2d_forward call; returns (dx, dkernel, dbias)."""
    x_shape, cols, y, activation, k = cache
    n, h, w, c_in = x_shape
    c_out = kernel.shape[-1]
    dpre = (dy.reshape(n, h * w, c_out)
            * activation_grad_from_output(y.reshape(n, h * w, c_out), activation))
    dkernel = (cols.reshape(-1, cols.shape[-1]).T
               @ dpre.reshape(-1, c_out)).reshape(kernel.shape)
    dbias = dpre.sum(axis=(0, 1))
    # input gradient is a same-padded conv of dpre with the flipped kernel
    flipped = kernel[::-1, ::-1].transpose(0, 1, 3, 2)
    dpre_cols = _im2col(dpre.reshape(n, h, w, c_out), k)
    dx = (dpre_cols @ flipped.reshape(-1, c_in)).reshape(x_shape)
    return dx, dkernel, dbias


# -- dense --------------------------------------------------------------------

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                  activation: str = "linear"):
    """x (N, Din) -> y (N, Dout), cache."""
    y = apply_activation(x @ w + b, activation)
    return y, (x, y, activation)


def dense_backward(dy: np.ndarray, w: np.ndarray, cache):
    """Gradients of a dense_forward call; returns (dx, dw, db)."""
    x, y, activation = cache
    dpre = dy * activation_grad_from_output(y, activation)
    return dpre @ w.T, x.T @ dpre, dpre.sum(axis=0)
