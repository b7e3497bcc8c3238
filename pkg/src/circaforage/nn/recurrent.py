"""Recurrent cells: LSTM, GRU and vanilla RNN, with full-sequence BPTT.

Sequences are time-major (T, B, D).  Each cell packs its input and recurrent
weight matrices gate-wise along the last axis:

  lstm: wx (D, 4H), wh (H, 4H), gate order (input, forget, output, candidate);
        c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
  gru:  wx (D, 3H), wh (H, 3H), gate order (update, reset, candidate);
        candidate sees the reset-gated state, h_t = z * h_{t-1} + (1 - z) * hh
  rnn:  wx (D, H), wh (H, H);  h_t = tanh(x wx + h_{t-1} wh + b)

The recorded per-step activation is the hidden state h_t.  Backward passes
accumulate gradients across all time steps of the sequence, with the
per-step weight contributions batched into single matrix products.
"""

from __future__ import annotations

import os

import numpy as np

from . import NumericError
from .layers import sigmoid

try:  # optional compiled fast path; the numpy loops below stay the reference
    if os.environ.get("CIRCAFORAGE_NO_JIT"):
        raise ImportError
    from . import _lstm_jit
except ImportError:
    _lstm_jit = None

CELL_KINDS = ("lstm", "gru", "rnn")

_GATE_MULT = {"lstm": 4, "gru": 3, "rnn": 1}


def recurrent_param_shapes(kind: str, input_dim: int, width: int):
    """Shapes of (wx, wh, b) for the given cell kind."""
    if kind not in CELL_KINDS:
        raise ValueError(f"unknown cell kind {kind!r}")
    mult = _GATE_MULT[kind]
    return (input_dim, mult * width), (width, mult * width), (mult * width,)


def zero_state(kind: str, batch: int, width: int):
    h = np.zeros((batch, width))
    if kind == "lstm":
        return h, np.zeros((batch, width))
    return (h,)


def single_step(kind: str, x_t: np.ndarray, state, wx, wh, b):
    """One recurrent step; returns (h_t, new_state).  x_t is (B, D)."""
    if kind == "lstm":
        h_prev, c_prev = state
        width = h_prev.shape[1]
        z = x_t @ wx + h_prev @ wh + b
        ifo = sigmoid(z[:, :3 * width])
        i = ifo[:, :width]
        f = ifo[:, width:2 * width]
        o = ifo[:, 2 * width:]
        g = np.tanh(z[:, 3 * width:])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        return h, (h, c)
    if kind == "gru":
        (h_prev,) = state
        width = h_prev.shape[1]
        zx = x_t @ wx + b
        zr = sigmoid(zx[:, :2 * width] + h_prev @ wh[:, :2 * width])
        z = zr[:, :width]
        r = zr[:, width:]
        hh = np.tanh(zx[:, 2 * width:] + (r * h_prev) @ wh[:, 2 * width:])
        h = z * h_prev + (1.0 - z) * hh
        return h, (h,)
    if kind == "rnn":
        (h_prev,) = state
        h = np.tanh(x_t @ wx + h_prev @ wh + b)
        return h, (h,)
    raise ValueError(f"unknown cell kind {kind!r}")


def sequence_forward(kind: str, x: np.ndarray, wx, wh, b, with_cache: bool = False):
    """Run a full sequence from a zero initial state.

    x is (T, B, D); returns h (T, B, H) and, with ``with_cache``, the
    intermediates needed by :func:`sequence_backward`.
    """
    if kind == "lstm":
        return _lstm_forward(x, wx, wh, b, with_cache)
    if kind == "gru":
        return _gru_forward(x, wx, wh, b, with_cache)
    if kind == "rnn":
        return _rnn_forward(x, wx, wh, b, with_cache)
    raise ValueError(f"unknown cell kind {kind!r}")


def sequence_backward(kind: str, dh: np.ndarray, wx, wh, cache):
    """Backpropagation through time over a cached forward pass.

    dh is the loss gradient w.r.t. every hidden state (T, B, H); returns
    (dx, dwx, dwh, db) with gradients accumulated over all steps.
    """
    if kind == "lstm":
        return _lstm_backward(dh, wx, wh, cache)
    if kind == "gru":
        return _gru_backward(dh, wx, wh, cache)
    if kind == "rnn":
        return _rnn_backward(dh, wx, wh, cache)
    raise ValueError(f"unknown cell kind {kind!r}")


def _check_finite(h: np.ndarray, kind: str):
    if not np.isfinite(h).all():
        raise NumericError(f"non-finite activations in {kind} forward pass")


# -- LSTM ----------------------------------------------------------------------
# The sequence loop runs millions of times during training, so the per-step
# body reuses preallocated buffers and writes through ``out=`` instead of
# allocating; gate activations go straight into the cache arrays.

def _lstm_forward(x, wx, wh, b, with_cache):
    steps, batch, _ = x.shape
    width = wh.shape[0]
    zx = x.reshape(steps * batch, -1) @ wx
    zx += b
    zx = zx.reshape(steps, batch, 4 * width)
    h = np.empty((steps, batch, width))
    c = np.empty((steps, batch, width))
    tc = np.empty((steps, batch, width))
    gates = np.empty((steps, batch, 4 * width))
    if _lstm_jit is not None:
        _lstm_jit.lstm_loop_forward(zx, wh, h, c, tc, gates)
        _check_finite(h, "lstm")
        if not with_cache:
            return h
        return h, (x, gates, c, tc, h)
    z = np.empty((batch, 4 * width))
    tmp = np.empty((batch, width))
    h_prev = np.zeros((batch, width))
    c_prev = np.zeros((batch, width))
    with np.errstate(over="ignore"):  # exp overflow saturates gates to 0
        for t in range(steps):
            np.matmul(h_prev, wh, out=z)
            z += zx[t]
            gt = gates[t]
            ifo = gt[:, :3 * width]
            np.negative(z[:, :3 * width], out=ifo)
            np.exp(ifo, out=ifo)
            ifo += 1.0
            np.reciprocal(ifo, out=ifo)
            g = gt[:, 3 * width:]
            np.tanh(z[:, 3 * width:], out=g)
            ct = c[t]
            np.multiply(gt[:, width:2 * width], c_prev, out=ct)
            np.multiply(gt[:, :width], g, out=tmp)
            ct += tmp
            np.tanh(ct, out=tc[t])
            ht = h[t]
            np.multiply(gt[:, 2 * width:3 * width], tc[t], out=ht)
            h_prev = ht
            c_prev = ct
    _check_finite(h, "lstm")
    if not with_cache:
        return h
    return h, (x, gates, c, tc, h)


def _lstm_backward(dh, wx, wh, cache):
    x, gates, c, tc, h = cache
    steps, batch, width = dh.shape
    dz = np.empty((steps, batch, 4 * width))
    if _lstm_jit is not None:
        _lstm_jit.lstm_loop_backward(dh, np.ascontiguousarray(wh.T),
                                     gates, c, tc, dz)
        return _lstm_weight_grads(x, dz, h, wx)
    dh_carry = np.zeros((batch, width))
    dc = np.zeros((batch, width))
    dh_t = np.empty((batch, width))
    tmp = np.empty((batch, width))
    deriv = np.empty((batch, 3 * width))
    zeros = np.zeros((batch, width))
    for t in range(steps - 1, -1, -1):
        gt = gates[t]
        i = gt[:, :width]
        f = gt[:, width:2 * width]
        o = gt[:, 2 * width:3 * width]
        g = gt[:, 3 * width:]
        tc_t = tc[t]
        c_prev = c[t - 1] if t > 0 else zeros
        np.add(dh[t], dh_carry, out=dh_t)
        # dc += dh * o * (1 - tanh(c)^2)
        np.multiply(tc_t, tc_t, out=tmp)
        np.subtract(1.0, tmp, out=tmp)
        tmp *= o
        tmp *= dh_t
        dc += tmp
        ifo = gt[:, :3 * width]
        np.subtract(1.0, ifo, out=deriv)
        deriv *= ifo
        dz_t = dz[t]
        np.multiply(dc, g, out=dz_t[:, :width])
        np.multiply(dc, c_prev, out=dz_t[:, width:2 * width])
        np.multiply(dh_t, tc_t, out=dz_t[:, 2 * width:3 * width])
        dz_t[:, :3 * width] *= deriv
        dzg = dz_t[:, 3 * width:]
        np.multiply(g, g, out=dzg)
        np.subtract(1.0, dzg, out=dzg)
        dzg *= dc
        dzg *= i
        dc *= f
        np.matmul(dz_t, wh.T, out=dh_carry)
    return _lstm_weight_grads(x, dz, h, wx)


def _lstm_weight_grads(x, dz, h, wx):
    steps, batch, width = h.shape
    h_prev = np.concatenate([np.zeros((1, batch, width)), h[:-1]], axis=0)
    flat_dz = dz.reshape(steps * batch, 4 * width)
    dwx = x.reshape(steps * batch, -1).T @ flat_dz
    dwh = h_prev.reshape(steps * batch, width).T @ flat_dz
    db = flat_dz.sum(axis=0)
    dx = (flat_dz @ wx.T).reshape(x.shape)
    return dx, dwx, dwh, db


# -- GRU -----------------------------------------------------------------------

def _gru_forward(x, wx, wh, b, with_cache):
    steps, batch, _ = x.shape
    width = wh.shape[0]
    zx = (x.reshape(steps * batch, -1) @ wx + b).reshape(steps, batch, 3 * width)
    h = np.empty((steps, batch, width))
    gates = np.empty((steps, batch, 2 * width))
    cand = np.empty((steps, batch, width))
    rh = np.empty((steps, batch, width))
    h_prev = np.zeros((batch, width))
    for t in range(steps):
        zr = sigmoid(zx[t, :, :2 * width] + h_prev @ wh[:, :2 * width])
        gates[t] = zr
        z = zr[:, :width]
        r = zr[:, width:]
        rh[t] = r * h_prev
        hh = np.tanh(zx[t, :, 2 * width:] + rh[t] @ wh[:, 2 * width:])
        cand[t] = hh
        h_prev = z * h_prev + (1.0 - z) * hh
        h[t] = h_prev
    _check_finite(h, "gru")
    if not with_cache:
        return h
    return h, (x, gates, cand, rh, h)


def _gru_backward(dh, wx, wh, cache):
    x, gates, cand, rh, h = cache
    steps, batch, width = dh.shape
    dz = np.empty((steps, batch, 3 * width))
    dh_carry = np.zeros((batch, width))
    zeros = np.zeros((batch, width))
    for t in range(steps - 1, -1, -1):
        z = gates[t, :, :width]
        r = gates[t, :, width:]
        hh = cand[t]
        h_prev = h[t - 1] if t > 0 else zeros
        dh_t = dh[t] + dh_carry
        dhh_pre = dh_t * (1.0 - z) * (1.0 - hh * hh)
        drh = dhh_pre @ wh[:, 2 * width:].T
        dz_gate = dh_t * (h_prev - hh) * z * (1.0 - z)
        dr_gate = drh * h_prev * r * (1.0 - r)
        dz_t = dz[t]
        dz_t[:, :width] = dz_gate
        dz_t[:, width:2 * width] = dr_gate
        dz_t[:, 2 * width:] = dhh_pre
        dh_carry = (dh_t * z + drh * r
                    + dz_t[:, :2 * width] @ wh[:, :2 * width].T)
    h_prev = np.concatenate([np.zeros((1, batch, width)), h[:-1]], axis=0)
    flat_dz = dz.reshape(steps * batch, 3 * width)
    dwx = x.reshape(steps * batch, -1).T @ flat_dz
    dwh = np.empty_like(wh)
    dwh[:, :2 * width] = (h_prev.reshape(steps * batch, width).T
                          @ flat_dz[:, :2 * width])
    dwh[:, 2 * width:] = (rh.reshape(steps * batch, width).T
                          @ flat_dz[:, 2 * width:])
    db = flat_dz.sum(axis=0)
    dx = (flat_dz @ wx.T).reshape(x.shape)
    return dx, dwx, dwh, db


# -- vanilla RNN -----------------------------------------------------------------

def _rnn_forward(x, wx, wh, b, with_cache):
    steps, batch, _ = x.shape
    width = wh.shape[0]
    zx = (x.reshape(steps * batch, -1) @ wx + b).reshape(steps, batch, width)
    h = np.empty((steps, batch, width))
    h_prev = np.zeros((batch, width))
    for t in range(steps):
        h_prev = np.tanh(zx[t] + h_prev @ wh)
        h[t] = h_prev
    _check_finite(h, "rnn")
    if not with_cache:
        return h
    return h, (x, h)


def _rnn_backward(dh, wx, wh, cache):
    x, h = cache
    steps, batch, width = dh.shape
    dz = np.empty((steps, batch, width))
    dh_carry = np.zeros((batch, width))
    for t in range(steps - 1, -1, -1):
        dz[t] = (dh[t] + dh_carry) * (1.0 - h[t] * h[t])
        dh_carry = dz[t] @ wh.T
    h_prev = np.concatenate([np.zeros((1, batch, width)), h[:-1]], axis=0)
    flat_dz = dz.reshape(steps * batch, width)
    dwx = x.reshape(steps * batch, -1).T @ flat_dz
    dwh = h_prev.reshape(steps * batch, width).T @ flat_dz
    db = flat_dz.sum(axis=0)
    dx = (flat_dz @ wx.T).reshape(x.shape)
    return dx, dwx, dwh, db
