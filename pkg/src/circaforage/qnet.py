"""Dueling recurrent Q-network.

Pipeline per time step: the 5x5x2 spatial observation runs through a
ReLU-activated 3x3 convolution (6 output channels, same padding), is
flattened and concatenated with the daylight bit and orientation one-hot,
passes two tanh dense layers and one recurrent layer (LSTM by default), and
splits into a scalar state-value head and a 5-way advantage head.  The two
estimates combine as

    q_i = v + a_i - max_j a_j

so the greedy action's Q equals the state value exactly.  The recurrent
hidden state h_t is the step's recorded activation; sequences always start
from a zero state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import NumericError
from .nn.layers import (conv2d_backward, conv2d_forward, dense_backward,
                        dense_forward, init_weight)
from .nn.recurrent import (recurrent_param_shapes, sequence_backward,
                           sequence_forward, single_step, zero_state)

GRID_SHAPE = (5, 5, 2)
EXTRA_DIM = 5
N_ACTIONS = 5


@dataclass(frozen=True)
class NetworkConfig:
    conv_channels: int = 6
    conv_kernel: int = 3
    fc_widths: tuple[int, int] = (32, 32)
    recurrent_kind: str = "lstm"
    recurrent_width: int = 128
    head_activation: str = "relu"
    init: str = "glorot_uniform"
    l1: float = 0.0
    l2: float = 0.0

    @property
    def conv_flat_dim(self) -> int:
        return GRID_SHAPE[0] * GRID_SHAPE[1] * self.conv_channels

    @property
    def merged_dim(self) -> int:
        return self.conv_flat_dim + EXTRA_DIM

    def to_dict(self) -> dict:
        return {
            "conv_channels": self.conv_channels,
            "conv_kernel": self.conv_kernel,
            "fc_widths": ",".join(str(w) for w in self.fc_widths),
            "recurrent_kind": self.recurrent_kind,
            "recurrent_width": self.recurrent_width,
            "head_activation": self.head_activation,
            "init": self.init,
            "l1": self.l1,
            "l2": self.l2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            conv_channels=int(d["conv_channels"]),
            conv_kernel=int(d["conv_kernel"]),
            fc_widths=tuple(int(w) for w in str(d["fc_widths"]).split(",")),
            recurrent_kind=d["recurrent_kind"],
            recurrent_width=int(d["recurrent_width"]),
            head_activation=d["head_activation"],
            init=d["init"],
            l1=float(d["l1"]),
            l2=float(d["l2"]),
        )


@dataclass
class ParamArray:
    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)


class NetworkParams:
    """Ordered, named parameter arrays plus the architecture they belong to."""

    def __init__(self, config: NetworkConfig, arrays: dict[str, ParamArray]):
        self.config = config
        self.arrays = arrays

    def __getitem__(self, name: str) -> ParamArray:
        return self.arrays[name]

    def names(self):
        return list(self.arrays)

    def named_values(self):
        return [(p.name, p.value) for p in self.arrays.values()]

    def named_for_update(self):
        return [(p.name, p.value, p.grad) for p in self.arrays.values()]

    def zero_grads(self):
        for p in self.arrays.values():
            p.grad[...] = 0.0

    def clone(self) -> "NetworkParams":
        arrays = {name: ParamArray(name, p.value.copy(), np.zeros_like(p.value))
                  for name, p in self.arrays.items()}
        return NetworkParams(self.config, arrays)

    def copy_values_from(self, other: "NetworkParams"):
        for name, p in self.arrays.items():
            p.value[...] = other.arrays[name].value


def init_params(config: NetworkConfig, seed: int) -> NetworkParams:
    """Deterministic initialization; forget-gate biases start at 1.0."""
    rng = np.random.default_rng(seed)
    k = config.conv_kernel
    c_out = config.conv_channels
    fc1, fc2 = config.fc_widths
    width = config.recurrent_width
    arrays: dict[str, ParamArray] = {}

    def add(name, value):
        arrays[name] = ParamArray(name, value)

    def weight(name, shape, fan_in, fan_out):
        add(name, init_weight(shape, fan_in, fan_out, config.init, rng))

    weight("conv.w", (k, k, GRID_SHAPE[2], c_out),
           k * k * GRID_SHAPE[2], k * k * c_out)
    add("conv.b", np.zeros(c_out))
    weight("fc1.w", (config.merged_dim, fc1), config.merged_dim, fc1)
    add("fc1.b", np.zeros(fc1))
    weight("fc2.w", (fc1, fc2), fc1, fc2)
    add("fc2.b", np.zeros(fc2))
    wx_shape, wh_shape, b_shape = recurrent_param_shapes(
        config.recurrent_kind, fc2, width)
    weight("rec.wx", wx_shape, wx_shape[0], wx_shape[1])
    weight("rec.wh", wh_shape, wh_shape[0], wh_shape[1])
    rec_b = np.zeros(b_shape)
    if config.recurrent_kind == "lstm":
        rec_b[width:2 * width] = 1.0
    add("rec.b", rec_b)
    weight("value.w", (width, 1), width, 1)
    add("value.b", np.zeros(1))
    weight("adv.w", (width, N_ACTIONS), width, N_ACTIONS)
    add("adv.b", np.zeros(N_ACTIONS))
    return NetworkParams(config, arrays)


def dueling_combine(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """q_i = v + (a_i - max_j a_j), broadcast over leading axes.

    The advantage gap is formed before adding v so the greedy action's Q
    equals the state value exactly, not merely up to rounding.
    """
    return v + (a - a.max(axis=-1, keepdims=True))


def select_action(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over a 5-vector; greedy ties break to the lowest index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(q))


@dataclass
class SequenceOutputs:
    """Per-step network outputs, time-major: q (T,B,5), v (T,B), a (T,B,5),
    recurrent activation h (T,B,W)."""
    q: np.ndarray
    v: np.ndarray
    a: np.ndarray
    h: np.ndarray


# One-hot shortcut for the observation convolution: each spatial channel
# holds exactly one 1, so the pre-activation map is the kernel "stamped"
# around the hot cell of each channel.  Numerically equal to conv2d_forward
# up to float addition order; the generic path remains the tested oracle.

_CELL_R = np.arange(GRID_SHAPE[0] * GRID_SHAPE[1]) // GRID_SHAPE[1]
_CELL_C = np.arange(GRID_SHAPE[0] * GRID_SHAPE[1]) % GRID_SHAPE[1]
_KY = _CELL_R[:, None] - np.arange(GRID_SHAPE[0])[None, :] + 1   # (25, 5)
_KX = _CELL_C[:, None] - np.arange(GRID_SHAPE[1])[None, :] + 1
_STAMP_VALID = (((_KY >= 0) & (_KY <= 2))[:, :, None]
                & ((_KX >= 0) & (_KX <= 2))[:, None, :]).astype(np.float64)[..., None]
_KYC = np.clip(_KY, 0, 2)
_KXC = np.clip(_KX, 0, 2)
_BACK_OFF = 3 - np.arange(3)


def _conv_onehot_forward(spatial_flat: np.ndarray, kernel: np.ndarray,
                         bias: np.ndarray):
    m = spatial_flat.shape[0]
    n_cells = GRID_SHAPE[0] * GRID_SHAPE[1]
    agent_idx = spatial_flat[:, :, :, 0].reshape(m, n_cells).argmax(axis=1)
    food_idx = spatial_flat[:, :, :, 1].reshape(m, n_cells).argmax(axis=1)
    stamp0 = kernel[_KYC[:, :, None], _KXC[:, None, :], 0, :] * _STAMP_VALID
    stamp1 = kernel[_KYC[:, :, None], _KXC[:, None, :], 1, :] * _STAMP_VALID
    pre = stamp0[agent_idx]
    pre += stamp1[food_idx]
    pre += bias
    np.maximum(pre, 0.0, out=pre)
    return pre, (agent_idx, food_idx, pre)


def _conv_onehot_backward(dy: np.ndarray, cache):
    agent_idx, food_idx, y = cache
    dpre = dy * (y > 0)
    dbias = dpre.sum(axis=(0, 1, 2))
    m, _, _, c_out = dpre.shape
    padded = np.zeros((m, 9, 9, c_out))
    padded[:, 2:7, 2:7, :] = dpre
    dkernel = np.empty((3, 3, 2, c_out))
    sample = np.arange(m)[:, None, None]
    for ch, idx in ((0, agent_idx), (1, food_idx)):
        rows = (idx // GRID_SHAPE[1])[:, None] + _BACK_OFF
        cols = (idx % GRID_SHAPE[1])[:, None] + _BACK_OFF
        gathered = padded[sample, rows[:, :, None], cols[:, None, :], :]
        dkernel[:, :, ch, :] = gathered.sum(axis=0)
    return dkernel, dbias


def _features_forward(params: NetworkParams, spatial_flat: np.ndarray,
                      extra_flat: np.ndarray, onehot: bool = False):
    """(M,5,5,2)+(M,5) -> recurrent input (M, fc2) plus layer caches.

    ``onehot`` may only be set when each spatial channel is an exact one-hot
    grid (true for every encoded observation).
    """
    if onehot:
        conv_out, conv_cache = _conv_onehot_forward(
            spatial_flat, params["conv.w"].value, params["conv.b"].value)
    else:
        conv_out, conv_cache = conv2d_forward(
            spatial_flat, params["conv.w"].value, params["conv.b"].value, "relu")
    m = conv_out.shape[0]
    merged = np.empty((m, params.config.merged_dim))
    merged[:, :params.config.conv_flat_dim] = conv_out.reshape(m, -1)
    merged[:, params.config.conv_flat_dim:] = extra_flat
    fc1_out, fc1_cache = dense_forward(
        merged, params["fc1.w"].value, params["fc1.b"].value, "tanh")
    fc2_out, fc2_cache = dense_forward(
        fc1_out, params["fc2.w"].value, params["fc2.b"].value, "tanh")
    return fc2_out, (onehot, conv_cache, fc1_cache, fc2_cache)


def _heads_forward(params: NetworkParams, feat: np.ndarray):
    act = params.config.head_activation
    v_out, v_cache = dense_forward(
        feat, params["value.w"].value, params["value.b"].value, act)
    a_out, a_cache = dense_forward(
        feat, params["adv.w"].value, params["adv.b"].value, act)
    q = dueling_combine(v_out, a_out)
    return q, v_out, a_out, (v_cache, a_cache)


def forward_batch(params: NetworkParams, spatial: np.ndarray, extra: np.ndarray,
                  with_cache: bool = False, onehot: bool = False):
    """Full forward over a batch of sequences.

    spatial is time-major (T, B, 5, 5, 2), extra (T, B, 5).  Returns
    ``SequenceOutputs`` and, when requested, the cache consumed by
    :func:`backward_batch`.
    """
    steps, batch = spatial.shape[:2]
    cfg = params.config
    feat, feat_caches = _features_forward(
        params, spatial.reshape(steps * batch, *GRID_SHAPE),
        extra.reshape(steps * batch, EXTRA_DIM), onehot=onehot)
    rec_in = feat.reshape(steps, batch, -1)
    rec_result = sequence_forward(cfg.recurrent_kind, rec_in,
                                  params["rec.wx"].value,
                                  params["rec.wh"].value,
                                  params["rec.b"].value,
                                  with_cache=with_cache)
    h, rec_cache = rec_result if with_cache else (rec_result, None)
    h_flat = h.reshape(steps * batch, cfg.recurrent_width)
    q, v_out, a_out, head_caches = _heads_forward(params, h_flat)
    if not np.isfinite(q).all():
        raise NumericError("non-finite Q values in forward pass")
    outputs = SequenceOutputs(
        q=q.reshape(steps, batch, N_ACTIONS),
        v=v_out.reshape(steps, batch),
        a=a_out.reshape(steps, batch, N_ACTIONS),
        h=h,
    )
    if not with_cache:
        return outputs
    return outputs, (feat_caches, rec_cache, head_caches, a_out)


def backward_batch(params: NetworkParams, cache, dq: np.ndarray):
    """Accumulate parameter gradients for an upstream dL/dq (T, B, 5)."""
    feat_caches, rec_cache, head_caches, a_out = cache
    onehot, conv_cache, fc1_cache, fc2_cache = feat_caches
    v_cache, a_cache = head_caches
    cfg = params.config
    steps, batch = dq.shape[:2]
    dq_flat = dq.reshape(steps * batch, N_ACTIONS)

    # dueling combine: dv = sum_i dq_i, da_j = dq_j - [j = argmax a] * sum_i dq_i
    dq_sum = dq_flat.sum(axis=1, keepdims=True)
    da = dq_flat.copy()
    max_idx = np.argmax(a_out, axis=1)
    da[np.arange(da.shape[0]), max_idx] -= dq_sum[:, 0]
    dv = dq_sum

    dh_v, dvw, dvb = dense_backward(dv, params["value.w"].value, v_cache)
    dh_a, daw, dab = dense_backward(da, params["adv.w"].value, a_cache)
    params["value.w"].grad += dvw
    params["value.b"].grad += dvb
    params["adv.w"].grad += daw
    params["adv.b"].grad += dab

    dh = (dh_v + dh_a).reshape(steps, batch, cfg.recurrent_width)
    dx_rec, dwx, dwh, db = sequence_backward(
        cfg.recurrent_kind, dh, params["rec.wx"].value,
        params["rec.wh"].value, rec_cache)
    params["rec.wx"].grad += dwx
    params["rec.wh"].grad += dwh
    params["rec.b"].grad += db

    dfc2 = dx_rec.reshape(steps * batch, -1)
    dfc1, dw2, db2 = dense_backward(dfc2, params["fc2.w"].value, fc2_cache)
    params["fc2.w"].grad += dw2
    params["fc2.b"].grad += db2
    dmerged, dw1, db1 = dense_backward(dfc1, params["fc1.w"].value, fc1_cache)
    params["fc1.w"].grad += dw1
    params["fc1.b"].grad += db1

    dconv = dmerged[:, :cfg.conv_flat_dim].reshape(
        steps * batch, GRID_SHAPE[0], GRID_SHAPE[1], cfg.conv_channels)
    if onehot:
        dkernel, dbias = _conv_onehot_backward(dconv, conv_cache)
    else:
        _, dkernel, dbias = conv2d_backward(dconv, params["conv.w"].value,
                                            conv_cache)
    params["conv.w"].grad += dkernel
    params["conv.b"].grad += dbias


def forward_sequence(params: NetworkParams, spatial: np.ndarray,
                     extra: np.ndarray) -> SequenceOutputs:
    """Single-sequence forward: spatial (T, 5, 5, 2), extra (T, 5); outputs
    are squeezed to (T, ...)."""
    out = forward_batch(params, spatial[:, None], extra[:, None])
    return SequenceOutputs(q=out.q[:, 0], v=out.v[:, 0], a=out.a[:, 0],
                           h=out.h[:, 0])


class PolicyRunner:
    """Incremental stepper over a frozen or training parameter set.

    Keeps the recurrent state for a batch of concurrent rollouts; ``step``
    consumes one observation per rollout and returns the per-rollout
    Q-vectors and recurrent activations.
    """

    def __init__(self, params: NetworkParams, batch: int, onehot: bool = True):
        self.params = params
        self.onehot = onehot
        self.state = zero_state(params.config.recurrent_kind, batch,
                                params.config.recurrent_width)

    def step(self, spatial: np.ndarray, extra: np.ndarray):
        params = self.params
        feat, _ = _features_forward(params, spatial, extra, onehot=self.onehot)
        h, self.state = single_step(
            params.config.recurrent_kind, feat, self.state,
            params["rec.wx"].value, params["rec.wh"].value,
            params["rec.b"].value)
        q, v_out, a_out, _ = _heads_forward(params, h)
        return q, v_out, a_out, h
