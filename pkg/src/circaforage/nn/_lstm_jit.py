"""Numba-compiled LSTM sequence loops.

Optional fast path for the training hot loop; mirrors the numpy
implementation in ``recurrent.py`` operation for operation (same gate order,
same formula for the sigmoid) so results match the reference path exactly.
Loaded lazily; the package runs fine without numba installed.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def lstm_loop_forward(zx, wh, h, c, tc, gates):
    steps, batch, width4 = zx.shape
    width = width4 // 4
    h_prev = np.zeros((batch, width))
    c_prev = np.zeros((batch, width))
    for t in range(steps):
        z = np.dot(h_prev, wh)
        for bi in range(batch):
            for j in range(3 * width):
                gates[t, bi, j] = 1.0 / (1.0 + np.exp(-(z[bi, j] + zx[t, bi, j])))
            for j in range(3 * width, 4 * width):
                gates[t, bi, j] = np.tanh(z[bi, j] + zx[t, bi, j])
            for j in range(width):
                cv = (gates[t, bi, width + j] * c_prev[bi, j]
                      + gates[t, bi, j] * gates[t, bi, 3 * width + j])
                c[t, bi, j] = cv
                tcv = np.tanh(cv)
                tc[t, bi, j] = tcv
                h[t, bi, j] = gates[t, bi, 2 * width + j] * tcv
        h_prev = h[t]
        c_prev = c[t]


@njit(cache=True, nogil=True)
def lstm_loop_backward(dh, wh_t, gates, c, tc, dz):
    steps, batch, width = dh.shape
    dh_carry = np.zeros((batch, width))
    dc = np.zeros((batch, width))
    for t in range(steps - 1, -1, -1):
        for bi in range(batch):
            for j in range(width):
                i_g = gates[t, bi, j]
                f_g = gates[t, bi, width + j]
                o_g = gates[t, bi, 2 * width + j]
                g_g = gates[t, bi, 3 * width + j]
                tc_v = tc[t, bi, j]
                c_prev = c[t - 1, bi, j] if t > 0 else 0.0
                dh_v = dh[t, bi, j] + dh_carry[bi, j]
                dc_v = dc[bi, j] + dh_v * o_g * (1.0 - tc_v * tc_v)
                dz[t, bi, j] = dc_v * g_g * i_g * (1.0 - i_g)
                dz[t, bi, width + j] = dc_v * c_prev * f_g * (1.0 - f_g)
                dz[t, bi, 2 * width + j] = dh_v * tc_v * o_g * (1.0 - o_g)
                dz[t, bi, 3 * width + j] = dc_v * i_g * (1.0 - g_g * g_g)
                dc[bi, j] = dc_v * f_g
        dh_carry = np.dot(dz[t], wh_t)
