import os
import pickle
import subprocess
import sys

import numpy as np
import pytest

from circaforage.nn import (NumericError, check_gradients, numeric_gradient,
                            relative_error)
from circaforage.nn.layers import (conv2d_backward, conv2d_forward,
                                   dense_backward, dense_forward,
                                   glorot_uniform, he_normal, l1l2_grad,
                                   l1l2_penalty, sigmoid)
from circaforage.nn.optim import Adam, RMSprop, SGD
from circaforage.nn.recurrent import (sequence_backward, sequence_forward,
                                      single_step, zero_state)


class TestConv:
    def test_zero_weights_zero_output(self):
        x = np.random.default_rng(0).uniform(-1, 1, (2, 5, 5, 2))
        y, _ = conv2d_forward(x, np.zeros((3, 3, 2, 6)), np.zeros(6), "relu")
        assert np.all(y == 0.0)

    def test_identity_kernel_linear(self):
        x = np.random.default_rng(1).uniform(-1, 1, (2, 5, 5, 1))
        kernel = np.zeros((3, 3, 1, 1))
        kernel[1, 1, 0, 0] = 1.0
        y, _ = conv2d_forward(x, kernel, np.zeros(1), "linear")
        assert np.allclose(y, x)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, (2, 5, 5, 2))
        kernel = rng.normal(0, 0.4, (3, 3, 2, 3))
        bias = rng.normal(0, 0.2, 3)
        proj = rng.normal(0, 1, (2, 5, 5, 3))

        def loss():
            y, _ = conv2d_forward(x, kernel, bias, "relu")
            return float((y * proj).sum())

        _, cache = conv2d_forward(x, kernel, bias, "relu")
        dx, dk, db = conv2d_backward(proj, kernel, cache)
        assert relative_error(dk, numeric_gradient(loss, kernel)) < 1e-4
        assert relative_error(db, numeric_gradient(loss, bias)) < 1e-4
        assert relative_error(dx, numeric_gradient(loss, x)) < 1e-4


class TestDense:
    def test_zero_weights_gives_bias(self):
        b = np.array([0.3, -0.7])
        y, _ = dense_forward(np.ones((4, 3)), np.zeros((3, 2)), b, "linear")
        assert np.allclose(y, b)

    def test_tanh_at_zero(self):
        y, cache = dense_forward(np.zeros((1, 3)), np.zeros((3, 2)),
                                 np.zeros(2), "tanh")
        assert np.all(y == 0.0)
        dx, _, _ = dense_backward(np.ones((1, 2)), np.zeros((3, 2)), cache)
        # derivative of tanh at 0 is 1, propagated through zero weights
        assert np.all(dx == 0.0)

    def test_gradcheck_random(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, (5, 4))
        w = rng.normal(0, 0.5, (4, 3))
        b = rng.normal(0, 0.2, 3)
        proj = rng.normal(0, 1, (5, 3))

        def loss():
            y, _ = dense_forward(x, w, b, "tanh")
            return float((y * proj).sum())

        _, cache = dense_forward(x, w, b, "tanh")
        dx, dw, db = dense_backward(proj, w, cache)
        assert relative_error(dw, numeric_gradient(loss, w)) < 1e-4
        assert relative_error(db, numeric_gradient(loss, b)) < 1e-4
        assert relative_error(dx, numeric_gradient(loss, x)) < 1e-4


MULTS = {"lstm": 4, "gru": 3, "rnn": 1}


class TestRecurrent:
    @pytest.mark.parametrize("kind", ["lstm", "gru", "rnn"])
    def test_zero_params_zero_output(self, kind):
        mult = MULTS[kind]
        x = np.zeros((6, 2, 3))
        h = sequence_forward(kind, x, np.zeros((3, mult * 4)),
                             np.zeros((4, mult * 4)), np.zeros(mult * 4))
        assert np.all(h == 0.0)

    def test_lstm_saturated_forget_keeps_cell(self):
        # forget gate ~1 (huge bias), input gate ~0: cell state constant
        width = 3
        wx = np.zeros((2, 4 * width))
        wh = np.zeros((width, 4 * width))
        b = np.zeros(4 * width)
        b[:width] = -60.0          # input gate -> 0
        b[width:2 * width] = 60.0  # forget gate -> 1
        x = np.random.default_rng(0).uniform(-1, 1, (5, 1, 2))
        state = (np.zeros((1, width)), np.ones((1, width)))
        for t in range(5):
            _, state = single_step("lstm", x[t], state, wx, wh, b)
        assert np.allclose(state[1], 1.0)

    @pytest.mark.parametrize("kind", ["lstm", "gru", "rnn"])
    def test_bptt_gradcheck(self, kind):
        mult = MULTS[kind]
        rng = np.random.default_rng(4)
        d, width, steps, batch = 5, 4, 10, 2
        x = rng.uniform(-1, 1, (steps, batch, d))
        wx = rng.normal(0, 0.4, (d, mult * width))
        wh = rng.normal(0, 0.4, (width, mult * width))
        b = rng.normal(0, 0.1, mult * width)
        proj = rng.normal(0, 1, (steps, batch, width))

        def loss():
            return float((sequence_forward(kind, x, wx, wh, b) * proj).sum())

        _, cache = sequence_forward(kind, x, wx, wh, b, with_cache=True)
        dx, dwx, dwh, db = sequence_backward(kind, proj, wx, wh, cache)
        assert relative_error(dwx, numeric_gradient(loss, wx)) < 1e-4
        assert relative_error(dwh, numeric_gradient(loss, wh)) < 1e-4
        assert relative_error(db, numeric_gradient(loss, b)) < 1e-4
        assert relative_error(dx, numeric_gradient(loss, x)) < 1e-4

    @pytest.mark.parametrize("kind", ["lstm", "gru", "rnn"])
    def test_step_matches_sequence(self, kind):
        mult = MULTS[kind]
        rng = np.random.default_rng(5)
        d, width, steps = 4, 3, 7
        x = rng.uniform(-1, 1, (steps, 2, d))
        wx = rng.normal(0, 0.4, (d, mult * width))
        wh = rng.normal(0, 0.4, (width, mult * width))
        b = rng.normal(0, 0.1, mult * width)
        h_seq = sequence_forward(kind, x, wx, wh, b)
        state = zero_state(kind, 2, width)
        for t in range(steps):
            h_t, state = single_step(kind, x[t], state, wx, wh, b)
            assert np.allclose(h_t, h_seq[t], atol=1e-12)

    def test_nonfinite_aborts(self):
        x = np.full((3, 1, 2), np.nan)
        with pytest.raises(NumericError):
            sequence_forward("rnn", x, np.ones((2, 1)), np.ones((1, 1)),
                             np.zeros(1))

    def test_jit_path_matches_reference(self):
        rng = np.random.default_rng(6)
        steps, batch, d, width = 30, 4, 5, 8
        x = rng.uniform(-1, 1, (steps, batch, d))
        wx = rng.normal(0, 0.4, (d, 4 * width))
        wh = rng.normal(0, 0.4, (width, 4 * width))
        b = rng.normal(0, 0.1, 4 * width)
        dh = rng.normal(0, 1, (steps, batch, width))
        h, cache = sequence_forward("lstm", x, wx, wh, b, with_cache=True)
        grads = sequence_backward("lstm", dh, wx, wh, cache)

        code = (
            "import os; os.environ['CIRCAFORAGE_NO_JIT'] = '1'\n"
            "import pickle, sys, numpy as np\n"
            "from circaforage.nn.recurrent import sequence_forward, "
            "sequence_backward, _lstm_jit\n"
            "assert _lstm_jit is None\n"
            "x, wx, wh, b, dh = pickle.load(open(sys.argv[1], 'rb'))\n"
            "h, cache = sequence_forward('lstm', x, wx, wh, b, with_cache=True)\n"
            "grads = sequence_backward('lstm', dh, wx, wh, cache)\n"
            "pickle.dump((h, grads), open(sys.argv[2], 'wb'))\n")
        inp, outp = "/tmp/jit_ref_in.pkl", "/tmp/jit_ref_out.pkl"
        with open(inp, "wb") as fh:
            pickle.dump((x, wx, wh, b, dh), fh)
        subprocess.run([sys.executable, "-c", code, inp, outp], check=True)
        with open(outp, "rb") as fh:
            h_ref, grads_ref = pickle.load(fh)
        assert np.allclose(h, h_ref, atol=1e-12, rtol=0)
        for got, ref in zip(grads, grads_ref):
            assert np.allclose(got, ref, atol=1e-10, rtol=1e-12)


class TestOptimizers:
    def test_sgd_basic_step(self):
        w = np.array([1.0])
        SGD(0.001).apply([("w", w, np.array([0.5]))])
        assert np.allclose(w, 0.9995)

    def test_zero_gradient_fixed_point(self):
        for opt in (SGD(0.01), Adam(0.01), RMSprop(0.01)):
            w = np.array([1.0, -2.0])
            for _ in range(5):
                opt.apply([("w", w, np.zeros(2))])
            assert np.allclose(w, [1.0, -2.0])

    def test_adam_first_step_bias_corrected(self):
        # closed form: m_hat = g, v_hat = g^2 -> step = lr / (1 + eps)
        w = np.array([1.0])
        Adam(0.001).apply([("w", w, np.array([1.0]))])
        expected = 1.0 - 0.001 / (1.0 + 1e-8)
        assert abs(w[0] - expected) < 1e-15

    def test_rmsprop_first_step(self):
        w = np.array([1.0])
        RMSprop(0.01).apply([("w", w, np.array([2.0]))])
        # cache = 0.1 * 4 -> step = lr * 2 / (sqrt(0.4) + 1e-7)
        expected = 1.0 - 0.01 * 2.0 / (np.sqrt(0.4) + 1e-7)
        assert abs(w[0] - expected) < 1e-15


class TestRegularization:
    def test_zero_coefficients(self):
        w = np.array([1.0, -2.0])
        assert l1l2_penalty(w, 0.0, 0.0) == 0.0
        assert np.all(l1l2_grad(w, 0.0, 0.0) == 0.0)

    def test_l1_penalty(self):
        assert l1l2_penalty(np.array([1.0, -2.0]), 0.1, 0.0) == pytest.approx(0.3)

    def test_l2_penalty_and_grad(self):
        w = np.array([2.0])
        assert l1l2_penalty(w, 0.0, 0.5) == pytest.approx(2.0)
        assert l1l2_grad(w, 0.0, 0.5)[0] == pytest.approx(2.0)


class TestInit:
    def test_he_normal_variance(self):
        rng = np.random.default_rng(7)
        w = he_normal((256, 512), 256, rng)
        assert abs(w.var() - 2.0 / 256) < 0.2 * (2.0 / 256)

    def test_glorot_uniform_bounds(self):
        rng = np.random.default_rng(8)
        w = glorot_uniform((100, 100), 100, 100, rng)
        limit = np.sqrt(6.0 / 200)
        assert np.abs(w).max() <= limit
        assert abs(w.var() - limit ** 2 / 3) < 0.1 * limit ** 2 / 3


def test_sigmoid_saturation_is_finite():
    x = np.array([-1e5, -50.0, 0.0, 50.0, 1e5])
    y = sigmoid(x)
    assert np.all(np.isfinite(y))
    assert y[0] == 0.0 and y[-1] == 1.0 and y[2] == 0.5


def test_check_gradients_reports_not_raises():
    rng = np.random.default_rng(9)
    w = rng.normal(0, 0.5, (3, 2))
    x = rng.uniform(-1, 1, (4, 3))
    proj = rng.normal(0, 1, (4, 2))

    def loss():
        y, _ = dense_forward(x, w, np.zeros(2), "tanh")
        return float((y * proj).sum())

    _, cache = dense_forward(x, w, np.zeros(2), "tanh")
    _, dw, _ = dense_backward(proj, w, cache)
    report = check_gradients(loss, [("w", w)], {"w": dw + 1.0})  # corrupted
    assert not report.ok
    assert report.max_error > 0.1
