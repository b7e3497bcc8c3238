"""Minimal fixed-architecture numerical kernel.

Hand-written forward and backward passes (2D convolution, dense layers,
LSTM/GRU/vanilla-RNN cells), parameter initializers, optimizers, and a
central-finite-difference gradient checker.  Everything is 64-bit and
operates on plain numpy arrays; no computation graph is built.
"""


class NumericError(RuntimeError):
    """Raised when a forward or backward pass produces non-finite values."""


from .layers import (  # noqa: E402
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    glorot_uniform,
    he_normal,
    l1l2_penalty,
    l1l2_grad,
)
from .recurrent import (  # noqa: E402
    recurrent_param_shapes,
    sequence_backward,
    sequence_forward,
    single_step,
    zero_state,
)
from .optim import make_optimizer, Adam, RMSprop, SGD  # noqa: E402
from .gradcheck import GradCheckReport, numeric_gradient, relative_error, check_gradients  # noqa: E402
