"""Central-finite-difference gradient verification.

The checker perturbs each parameter entry by +/- h (default 1e-5), evaluates
a scalar loss closure, and compares the resulting numeric gradient against
the analytic one.  Errors are symmetric-relative with an absolute floor, so
entries whose gradients are negligibly small on the probe's O(1) scale do
not produce spurious failures:

    err = |analytic - numeric| / max(|analytic| + |numeric|, floor)

Probes near ReLU kinks (pre-activations within ~1e-6 of zero) are outside
the checker's contract; test fixtures use seeds verified to avoid them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
DEFAULT_FLOOR = 1e-4


def numeric_gradient(loss_fn, array: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central differences of ``loss_fn()`` w.r.t. every entry of ``array``.

    ``loss_fn`` must recompute the loss from the current contents of
    ``array``; entries are perturbed in place and restored.
    """
    grad = np.empty_like(array)
    flat = array.ravel()
    grad_flat = grad.ravel()
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        up = loss_fn()
        flat[i] = original - h
        down = loss_fn()
        flat[i] = original
        grad_flat[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = DEFAULT_FLOOR) -> float:
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float((np.abs(analytic - numeric) / denom).max())


@dataclass
class GradCheckReport:
    tolerance: float
    errors: dict[str, float] = field(default_factory=dict)

    def record(self, name: str, error: float):
        self.errors[name] = error

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def ok(self) -> bool:
        return self.max_error < self.tolerance

    def lines(self) -> list[str]:
        out = [f"{name}: max relative error {err:.3e}"
               for name, err in self.errors.items()]
        out.append(f"overall: {self.max_error:.3e} "
                   f"({'ok' if self.ok else 'EXCEEDS'} tolerance {self.tolerance:.0e})")
        return out


def check_gradients(loss_fn, named_arrays, analytic_grads,
                    h: float = DEFAULT_STEP,
                    tolerance: float = DEFAULT_TOLERANCE) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``named_arrays`` is an iterable of (name, parameter array); entries of
    ``analytic_grads`` must be aligned by name.  Exceedances are reported,
    not raised.
    """
    report = GradCheckReport(tolerance=tolerance)
    for name, array in named_arrays:
        numeric = numeric_gradient(loss_fn, array, h=h)
        report.record(name, relative_error(analytic_grads[name], numeric))
    return report
