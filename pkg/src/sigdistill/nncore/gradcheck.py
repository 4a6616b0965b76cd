"""Central-difference verification of the analytic gradients.

The finite-difference side never calls backward(); it perturbs one parameter
entry at a time and re-runs the forward pass, so it stays an independent
oracle for the reverse-mode code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import stream
from .loss import cross_entropy
from .model import NUM_CLASSES, ArchConfig, Model, backward, forward, init_model, param_count


@dataclass
class GradCheckReport:
    max_relative_error: float
    worst_param: str
    tolerance: float
    per_param: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def _loss_on(model: Model, x: np.ndarray, y: np.ndarray) -> float:
    loss, _ = cross_entropy(forward(model, x), y)
    return loss


def finite_difference_grads(
    model: Model, x: np.ndarray, y: np.ndarray, step: float = 1e-4
) -> dict[str, np.ndarray]:
    """d(loss)/d(theta) for every parameter entry, by central differences."""
    grads: dict[str, np.ndarray] = {}
    for name, p in model.params.items():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = _loss_on(model, x, y)
            flat[i] = orig - step
            lo = _loss_on(model, x, y)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        grads[name] = g
    return grads


def compare_gradients(
    analytic: dict[str, np.ndarray],
    reference: dict[str, np.ndarray],
    tolerance: float,
) -> GradCheckReport:
    """Worst relative error across all entries; denominators floored at 1e-8."""
    per_param: dict[str, float] = {}
    worst, worst_name = 0.0, ""
    for name in sorted(reference):
        a, r = analytic[name], reference[name]
        denom = np.maximum(np.abs(a) + np.abs(r), 1e-8)
        err = float((np.abs(a - r) / denom).max())
        per_param[name] = err
        if err > worst:
            worst, worst_name = err, name
    return GradCheckReport(
        max_relative_error=worst, worst_param=worst_name, tolerance=tolerance, per_param=per_param
    )


def grad_check(
    arch: ArchConfig | None = None,
    seed: int = 0,
    tolerance: float = 1e-3,
    batch_size: int = 4,
    step: float = 1e-4,
) -> GradCheckReport:
    """Check every parameter of a small model against central differences.

    The default architecture stays under 5k parameters so a full sweep of
    entries runs in seconds.
    """
    if arch is None:
        arch = ArchConfig(input_length=32, conv_stages=((4, 5, 2), (8, 5, 2)), hidden=16)
    if param_count(arch) > 5000:
        raise ValidationError(
            f"grad_check is meant for small models; {param_count(arch)} parameters > 5000"
        )
    model = init_model(arch, seed)
    data_rng = stream(seed, "gradcheck-data")
    x = data_rng.uniform(0.0, 1.0, size=(batch_size, arch.input_length))
    y = data_rng.integers(0, NUM_CLASSES, size=batch_size)
    logits, cache = forward(model, x, want_cache=True)
    _, dlogits = cross_entropy(logits, y)
    analytic = backward(model, cache, dlogits)
    reference = finite_difference_grads(model, x, y, step=step)
    return compare_gradients(analytic, reference, tolerance)
