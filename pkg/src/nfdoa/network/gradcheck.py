"""Check analytic gradients against central finite differences."""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..signal.simulation import make_rng
from .loss import mse_loss, mse_grad
from .optimizer import _real_view


@dataclass
class GradCheckReport:
    """
    The norm-wise relative error of every parameter array,
    :math:`\\|g_{num} - g_{ana}\\| / \\max(\\|g_{num}\\|, \\|g_{ana}\\|)`.
    """

    errors: dict
    tolerance: float

    @property
    def max_error(self):
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self):
        return self.max_error < self.tolerance

    def to_frame(self):
        return pd.DataFrame({'parameter': list(self.errors),
                             'relative_error': list(self.errors.values())})


def _relative_error(numeric, analytic, floor):
    scale = max(np.linalg.norm(numeric), np.linalg.norm(analytic), floor)
    return float(np.linalg.norm(numeric - analytic) / scale)


def gradient_check(net, features, targets, tolerance=1e-6, step=1e-6,
                   max_coords=None, seed=0, floor=1e-7):
    """
    Compare the back-propagated gradients of a smooth (mean squared error)
    objective with central differences.

    The MAE objective is not checked: it is not differentiable where a
    residual is zero.

    Parameters
    ----------
    net
        The network; it must use 64-bit precision.
    features, targets
        A small batch of inputs and labels.
    tolerance
        The relative error below which the check passes.
    step
        The finite-difference step.
    max_coords
        Check at most this many randomly chosen real coordinates of each
        parameter array (default: all).
    seed
        The seed for choosing coordinates.
    floor
        The smallest gradient norm used to scale the error.

    """
    if net.precision != 'float64':
        raise ValueError('Gradient checks require 64-bit precision')
    logger = logging.getLogger(__name__)
    rng = make_rng(seed)

    def objective():
        return mse_loss(net.forward(features), targets)

    pred = net.forward(features)
    net.backward(mse_grad(pred, targets))
    analytic = [_real_view(np.ascontiguousarray(g)).reshape(-1)
                for g in net.gradients()]

    errors = {}
    for (name, param), grad in zip(net.parameters(), analytic):
        flat = _real_view(param).reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, max_coords, replace=False))
        numeric = np.empty(coords.size)
        for i, c in enumerate(coords):
            original = flat[c]
            flat[c] = original + step
            plus = objective()
            flat[c] = original - step
            minus = objective()
            flat[c] = original
            numeric[i] = (plus - minus) / (2 * step)
        errors[name] = _relative_error(numeric, grad[coords], floor)
        logger.debug('Gradient check {}: {:.3e}'.format(name, errors[name]))
    return GradCheckReport(errors=errors, tolerance=tolerance)
