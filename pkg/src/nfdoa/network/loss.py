"""Regression losses over a batch of angles (radians) and their gradients."""
import numpy as np


def _residual(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError('Predictions {} and targets {} differ in shape'
                         .format(pred.shape, target.shape))
    if pred.size == 0:
        raise ValueError('Cannot evaluate a loss over an empty batch')
    return pred - target


def mae_loss(pred, target):
    """The mean absolute error."""
    return float(np.mean(np.abs(_residual(pred, target))))


def mse_loss(pred, target):
    """The mean squared error."""
    return float(np.mean(_residual(pred, target) ** 2))


def mae_grad(pred, target):
    # The subgradient at zero is zero.
    diff = _residual(pred, target)
    return np.sign(diff) / diff.size


def mse_grad(pred, target):
    diff = _residual(pred, target)
    return 2.0 * diff / diff.size


LOSSES = {
    'mae': (mae_loss, mae_grad),
    'mse': (mse_loss, mse_grad),
}


def get_loss(name):
    """Return the ``(loss, gradient)`` functions for a loss name."""
    try:
        return LOSSES[name]
    except KeyError:
        raise ValueError('Unknown loss: {}'.format(name)) from None
