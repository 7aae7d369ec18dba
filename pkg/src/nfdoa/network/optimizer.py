"""
==========
Optimisers
==========

Mini-batch gradient descent (SGD) and adaptive moment estimation (Adam).

Complex parameters are updated through real views of their storage, so the
real and imaginary parts of every weight are treated as independent real
parameters with their own moment estimates.

"""
from dataclasses import asdict, dataclass, field

import numpy as np


OPTIMIZERS = ('adam', 'sgd')


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyper-parameters.

    Parameters
    ----------
    optimizer
        Either ``'adam'`` or ``'sgd'``.
    learning_rate
        The step size (must be positive).
    adam_beta1, adam_beta2
        The moment decay rates, each in ``[0, 1)``.
    adam_eps
        The denominator offset of the Adam update.
    batch_size
        The number of samples per mini-batch.
    epochs
        The number of passes over the training set.
    loss
        Either ``'mae'`` or ``'mse'``.
    seed
        The seed for the per-epoch shuffles.
    precision
        ``'float64'`` or ``'float32'``.

    """

    optimizer: str = 'adam'
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 64
    epochs: int = 200
    loss: str = 'mae'
    seed: int = 0
    precision: str = 'float64'

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError('Unknown optimiser: {}'.format(self.optimizer))
        if not self.learning_rate > 0:
            raise ValueError('Invalid learning rate: {}'.format(
                self.learning_rate))
        for name in ('adam_beta1', 'adam_beta2'):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError('Invalid {}: {}'.format(
                    name, getattr(self, name)))
        if not self.adam_eps > 0:
            raise ValueError('Invalid adam_eps: {}'.format(self.adam_eps))
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError('Invalid batch size ({}) or epoch count ({})'
                             .format(self.batch_size, self.epochs))
        if self.loss not in ('mae', 'mse'):
            raise ValueError('Unknown loss: {}'.format(self.loss))
        if self.precision not in ('float64', 'float32'):
            raise ValueError('Unknown precision: {}'.format(self.precision))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


@dataclass
class OptimizerState:
    """The step counter and (for Adam) the moment estimates of each
    parameter, stored as real arrays."""

    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def _real_view(array):
    array = np.asarray(array)
    if np.iscomplexobj(array):
        return array.view(array.real.dtype)
    return array


def make_optimizer_state(params, config):
    state = OptimizerState()
    if config.optimizer == 'adam':
        state.m = [np.zeros_like(_real_view(p)) for _, p in params]
        state.v = [np.zeros_like(_real_view(p)) for _, p in params]
    return state


def optimizer_step(params, grads, state, config):
    """
    Apply one update to every parameter, in place.

    :param params: ``(name, array)`` pairs, as returned by
        ``Network.parameters()``.
    :param grads: The matching gradient arrays.
    :param state: The optimiser state; it is updated in place and returned.
    :param config: The training configuration.
    """
    if len(params) != len(grads):
        raise ValueError('Got {} gradients for {} parameters'.format(
            len(grads), len(params)))
    state.step += 1
    lr = config.learning_rate
    if config.optimizer == 'sgd':
        for (_, p), g in zip(params, grads):
            p -= lr * g.astype(p.dtype, copy=False)
        return state

    b1, b2 = config.adam_beta1, config.adam_beta2
    correction1 = 1 - b1 ** state.step
    correction2 = 1 - b2 ** state.step
    for (_, p), g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError('Gradient shape {} does not match parameter {}'
                             .format(g.shape, p.shape))
        g = _real_view(np.ascontiguousarray(g, dtype=p.dtype))
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g ** 2
        m_hat = m / correction1
        v_hat = v / correction2
        p_real = _real_view(p)
        p_real -= lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return state
