"""
===================
Time-Delay Network
===================

A real-valued baseline: the real and imaginary parts of the subspace feature
are concatenated into a single real sequence of length ``2 * n_in`` and
passed through stride-1 real convolutions (each a context window followed by
tanh), then dense tanh layers and a linear output.

"""
from dataclasses import dataclass

import numpy as np

from ..network.layers import Affine, Conv1d, Flatten, Tanh
from ..network.model import Network
from ..pipeline.training import train_model


@dataclass(frozen=True)
class TdnnSpec:
    """
    :param n_in: The length of the complex feature vector.
    :param context: The context size of each time-delay layer.
    :param filters: The filter counts of the time-delay layers.
    :param dense: The widths of the hidden dense layers.
    """

    n_in: int = 33
    context: int = 5
    filters: tuple = (8, 8, 4, 2, 1)
    dense: tuple = (10, 10)

    def __post_init__(self):
        if self.n_in < 1 or self.context < 1 or not self.filters:
            raise ValueError('Invalid TDNN specification: {}'.format(self))

    @property
    def input_dim(self):
        """The length of the real input, :math:`N_{in}' = 2 N_{in}`."""
        return 2 * self.n_in


class TdnnNetwork(Network):
    model = 'tdnn'

    def __init__(self, layers, n_in):
        super().__init__(layers, (2 * n_in, 1))

    @property
    def n_in(self):
        return self.input_shape[0] // 2

    def prepare(self, features):
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != self.n_in:
            raise ValueError('Expected (B, {}) features, not {}'.format(
                self.n_in, features.shape))
        stacked = np.concatenate([features.real, features.imag], axis=1)
        return stacked.astype(self.real_dtype)[:, :, np.newaxis]


def build_tdnn(spec=None, seed=0, init='glorot', precision='float64'):
    """Construct and initialise a TDNN."""
    if spec is None:
        spec = TdnnSpec()
    layers = []
    channels = 1
    for count in spec.filters:
        layers.append(Conv1d(spec.context, channels, count,
                             complex_valued=False))
        layers.append(Tanh())
        channels = count
    layers.append(Flatten())
    width = spec.input_dim * channels
    for units in spec.dense:
        layers.append(Affine(width, units, complex_valued=False))
        layers.append(Tanh())
        width = units
    layers.append(Affine(width, 1, complex_valued=False))
    net = TdnnNetwork(layers, spec.n_in)
    net.precision = precision
    return net.initialize(seed, init)


def tdnn_forward(net, feature):
    """Return the predicted angle (radians) for a single complex feature."""
    return float(net.forward(np.asarray(feature)[np.newaxis])[0])


def tdnn_flops(spec=None):
    return build_tdnn(spec, init='zeros').flops()


def tdnn_train(spec, train_set, config, validation_set=None, seed=0):
    """
    Build a TDNN and train it with the same harness, loss and optimiser as
    the complex-valued network.

    :returns: The trained network and its training history.
    """
    net = build_tdnn(spec, seed=seed)
    return train_model(net, train_set, config, validation_set=validation_set)
