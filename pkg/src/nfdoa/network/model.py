"""
========
Networks
========

This module assembles layers into networks that regress a direction of
arrival (in radians) from a signal-subspace feature vector.

The complex-valued network stacks residual blocks (each followed by split
max-pooling), flattens the result, and maps it through a complex affine
layer, a split sigmoid and a phase-mapping layer to real angles; real affine
layers with tanh activations then reduce these to a single linear output.

"""
import numpy as np

from ..signal.simulation import make_rng
from .layers import LayerSpec, make_layer


PRECISIONS = {'float64': np.float64, 'float32': np.float32}

INIT_SCHEMES = ('glorot', 'zeros')


class Network:
    """
    An ordered stack of layers that maps ``(B, L, F)`` inputs to one real
    value per sample.

    Subclasses define ``prepare``, which turns a batch of complex feature
    vectors into the network's input tensor.
    """

    model = None

    def __init__(self, layers, input_shape):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.precision = 'float64'
        self.shapes = [self.input_shape]
        for layer in self.layers:
            self.shapes.append(layer.output_shape(self.shapes[-1]))
        if self.shapes[-1] != (1,):
            raise ValueError('The network must produce one output, not {}'
                             .format(self.shapes[-1]))

    @classmethod
    def from_architecture(cls, specs, n_in):
        return cls([make_layer(spec) for spec in specs], n_in)

    @property
    def n_in(self):
        raise NotImplementedError

    def prepare(self, features):
        raise NotImplementedError

    def architecture(self):
        return [layer.spec() for layer in self.layers]

    def initialize(self, seed=0, scheme='glorot'):
        """Draw the initial weights; biases start at zero."""
        if scheme not in INIT_SCHEMES:
            raise ValueError('Unknown initialisation scheme: {}'.format(scheme))
        rng = make_rng(seed)
        for layer in self.layers:
            layer.initialize(rng, scheme)
        self.set_precision(self.precision)
        return self

    def set_precision(self, precision):
        if precision not in PRECISIONS:
            raise ValueError('Unknown precision: {}'.format(precision))
        self.precision = precision
        for layer in self.layers:
            layer.cast(PRECISIONS[precision])

    @property
    def real_dtype(self):
        return PRECISIONS[self.precision]

    def parameters(self):
        """Return ``(name, array)`` pairs; optimisers update them in place."""
        return [(name, value)
                for ix, layer in enumerate(self.layers)
                for name, value in layer.named_parameters('{}.'.format(ix))]

    def gradients(self):
        """Return the gradients of the last backward pass, in parameter
        order."""
        return [grad
                for ix, layer in enumerate(self.layers)
                for _, grad in layer.named_gradients('{}.'.format(ix))]

    def load_parameter(self, name, value):
        ix, _, rest = name.partition('.')
        self.layers[int(ix)].load_parameter(rest, value)

    def n_parameters(self):
        """The number of real-valued parameters."""
        return sum(value.size * (2 if np.iscomplexobj(value) else 1)
                   for _, value in self.parameters())

    def flops(self):
        total = 0
        shape = self.input_shape
        for layer in self.layers:
            total += layer.flops(shape)
            shape = layer.output_shape(shape)
        return total

    def forward(self, features):
        """Return the predicted angles (radians) for a batch of features."""
        x = self.prepare(features)
        for layer in self.layers:
            x = layer.forward(x)
        return np.real(x[:, 0])

    def backward(self, grad_output):
        """
        Back-propagate the loss gradient with respect to the outputs of the
        last ``forward`` call; parameter gradients are stored on the layers.
        """
        grad = np.asarray(grad_output, dtype=self.real_dtype)[:, np.newaxis]
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def predict(self, features, batch_size=1024):
        features = np.asarray(features)
        if features.ndim == 1:
            features = features[np.newaxis]
        out = [self.forward(features[start:start + batch_size])
               for start in range(0, len(features), batch_size)]
        return np.concatenate(out) if out else np.empty(0)


class ComplexNetwork(Network):
    """The complex-valued residual network; its input is the complex feature
    vector itself, with a single channel."""

    model = 'cvnn'

    def __init__(self, layers, n_in):
        super().__init__(layers, (n_in, 1))

    @property
    def n_in(self):
        return self.input_shape[0]

    @property
    def flatten_width(self):
        """The number of complex units entering the first affine layer."""
        for layer, shape in zip(self.layers, self.shapes[1:]):
            if layer.kind == 'flatten':
                return shape[0]
        raise ValueError('The network has no flatten layer')

    def prepare(self, features):
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != self.n_in:
            raise ValueError('Expected (B, {}) features, not {}'.format(
                self.n_in, features.shape))
        dtype = np.promote_types(self.real_dtype, np.complex64)
        return features.astype(dtype)[:, :, np.newaxis]


def cvnn_architecture(n_in, channels=(8, 4), kernel_length=3, pool=(2, 2),
                      affine_width=20, hidden=(10, 10)):
    """
    Return the layer specs of the complex-valued residual network.

    Every residual block is followed by split max-pooling, so the flattened
    width is ``n_in`` halved (rounding up) once per block, times the last
    channel count.
    """
    if not channels:
        raise ValueError('At least one residual block is required')
    specs = []
    length, c_in = n_in, 1
    for c_out in channels:
        specs.append(LayerSpec('residual_block',
                               kernel=(kernel_length, c_in, c_out, 1)))
        specs.append(LayerSpec('split_maxpool', pool=tuple(pool)))
        length = -(-length // pool[1])
        c_in = c_out
    specs.append(LayerSpec('flatten'))
    specs.append(LayerSpec('complex_affine', width=(length * c_in, affine_width)))
    specs.append(LayerSpec('csigmoid'))
    specs.append(LayerSpec('phase_map'))
    width = affine_width
    for units in hidden:
        specs.append(LayerSpec('real_affine', width=(width, units)))
        specs.append(LayerSpec('tanh'))
        width = units
    specs.append(LayerSpec('real_affine', width=(width, 1)))
    return specs


def build_cvnn(n_in, channels=(8, 4), kernel_length=3, affine_width=20,
               hidden=(10, 10), seed=0, init='glorot', precision='float64'):
    """Construct and initialise a complex-valued residual network."""
    if n_in < 1:
        raise ValueError('Invalid input size: {}'.format(n_in))
    specs = cvnn_architecture(n_in, channels, kernel_length,
                              affine_width=affine_width, hidden=hidden)
    net = ComplexNetwork.from_architecture(specs, n_in)
    net.precision = precision
    return net.initialize(seed, init)
