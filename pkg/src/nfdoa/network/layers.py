"""
======
Layers
======

Network layers with explicit forward and backward passes.

Sequence tensors have shape ``(batch, length, channels)`` and flat tensors
have shape ``(batch, width)``; complex layers operate on complex arrays.

Gradients of the (real) loss with respect to a complex quantity
:math:`c = u + jv` are carried as :math:`G = \\partial L/\\partial u + j\\,
\\partial L/\\partial v`, so that the real and imaginary parts of every weight
receive their own partial derivatives. For a linear map :math:`y = Wx + b`
this gives :math:`\\partial W = G\\,x^H`, :math:`\\partial b = G` and
:math:`\\partial x = W^H G`.

"""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import PhaseMapDomainError
from .flops import conv1d_flops, dense_flops


KINDS = ('complex_conv1d', 'real_conv1d', 'split_maxpool', 'complex_affine',
         'real_affine', 'ctanh', 'csigmoid', 'tanh', 'phase_map', 'flatten',
         'residual_block')


@dataclass(frozen=True)
class LayerSpec:
    """
    The architecture of a single layer.

    Parameters
    ----------
    kind
        The layer kind (see ``KINDS``).
    kernel
        ``(L_c, F_i, F_c, S_c)`` for convolutions and residual blocks.
    width
        ``(inputs, outputs)`` for affine layers.
    pool
        ``(L_p, S_p)`` for pooling layers.

    """

    kind: str
    kernel: tuple = None
    width: tuple = None
    pool: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError('Unknown layer kind: {}'.format(self.kind))

    def to_dict(self):
        obj = {'kind': self.kind}
        for name in ('kernel', 'width', 'pool'):
            value = getattr(self, name)
            if value is not None:
                obj[name] = list(value)
        return obj

    @classmethod
    def from_dict(cls, obj):
        return cls(kind=obj['kind'],
                   **{name: tuple(obj[name]) for name in ('kernel', 'width', 'pool')
                      if name in obj})


def glorot_uniform(shape, fan_in, fan_out, rng, complex_valued):
    """
    Draw Glorot-uniform weights.

    Complex weights draw their real and imaginary parts independently from
    :math:`U(\\pm\\sqrt{3 / (2 (n_{in} + n_{out}))})`.
    """
    if complex_valued:
        limit = np.sqrt(3.0 / (2.0 * (fan_in + fan_out)))
        return (rng.uniform(-limit, limit, shape)
                + 1j * rng.uniform(-limit, limit, shape))
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


class Layer:
    """The base class for all layers; stateless layers need only override
    ``forward`` and ``backward``."""

    kind = None
    param_names = ()

    def __init__(self):
        self.cache = None
        self.grads = {}

    def children(self):
        return ()

    def named_parameters(self, prefix=''):
        for name in self.param_names:
            yield prefix + name, getattr(self, name)
        for child_name, child in self.children():
            yield from child.named_parameters(prefix + child_name + '.')

    def named_gradients(self, prefix=''):
        for name in self.param_names:
            yield prefix + name, self.grads[name]
        for child_name, child in self.children():
            yield from child.named_gradients(prefix + child_name + '.')

    def load_parameter(self, name, value):
        """Replace a (possibly nested) parameter, keeping its shape."""
        head, _, rest = name.partition('.')
        if rest:
            dict(self.children())[head].load_parameter(rest, value)
            return
        if head not in self.param_names:
            raise ValueError('Layer {} has no parameter {}'.format(
                self.kind, head))
        current = getattr(self, head)
        value = np.asarray(value)
        if value.shape != current.shape:
            raise ValueError('Parameter {} has shape {}, not {}'.format(
                head, current.shape, value.shape))
        setattr(self, head, np.ascontiguousarray(value, dtype=current.dtype))

    def cast(self, real_dtype):
        for name in self.param_names:
            value = getattr(self, name)
            dtype = np.promote_types(real_dtype, np.complex64) \
                if np.iscomplexobj(value) else real_dtype
            setattr(self, name, np.ascontiguousarray(value, dtype=dtype))
        for _, child in self.children():
            child.cast(real_dtype)

    def initialize(self, rng, scheme='glorot'):
        for _, child in self.children():
            child.initialize(rng, scheme)

    def output_shape(self, shape):
        return shape

    def flops(self, shape):
        return 0

    def spec(self):
        return LayerSpec(self.kind)

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


class Conv1d(Layer):
    """
    A 1-D convolution (cross-correlation) with SAME padding.

    The weight has shape ``(L_c, F_i, F_c)``; the output length is
    :math:`\\lceil L_i / S_c \\rceil`.
    """

    param_names = ('weight', 'bias')

    def __init__(self, length, in_channels, out_channels, stride=1,
                 complex_valued=True):
        super().__init__()
        if min(length, in_channels, out_channels, stride) < 1:
            raise ValueError('Invalid convolution kernel: {}'.format(
                (length, in_channels, out_channels, stride)))
        self.kind = 'complex_conv1d' if complex_valued else 'real_conv1d'
        self.complex_valued = complex_valued
        self.length = length
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        dtype = complex if complex_valued else float
        self.weight = np.zeros((length, in_channels, out_channels), dtype=dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def initialize(self, rng, scheme='glorot'):
        self.weight = np.zeros_like(self.weight)
        self.bias = np.zeros_like(self.bias)
        if scheme == 'glorot':
            self.weight = np.ascontiguousarray(glorot_uniform(
                self.weight.shape, self.length * self.in_channels,
                self.length * self.out_channels, rng, self.complex_valued),
                dtype=self.weight.dtype)

    def _padding(self, n):
        n_out = -(-n // self.stride)
        total = max((n_out - 1) * self.stride + self.length - n, 0)
        return n_out, total // 2, total - total // 2

    def output_shape(self, shape):
        n, channels = shape
        if channels != self.in_channels:
            raise ValueError('Convolution expects {} input channels, not {}'
                             .format(self.in_channels, channels))
        return (-(-n // self.stride), self.out_channels)

    def flops(self, shape):
        return conv1d_flops(shape[0], self.in_channels, self.length,
                            self.out_channels, self.complex_valued)

    def spec(self):
        return LayerSpec(self.kind, kernel=(self.length, self.in_channels,
                                            self.out_channels, self.stride))

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ValueError('Convolution expects (B, L, {}) input, not {}'
                             .format(self.in_channels, x.shape))
        n = x.shape[1]
        n_out, left, right = self._padding(n)
        padded = np.pad(x, ((0, 0), (left, right), (0, 0)))
        # (B, n_out, F_i, L_c)
        windows = sliding_window_view(padded, self.length, axis=1)
        windows = windows[:, ::self.stride][:, :n_out]
        self.cache = (windows, padded.shape, left, n)
        return (np.einsum('blfk,kfc->blc', windows, self.weight, optimize=True)
                + self.bias)

    def backward(self, grad):
        windows, padded_shape, left, n = self.cache
        self.grads['weight'] = np.einsum('blfk,blc->kfc', np.conj(windows),
                                         grad, optimize=True)
        self.grads['bias'] = grad.sum(axis=(0, 1))
        d_windows = np.einsum('blc,kfc->blfk', grad, np.conj(self.weight),
                              optimize=True)
        d_padded = np.zeros(padded_shape, dtype=d_windows.dtype)
        n_out = grad.shape[1]
        stop = self.stride * (n_out - 1) + 1
        for k in range(self.length):
            d_padded[:, k:k + stop:self.stride, :] += d_windows[..., k]
        return d_padded[:, left:left + n, :]


class Affine(Layer):
    """A dense layer :math:`y = W x + b` with ``W`` of shape ``(O, I)``."""

    param_names = ('weight', 'bias')

    def __init__(self, n_in, n_out, complex_valued=True):
        super().__init__()
        if n_in < 1 or n_out < 1:
            raise ValueError('Invalid affine width: {}'.format((n_in, n_out)))
        self.kind = 'complex_affine' if complex_valued else 'real_affine'
        self.complex_valued = complex_valued
        self.n_in = n_in
        self.n_out = n_out
        dtype = complex if complex_valued else float
        self.weight = np.zeros((n_out, n_in), dtype=dtype)
        self.bias = np.zeros(n_out, dtype=dtype)

    def initialize(self, rng, scheme='glorot'):
        self.weight = np.zeros_like(self.weight)
        self.bias = np.zeros_like(self.bias)
        if scheme == 'glorot':
            self.weight = np.ascontiguousarray(glorot_uniform(
                self.weight.shape, self.n_in, self.n_out, rng,
                self.complex_valued), dtype=self.weight.dtype)

    def output_shape(self, shape):
        if shape != (self.n_in,):
            raise ValueError('Affine layer expects width {}, not {}'.format(
                self.n_in, shape))
        return (self.n_out,)

    def flops(self, shape):
        return dense_flops(self.n_in, self.n_out, self.complex_valued)

    def spec(self):
        return LayerSpec(self.kind, width=(self.n_in, self.n_out))

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError('Affine layer expects (B, {}) input, not {}'
                             .format(self.n_in, x.shape))
        self.cache = x
        return x @ self.weight.T + self.bias

    def backward(self, grad):
        x = self.cache
        self.grads['weight'] = grad.T @ np.conj(x)
        self.grads['bias'] = grad.sum(axis=0)
        return grad @ np.conj(self.weight)


class CTanh(Layer):
    """:math:`\\tanh(u) + j \\tanh(v)`."""

    kind = 'ctanh'

    def forward(self, x):
        y = np.tanh(x.real) + 1j * np.tanh(x.imag)
        self.cache = y
        return y

    def backward(self, grad):
        y = self.cache
        return (grad.real * (1 - y.real ** 2)
                + 1j * grad.imag * (1 - y.imag ** 2))


class CSigmoid(Layer):
    """:math:`\\sigma(u) + j \\sigma(v)`; the real part is always positive."""

    kind = 'csigmoid'

    def forward(self, x):
        y = expit(x.real) + 1j * expit(x.imag)
        self.cache = y
        return y

    def backward(self, grad):
        y = self.cache
        return (grad.real * y.real * (1 - y.real)
                + 1j * grad.imag * y.imag * (1 - y.imag))


class Tanh(Layer):
    kind = 'tanh'

    def forward(self, x):
        y = np.tanh(x)
        self.cache = y
        return y

    def backward(self, grad):
        return grad * (1 - self.cache ** 2)


class PhaseMap(Layer):
    """
    Map complex activations to real angles :math:`\\arctan(v / u)`.

    The input must have a strictly positive real part.
    """

    kind = 'phase_map'

    def forward(self, x):
        if np.any(~(x.real > 0)):
            raise PhaseMapDomainError(
                'Phase mapping requires a positive real part (min {:.3e})'
                .format(np.min(x.real)))
        self.cache = x
        return np.arctan(x.imag / x.real)

    def backward(self, grad):
        x = self.cache
        u, v = x.real, x.imag
        return grad * (-v + 1j * u) / (u ** 2 + v ** 2)


class SplitMaxPool(Layer):
    """
    Max-pooling applied to the real and imaginary parts independently.

    The output length is :math:`\\lceil L / S_p \\rceil`; incomplete windows
    at the end are padded with ``-inf``.
    """

    kind = 'split_maxpool'

    def __init__(self, size=2, stride=2):
        super().__init__()
        if size < 1 or stride < 1:
            raise ValueError('Invalid pooling window: {}'.format((size, stride)))
        self.size = size
        self.stride = stride

    def output_shape(self, shape):
        n, channels = shape
        return (-(-n // self.stride), channels)

    def spec(self):
        return LayerSpec(self.kind, pool=(self.size, self.stride))

    def _pool(self, x):
        n = x.shape[1]
        n_out = -(-n // self.stride)
        extra = max((n_out - 1) * self.stride + self.size - n, 0)
        padded = np.pad(x, ((0, 0), (0, extra), (0, 0)),
                        constant_values=-np.inf)
        windows = sliding_window_view(padded, self.size, axis=1)
        windows = windows[:, ::self.stride][:, :n_out]
        arg = np.argmax(windows, axis=-1)
        out = np.take_along_axis(windows, arg[..., np.newaxis], axis=-1)[..., 0]
        position = arg + self.stride * np.arange(n_out)[np.newaxis, :, np.newaxis]
        return out, position

    def _unpool(self, grad, position, shape):
        d = np.zeros(shape, dtype=grad.dtype)
        b = np.arange(shape[0])[:, np.newaxis, np.newaxis]
        f = np.arange(shape[2])[np.newaxis, np.newaxis, :]
        np.add.at(d, (b, position, f), grad)
        return d

    def forward(self, x):
        if np.iscomplexobj(x):
            out_re, pos_re = self._pool(x.real)
            out_im, pos_im = self._pool(x.imag)
            self.cache = (x.shape, pos_re, pos_im)
            return out_re + 1j * out_im
        out, pos = self._pool(x)
        self.cache = (x.shape, pos, None)
        return out

    def backward(self, grad):
        shape, pos_re, pos_im = self.cache
        if pos_im is None:
            return self._unpool(grad, pos_re, shape)
        return (self._unpool(grad.real, pos_re, shape)
                + 1j * self._unpool(grad.imag, pos_im, shape))


class Flatten(Layer):
    kind = 'flatten'

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        self.cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self.cache)


class ResidualBlock(Layer):
    """
    Two complex convolutions, each followed by a split tanh, added to a
    shortcut of the input.

    The shortcut is the identity when the channel counts agree, and a 1x1
    complex convolution otherwise.
    """

    kind = 'residual_block'

    def __init__(self, in_channels, out_channels, length=3):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.length = length
        self.conv1 = Conv1d(length, in_channels, out_channels)
        self.act1 = CTanh()
        self.conv2 = Conv1d(length, out_channels, out_channels)
        self.act2 = CTanh()
        self.shortcut = None
        if in_channels != out_channels:
            self.shortcut = Conv1d(1, in_channels, out_channels)

    def children(self):
        layers = [('conv1', self.conv1), ('conv2', self.conv2)]
        if self.shortcut is not None:
            layers.append(('shortcut', self.shortcut))
        return tuple(layers)

    def output_shape(self, shape):
        shape = self.conv1.output_shape(shape)
        return self.conv2.output_shape(shape)

    def flops(self, shape):
        total = self.conv1.flops(shape)
        total += self.conv2.flops(self.conv1.output_shape(shape))
        if self.shortcut is not None:
            total += self.shortcut.flops(shape)
        return total

    def spec(self):
        return LayerSpec(self.kind, kernel=(self.length, self.in_channels,
                                            self.out_channels, 1))

    def forward(self, x):
        h = self.act2.forward(self.conv2.forward(
            self.act1.forward(self.conv1.forward(x))))
        if self.shortcut is None:
            return h + x
        return h + self.shortcut.forward(x)

    def backward(self, grad):
        d_x = self.conv1.backward(self.act1.backward(
            self.conv2.backward(self.act2.backward(grad))))
        if self.shortcut is None:
            return d_x + grad
        return d_x + self.shortcut.backward(grad)


def make_layer(spec):
    """Construct an uninitialised (zero-weight) layer from its spec."""
    if spec.kind in ('complex_conv1d', 'real_conv1d'):
        length, f_in, f_out, stride = spec.kernel
        return Conv1d(length, f_in, f_out, stride,
                      complex_valued=spec.kind == 'complex_conv1d')
    if spec.kind in ('complex_affine', 'real_affine'):
        n_in, n_out = spec.width
        return Affine(n_in, n_out,
                      complex_valued=spec.kind == 'complex_affine')
    if spec.kind == 'residual_block':
        length, f_in, f_out, _ = spec.kernel
        return ResidualBlock(f_in, f_out, length)
    if spec.kind == 'split_maxpool':
        return SplitMaxPool(*spec.pool)
    simple = {'ctanh': CTanh, 'csigmoid': CSigmoid, 'tanh': Tanh,
              'phase_map': PhaseMap, 'flatten': Flatten}
    return simple[spec.kind]()
