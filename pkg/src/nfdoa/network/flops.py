"""
Floating-point operation counts.

A real 1-D convolution over an input of length :math:`L_i` with :math:`F_i`
input channels, kernel length :math:`L_c` and :math:`F_c` filters costs
:math:`2 L_i (F_i L_c^2 + 1) F_c` operations; a real dense layer mapping
:math:`I` inputs to :math:`O` outputs costs :math:`(2I - 1) O`. Complex
layers cost four times their real counterparts. Pooling, activations and
reshapes are not counted.
"""
import pandas as pd


COMPLEX_FACTOR = 4


def conv1d_flops(length, in_channels, kernel_length, out_channels,
                 complex_valued=True):
    count = 2 * length * (in_channels * kernel_length ** 2 + 1) * out_channels
    return COMPLEX_FACTOR * count if complex_valued else count


def dense_flops(n_in, n_out, complex_valued=True):
    count = (2 * n_in - 1) * n_out
    return COMPLEX_FACTOR * count if complex_valued else count


def flops_count(net):
    """Return the total number of floating-point operations of a network."""
    return int(flops_table(net)['flops'].sum())


def flops_table(net):
    """Return the per-layer operation counts of a network as a data frame."""
    rows = []
    shape = net.input_shape
    for ix, layer in enumerate(net.layers):
        rows.append({'layer': ix, 'kind': layer.kind,
                     'flops': layer.flops(shape)})
        shape = layer.output_shape(shape)
    return pd.DataFrame(rows, columns=['layer', 'kind', 'flops'])
