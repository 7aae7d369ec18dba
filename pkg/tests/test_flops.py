import pytest

from nfdoa.baselines.tdnn import TdnnSpec, build_tdnn, tdnn_flops
from nfdoa.network.flops import (conv1d_flops, dense_flops, flops_count,
                                 flops_table)
from nfdoa.network.model import build_cvnn


def test_layer_counts():
    assert dense_flops(10, 1, complex_valued=False) == 19
    assert dense_flops(36, 20) == 5680
    assert conv1d_flops(33, 1, 3, 8) == 21120
    assert conv1d_flops(66, 8, 5, 8, complex_valued=False) == 212256


def test_cvnn_flops():
    net = build_cvnn(33)
    assert flops_count(net) == 250535
    assert net.flops() == 250535
    assert flops_count(net) == pytest.approx(0.24e6, rel=0.25)


def test_tdnn_flops():
    assert tdnn_flops() == 380755
    assert tdnn_flops(TdnnSpec()) == pytest.approx(0.34e6, rel=0.25)


def test_flops_table():
    net = build_tdnn(TdnnSpec(n_in=4, context=3, filters=(2,), dense=()))
    table = flops_table(net)
    assert list(table.columns) == ['layer', 'kind', 'flops']
    assert list(table['kind']) == ['real_conv1d', 'tanh', 'flatten',
                                   'real_affine']
    assert list(table['flops']) == [2 * 8 * 10 * 2, 0, 0, 31]
    assert table['flops'].sum() == flops_count(net)
