import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.baselines.tdnn import (TdnnSpec, build_tdnn, tdnn_forward,
                                  tdnn_train)
from nfdoa.network.optimizer import TrainConfig


def test_default_network():
    net = build_tdnn()
    assert net.input_shape == (66, 1)
    assert net.n_in == 33
    assert TdnnSpec().input_dim == 66
    assert [layer.kind for layer in net.layers][:2] == ['real_conv1d', 'tanh']
    assert all(not np.iscomplexobj(value) for _, value in net.parameters())


def test_zero_init():
    net = build_tdnn(init='zeros')
    assert tdnn_forward(net, np.ones(33, dtype=complex)) == 0


def test_prepare():
    net = build_tdnn(TdnnSpec(n_in=2, context=3, filters=(1,), dense=()))
    x = net.prepare(np.array([[1 + 2j, 3 + 4j]]))
    assert x.shape == (1, 4, 1)
    npt.assert_array_equal(x[0, :, 0], [1, 3, 2, 4])
    with pytest.raises(ValueError):
        net.prepare(np.ones((1, 3), dtype=complex))


def test_invalid_spec():
    with pytest.raises(ValueError):
        TdnnSpec(filters=())
    with pytest.raises(ValueError):
        TdnnSpec(n_in=0)


def test_train(tiny_train_set):
    spec = TdnnSpec(n_in=9, context=3, filters=(2,), dense=(4,))
    config = TrainConfig(epochs=3, batch_size=16, learning_rate=0.01, seed=1)
    net, history = tdnn_train(spec, tiny_train_set, config, seed=1)
    assert net.model == 'tdnn'
    assert len(history) == 3
    assert np.all(np.isfinite(history['train_loss']))
    again, _ = tdnn_train(spec, tiny_train_set, config, seed=1)
    npt.assert_array_equal(net.predict(tiny_train_set.features),
                           again.predict(tiny_train_set.features))
