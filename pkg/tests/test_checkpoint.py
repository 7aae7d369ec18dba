import json

import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.baselines.tdnn import TdnnSpec, build_tdnn
from nfdoa.network.checkpoint import (checkpoint_from_dict,
                                      checkpoint_to_dict, load_checkpoint,
                                      save_checkpoint)
from nfdoa.network.optimizer import TrainConfig


def test_round_trip(tmp_path, tiny_net, rng):
    config = TrainConfig(epochs=5, seed=2)
    path = save_checkpoint(tmp_path / 'nets' / 'cvnn.json', tiny_net,
                           train_config=config, seed=2,
                           metrics={'validation_mae': 0.1})
    checkpoint = load_checkpoint(path)
    net = checkpoint.network
    assert net.model == 'cvnn'
    assert net.n_in == 9
    assert checkpoint.train_config == config
    assert checkpoint.seed == 2
    assert checkpoint.metrics == {'validation_mae': 0.1}
    for (name, a), (_, b) in zip(tiny_net.parameters(), net.parameters()):
        assert a.dtype == b.dtype, name
        npt.assert_array_equal(a, b)
    x = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
    npt.assert_array_equal(net.forward(x), tiny_net.forward(x))


def test_tdnn_round_trip(rng):
    tdnn = build_tdnn(TdnnSpec(n_in=4, context=3, filters=(2,), dense=(3,)),
                      seed=4)
    obj = json.loads(json.dumps(checkpoint_to_dict(tdnn)))
    checkpoint = checkpoint_from_dict(obj)
    assert checkpoint.train_config is None
    x = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    npt.assert_array_equal(checkpoint.network.forward(x), tdnn.forward(x))


def test_invalid_checkpoints(tiny_net):
    obj = checkpoint_to_dict(tiny_net)
    with pytest.raises(ValueError):
        checkpoint_from_dict(dict(obj, model='transformer'))
    params = dict(obj['params'])
    params.pop('3.bias')
    with pytest.raises(ValueError):
        checkpoint_from_dict(dict(obj, params=params))
    params = dict(obj['params'])
    params['3.bias'] = {'complex': True, 'data': [[0.0, 0.0]]}
    with pytest.raises(ValueError):
        checkpoint_from_dict(dict(obj, params=params))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_checkpoint(tmp_path / 'missing.json')
