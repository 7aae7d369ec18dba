"""
Save and load trained networks as JSON.

Floats are written with their shortest exact representation, so a loaded
checkpoint reproduces the saved parameters bit for bit.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines.tdnn import TdnnNetwork
from .layers import LayerSpec
from .model import ComplexNetwork
from .optimizer import TrainConfig


MODELS = {
    ComplexNetwork.model: ComplexNetwork,
    TdnnNetwork.model: TdnnNetwork,
}


@dataclass
class Checkpoint:
    network: object
    train_config: TrainConfig = None
    seed: int = None
    metrics: dict = field(default_factory=dict)


def _encode(array):
    array = np.asarray(array)
    if np.iscomplexobj(array):
        data = np.stack([array.real, array.imag], axis=-1).tolist()
    else:
        data = array.tolist()
    return {'complex': bool(np.iscomplexobj(array)), 'data': data}


def _decode(obj):
    data = np.asarray(obj['data'], dtype=float)
    if obj['complex']:
        return data[..., 0] + 1j * data[..., 1]
    return data


def checkpoint_to_dict(net, train_config=None, seed=None, metrics=None):
    return {
        'model': net.model,
        'n_in': net.n_in,
        'precision': net.precision,
        'architecture': [spec.to_dict() for spec in net.architecture()],
        'params': {name: _encode(value) for name, value in net.parameters()},
        'train_config': None if train_config is None else train_config.to_dict(),
        'seed': seed,
        'metrics': dict(metrics or {}),
    }


def checkpoint_from_dict(obj):
    try:
        cls = MODELS[obj['model']]
    except KeyError:
        raise ValueError('Unknown model: {}'.format(obj.get('model'))) from None
    specs = [LayerSpec.from_dict(spec) for spec in obj['architecture']]
    net = cls.from_architecture(specs, obj['n_in'])
    net.set_precision(obj.get('precision', 'float64'))
    names = {name for name, _ in net.parameters()}
    if names != set(obj['params']):
        raise ValueError('Checkpoint parameters do not match the architecture')
    for name, value in obj['params'].items():
        net.load_parameter(name, _decode(value))
    train_config = obj.get('train_config')
    return Checkpoint(
        network=net,
        train_config=None if train_config is None
        else TrainConfig.from_dict(train_config),
        seed=obj.get('seed'),
        metrics=obj.get('metrics', {}))


def save_checkpoint(path, net, train_config=None, seed=None, metrics=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    obj = checkpoint_to_dict(net, train_config, seed, metrics)
    with open(path, 'w') as f:
        json.dump(obj, f)
    logging.getLogger(__name__).info('Wrote checkpoint {}'.format(path))
    return path


def load_checkpoint(path):
    with open(path) as f:
        return checkpoint_from_dict(json.load(f))
