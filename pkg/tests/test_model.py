import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.network.layers import Flatten
from nfdoa.network.model import (ComplexNetwork, build_cvnn,
                                 cvnn_architecture)


def features(rng, n, n_in):
    x = rng.standard_normal((n, n_in)) + 1j * rng.standard_normal((n, n_in))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def test_architecture():
    specs = cvnn_architecture(33)
    kinds = [spec.kind for spec in specs]
    assert kinds == ['residual_block', 'split_maxpool', 'residual_block',
                     'split_maxpool', 'flatten', 'complex_affine', 'csigmoid',
                     'phase_map', 'real_affine', 'tanh', 'real_affine', 'tanh',
                     'real_affine']
    assert specs[5].width == (36, 20)
    with pytest.raises(ValueError):
        cvnn_architecture(33, channels=())


def test_shapes():
    net = build_cvnn(33)
    assert net.flatten_width == 36
    assert net.n_in == 33
    assert net.input_shape == (33, 1)
    assert net.shapes[-1] == (1,)
    assert build_cvnn(17).flatten_width == 20


def test_n_parameters(tiny_net):
    assert tiny_net.n_parameters() == 159


def test_zero_init(rng):
    net = build_cvnn(33, init='zeros')
    npt.assert_array_equal(net.forward(features(rng, 4, 33)), 0)
    with pytest.raises(ValueError):
        build_cvnn(33, init='orthogonal')


def test_predict_matches_forward(tiny_net, rng):
    x = features(rng, 7, 9)
    npt.assert_array_equal(tiny_net.predict(x, batch_size=3),
                           tiny_net.forward(x))
    assert tiny_net.predict(x[0]).shape == (1,)
    with pytest.raises(ValueError):
        tiny_net.forward(features(rng, 2, 8))


def test_initialization_is_seeded(rng):
    x = features(rng, 3, 9)
    a = build_cvnn(9, seed=4).forward(x)
    npt.assert_array_equal(a, build_cvnn(9, seed=4).forward(x))
    assert not np.array_equal(a, build_cvnn(9, seed=5).forward(x))


def test_precision(rng):
    net = build_cvnn(9, precision='float32')
    assert all(value.dtype in (np.float32, np.complex64)
               for _, value in net.parameters())
    assert net.forward(features(rng, 2, 9)).dtype == np.float32
    with pytest.raises(ValueError):
        net.set_precision('float16')


def test_single_output_required():
    with pytest.raises(ValueError):
        ComplexNetwork([Flatten()], 4)


def test_not_phase_invariant(rng):
    net = build_cvnn(33, seed=1)
    x = features(rng, 5, 33)
    rotated = x * np.exp(1j * 1.0)
    assert np.max(np.abs(net.forward(x) - net.forward(rotated))) > 1e-6


def test_parameter_round_trip(tiny_net):
    names = [name for name, _ in tiny_net.parameters()]
    assert names[0] == '0.conv1.weight'
    bias = np.full(4, 0.25 + 0.5j)
    tiny_net.load_parameter('3.bias', bias)
    npt.assert_array_equal(dict(tiny_net.parameters())['3.bias'], bias)
