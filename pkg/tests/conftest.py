import numpy as np
import pytest

from nfdoa.network.model import build_cvnn
from nfdoa.pipeline.dataset import DatasetSpec, build_dataset
from nfdoa.signal.geometry import ArrayConfig


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='Run the slow (desk-scale acceptance) tests')


def pytest_configure(config):
    config.addinivalue_line('markers',
                            'slow: desk-scale acceptance test (--runslow)')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def full_array():
    """The 65-element half-wavelength array at 28 GHz."""
    return ArrayConfig(n_elements=65, spacing=0.5, wavelength=0.0107)


@pytest.fixture
def small_array():
    """A 17-element array; its Fresnel zone spans (14.0, 128) wavelengths."""
    return ArrayConfig(n_elements=17, spacing=0.5)


@pytest.fixture
def tiny_net():
    return build_cvnn(9, channels=(2,), affine_width=4, hidden=(3,), seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def make_tiny_spec(role='train', seed=5):
    return DatasetSpec(distance_range=(40.0, 120.0, 40.0),
                       theta_range=(-60.0, 60.0, 10.0), snapshots=50,
                       snr_db=20.0, seed=seed, n_in=9,
                       array=ArrayConfig(n_elements=17), role=role)


@pytest.fixture
def tiny_spec():
    """A 39-sample grid (3 distances, 13 directions) on the small array."""
    return make_tiny_spec()


@pytest.fixture(scope='session')
def tiny_train_set():
    return build_dataset(make_tiny_spec())


@pytest.fixture(scope='session')
def tiny_test_set():
    spec = DatasetSpec(distance_range=(80.0, 80.0, 1.0),
                       theta_range=(-55.0, 55.0, 10.0), snapshots=50,
                       snr_db=20.0, seed=6, n_in=9,
                       array=ArrayConfig(n_elements=17), role='test')
    return build_dataset(spec)
