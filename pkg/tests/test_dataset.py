import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.pipeline.dataset import (Dataset, DatasetSpec, axis_values,
                                    build_dataset, load_dataset,
                                    save_datasets, split_validation)
from nfdoa.signal.geometry import ArrayConfig


def test_axis_values():
    npt.assert_allclose(axis_values(0, 1, 0.25), [0, 0.25, 0.5, 0.75, 1])
    npt.assert_allclose(axis_values(0, 1, 0.25, endpoint=False),
                        [0, 0.25, 0.5, 0.75])
    npt.assert_allclose(axis_values(0, 0.9, 0.25), [0, 0.25, 0.5, 0.75])
    npt.assert_allclose(axis_values(5, 5, 1), [5])
    with pytest.raises(ValueError):
        axis_values(0, 1, 0)
    with pytest.raises(ValueError):
        axis_values(1, 0, 0.5)


def test_default_grid():
    spec = DatasetSpec()
    assert len(spec.distances()) == 4
    assert len(spec.thetas()) == 361
    assert len(spec) == 1444
    assert spec.thetas()[0] == pytest.approx(-np.pi / 2)
    assert spec.thetas()[-1] == pytest.approx(np.pi / 2)


def test_full_scale_grid():
    spec = DatasetSpec(distance_range=(400.0, 1600.0, 18.75),
                       theta_range=(-90.0, 90.0, 0.01), theta_endpoint=False)
    assert len(spec.distances()) == 65
    assert len(spec.thetas()) == 18000
    assert len(spec) == 1170000


@pytest.mark.parametrize('kwargs', [
    {'role': 'holdout'}, {'snapshots': 0}, {'n_in': 32}, {'n_in': 65},
])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        DatasetSpec(**kwargs)


def test_build(tiny_spec, tiny_train_set):
    assert len(tiny_train_set) == 39
    assert tiny_train_set.features.shape == (39, 9)
    assert tiny_train_set.n_in == 9
    npt.assert_allclose(tiny_train_set.labels[:13], tiny_spec.thetas())
    npt.assert_array_equal(tiny_train_set.distances[:13], 40.0)
    npt.assert_array_equal(tiny_train_set.distances[-13:], 120.0)
    npt.assert_allclose(np.linalg.norm(tiny_train_set.features, axis=1), 1.0)
    assert np.all(tiny_train_set.features[:, 4].real >= 0)


def test_build_is_reproducible(tiny_spec, tiny_train_set):
    npt.assert_array_equal(build_dataset(tiny_spec).features,
                           tiny_train_set.features)


def test_parallel_build_matches(tiny_spec, tiny_train_set, mocker):
    mocker.patch('nfdoa.pipeline.dataset.CHUNK_SIZE', 10)
    npt.assert_array_equal(build_dataset(tiny_spec, workers=2).features,
                           tiny_train_set.features)


def test_strict_fresnel():
    spec = DatasetSpec(distance_range=(200.0, 200.0, 1.0),
                       theta_range=(0.0, 10.0, 10.0), n_in=9,
                       array=ArrayConfig(n_elements=17), strict_fresnel=True)
    with pytest.raises(ValueError):
        build_dataset(spec)


def test_split_validation(tiny_train_set):
    train, validation = split_validation(tiny_train_set, 0.2, seed=3)
    assert len(validation) == 9
    assert len(train) == 30
    for distance in (40.0, 80.0, 120.0):
        assert np.count_nonzero(validation.distances == distance) == 3
    pairs = {(d, t) for d, t in zip(train.distances, train.labels)}
    held = {(d, t) for d, t in zip(validation.distances, validation.labels)}
    assert not pairs & held
    assert len(pairs | held) == 39
    assert validation.spec.role == 'validation'
    assert train.spec.role == 'train'

    again = split_validation(tiny_train_set, 0.2, seed=3)[1]
    npt.assert_array_equal(again.labels, validation.labels)
    assert len(split_validation(tiny_train_set, 0.0)[1]) == 0
    with pytest.raises(ValueError):
        split_validation(tiny_train_set, 1.0)


def test_to_frame(tiny_test_set):
    frame = tiny_test_set.to_frame()
    assert list(frame.columns[:3]) == ['distance', 'theta', 're_0']
    assert frame.columns[-1] == 'im_8'
    assert frame.shape == (12, 20)
    loaded = Dataset.from_frame(frame)
    npt.assert_array_equal(loaded.features, tiny_test_set.features)


def test_store(tmp_path, tiny_train_set, tiny_test_set):
    path = tmp_path / 'dataset.h5'
    save_datasets(path, {'train': tiny_train_set, 'test': tiny_test_set})
    loaded = load_dataset(path, 'test')
    npt.assert_array_equal(loaded.features, tiny_test_set.features)
    npt.assert_array_equal(loaded.labels, tiny_test_set.labels)
    npt.assert_array_equal(loaded.distances, tiny_test_set.distances)
    assert len(load_dataset(path)) == 39
    with pytest.raises(KeyError):
        load_dataset(path, 'validation')
    with pytest.raises(ValueError):
        save_datasets(tmp_path / 'bad.h5', {'holdout': tiny_test_set})


def test_dataset_lengths_must_agree():
    with pytest.raises(ValueError):
        Dataset(features=np.zeros((3, 2)), labels=np.zeros(2),
                distances=np.zeros(3))
