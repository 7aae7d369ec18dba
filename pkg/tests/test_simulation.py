import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.signal.geometry import SourcePlacement, near_field_steering
from nfdoa.signal.simulation import (NoiseSpec, SnapshotSet,
                                     generate_source_symbols, load_snapshots,
                                     make_rng, received_snapshots,
                                     save_snapshots)


def test_make_rng_streams():
    a = make_rng(7, 3).standard_normal(5)
    npt.assert_array_equal(a, make_rng(7, 3).standard_normal(5))
    assert not np.array_equal(a, make_rng(7, 4).standard_normal(5))
    assert not np.array_equal(a, make_rng(8, 3).standard_normal(5))
    assert not np.array_equal(make_rng(7).standard_normal(5), a)


def test_noise_variance():
    assert NoiseSpec(snr_db=10).variance == pytest.approx(0.1)
    assert NoiseSpec(snr_db=-10).variance == pytest.approx(10.0)
    assert NoiseSpec(snr_db=float('inf')).variance == 0.0


def test_source_symbols():
    s = generate_source_symbols(2, 20000, seed=1)
    assert s.shape == (2, 20000)
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, abs=0.03)
    npt.assert_array_equal(s, generate_source_symbols(2, 20000, seed=1))
    with pytest.raises(ValueError):
        generate_source_symbols(0, 10, seed=1)


def test_noiseless_reference_row(small_array):
    source = SourcePlacement(theta=0.4, range=60.0)
    snapshots = received_snapshots([source], small_array, 32,
                                   NoiseSpec(float('inf'), seed=9))
    assert snapshots.data.shape == (17, 32)
    assert snapshots.n_snapshots == 32
    assert snapshots.truth == [source]
    symbols = generate_source_symbols(1, 32, seed=9)
    npt.assert_allclose(snapshots.data[small_array.ref_index - 1], symbols[0],
                        rtol=1e-15)
    a = near_field_steering(source, small_array)
    npt.assert_allclose(snapshots.data, np.outer(a, symbols[0]), rtol=1e-12)


def test_received_energy(full_array):
    sources = [SourcePlacement(np.deg2rad(-20), 300.0),
               SourcePlacement(np.deg2rad(35), 700.0)]
    snapshots = received_snapshots(sources, full_array, 10000,
                                   NoiseSpec(snr_db=0, seed=3))
    measured = np.mean(np.abs(snapshots.data) ** 2, axis=1)
    expected = sum(np.abs(near_field_steering(s, full_array)) ** 2
                   for s in sources) + 1.0
    assert np.mean(measured) == pytest.approx(np.mean(expected), rel=0.03)
    npt.assert_allclose(measured, expected, rtol=0.06)


def test_different_seeds_differ(small_array):
    source = [SourcePlacement(0.0, 60.0)]
    a = received_snapshots(source, small_array, 4, NoiseSpec(10, seed=1))
    b = received_snapshots(source, small_array, 4, NoiseSpec(10, seed=2))
    assert a.data[0, 0] != b.data[0, 0]


def test_invalid_requests(small_array):
    source = [SourcePlacement(0.0, 60.0)]
    with pytest.raises(ValueError):
        received_snapshots(source, small_array, 0, NoiseSpec(10))
    with pytest.raises(ValueError):
        received_snapshots([], small_array, 4, NoiseSpec(10))
    with pytest.raises(ValueError):
        SnapshotSet(data=np.zeros((16, 4), dtype=complex), config=small_array)


def test_snapshot_file(tmp_path, small_array):
    sources = [SourcePlacement(0.2, 50.0), SourcePlacement(-0.5, 90.0)]
    snapshots = received_snapshots(sources, small_array, 6,
                                   NoiseSpec(5, seed=4))
    path = tmp_path / 'snapshots.bin'
    save_snapshots(path, snapshots)
    assert path.stat().st_size == 24 + 16 * 17 * 6
    assert path.with_suffix('.json').exists()

    loaded = load_snapshots(path)
    npt.assert_array_equal(loaded.data, snapshots.data)
    assert loaded.config == small_array
    assert loaded.truth == sources


def test_truncated_snapshot_file(tmp_path, small_array):
    snapshots = received_snapshots([SourcePlacement(0.2, 50.0)], small_array,
                                   6, NoiseSpec(5, seed=4))
    path = tmp_path / 'snapshots.bin'
    save_snapshots(path, snapshots)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(ValueError):
        load_snapshots(path)
