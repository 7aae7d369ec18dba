import logging

import numpy as np
import numpy.testing as npt
import pytest

from nfdoa.baselines.music import (MusicGrid, grid_manifold,
                                   music_spectrum_near, near_field_music,
                                   qint3, spectrum_frame, spectrum_peaks)
from nfdoa.signal.covariance import analytic_covariance
from nfdoa.signal.geometry import SourcePlacement


@pytest.fixture
def grid():
    return MusicGrid.from_degrees(-60, 60, 1, 30, 120, 5)


def test_qint3_parabola():
    x = np.array([-1.0, 0.0, 1.0])
    y = 5 - (x - 0.3) ** 2
    p, height, curvature = qint3(*y)
    assert p == pytest.approx(0.3)
    assert height == pytest.approx(5.0)
    assert curvature == pytest.approx(-1.0)


def test_grid(grid):
    assert grid.shape == (121, 19)
    assert grid.theta_axis[0] == pytest.approx(np.deg2rad(-60))
    assert grid.range_axis[-1] == 120


@pytest.mark.parametrize('theta, ranges', [
    ([0.2, 0.1], [50.0]), ([0.0, np.pi / 2], [50.0]), ([0.0], [-1.0, 5.0]),
    ([], [50.0]), ([0.1], [60.0, 60.0]),
])
def test_invalid_grid(theta, ranges):
    with pytest.raises(ValueError):
        MusicGrid(theta_axis=np.array(theta), range_axis=np.array(ranges))


def test_grid_fresnel_zone(small_array, caplog):
    assert MusicGrid.from_degrees(-10, 10, 1, 20, 120, 10) \
        .check_fresnel_zone(small_array)
    with caplog.at_level(logging.WARNING):
        assert not MusicGrid.from_degrees(-10, 10, 1, 5, 120, 5) \
            .check_fresnel_zone(small_array)
    assert 'Fresnel zone' in caplog.text


def test_spectrum_matches_manifold(grid, small_array, rng):
    x = rng.standard_normal((17, 1)) + 1j * rng.standard_normal((17, 1))
    vectors = x / np.linalg.norm(x)
    manifold = grid_manifold(grid, small_array)
    assert manifold.shape == (121, 19, 17)
    npt.assert_allclose(
        music_spectrum_near(vectors, grid, small_array, manifold=manifold),
        music_spectrum_near(vectors, grid, small_array), rtol=1e-12)


def test_peak_on_grid_node(grid, small_array):
    source = SourcePlacement(np.deg2rad(20.0), 60.0)
    raw = analytic_covariance([source], small_array, noise_var=0.01)
    spectrum, estimates = near_field_music(raw, 1, grid, small_array,
                                           refine=False)
    i, j = np.unravel_index(np.argmax(spectrum), spectrum.shape)
    assert grid.theta_axis[i] == pytest.approx(source.theta)
    assert grid.range_axis[j] == 60.0
    assert estimates[0].theta == pytest.approx(source.theta)
    assert estimates[0].range == 60.0

    _, refined = near_field_music(raw, 1, grid, small_array, refine=True)
    assert abs(refined[0].theta - source.theta) <= np.deg2rad(0.5) + 1e-12
    assert abs(refined[0].range - 60.0) <= 2.5


def test_refinement_between_nodes(small_array):
    grid = MusicGrid.from_degrees(-30, 30, 1, 40, 80, 5)
    source = SourcePlacement(np.deg2rad(10.4), 62.0)
    raw = analytic_covariance([source], small_array, noise_var=0.01)
    _, coarse = near_field_music(raw, 1, grid, small_array, refine=False)
    _, fine = near_field_music(raw, 1, grid, small_array, refine=True)
    assert abs(fine[0].theta - source.theta) \
        < abs(coarse[0].theta - source.theta)


def test_two_sources(grid, small_array):
    sources = [SourcePlacement(np.deg2rad(-20.0), 50.0),
               SourcePlacement(np.deg2rad(25.0), 90.0)]
    raw = analytic_covariance(sources, small_array, noise_var=0.01)
    _, estimates = near_field_music(raw, 2, grid, small_array, refine=False)
    thetas = sorted(np.rad2deg(e.theta) for e in estimates)
    npt.assert_allclose(thetas, [-20.0, 25.0], atol=1e-9)


def test_spectrum_peaks():
    spectrum = np.zeros((5, 5))
    spectrum[1, 1] = 3.0
    spectrum[3, 3] = 5.0
    spectrum[3, 4] = 4.0
    npt.assert_array_equal(spectrum_peaks(spectrum, 2), [[3, 3], [1, 1]])


def test_errors(grid, small_array, full_array):
    raw = analytic_covariance([SourcePlacement(0.0, 60.0)], small_array)
    with pytest.raises(ValueError):
        near_field_music(raw, 17, grid, small_array)
    with pytest.raises(ValueError):
        near_field_music(raw, 1, grid, full_array)


def test_spectrum_frame(grid):
    spectrum = np.arange(np.prod(grid.shape), dtype=float).reshape(grid.shape)
    frame = spectrum_frame(spectrum, grid)
    assert list(frame.columns) == ['theta_deg', 'range_lambda', 'power']
    assert len(frame) == 121 * 19
    row = frame.iloc[20]
    assert row['theta_deg'] == pytest.approx(-59.0)
    assert row['range_lambda'] == 35.0
    assert row['power'] == 20.0
