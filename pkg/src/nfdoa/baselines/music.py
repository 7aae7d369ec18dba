"""
=================
Near-Field MUSIC
=================

A two-dimensional (direction, range) MUSIC search over the exact spherical
array manifold.

The pseudo-spectrum :math:`1 / (a^H \\Xi_z \\Xi_z^H a)` is evaluated on a
rectangular grid; the estimates are its highest local maxima, refined along
each axis by fitting a parabola through three samples of the spectrum in
decibels.

"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.ndimage import maximum_filter

from ..signal.covariance import music_denominator, hermitian_eig
from ..signal.geometry import (SourcePlacement, fresnel_bounds,
                               near_field_manifold)


def _axis(lo, hi, step):
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


@dataclass(frozen=True)
class MusicGrid:
    """
    :param theta_axis: The candidate directions (radians), strictly
        increasing and inside :math:`(-\\pi/2, \\pi/2)`.
    :param range_axis: The candidate ranges (wavelengths), strictly
        increasing and positive.
    """

    theta_axis: np.ndarray
    range_axis: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_axis, dtype=float))
        rng = np.atleast_1d(np.asarray(self.range_axis, dtype=float))
        if theta.size == 0 or rng.size == 0:
            raise ValueError('The MUSIC grid is empty')
        if np.any(np.diff(theta) <= 0) or np.any(np.diff(rng) <= 0):
            raise ValueError('MUSIC grid axes must be strictly increasing')
        if np.any(np.abs(theta) >= np.pi / 2):
            raise ValueError('MUSIC directions must lie in (-pi/2, pi/2)')
        if np.any(rng <= 0):
            raise ValueError('MUSIC ranges must be positive')
        object.__setattr__(self, 'theta_axis', theta)
        object.__setattr__(self, 'range_axis', rng)

    @classmethod
    def from_degrees(cls, theta_lo, theta_hi, theta_step, range_lo, range_hi,
                     range_step):
        """Build a grid from inclusive (lo, hi, step) axis definitions."""
        return cls(theta_axis=np.deg2rad(_axis(theta_lo, theta_hi, theta_step)),
                   range_axis=_axis(range_lo, range_hi, range_step))

    @property
    def shape(self):
        return (self.theta_axis.size, self.range_axis.size)

    def check_fresnel_zone(self, config):
        """Log a warning if any candidate range lies outside the Fresnel
        zone; returns ``True`` if all ranges lie inside it."""
        lower, upper = fresnel_bounds(config)
        outside = (self.range_axis <= lower) | (self.range_axis >= upper)
        if np.any(outside):
            logging.getLogger(__name__).warning(
                '{} MUSIC ranges lie outside the Fresnel zone ({:.1f}, {:.1f})'
                .format(np.count_nonzero(outside), lower, upper))
            return False
        return True


def grid_manifold(grid, config):
    """Return the steering vectors of every grid cell, shape ``(T, R, N)``."""
    return near_field_manifold(grid.theta_axis[:, np.newaxis],
                               grid.range_axis[np.newaxis, :], config)


def music_spectrum_near(signal_vectors, grid, config, manifold=None):
    """
    Evaluate the near-field pseudo-spectrum for a signal subspace.

    :param signal_vectors: An ``(N, M)`` array of orthonormal columns.
    :param manifold: Optional precomputed ``grid_manifold(grid, config)``.
    :returns: A real ``(T, R)`` array.
    """
    spectrum = np.empty(grid.shape)
    for j, rng in enumerate(grid.range_axis):
        if manifold is None:
            steering = near_field_manifold(grid.theta_axis, rng, config)
        else:
            steering = manifold[:, j]
        spectrum[:, j] = 1.0 / music_denominator(steering, signal_vectors)
    return spectrum


def qint3(ym1, y0, yp1):
    """
    Quadratic interpolation of three uniformly spaced samples.

    Returns the extremum location ``p`` (relative to the centre sample), the
    interpolated height and the half-curvature of the parabola.
    """
    p = (yp1 - ym1) / (2 * (2 * y0 - yp1 - ym1))
    y = y0 - 0.25 * (ym1 - yp1) * p
    a = 0.5 * (ym1 - 2 * y0 + yp1)
    return p, y, a


def _refine(values, i, axis):
    if axis.size < 3 or i == 0 or i == axis.size - 1:
        return axis[i]
    ym1, y0, yp1 = values[i - 1], values[i], values[i + 1]
    if not 2 * y0 - yp1 - ym1 > 0:
        return axis[i]
    p, _, _ = qint3(ym1, y0, yp1)
    return axis[i] + np.clip(p, -0.5, 0.5) * (axis[i + 1] - axis[i])


def spectrum_peaks(spectrum, n_peaks):
    """Return the ``(theta, range)`` indices of the highest 2-D local maxima."""
    local = spectrum == maximum_filter(spectrum, size=3, mode='constant',
                                       cval=-np.inf)
    cells = np.argwhere(local)
    order = np.argsort(-spectrum[local], kind='stable')
    return cells[order[:n_peaks]]


def music_estimates(spectrum, grid, n_sources, refine=True):
    """
    Return the source placements at the highest local maxima of a spectrum,
    optionally refined by parabolic interpolation in decibels.
    """
    level = 10 * np.log10(spectrum)
    estimates = []
    for i, j in spectrum_peaks(spectrum, n_sources):
        theta, rng = grid.theta_axis[i], grid.range_axis[j]
        if refine:
            theta = _refine(level[:, j], i, grid.theta_axis)
            rng = _refine(level[i, :], j, grid.range_axis)
        estimates.append(SourcePlacement(
            theta=float(np.clip(theta, -np.pi / 2, np.pi / 2)),
            range=float(rng)))
    return estimates


def near_field_music(raw, n_sources, grid, config, refine=True, manifold=None):
    """
    Run a 2-D near-field MUSIC search.

    Parameters
    ----------
    raw
        The sample covariance of the full array.
    n_sources
        The number of sources :math:`M` (less than :math:`N`).
    grid
        The search grid.
    config
        The array geometry.
    refine
        Whether to refine the grid maxima by parabolic interpolation.
    manifold
        Optional precomputed grid steering vectors.

    Returns
    -------
        The ``(T, R)`` pseudo-spectrum and the list of estimated placements.

    """
    if not 1 <= n_sources < raw.size:
        raise ValueError('Cannot resolve {} sources with {} elements'.format(
            n_sources, raw.size))
    if raw.size != config.n_elements:
        raise ValueError('Covariance size {} does not match the array ({})'
                         .format(raw.size, config.n_elements))
    _, vectors = hermitian_eig(raw)
    spectrum = music_spectrum_near(vectors[:, :n_sources], grid, config,
                                   manifold=manifold)
    return spectrum, music_estimates(spectrum, grid, n_sources, refine=refine)


def spectrum_frame(spectrum, grid):
    """Return the spectrum as a long table (theta_deg, range_lambda, power)."""
    theta, rng = np.meshgrid(np.rad2deg(grid.theta_axis), grid.range_axis,
                             indexing='ij')
    return pd.DataFrame({
        'theta_deg': theta.ravel(),
        'range_lambda': rng.ravel(),
        'power': spectrum.ravel(),
    })
