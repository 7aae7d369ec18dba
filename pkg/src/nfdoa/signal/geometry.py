"""
==============
Array Geometry
==============

This module describes a uniform linear array (ULA) and the steering vectors
that near-field and far-field sources induce on it.

All lengths are expressed in wavelengths, and all angles in radians measured
from broadside. The reference element :math:`n_c` sits at the centre of the
array and the element offsets are :math:`\\delta_n = n - n_c`.

"""
import logging
from dataclasses import dataclass

import numpy as np


FRESNEL_LOWER_FACTOR = 0.62
"""The constant in the lower (radiative near-field) bound of the Fresnel zone."""


@dataclass(frozen=True)
class ArrayConfig:
    """
    The geometry of a uniform linear array.

    Parameters
    ----------
    n_elements
        The number of array elements :math:`N` (at least 2).
    spacing
        The element spacing :math:`d`, as a multiple of the wavelength.
    wavelength
        The carrier wavelength :math:`\\lambda` in metres; it is only used
        when reporting physical distances.

    """

    n_elements: int = 65
    spacing: float = 0.5
    wavelength: float = 0.0107

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ValueError('Invalid number of elements: {}'.format(
                self.n_elements))
        if not self.spacing > 0:
            raise ValueError('Invalid element spacing: {}'.format(
                self.spacing))
        if not self.wavelength > 0:
            raise ValueError('Invalid wavelength: {}'.format(self.wavelength))

    @property
    def ref_index(self):
        """The 1-based index of the reference element."""
        if self.n_elements % 2 == 1:
            return (self.n_elements + 1) // 2
        return self.n_elements // 2

    @property
    def aperture(self):
        """The array aperture :math:`D = (N - 1) d`, in wavelengths."""
        return (self.n_elements - 1) * self.spacing

    def offsets(self):
        """Return the element offsets :math:`\\delta_n = n - n_c`."""
        return np.arange(1, self.n_elements + 1) - self.ref_index

    def to_meters(self, length):
        """Convert a length in wavelengths into metres."""
        return length * self.wavelength


@dataclass(frozen=True)
class SourcePlacement:
    """
    The position of a single source relative to the reference element.

    :param theta: The direction of arrival, in radians from broadside.
    :param range: The distance to the reference element, in wavelengths.
    """

    theta: float
    range: float

    def __post_init__(self):
        if not np.abs(self.theta) <= np.pi / 2:
            raise ValueError('Direction {} rad lies outside [-pi/2, pi/2]'
                             .format(self.theta))
        if not self.range > 0:
            raise ValueError('Invalid source range: {}'.format(self.range))


@dataclass(frozen=True)
class FresnelParams:
    """The linear (``alpha``) and quadratic (``beta``) phase coefficients."""

    alpha: float
    beta: float


def rayleigh_distance(aperture, wavelength=1.0):
    """
    Return the Rayleigh distance :math:`2 D^2 / \\lambda`.

    The result has the same units as the inputs; pass ``wavelength=1`` to
    work in wavelengths.
    """
    if not aperture > 0 or not wavelength > 0:
        raise ValueError('Aperture ({}) and wavelength ({}) must be positive'
                         .format(aperture, wavelength))
    return 2.0 * aperture ** 2 / wavelength


def fresnel_bounds(config):
    """
    Return the lower and upper limits of the Fresnel zone, in wavelengths.

    Parameters
    ----------
    config
        The array geometry.

    Returns
    -------
        The tuple ``(0.62 * sqrt(D^3), 2 D^2)``.

    """
    aperture = config.aperture
    lower = FRESNEL_LOWER_FACTOR * np.sqrt(aperture ** 3)
    upper = rayleigh_distance(aperture)
    return lower, upper


def check_fresnel_zone(source, config, strict=False):
    """
    Check that a source lies inside the Fresnel zone of the array.

    Violations raise a ``ValueError`` when ``strict`` is set, and are logged
    as warnings otherwise.

    :returns: ``True`` if the source lies inside the Fresnel zone.
    """
    lower, upper = fresnel_bounds(config)
    if lower < source.range < upper:
        return True
    msg = 'Source range {:.1f} lies outside the Fresnel zone ({:.1f}, {:.1f})'\
        .format(source.range, lower, upper)
    if strict:
        raise ValueError(msg)
    logging.getLogger(__name__).warning(msg)
    return False


def exact_range(source, config, n):
    """
    Return the distance from the ``n``-th element (1-based) to the source, by
    the law of cosines.
    """
    if not 1 <= n <= config.n_elements:
        raise ValueError('Element index {} outside 1..{}'.format(
            n, config.n_elements))
    offset = (n - config.ref_index) * config.spacing
    return np.sqrt(source.range ** 2 + offset ** 2
                   - 2 * source.range * offset * np.sin(source.theta))


def _psi(theta, rng, config):
    """
    Return the normalised element ranges and their phase lengths.

    The outputs have shape ``theta.shape + (N,)``; ``phi`` is the path
    difference :math:`r (\\psi - 1)` evaluated without cancellation.
    """
    theta = np.asarray(theta, dtype=float)[..., np.newaxis]
    rng = np.asarray(rng, dtype=float)[..., np.newaxis]
    offset = config.offsets() * config.spacing
    # psi^2 - 1, and r (psi - 1) = r (psi^2 - 1) / (psi + 1).
    excess = offset ** 2 / rng - 2 * offset * np.sin(theta)
    psi = np.sqrt(1 + excess / rng)
    phi = excess / (psi + 1)
    return psi, phi


def near_field_manifold(theta, rng, config):
    """
    Return exact spherical-wavefront steering vectors for arrays of
    directions and ranges (broadcast against each other).

    :returns: A complex array of shape ``broadcast(theta, rng).shape + (N,)``.
    """
    theta, rng = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                     np.asarray(rng, dtype=float))
    psi, phi = _psi(theta, rng, config)
    return np.exp(-2j * np.pi * phi) / psi


def near_field_steering(source, config):
    """
    Return the exact near-field steering vector of a source.

    Entry :math:`n` equals :math:`\\psi_n^{-1} \\exp(-j 2 \\pi \\Phi_n)`; the
    reference entry is exactly ``1 + 0j``.
    """
    return near_field_manifold(source.theta, source.range, config)


def fresnel_params(source, config):
    """Return the Fresnel-approximation phase coefficients of a source."""
    alpha = 2 * np.pi * config.spacing * np.sin(source.theta)
    beta = (np.pi * config.spacing ** 2 / source.range
            * np.cos(source.theta) ** 2)
    return FresnelParams(alpha=alpha, beta=beta)


def fresnel_steering(source, config):
    """
    Return the Fresnel-approximate steering vector of a source.

    The amplitude :math:`\\kappa_n = 1 / \\psi_n` is exact; only the phase is
    truncated to :math:`\\delta_n \\alpha - \\delta_n^2 \\beta`.
    """
    psi, _ = _psi(source.theta, source.range, config)
    params = fresnel_params(source, config)
    delta = config.offsets()
    phase = delta * params.alpha - delta ** 2 * params.beta
    return np.exp(1j * phase) / psi


def far_field_steering(theta, config, n_elements=None):
    """
    Return plane-wave steering vectors referenced to the first element.

    :param theta: A direction (or array of directions) in radians.
    :param config: The array geometry (supplies the spacing).
    :param n_elements: Override the number of elements, e.g. for a cropped
        covariance matrix.
    :returns: A complex array of shape ``theta.shape + (n_elements,)``.
    """
    if n_elements is None:
        n_elements = config.n_elements
    theta = np.asarray(theta, dtype=float)[..., np.newaxis]
    n = np.arange(n_elements)
    return np.exp(2j * np.pi * n * config.spacing * np.sin(theta))
