"""
==============================
Covariance and Signal Subspace
==============================

This module turns snapshots into network features: the sample covariance,
its far-field-equivalent virtual covariance matrix (VCM), the centred crop of
the VCM, and the phase-canonicalised signal-subspace vectors of the crop.

The VCM keeps, for every lag :math:`t`, the entries of the covariance whose
near-field approximation error is smallest (those straddling the reference
element) and broadcasts their average along the whole diagonal, which removes
the dependence on the source range.

"""
import functools
import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .eigen import jacobi_eigh
from .geometry import fresnel_params, near_field_steering, far_field_steering


KINDS = ('raw', 'vcm', 'cropped')

HERMITIAN_TOLERANCE = 1e-8


def _hermitian(data):
    return 0.5 * (data + np.conj(np.swapaxes(data, -1, -2)))


def _to_pairs(values):
    values = np.asarray(values)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def _from_pairs(pairs):
    pairs = np.asarray(pairs, dtype=float)
    return pairs[..., 0] + 1j * pairs[..., 1]


@dataclass
class CovMatrix:
    """
    A Hermitian covariance matrix.

    :param data: A complex square array; it is Hermitian-symmetrised on
        construction.
    :param kind: One of ``'raw'``, ``'vcm'`` or ``'cropped'``.
    """

    data: np.ndarray
    kind: str = 'raw'

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError('A covariance matrix must be square, not {}'
                             .format(data.shape))
        if self.kind not in KINDS:
            raise ValueError('Unknown covariance kind: {}'.format(self.kind))
        self.data = _hermitian(data)

    @property
    def size(self):
        return self.data.shape[0]

    def to_json(self):
        return json.dumps({'kind': self.kind, 'data': _to_pairs(self.data)})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(data=_from_pairs(obj['data']), kind=obj['kind'])


@dataclass
class Subspace:
    """
    The leading eigenvectors of a covariance matrix.

    :param vectors: A complex ``(n, M)`` array of orthonormal columns, each
        canonicalised so that its reference entry is real and non-negative.
    :param eigenvalues: The ``M`` leading eigenvalues, in descending order.
    :param noise_floor: The mean of the discarded eigenvalues.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    noise_floor: float

    def to_json(self):
        return json.dumps({
            'vectors': _to_pairs(self.vectors),
            'eigenvalues': np.asarray(self.eigenvalues).tolist(),
            'noise_floor': float(self.noise_floor),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(vectors=_from_pairs(obj['vectors']),
                   eigenvalues=np.asarray(obj['eigenvalues'], dtype=float),
                   noise_floor=obj['noise_floor'])


def sample_covariance_stack(data):
    """
    Return the sample covariances of a stack of snapshot matrices.

    :param data: A complex array of shape ``(..., N, K)``.
    :returns: A complex array of shape ``(..., N, N)``.
    """
    k = data.shape[-1]
    cov = data @ np.conj(np.swapaxes(data, -1, -2)) / k
    return _hermitian(cov)


def sample_covariance(snapshots):
    """Return :math:`R = K^{-1} \\sum_k y(k) y(k)^H`."""
    return CovMatrix(sample_covariance_stack(snapshots.data), kind='raw')


def analytic_covariance(sources, config, noise_var=0.0, powers=None):
    """
    Return the expected covariance :math:`A R_s A^H + \\sigma^2 I` of
    uncorrelated sources with exact near-field steering.

    :param powers: The source powers (default: unit power).
    """
    manifold = np.stack([near_field_steering(s, config) for s in sources],
                        axis=1)
    if powers is None:
        powers = np.ones(len(sources))
    data = (manifold * np.asarray(powers)) @ np.conj(manifold.T)
    data = data + noise_var * np.eye(config.n_elements)
    return CovMatrix(data, kind='raw')


def far_field_ideal_covariance(sources, config, noise_var=0.0, powers=None):
    """
    Return the ideal far-field covariance of sources at the same directions:
    :math:`[\\bar R]_{p,q} = \\sum_m P_m e^{j (p-q) \\alpha_m} + \\sigma^2
    \\delta(p-q)`.
    """
    if powers is None:
        powers = np.ones(len(sources))
    n = np.arange(config.n_elements)
    lag = n[:, np.newaxis] - n[np.newaxis, :]
    data = np.zeros((config.n_elements, config.n_elements), dtype=complex)
    for source, power in zip(sources, powers):
        alpha = fresnel_params(source, config).alpha
        data += power * np.exp(1j * lag * alpha)
    data += noise_var * np.eye(config.n_elements)
    return CovMatrix(data, kind='raw')


def approximation_error(raw, ideal, p, t):
    """
    Return :math:`|[R]_{p,p+t} - [\\bar R]_{p,p+t}|^2` (1-based ``p``).
    """
    if raw.size != ideal.size:
        raise ValueError('Matrix sizes differ: {} and {}'.format(
            raw.size, ideal.size))
    q = p + t
    if not (1 <= p <= raw.size and 1 <= q <= raw.size):
        raise ValueError('Entry ({}, {}) lies outside a {}x{} matrix'.format(
            p, q, raw.size, raw.size))
    return float(np.abs(raw.data[p - 1, q - 1] - ideal.data[p - 1, q - 1]) ** 2)


def _ref_index(n):
    return (n + 1) // 2 if n % 2 == 1 else n // 2


@functools.lru_cache(maxsize=None)
def vcm_index_plan(n):
    """
    Return the covariance entries averaged for every lag of an ``n``-by-``n``
    VCM.

    Returns
    -------
        A tuple ``(rows, cols, weights)`` of ``(2, 2n - 1)`` arrays; column
        ``j`` describes lag ``t = j - (n - 1)``. Row 0 holds the
        :math:`\\chi_l` entry and row 1 the :math:`\\chi_r` entry (0-based);
        entries whose indices fall outside the matrix have zero weight.

    """
    n_c = _ref_index(n)
    lags = np.arange(-(n - 1), n)

    def chi(t):
        return np.stack([np.floor(n_c - t / 2), np.floor(n_c - (t - 1) / 2)])

    rows = chi(lags).astype(int)
    cols = chi(-lags).astype(int)
    valid = (rows >= 1) & (rows <= n) & (cols >= 1) & (cols <= n)
    weights = valid / valid.sum(axis=0)
    rows = np.where(valid, rows - 1, 0)
    cols = np.where(valid, cols - 1, 0)
    return rows, cols, weights


@functools.lru_cache(maxsize=None)
def _toeplitz_index(n):
    i = np.arange(n)
    return i[np.newaxis, :] - i[:, np.newaxis] + (n - 1)


def vcm_stack(covariances):
    """Reconstruct the VCM of every matrix in a ``(..., N, N)`` stack."""
    n = covariances.shape[-1]
    rows, cols, weights = vcm_index_plan(n)
    lag_values = np.sum(covariances[..., rows, cols] * weights, axis=-2)
    # Hermitian per lag: w(t) = (v(t) + conj(v(-t))) / 2.
    lag_values = 0.5 * (lag_values + np.conj(lag_values[..., ::-1]))
    return lag_values[..., _toeplitz_index(n)]


def reconstruct_vcm(raw):
    """
    Reconstruct the virtual covariance matrix of a raw covariance.

    For every lag :math:`t` the diagonal is filled with
    :math:`([R]_{\\chi_l(t),\\chi_l(-t)} + [R]_{\\chi_r(t),\\chi_r(-t)}) / 2`
    where :math:`\\chi_l(t) = \\lfloor n_c - t/2 \\rfloor` and
    :math:`\\chi_r(t) = \\lfloor n_c - (t-1)/2 \\rfloor`. The result is
    exactly Hermitian and Toeplitz.
    """
    if raw.kind != 'raw':
        raise ValueError('Expected a raw covariance, not {}'.format(raw.kind))
    return CovMatrix(vcm_stack(raw.data), kind='vcm')


def _check_crop(n, n_in):
    if not 1 <= n_in < n:
        raise ValueError('Cannot crop a {}x{} VCM to {}x{}'.format(
            n, n, n_in, n_in))
    if (n - n_in) % 2 != 0:
        raise ValueError('A centred {}x{} crop of a {}x{} matrix requires '
                         'N - N_in to be even'.format(n_in, n_in, n, n))
    return (n - n_in) // 2


def crop_stack(matrices, n_in):
    """Return the centred ``n_in``-by-``n_in`` blocks of a matrix stack."""
    start = _check_crop(matrices.shape[-1], n_in)
    return matrices[..., start:start + n_in, start:start + n_in]


def crop_vcm(vcm, n_in):
    """Return the centred ``n_in``-by-``n_in`` block of a VCM."""
    if vcm.kind != 'vcm':
        raise ValueError('Expected a VCM, not {}'.format(vcm.kind))
    return CovMatrix(crop_stack(vcm.data, n_in), kind='cropped')


def hermitian_eig(m):
    """
    Return the eigenvalues (descending) and eigenvectors of a covariance
    matrix, computed by the cyclic Jacobi method.
    """
    data = np.asarray(m.data)
    scale = max(np.max(np.abs(data)), 1.0)
    asym = np.max(np.abs(data - np.conj(data.T)))
    if asym > HERMITIAN_TOLERANCE * scale:
        raise ValueError('Matrix is not Hermitian (max asymmetry {:.3e})'
                         .format(asym))
    return jacobi_eigh(data)


def reference_position(n):
    """The 0-based index of the centre row of an ``n``-row block."""
    return (n - 1) // 2


def canonicalize(vectors, ref=None):
    """
    Rotate each column of ``vectors`` (shape ``(..., n, M)``) by a unit-modulus
    factor so that its entry at ``ref`` is real and non-negative.
    """
    if ref is None:
        ref = reference_position(vectors.shape[-2])
    pivot = vectors[..., ref:ref + 1, :]
    magnitude = np.abs(pivot)
    gauge = np.where(magnitude > 0,
                     np.conj(pivot) / np.where(magnitude > 0, magnitude, 1.0),
                     1.0)
    return vectors * gauge


def signal_subspace(m, n_sources):
    """
    Return the ``n_sources`` leading eigenvectors of a covariance matrix,
    with their eigenvalues and the noise floor.
    """
    if not 1 <= n_sources < m.size:
        raise ValueError('Cannot extract {} signal vectors from a {}x{} '
                         'matrix'.format(n_sources, m.size, m.size))
    w, v = hermitian_eig(m)
    return Subspace(vectors=canonicalize(v[:, :n_sources]),
                    eigenvalues=w[:n_sources],
                    noise_floor=float(np.mean(w[n_sources:])))


def subspace_features(covariances, n_in):
    """
    Turn a stack of raw covariances into network input features.

    Each covariance is reconstructed as a VCM, cropped to ``n_in`` and
    decomposed; the feature is the canonicalised leading eigenvector.

    :param covariances: A complex ``(S, N, N)`` array.
    :returns: A complex ``(S, n_in)`` array.
    """
    cropped = crop_stack(vcm_stack(covariances), n_in)
    _, v = jacobi_eigh(cropped)
    return canonicalize(v[..., :, :1])[..., 0]


def music_denominator(steering, signal_vectors):
    """
    Return :math:`a^H \\Xi_z \\Xi_z^H a = \\|a\\|^2 - \\|\\Xi_s^H a\\|^2`,
    floored at machine precision so the spectrum stays finite.
    """
    norm2 = np.sum(np.abs(steering) ** 2, axis=-1)
    proj = np.sum(np.abs(steering @ np.conj(signal_vectors)) ** 2, axis=-1)
    return np.maximum(norm2 - proj, np.finfo(float).eps * norm2)


def music_spectrum_far(cov, theta_grid, n_sources, config, allow_raw=False):
    """
    Return the far-field MUSIC pseudo-spectrum
    :math:`1 / (a^H \\Xi_z \\Xi_z^H a)` of a (cropped) VCM.

    Parameters
    ----------
    cov
        The covariance matrix; raw matrices are only accepted with
        ``allow_raw`` (for beam-pattern comparisons).
    theta_grid
        The candidate directions, in radians.
    n_sources
        The dimension of the signal subspace.
    config
        The array geometry (supplies the element spacing).

    """
    if cov.kind == 'raw' and not allow_raw:
        raise ValueError('Far-field MUSIC expects a VCM, not a raw covariance')
    if not 1 <= n_sources < cov.size:
        raise ValueError('Cannot resolve {} sources with a {}x{} matrix'
                         .format(n_sources, cov.size, cov.size))
    _, v = hermitian_eig(cov)
    steering = far_field_steering(theta_grid, config, n_elements=cov.size)
    return 1.0 / music_denominator(steering, v[:, :n_sources])


def find_spectrum_peaks(spectrum, grid, n_peaks):
    """Return the grid positions of the ``n_peaks`` highest local maxima."""
    peaks, props = find_peaks(spectrum, height=-np.inf)
    order = np.argsort(-props['peak_heights'], kind='stable')[:n_peaks]
    return np.asarray(grid)[np.sort(peaks[order])]


def mean_sidelobe_level(spectrum, grid, doas, exclusion):
    """
    Return the mean of the peak-normalised spectrum (in dB) outside
    ``+/- exclusion`` of every true direction.
    """
    grid = np.asarray(grid)
    level = 10 * np.log10(spectrum / np.max(spectrum))
    outside = np.ones(grid.shape, dtype=bool)
    for doa in np.atleast_1d(doas):
        outside &= np.abs(grid - doa) > exclusion
    if not np.any(outside):
        raise ValueError('The exclusion zones cover the whole grid')
    return float(np.mean(level[outside]))
