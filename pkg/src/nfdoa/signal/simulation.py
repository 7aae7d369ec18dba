"""
=================
Signal Simulation
=================

This module generates the snapshots received by a uniform linear array from
one or more near-field sources in additive complex Gaussian noise.

Randomness is drawn from counter-based (Philox) streams keyed by a seed and,
optionally, a sample index, so that samples generated in parallel are
identical to samples generated in sequence.

"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ArrayConfig, SourcePlacement, near_field_steering


def make_rng(seed, index=None):
    """
    Return a random number generator for a seed and optional sample index.

    :param seed: The run seed (a non-negative integer).
    :param index: The sample index; each index yields an independent stream.
    """
    entropy = [int(seed)] if index is None else [int(seed), int(index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class NoiseSpec:
    """
    :param snr_db: The per-source signal-to-noise ratio in decibels; use
        ``float('inf')`` to disable noise.
    :param seed: The seed for the source symbols and the noise.
    """

    snr_db: float
    seed: int = 0

    @property
    def variance(self):
        """The noise variance :math:`\\sigma^2 = 10^{-SNR/10}`."""
        if np.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass
class SnapshotSet:
    """
    The snapshots received by the array.

    :param data: A complex ``(N, K)`` array whose columns are the snapshots.
    :param config: The array geometry.
    :param truth: The source placements that produced the data.
    """

    data: np.ndarray
    config: ArrayConfig
    truth: list = field(default_factory=list)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] < 1:
            raise ValueError('Snapshot data must be an (N, K) array with '
                             'K >= 1, not {}'.format(self.data.shape))
        if self.data.shape[0] != self.config.n_elements:
            raise ValueError('Snapshot rows ({}) do not match the array ({})'
                             .format(self.data.shape[0],
                                     self.config.n_elements))

    @property
    def n_snapshots(self):
        return self.data.shape[1]


def _source_symbols(n_sources, n_snapshots, rng):
    shape = (n_sources, n_snapshots)
    return (rng.standard_normal(shape)
            + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def generate_source_symbols(n_sources, n_snapshots, seed):
    """
    Draw i.i.d. unit-power circularly-symmetric complex Gaussian symbols.

    :returns: A complex ``(M, K)`` array.
    """
    if n_sources < 1 or n_snapshots < 1:
        raise ValueError('Need at least one source and one snapshot, not '
                         '({}, {})'.format(n_sources, n_snapshots))
    return _source_symbols(n_sources, n_snapshots, make_rng(seed))


def received_snapshots(sources, config, n_snapshots, noise, rng=None):
    """
    Simulate :math:`y(k) = A(\\theta, r) s(k) + z(k)` for ``k = 1..K``.

    Parameters
    ----------
    sources
        A list of ``SourcePlacement`` objects.
    config
        The array geometry.
    n_snapshots
        The number of snapshots :math:`K`.
    noise
        The noise specification; its seed is used unless ``rng`` is given.
    rng
        An optional generator (e.g., a per-sample stream from ``make_rng``).

    """
    if n_snapshots < 1:
        raise ValueError('Invalid number of snapshots: {}'.format(n_snapshots))
    if not sources:
        raise ValueError('At least one source is required')
    if rng is None:
        rng = make_rng(noise.seed)
    manifold = np.stack([near_field_steering(s, config) for s in sources],
                        axis=1)
    symbols = _source_symbols(len(sources), n_snapshots, rng)
    data = manifold @ symbols
    sigma2 = noise.variance
    if sigma2 > 0:
        shape = data.shape
        data = data + np.sqrt(sigma2 / 2) * (rng.standard_normal(shape)
                                             + 1j * rng.standard_normal(shape))
    return SnapshotSet(data=data, config=config, truth=list(sources))


def save_snapshots(path, snapshots):
    """
    Write a snapshot set to a little-endian binary file.

    The file holds three ``int64`` values (N, K, M) followed by the
    row-major data as interleaved ``float64`` real and imaginary parts. The
    array geometry and the source placements are written to a JSON sidecar
    with the same stem.
    """
    path = Path(path)
    n, k = snapshots.data.shape
    header = np.array([n, k, len(snapshots.truth)], dtype='<i8')
    with open(path, 'wb') as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(snapshots.data, dtype='<c16').tobytes())
    sidecar = {
        'array': {
            'n_elements': snapshots.config.n_elements,
            'spacing': snapshots.config.spacing,
            'wavelength': snapshots.config.wavelength,
        },
        'truth': [{'theta': s.theta, 'range': s.range}
                  for s in snapshots.truth],
    }
    with open(path.with_suffix('.json'), 'w') as f:
        json.dump(sidecar, f, indent=2)


def load_snapshots(path):
    """Read a snapshot set written by ``save_snapshots``."""
    path = Path(path)
    raw = path.read_bytes()
    n, k, m = np.frombuffer(raw[:24], dtype='<i8')
    data = np.frombuffer(raw[24:], dtype='<c16')
    if data.size != n * k:
        raise ValueError('Snapshot file {} holds {} values, expected {}'
                         .format(path, data.size, n * k))
    with open(path.with_suffix('.json')) as f:
        sidecar = json.load(f)
    config = ArrayConfig(**sidecar['array'])
    truth = [SourcePlacement(**s) for s in sidecar['truth']]
    if len(truth) != m:
        raise ValueError('Snapshot file {} declares {} sources but the '
                         'sidecar lists {}'.format(path, m, len(truth)))
    return SnapshotSet(data=data.reshape(n, k).astype(complex),
                       config=config, truth=truth)
