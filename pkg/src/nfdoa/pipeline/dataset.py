"""
========
Datasets
========

This module builds labelled datasets of signal-subspace features.

Every (distance, direction) grid point yields one sample: the array receives
``K`` snapshots from a single source at that position, and the leading
eigenvector of the cropped virtual covariance matrix becomes the feature,
labelled with the direction in radians. Each sample draws its symbols and
noise from its own random stream, keyed by the dataset seed and the sample's
position in the grid, so datasets built in parallel are identical to those
built sequentially.

"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from ..signal.covariance import sample_covariance_stack, subspace_features
from ..signal.geometry import ArrayConfig, SourcePlacement, check_fresnel_zone
from ..signal.simulation import NoiseSpec, make_rng, received_snapshots
from .output import timestamp
from .parallel import map_jobs


ROLES = ('train', 'validation', 'test')

CHUNK_SIZE = 256
"""The number of samples per feature-extraction job; fixed so that results
do not depend on the number of workers."""


def axis_values(lo, hi, step, endpoint=True):
    """
    Return ``lo, lo + step, ...`` up to ``hi`` (included only when
    ``endpoint`` is set and ``hi`` lies on the grid).
    """
    if not step > 0:
        raise ValueError('Invalid grid step: {}'.format(step))
    if hi < lo:
        raise ValueError('Invalid grid bounds: ({}, {})'.format(lo, hi))
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    values = lo + step * np.arange(count)
    if not endpoint and count > 1 and np.isclose(values[-1], hi):
        values = values[:-1]
    return values


@dataclass(frozen=True)
class DatasetSpec:
    """
    Parameters
    ----------
    distance_range
        ``(lo, hi, step)`` source distances in wavelengths (inclusive).
    theta_range
        ``(lo, hi, step)`` directions in degrees.
    snapshots
        The number of snapshots :math:`K` per sample.
    snr_db
        The signal-to-noise ratio.
    seed
        The dataset seed.
    n_in
        The size of the cropped VCM (the feature length).
    array
        The array geometry.
    role
        ``'train'`` or ``'test'``.
    theta_endpoint
        Whether the upper direction bound is included in the grid.
    strict_fresnel
        Raise (rather than warn) when a distance lies outside the Fresnel
        zone.

    """

    distance_range: tuple = (400.0, 1600.0, 400.0)
    theta_range: tuple = (-90.0, 90.0, 0.5)
    snapshots: int = 100
    snr_db: float = 10.0
    seed: int = 0
    n_in: int = 33
    array: ArrayConfig = field(default_factory=ArrayConfig)
    role: str = 'train'
    theta_endpoint: bool = True
    strict_fresnel: bool = False

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError('Unknown dataset role: {}'.format(self.role))
        if self.snapshots < 1:
            raise ValueError('Invalid number of snapshots: {}'.format(
                self.snapshots))
        if not 1 <= self.n_in < self.array.n_elements \
                or (self.array.n_elements - self.n_in) % 2:
            raise ValueError('Cannot crop {} elements to {}'.format(
                self.array.n_elements, self.n_in))

    def distances(self):
        return axis_values(*self.distance_range)

    def thetas(self):
        """The grid directions in radians, clipped to [-pi/2, pi/2]."""
        degrees = axis_values(*self.theta_range, endpoint=self.theta_endpoint)
        return np.clip(np.deg2rad(degrees), -np.pi / 2, np.pi / 2)

    def grid(self):
        """Return the (distance, theta) of every sample, distance-major."""
        distances, thetas = np.meshgrid(self.distances(), self.thetas(),
                                        indexing='ij')
        return distances.ravel(), thetas.ravel()

    def __len__(self):
        return len(self.distances()) * len(self.thetas())


@dataclass
class Dataset:
    """
    Labelled features.

    :param features: A complex ``(S, n_in)`` array.
    :param labels: The directions (radians), shape ``(S,)``.
    :param distances: The source distances (wavelengths), shape ``(S,)``.
    :param spec: The specification the samples were drawn from, if known.
    """

    features: np.ndarray
    labels: np.ndarray
    distances: np.ndarray
    spec: DatasetSpec = None

    def __post_init__(self):
        n = len(self.labels)
        if len(self.features) != n or len(self.distances) != n:
            raise ValueError('Features, labels and distances differ in length')

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, ix):
        return self.features[ix], self.labels[ix]

    @property
    def n_in(self):
        return self.features.shape[1]

    def subset(self, indices):
        return Dataset(features=self.features[indices],
                       labels=self.labels[indices],
                       distances=self.distances[indices], spec=self.spec)

    def to_frame(self):
        columns = {'distance': self.distances, 'theta': self.labels}
        for i in range(self.n_in):
            columns['re_{}'.format(i)] = self.features[:, i].real
        for i in range(self.n_in):
            columns['im_{}'.format(i)] = self.features[:, i].imag
        return pd.DataFrame(columns)

    @classmethod
    def from_frame(cls, df):
        n_in = sum(1 for c in df.columns if c.startswith('re_'))
        re = df[['re_{}'.format(i) for i in range(n_in)]].to_numpy()
        im = df[['im_{}'.format(i) for i in range(n_in)]].to_numpy()
        return cls(features=re + 1j * im, labels=df['theta'].to_numpy(),
                   distances=df['distance'].to_numpy())


def _sample_covariances(spec, indices):
    distances, thetas = spec.grid()
    covs = np.empty((len(indices), spec.array.n_elements,
                     spec.array.n_elements), dtype=complex)
    noise = NoiseSpec(snr_db=spec.snr_db, seed=spec.seed)
    for j, ix in enumerate(indices):
        source = SourcePlacement(theta=thetas[ix], range=distances[ix])
        snapshots = received_snapshots([source], spec.array, spec.snapshots,
                                       noise, rng=make_rng(spec.seed, ix))
        covs[j] = sample_covariance_stack(snapshots.data)
    return covs


def _build_chunk(spec, start, stop):
    return subspace_features(_sample_covariances(spec, range(start, stop)),
                             spec.n_in)


def build_dataset(spec, workers=1):
    """
    Simulate one sample per (distance, direction) grid point.

    :param spec: The dataset specification.
    :param workers: The number of worker processes.
    """
    logger = logging.getLogger(__name__)
    for distance in spec.distances():
        check_fresnel_zone(SourcePlacement(theta=0.0, range=distance),
                           spec.array, strict=spec.strict_fresnel)
    distances, thetas = spec.grid()
    n = len(thetas)
    if n == 0:
        raise ValueError('The dataset grid is empty')
    logger.info('{} Building {} {} samples ({} distances x {} directions)'
                .format(timestamp(), n, spec.role, len(spec.distances()),
                        len(spec.thetas())))
    jobs = [(spec, start, min(start + CHUNK_SIZE, n))
            for start in range(0, n, CHUNK_SIZE)]
    chunks = map_jobs(_build_chunk, jobs, workers)
    return Dataset(features=np.concatenate(chunks), labels=thetas,
                   distances=distances, spec=spec)


def split_validation(dataset, fraction=0.1, seed=0):
    """
    Hold out a fraction of the samples at every distance.

    :returns: The ``(train, validation)`` datasets.
    """
    if not 0 <= fraction < 1:
        raise ValueError('Invalid validation fraction: {}'.format(fraction))
    rng = make_rng(seed)
    held_out = []
    for distance in np.unique(dataset.distances):
        members = np.flatnonzero(dataset.distances == distance)
        count = int(round(fraction * len(members)))
        held_out.append(rng.choice(members, size=count, replace=False))
    held_out = np.sort(np.concatenate(held_out)).astype(int)
    mask = np.ones(len(dataset), dtype=bool)
    mask[held_out] = False
    validation = dataset.subset(held_out)
    if validation.spec is not None:
        validation.spec = replace(validation.spec, role='validation')
    return dataset.subset(np.flatnonzero(mask)), validation


def save_datasets(path, datasets):
    """
    Write datasets to an HDF5 store, one table per role
    (``dataset/<role>``).

    :param datasets: A dictionary that maps roles to datasets.
    """
    logger = logging.getLogger(__name__)
    with pd.HDFStore(str(path), mode='w') as store:
        for role, dataset in datasets.items():
            if role not in ROLES:
                raise ValueError('Unknown dataset role: {}'.format(role))
            logger.info('{} Writing {} {} samples to {}'.format(
                timestamp(), len(dataset), role, path))
            store.put('dataset/{}'.format(role), dataset.to_frame(),
                      format='table', track_times=False)
    return path


def load_dataset(path, role='train'):
    with pd.HDFStore(str(path), mode='r') as store:
        key = 'dataset/{}'.format(role)
        if key not in store:
            raise KeyError('No {} dataset in {}'.format(role, path))
        return Dataset.from_frame(store[key])
