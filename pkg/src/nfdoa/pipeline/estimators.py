"""
Direction estimators with a common interface.

Every estimator maps a stack of snapshot matrices, shape ``(S, N, K)``, to
``S`` direction estimates in radians, so that all methods share a single
Monte-Carlo harness and data path.
"""
import numpy as np

from ..baselines.music import grid_manifold, near_field_music
from ..signal.covariance import (CovMatrix, sample_covariance_stack,
                                 subspace_features)
from ..signal.geometry import ArrayConfig
from .dataset import CHUNK_SIZE


class NetworkEstimator:
    """Estimate directions with a trained network (complex or TDNN)."""

    def __init__(self, network, name=None):
        self.network = network
        self.name = name or network.model

    @property
    def n_in(self):
        return self.network.n_in

    def features(self, snapshots):
        covs = sample_covariance_stack(np.asarray(snapshots))
        chunks = [subspace_features(covs[start:start + CHUNK_SIZE],
                                    self.network.n_in)
                  for start in range(0, len(covs), CHUNK_SIZE)]
        return np.concatenate(chunks)

    def estimate(self, snapshots, config=None):
        return self.network.predict(self.features(snapshots))


class MusicEstimator:
    """
    Estimate directions by a 2-D near-field MUSIC search.

    The grid steering vectors are computed on first use for each array
    geometry and kept for later calls.
    """

    name = 'music'
    n_in = 0

    def __init__(self, grid, config, n_sources=1, refine=True, cache=True):
        self.grid = grid
        self.config = config
        self.n_sources = n_sources
        self.refine = refine
        self.cache = cache
        self._manifolds = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_manifolds'] = {}
        return state

    def _manifold(self, config):
        if not self.cache:
            return None
        if config not in self._manifolds:
            self._manifolds = {config: grid_manifold(self.grid, config)}
        return self._manifolds[config]

    def estimate(self, snapshots, config=None):
        """
        :param config: The geometry of the array that recorded the snapshots
            (default: the estimator's own).
        """
        snapshots = np.asarray(snapshots)
        if config is None:
            config = self.config
        if snapshots.shape[1] != config.n_elements:
            config = ArrayConfig(n_elements=snapshots.shape[1],
                                 spacing=config.spacing,
                                 wavelength=config.wavelength)
        manifold = self._manifold(config)
        covs = sample_covariance_stack(snapshots)
        out = np.empty(len(covs))
        for i, cov in enumerate(covs):
            _, estimates = near_field_music(
                CovMatrix(cov, kind='raw'), self.n_sources, self.grid, config,
                refine=self.refine, manifold=manifold)
            out[i] = estimates[0].theta
        return out
