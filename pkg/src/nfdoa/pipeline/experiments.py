"""
===========
Experiments
===========

Monte-Carlo and training studies that compare direction estimators.

Each Monte-Carlo experiment draws ``trials`` random source directions,
simulates one snapshot set per trial and per condition, and reports the
root-mean-square and mean absolute errors (in degrees) of every estimator,
one row per (condition, method). Trials draw from random streams keyed by
the experiment seed and the trial number, so all conditions and methods see
the same directions and source symbols.

"""
import logging
from dataclasses import replace

import numpy as np
import pandas as pd

from ..network.loss import mae_loss
from ..network.model import build_cvnn
from ..signal.covariance import (analytic_covariance, find_spectrum_peaks,
                                 mean_sidelobe_level, music_spectrum_far,
                                 reconstruct_vcm)
from ..signal.geometry import ArrayConfig, SourcePlacement
from ..signal.simulation import NoiseSpec, make_rng, received_snapshots
from .evaluation import error_report, evaluate
from .output import timestamp
from .parallel import map_jobs
from .training import train_model


MC_COLUMNS = ['snr_db', 'snapshots', 'distance', 'n_antennas', 'n_in',
              'method', 'rmse_deg', 'mae_deg', 'trials', 'seed']

SNR_LIST = tuple(range(-10, 11, 2))
DISTANCE_LIST = (600.0, 800.0, 1000.0, 1200.0)
ANTENNA_LIST = (65, 97, 129)
SNAPSHOT_LIST = (10, 20, 50, 100, 200)
BOXPLOT_DIRECTIONS = (-75.0, -45.0, -15.0, 15.0, 45.0, 75.0)
BLOCK_PLANS = ((8,), (8, 4), (8, 8, 4))


def trial_directions(trials, seed, theta_limit_deg=60.0):
    """Draw directions (radians) uniformly within +/- ``theta_limit_deg``."""
    if trials < 1:
        raise ValueError('Invalid number of trials: {}'.format(trials))
    limit = np.deg2rad(theta_limit_deg)
    return make_rng(seed).uniform(-limit, limit, trials)


def simulate_trials(config, thetas, distance, snr_db, n_snapshots, seed):
    """Simulate one single-source snapshot set per direction; the result has
    shape ``(trials, N, K)``."""
    noise = NoiseSpec(snr_db=snr_db, seed=seed)
    data = np.empty((len(thetas), config.n_elements, n_snapshots),
                    dtype=complex)
    for t, theta in enumerate(thetas):
        source = SourcePlacement(theta=theta, range=distance)
        data[t] = received_snapshots([source], config, n_snapshots, noise,
                                     rng=make_rng(seed, t + 1)).data
    return data


def _estimate_chunk(estimator, snapshots, config):
    return estimator.estimate(snapshots, config)


def run_estimator(estimator, snapshots, config, workers=1, chunk=25):
    """Apply an estimator to a stack of snapshot sets, in parallel chunks."""
    jobs = [(estimator, snapshots[start:start + chunk], config)
            for start in range(0, len(snapshots), chunk)]
    return np.concatenate(map_jobs(_estimate_chunk, jobs, workers))


def monte_carlo(estimators, config, distance, snr_db, n_snapshots, trials,
                seed, theta_limit_deg=60.0, workers=1, thetas=None):
    """
    Evaluate every estimator on the same simulated trials.

    :returns: One result row (a dictionary) per estimator.
    """
    if thetas is None:
        thetas = trial_directions(trials, seed, theta_limit_deg)
    snapshots = simulate_trials(config, thetas, distance, snr_db, n_snapshots,
                                seed)
    rows = []
    for estimator in estimators:
        condition = {'snr_db': snr_db, 'snapshots': n_snapshots,
                     'distance': distance, 'n_antennas': config.n_elements,
                     'n_in': estimator.n_in}
        report = error_report(
            run_estimator(estimator, snapshots, config, workers), thetas,
            condition)
        rows.append(dict(condition, method=estimator.name,
                         rmse_deg=report.rmse_deg, mae_deg=report.mae_deg,
                         trials=len(thetas), seed=seed))
    logging.getLogger(__name__).info(
        '{} SNR {} dB, K = {}, r = {}, N = {}: {}'.format(
            timestamp(), snr_db, n_snapshots, distance, config.n_elements,
            ', '.join('{} {:.3f}'.format(row['method'], row['rmse_deg'])
                      for row in rows)))
    return rows


def _frame(rows):
    return pd.DataFrame(rows, columns=MC_COLUMNS)


def experiment_rmse_vs_snr(estimators, config, snr_list=SNR_LIST,
                           n_snapshots=100, distances=(1000.0,), trials=100,
                           seed=0, theta_limit_deg=60.0, workers=1):
    """Sweep the SNR, with one curve per source distance."""
    rows = []
    for distance in distances:
        for snr_db in snr_list:
            rows.extend(monte_carlo(estimators, config, distance, snr_db,
                                    n_snapshots, trials, seed,
                                    theta_limit_deg, workers))
    return _frame(rows)


def experiment_rmse_vs_snapshots(estimators, config,
                                 snapshot_list=SNAPSHOT_LIST,
                                 snr_list=SNR_LIST, distance=1000.0,
                                 trials=100, seed=0, theta_limit_deg=60.0,
                                 workers=1):
    """Sweep the SNR, with one curve per snapshot count."""
    rows = []
    for n_snapshots in snapshot_list:
        for snr_db in snr_list:
            rows.extend(monte_carlo(estimators, config, distance, snr_db,
                                    n_snapshots, trials, seed,
                                    theta_limit_deg, workers))
    return _frame(rows)


def experiment_rmse_vs_distance(estimators, config, distances=DISTANCE_LIST,
                                snr_list=SNR_LIST, n_snapshots=100,
                                trials=100, seed=0, theta_limit_deg=60.0,
                                workers=1):
    return experiment_rmse_vs_snr(estimators, config, snr_list=snr_list,
                                  n_snapshots=n_snapshots,
                                  distances=distances, trials=trials,
                                  seed=seed, theta_limit_deg=theta_limit_deg,
                                  workers=workers)


def experiment_crop_invariance(estimators, n_antennas=ANTENNA_LIST,
                               spacing=0.5, wavelength=0.0107,
                               snr_list=SNR_LIST, n_snapshots=100,
                               distance=1000.0, trials=100, seed=0,
                               theta_limit_deg=60.0, workers=1):
    """Evaluate fixed-input-size estimators on arrays of different sizes,
    with one SNR curve per array size."""
    rows = []
    for n in n_antennas:
        config = ArrayConfig(n_elements=n, spacing=spacing,
                             wavelength=wavelength)
        for snr_db in snr_list:
            rows.extend(monte_carlo(estimators, config, distance, snr_db,
                                    n_snapshots, trials, seed,
                                    theta_limit_deg, workers))
    return _frame(rows)


def experiment_rmse_vs_input_size(estimators_by_n_in, config,
                                  snr_list=SNR_LIST, n_snapshots=100,
                                  distance=1000.0, trials=100, seed=0,
                                  theta_limit_deg=60.0, workers=1):
    """
    :param estimators_by_n_in: A dictionary that maps each input size to the
        estimators trained for it.
    """
    rows = []
    thetas = trial_directions(trials, seed, theta_limit_deg)
    for n_in in sorted(estimators_by_n_in):
        for snr_db in snr_list:
            rows.extend(monte_carlo(estimators_by_n_in[n_in], config,
                                    distance, snr_db, n_snapshots, trials,
                                    seed, workers=workers, thetas=thetas))
    return _frame(rows)


def boxplot_summary(errors):
    """
    Summarise per-realization errors by direction and method: median,
    quartiles, whiskers (the most extreme errors within 1.5 IQR of the
    quartiles) and the number of outliers.
    """
    rows = []
    for (direction, method), group in errors.groupby(
            ['direction_deg', 'method'], sort=True):
        e = group['error_deg'].to_numpy()
        q1, median, q3 = np.percentile(e, [25, 50, 75])
        iqr = q3 - q1
        inside = e[(e >= q1 - 1.5 * iqr) & (e <= q3 + 1.5 * iqr)]
        rows.append({'direction_deg': direction, 'method': method,
                     'median': median, 'q1': q1, 'q3': q3,
                     'whisker_low': inside.min(), 'whisker_high': inside.max(),
                     'n_outliers': int(len(e) - len(inside)),
                     'realizations': len(e)})
    return pd.DataFrame(rows)


def experiment_boxplot(estimators, config, directions_deg=BOXPLOT_DIRECTIONS,
                       realizations=500, snr_db=10.0, n_snapshots=100,
                       distance=1000.0, seed=0, workers=1):
    """
    Record the signed error of every realization at fixed directions.

    :returns: The per-realization errors and their summary.
    """
    rows = []
    for k, direction in enumerate(directions_deg):
        thetas = np.full(realizations, np.deg2rad(direction))
        snapshots = simulate_trials(config, thetas, distance, snr_db,
                                    n_snapshots, seed + k)
        for estimator in estimators:
            report = error_report(
                run_estimator(estimator, snapshots, config, workers), thetas)
            rows.append(pd.DataFrame({
                'direction_deg': direction, 'method': estimator.name,
                'realization': np.arange(realizations),
                'error_deg': report.errors_deg}))
    errors = pd.concat(rows, ignore_index=True)
    return errors, boxplot_summary(errors)


def experiment_beampattern(config, doas_deg=(-30.0, 45.0), distance=500.0,
                           noise_var=0.1, theta_step_deg=0.1,
                           exclusion_deg=5.0):
    """
    Compare far-field MUSIC spectra of a raw near-field covariance and its
    reconstructed VCM, for uncorrelated sources at a common distance.

    Returns
    -------
        A table (theta_deg, power_raw, power_vcm) of peak-normalised spectra
        in decibels, and a summary of the peak positions and mean sidelobe
        levels.

    """
    sources = [SourcePlacement(theta=np.deg2rad(doa), range=distance)
               for doa in doas_deg]
    raw = analytic_covariance(sources, config, noise_var=noise_var)
    vcm = reconstruct_vcm(raw)
    grid_deg = -90.0 + theta_step_deg * np.arange(
        int(round(180.0 / theta_step_deg)) + 1)
    grid = np.deg2rad(grid_deg)
    n_sources = len(sources)
    power_raw = music_spectrum_far(raw, grid, n_sources, config,
                                   allow_raw=True)
    power_vcm = music_spectrum_far(vcm, grid, n_sources, config)

    def normalised(power):
        return 10 * np.log10(power / np.max(power))

    frame = pd.DataFrame({'theta_deg': grid_deg,
                          'power_raw': normalised(power_raw),
                          'power_vcm': normalised(power_vcm)})
    summary = {
        'doas_deg': list(doas_deg),
        'peaks_raw_deg': find_spectrum_peaks(power_raw, grid_deg,
                                             n_sources).tolist(),
        'peaks_vcm_deg': find_spectrum_peaks(power_vcm, grid_deg,
                                             n_sources).tolist(),
        'sidelobe_raw_db': mean_sidelobe_level(power_raw, grid_deg, doas_deg,
                                               exclusion_deg),
        'sidelobe_vcm_db': mean_sidelobe_level(power_vcm, grid_deg, doas_deg,
                                               exclusion_deg),
    }
    return frame, summary


def experiment_loss_metric(train_set, test_set, config, channels=(8, 4),
                           seed=0, validation_set=None):
    """
    Train identical networks with the MAE and MSE losses.

    Returns
    -------
        The learning curves (one row per epoch and loss) and a summary with
        the test MAE (radians) and RMSE (degrees) of each network.

    """
    curves = []
    summary = []
    for loss in ('mae', 'mse'):
        net = build_cvnn(train_set.n_in, channels=channels, seed=seed)
        net, history = train_model(net, train_set, replace(config, loss=loss),
                                   validation_set)
        history.insert(0, 'loss_metric', loss)
        curves.append(history)
        pred = net.predict(test_set.features)
        report = evaluate(net, test_set)
        summary.append({'loss_metric': loss,
                        'test_mae_rad': mae_loss(pred, test_set.labels),
                        'test_rmse_deg': report.rmse_deg})
    return pd.concat(curves, ignore_index=True), pd.DataFrame(summary)


def experiment_residual_blocks(train_set, config, plans=BLOCK_PLANS, seed=0,
                               validation_set=None):
    """Train networks with different residual-block plans and return their
    learning curves."""
    curves = []
    for plan in plans:
        net = build_cvnn(train_set.n_in, channels=tuple(plan), seed=seed)
        _, history = train_model(net, train_set, config, validation_set)
        history.insert(0, 'blocks', '-'.join(str(c) for c in plan))
        history.insert(1, 'n_blocks', len(plan))
        curves.append(history)
    return pd.concat(curves, ignore_index=True)
