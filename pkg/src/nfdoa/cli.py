"""
The ``nfdoa`` command-line interface.

Every command resolves its configuration (defaults, ``--config`` file and
global options), writes its outputs to ``<run.out>/<command>`` together with
a ``manifest.json``, and prints one JSON line that lists the written files.
Failures print one ``error {...}`` line to stderr and exit with code 2
(configuration), 3 (numerical failure) or 4 (I/O).
"""
import functools
import json
import logging
from pathlib import Path

import click
import numpy as np
import pandas as pd

from .baselines.music import near_field_music, spectrum_frame
from .baselines.tdnn import build_tdnn, tdnn_train
from .config import RunConfig, default_config_text
from .errors import ConfigurationError, NumericalError, PhaseMapDomainError
from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.flops import flops_table
from .network.model import build_cvnn
from .pipeline.dataset import (build_dataset, load_dataset, save_datasets,
                               split_validation)
from .pipeline.estimators import MusicEstimator, NetworkEstimator
from .pipeline.evaluation import evaluate
from .pipeline.experiments import (experiment_beampattern, experiment_boxplot,
                                   experiment_crop_invariance,
                                   experiment_loss_metric,
                                   experiment_residual_blocks,
                                   experiment_rmse_vs_distance,
                                   experiment_rmse_vs_input_size,
                                   experiment_rmse_vs_snapshots,
                                   experiment_rmse_vs_snr)
from .pipeline.output import RunManifest, write_json, write_table
from .pipeline.training import train_model
from .signal.covariance import sample_covariance
from .signal.geometry import SourcePlacement, check_fresnel_zone
from .signal.simulation import NoiseSpec, received_snapshots, save_snapshots


EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

EXPERIMENTS = ('snr', 'snapshots', 'distance', 'crop', 'input_size',
               'boxplot', 'beampattern', 'loss_metric', 'residual_blocks')

NETWORK_MODELS = ('cvnn', 'tdnn')

# Offset of the Monte-Carlo seed from the run seed, which keys the training
# samples.
EXPERIMENT_SEED_OFFSET = 2


def error_kind(exc):
    """Return the ``(kind, exit code)`` of a failure, or ``None``."""
    if isinstance(exc, (NumericalError, PhaseMapDomainError)):
        return 'numeric', EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return 'config', EXIT_CONFIG
    if isinstance(exc, OSError):
        return 'io', EXIT_IO
    return None


def fail(exc):
    kind, code = error_kind(exc)
    click.echo('error ' + json.dumps({'kind': kind, 'message': str(exc)}),
               err=True)
    click.get_current_context().exit(code)


def existing_file(path, what):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError('{} not found: {}'.format(what, path))
    return path


class Outputs:
    """Write a command's result files and record them in its manifest."""

    def __init__(self, out_dir, manifest):
        self.out_dir = Path(out_dir)
        self.manifest = manifest

    def path(self, name):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def table(self, name, frame):
        return self.manifest.add_output(write_table(self.out_dir, name, frame))

    def json(self, name, obj):
        return self.manifest.add_output(write_json(self.path(name), obj))

    def add(self, path):
        return self.manifest.add_output(path)


def run_command(name, subdir_arg=None):
    """
    Turn ``body(cfg, outputs, **arguments)`` into a command that resolves the
    configuration, honours ``--dry-run``, maps failures onto exit codes and
    writes the run manifest.
    """
    def decorate(body):
        @functools.wraps(body)
        @click.pass_obj
        def wrapper(state, **kwargs):
            try:
                cfg = RunConfig(state['config_path'], state['overrides'])
                if state['dry_run']:
                    click.echo(cfg.render(), nl=False)
                    return
                out_dir = cfg.out / name
                if subdir_arg is not None:
                    out_dir = out_dir / kwargs[subdir_arg]
                manifest = RunManifest(name, cfg.to_dict(), cfg.seed)
                if subdir_arg is not None:
                    manifest.command = '{} {}'.format(name, kwargs[subdir_arg])
                summary = body(cfg, Outputs(out_dir, manifest), **kwargs)
                manifest.write(out_dir)
            except Exception as exc:
                if error_kind(exc) is None:
                    raise
                logging.getLogger(__name__).debug('Command failed',
                                                  exc_info=True)
                fail(exc)
            else:
                result = {'command': manifest.command,
                          'outputs': manifest.outputs}
                result.update(summary or {})
                click.echo(json.dumps(result, sort_keys=True))
        return wrapper
    return decorate


@click.group()
@click.option('--config', 'config_path', default=None, metavar='PATH',
              help='A run configuration file.')
@click.option('--out', default=None, metavar='DIR',
              help='The output directory (run.out).')
@click.option('--seed', type=int, default=None,
              help='The run seed (run.seed).')
@click.option('--workers', type=int, default=None, metavar='NUM',
              help='The number of worker processes (run.workers).')
@click.option('--dry-run', is_flag=True,
              help='Print the resolved configuration and exit.')
@click.option('-v', '--verbose', is_flag=True, help='Log debug messages.')
@click.pass_context
def nfdoa(ctx, config_path, out, seed, workers, dry_run, verbose):
    """Near-field direction-of-arrival estimation."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    ctx.obj = {
        'config_path': config_path,
        'overrides': {'run.out': out, 'run.seed': seed,
                      'run.workers': workers},
        'dry_run': dry_run,
    }


def single_source(cfg):
    array = cfg.array_config()
    source = SourcePlacement(theta=float(np.deg2rad(cfg['source.theta_deg'])),
                             range=cfg['source.range'])
    check_fresnel_zone(source, array, strict=cfg['source.strict_fresnel'])
    noise = NoiseSpec(snr_db=cfg['source.snr_db'], seed=cfg.seed)
    return received_snapshots([source], array, cfg['source.snapshots'], noise)


def training_sets(cfg, array=None, n_in=None):
    """Return the training and validation sets, loading them from
    ``dataset.path`` when it is set."""
    path = cfg['dataset.path']
    if path and array is None and n_in is None:
        path = existing_file(path, 'Dataset store')
        train_set = load_dataset(path, 'train')
        try:
            return train_set, load_dataset(path, 'validation')
        except KeyError:
            full = train_set
    else:
        full = build_dataset(cfg.dataset_spec('train', array, n_in),
                             cfg.workers)
    return split_validation(full, cfg['dataset.validation_fraction'],
                            cfg.seed)


def build_network(cfg, model, n_in):
    if model == 'cvnn':
        return build_cvnn(n_in, channels=cfg['network.channels'],
                          kernel_length=cfg['network.kernel_length'],
                          affine_width=cfg['network.affine_width'],
                          hidden=cfg['network.hidden'], seed=cfg.seed,
                          init=cfg['network.init'],
                          precision=cfg['train.precision'])
    if model == 'tdnn':
        return build_tdnn(cfg.tdnn_spec(n_in), seed=cfg.seed,
                          init=cfg['network.init'],
                          precision=cfg['train.precision'])
    raise ConfigurationError('Unknown network model: {}'.format(model))


def train_network(cfg, model, array=None, n_in=None):
    """Train a network on the configured training set; returns the network
    and its training history."""
    train_set, validation = training_sets(cfg, array, n_in)
    if model == 'tdnn':
        return tdnn_train(cfg.tdnn_spec(train_set.n_in), train_set,
                          cfg.train_config(), validation, seed=cfg.seed)
    net = build_network(cfg, model, train_set.n_in)
    return train_model(net, train_set, cfg.train_config(), validation)


def history_metrics(history):
    last = history.iloc[-1]
    return {key: float(last[key]) for key in history.columns
            if key != 'epoch'}


def network_estimator(cfg, outputs, model, array=None, n_in=None):
    key = ('experiment.checkpoint' if model == 'cvnn'
           else 'experiment.tdnn_checkpoint')
    path = cfg[key]
    if path and n_in is None:
        net = load_checkpoint(existing_file(path, 'Checkpoint')).network
    else:
        net, history = train_network(
            cfg, model, None if n_in is None else array, n_in)
        name = '{}_n{}.json'.format(model, net.n_in)
        outputs.add(save_checkpoint(outputs.path(name), net,
                                    cfg.train_config(), cfg.seed,
                                    history_metrics(history)))
    return NetworkEstimator(net)


def estimators(cfg, outputs, array, n_in=None, methods=None):
    if methods is None:
        methods = cfg['experiment.methods']
    result = []
    for method in methods:
        if method == 'music':
            result.append(MusicEstimator(cfg.music_grid(), array,
                                         refine=cfg['music.refine']))
        elif method in NETWORK_MODELS:
            result.append(network_estimator(cfg, outputs, method, array,
                                            n_in))
        else:
            raise ConfigurationError('Unknown method: {}'.format(method))
    return result


def beampattern(cfg, outputs):
    frame, summary = experiment_beampattern(
        cfg.array_config(), doas_deg=cfg['beampattern.doas_deg'],
        distance=cfg['beampattern.distance'],
        noise_var=cfg['beampattern.noise_var'],
        theta_step_deg=cfg['beampattern.theta_step'],
        exclusion_deg=cfg['beampattern.exclusion_deg'])
    outputs.table('beampattern', frame)
    outputs.json('beampattern.json', summary)
    return summary


@nfdoa.command()
@run_command('simulate')
def simulate(cfg, outputs):
    """Simulate snapshots and the training, validation and test sets."""
    snapshots = single_source(cfg)
    path = outputs.path('snapshots.bin')
    save_snapshots(path, snapshots)
    outputs.add(path)
    outputs.add(path.with_suffix('.json'))

    train_set, validation = training_sets(cfg)
    test_set = build_dataset(cfg.dataset_spec('test'), cfg.workers)
    datasets = {'train': train_set, 'validation': validation,
                'test': test_set}
    outputs.add(save_datasets(outputs.path('dataset.h5'), datasets))
    if cfg['dataset.write_csv']:
        for role, dataset in datasets.items():
            outputs.table('dataset_' + role, dataset.to_frame())
    return {'samples': {role: len(dataset)
                        for role, dataset in datasets.items()}}


@nfdoa.command()
@run_command('train')
def train(cfg, outputs):
    """Train a network (network.model) and save its checkpoint."""
    model = cfg['network.model']
    if model not in NETWORK_MODELS:
        raise ConfigurationError('Unknown network model: {}'.format(model))
    net, history = train_network(cfg, model)
    metrics = history_metrics(history)
    outputs.add(save_checkpoint(outputs.path(model + '.json'), net,
                                cfg.train_config(), cfg.seed, metrics))
    outputs.table('history', history)
    return {'metrics': metrics}


@nfdoa.command('eval')
@click.argument('checkpoint')
@run_command('eval')
def eval_command(cfg, outputs, checkpoint):
    """Evaluate a trained network on the held-out test set."""
    net = load_checkpoint(existing_file(checkpoint, 'Checkpoint')).network
    spec = cfg.dataset_spec('test', n_in=net.n_in)
    test_set = build_dataset(spec, cfg.workers)
    condition = {'model': net.model, 'snr_db': spec.snr_db,
                 'snapshots': spec.snapshots,
                 'n_antennas': spec.array.n_elements, 'n_in': net.n_in}
    report = evaluate(net, test_set, condition)
    outputs.json('eval.json', report.to_dict())
    outputs.table('errors', report.errors_frame(test_set.labels))
    return {'rmse_deg': report.rmse_deg, 'mae_deg': report.mae_deg}


@nfdoa.command()
@run_command('music')
def music(cfg, outputs):
    """Run a near-field MUSIC search on simulated snapshots."""
    snapshots = single_source(cfg)
    grid = cfg.music_grid()
    grid.check_fresnel_zone(snapshots.config)
    spectrum, estimates = near_field_music(
        sample_covariance(snapshots), cfg['music.n_sources'], grid,
        snapshots.config, refine=cfg['music.refine'])
    outputs.table('spectrum', spectrum_frame(spectrum, grid))
    result = {
        'estimates': [{'theta_deg': float(np.rad2deg(e.theta)),
                       'range_lambda': e.range} for e in estimates],
        'truth': [{'theta_deg': float(np.rad2deg(s.theta)),
                   'range_lambda': s.range} for s in snapshots.truth],
    }
    outputs.json('estimates.json', result)
    return result


@nfdoa.command('beampattern')
@run_command('beampattern')
def beampattern_command(cfg, outputs):
    """Export far-field MUSIC spectra of a raw covariance and its VCM."""
    return beampattern(cfg, outputs)


@nfdoa.command()
@run_command('flops')
def flops(cfg, outputs):
    """Report the floating-point operations of the CVNN and the TDNN."""
    n_in = cfg['dataset.n_in']
    totals = {}
    tables = []
    for model in NETWORK_MODELS:
        table = flops_table(build_network(cfg, model, n_in))
        table.insert(0, 'model', model)
        tables.append(table)
        totals[model] = int(table['flops'].sum())
    outputs.table('flops', pd.concat(tables, ignore_index=True))
    return {'flops': totals}


@nfdoa.command()
@click.argument('name', type=click.Choice(EXPERIMENTS))
@run_command('experiment', subdir_arg='name')
def experiment(cfg, outputs, name):
    """Run one of the evaluation experiments."""
    if name == 'beampattern':
        return beampattern(cfg, outputs)

    array = cfg.array_config()
    seed = cfg.seed + EXPERIMENT_SEED_OFFSET
    monte_carlo = {'trials': cfg['experiment.trials'], 'seed': seed,
                   'theta_limit_deg': cfg['experiment.theta_limit_deg'],
                   'workers': cfg.workers}
    snr_db = cfg['experiment.snr_db']
    snr_list = cfg['experiment.snr_list']
    n_snapshots = cfg['experiment.snapshots']
    distance = cfg['experiment.distance']

    if name == 'snr':
        frame = experiment_rmse_vs_snr(
            estimators(cfg, outputs, array), array,
            snr_list=snr_list, n_snapshots=n_snapshots,
            distances=cfg['experiment.distance_list'], **monte_carlo)
    elif name == 'snapshots':
        frame = experiment_rmse_vs_snapshots(
            estimators(cfg, outputs, array), array,
            snapshot_list=cfg['experiment.snapshot_list'],
            snr_list=snr_list, distance=distance, **monte_carlo)
    elif name == 'distance':
        frame = experiment_rmse_vs_distance(
            estimators(cfg, outputs, array), array,
            distances=cfg['experiment.distance_list'], snr_list=snr_list,
            n_snapshots=n_snapshots, **monte_carlo)
    elif name == 'crop':
        frame = experiment_crop_invariance(
            estimators(cfg, outputs, array),
            n_antennas=cfg['experiment.antenna_list'], spacing=array.spacing,
            wavelength=array.wavelength, snr_list=snr_list,
            n_snapshots=n_snapshots, distance=distance, **monte_carlo)
    elif name == 'input_size':
        large = cfg.array_config(cfg['experiment.input_size_antennas'])
        methods = [m for m in cfg['experiment.methods']
                   if m in NETWORK_MODELS]
        by_n_in = {n_in: estimators(cfg, outputs, large, n_in, methods)
                   for n_in in cfg['experiment.input_sizes']}
        frame = experiment_rmse_vs_input_size(
            by_n_in, large, snr_list=snr_list, n_snapshots=n_snapshots,
            distance=distance, **monte_carlo)
    elif name == 'boxplot':
        errors, summary = experiment_boxplot(
            estimators(cfg, outputs, array), array,
            directions_deg=cfg['experiment.boxplot_directions'],
            realizations=cfg['experiment.boxplot_realizations'],
            snr_db=snr_db, n_snapshots=n_snapshots, distance=distance,
            seed=seed, workers=cfg.workers)
        outputs.table('boxplot_errors', errors)
        outputs.table('boxplot_summary', summary)
        return None
    elif name == 'loss_metric':
        train_set, validation = training_sets(cfg)
        test_set = build_dataset(cfg.dataset_spec('test'), cfg.workers)
        curves, summary = experiment_loss_metric(
            train_set, test_set, cfg.train_config(),
            channels=cfg['network.channels'], seed=cfg.seed,
            validation_set=validation)
        outputs.table('loss_metric_curves', curves)
        outputs.table('loss_metric_summary', summary)
        return {'summary': summary.to_dict(orient='records')}
    else:
        train_set, validation = training_sets(cfg)
        frame = experiment_residual_blocks(
            train_set, cfg.train_config(), plans=cfg.block_plans(),
            seed=cfg.seed, validation_set=validation)
    outputs.table(name, frame)
    return None


@nfdoa.command('make-config')
@click.argument('path')
@click.pass_obj
def make_config(state, path):
    """Write the documented default configuration to PATH."""
    path = Path(path)
    if state['dry_run']:
        logger = logging.getLogger(__name__)
        logger.info('Dry run: not writing {}'.format(path))
        click.echo(default_config_text(), nl=False)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(default_config_text(), encoding='utf-8')
    except OSError as exc:
        fail(exc)
    click.echo(json.dumps({'command': 'make-config', 'outputs': [str(path)]}))
