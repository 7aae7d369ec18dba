import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from nfdoa.cli import nfdoa
from nfdoa.config import default_config_text
from nfdoa.errors import TrainingDivergedError
from nfdoa.network.checkpoint import load_checkpoint, save_checkpoint
from nfdoa.network.model import build_cvnn
from nfdoa.pipeline.dataset import load_dataset


TINY_RUN = """\
array.n_elements = 17
source.theta_deg = 20.0
source.range = 60.0
source.snapshots = 16
source.snr_db = 30.0
dataset.distance_lo = 40.0
dataset.distance_hi = 120.0
dataset.distance_step = 40.0
dataset.theta_lo = -60.0
dataset.theta_hi = 60.0
dataset.theta_step = 20.0
dataset.snapshots = 20
dataset.snr_db = 20.0
dataset.n_in = 9
dataset.validation_fraction = 0.2
test.distance_lo = 80.0
test.distance_hi = 80.0
test.distance_step = 10.0
test.theta_lo = -50.0
test.theta_hi = 50.0
test.theta_step = 25.0
test.snapshots = 20
network.channels = 2
network.affine_width = 4
network.hidden = 3
train.epochs = 1
train.batch_size = 8
music.theta_lo = -30.0
music.theta_hi = 30.0
music.theta_step = 1.0
music.range_lo = 40.0
music.range_hi = 100.0
music.range_step = 10.0
experiment.methods = cvnn
experiment.trials = 3
experiment.snr_list = 0, 10
experiment.distance = 80.0
experiment.distance_list = 60, 80
experiment.block_plans = 2 | 2,2
"""


@pytest.fixture
def tiny_run(tmp_path):
    path = tmp_path / 'tiny.cfg'
    path.write_text(TINY_RUN)
    return path


def invoke(*args):
    return CliRunner().invoke(nfdoa, [str(arg) for arg in args])


def summary(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout.strip().splitlines()[-1])


def error(result):
    line = [line for line in result.output.splitlines()
            if line.startswith('error ')][-1]
    return json.loads(line[len('error '):])


def fake_training(net, train_set, config, validation_set=None):
    history = pd.DataFrame({'epoch': [1], 'train_loss': [0.5],
                            'train_mae': [0.5]})
    return net, history


def test_flops(tmp_path):
    result = summary(invoke('--out', tmp_path, 'flops'))
    assert result['command'] == 'flops'
    assert result['flops'] == {'cvnn': 250535, 'tdnn': 380755}
    table = pd.read_csv(tmp_path / 'flops' / 'flops.csv')
    assert list(table.columns) == ['model', 'layer', 'kind', 'flops']
    assert table.groupby('model')['flops'].sum()['cvnn'] == 250535
    manifest = json.loads((tmp_path / 'flops' / 'manifest.json').read_text())
    assert manifest['seed'] == 49430
    assert manifest['outputs'] == result['outputs']


def test_dry_run(tmp_path):
    result = invoke('--out', tmp_path / 'out', '--seed', 7, '--dry-run',
                    'flops')
    assert result.exit_code == 0
    assert 'run.seed = 7\n' in result.stdout
    assert not (tmp_path / 'out').exists()


def test_unknown_key(tmp_path):
    path = tmp_path / 'bad.cfg'
    path.write_text('array.colour = red\n')
    result = invoke('--config', path, 'flops')
    assert result.exit_code == 2
    assert error(result)['kind'] == 'config'


def test_make_config(tmp_path):
    path = tmp_path / 'configs' / 'default.cfg'
    assert summary(invoke('make-config', path))['outputs'] == [str(path)]
    assert path.read_text() == default_config_text()
    result = invoke('--config', path, '--dry-run', 'flops')
    assert result.exit_code == 0
    assert default_config_text() in result.stdout


def test_make_config_dry_run(tmp_path):
    path = tmp_path / 'configs' / 'default.cfg'
    result = invoke('--dry-run', 'make-config', path)
    assert result.exit_code == 0
    assert default_config_text() in result.stdout
    assert not path.parent.exists()


def test_beampattern(tmp_path):
    result = summary(invoke('--out', tmp_path, 'beampattern'))
    np.testing.assert_allclose(result['peaks_vcm_deg'], [-30.0, 45.0],
                               atol=0.5)
    frame = pd.read_csv(tmp_path / 'beampattern' / 'beampattern.csv')
    assert list(frame.columns) == ['theta_deg', 'power_raw', 'power_vcm']
    assert (tmp_path / 'beampattern' / 'beampattern.json').exists()


def test_simulate_is_deterministic(tmp_path, tiny_run):
    outputs = []
    for name in ('a', 'b'):
        result = summary(invoke('--config', tiny_run, '--out', tmp_path / name,
                                '--seed', 5, 'simulate'))
        assert result['samples'] == {'train': 18, 'validation': 3, 'test': 5}
        outputs.append(tmp_path / name / 'simulate')
    a, b = outputs
    assert (a / 'snapshots.bin').read_bytes() == \
        (b / 'snapshots.bin').read_bytes()
    for role in ('train', 'validation', 'test'):
        np.testing.assert_array_equal(
            load_dataset(a / 'dataset.h5', role).features,
            load_dataset(b / 'dataset.h5', role).features)


def test_simulate_writes_csv(tmp_path, tiny_run):
    result = summary(invoke('--config', tiny_run, '--out', tmp_path,
                            'simulate'))
    assert not (tmp_path / 'simulate' / 'dataset_test.csv').exists()
    assert str(tmp_path / 'simulate' / 'dataset.h5') in result['outputs']

    with open(tiny_run, 'a') as f:
        f.write('dataset.write_csv = true\n')
    summary(invoke('--config', tiny_run, '--out', tmp_path, 'simulate'))
    test = pd.read_csv(tmp_path / 'simulate' / 'dataset_test.csv')
    assert len(test) == 5
    assert list(test.columns[:2]) == ['distance', 'theta']


def test_music(tmp_path, tiny_run):
    result = summary(invoke('--config', tiny_run, '--out', tmp_path, 'music'))
    assert result['truth'] == [{'theta_deg': pytest.approx(20.0),
                                'range_lambda': 60.0}]
    assert result['estimates'][0]['theta_deg'] == pytest.approx(20.0, abs=1.0)
    frame = pd.read_csv(tmp_path / 'music' / 'spectrum.csv')
    assert len(frame) == 61 * 7


def test_eval_untrained(tmp_path, tiny_run):
    checkpoint = save_checkpoint(
        tmp_path / 'zero.json',
        build_cvnn(9, channels=(2,), affine_width=4, hidden=(3,),
                   init='zeros'))
    result = summary(invoke('--config', tiny_run, '--out', tmp_path, 'eval',
                            checkpoint))
    expected = np.sqrt(np.mean(np.array([-50, -25, 0, 25, 50]) ** 2.0))
    assert result['rmse_deg'] == pytest.approx(expected)
    report = json.loads((tmp_path / 'eval' / 'eval.json').read_text())
    assert report['n_samples'] == 5
    errors = pd.read_csv(tmp_path / 'eval' / 'errors.csv')
    assert list(errors.columns) == ['theta_deg', 'error_deg']


def test_eval_missing_checkpoint(tmp_path):
    result = invoke('--out', tmp_path, 'eval', tmp_path / 'missing.json')
    assert result.exit_code == 2
    assert 'Checkpoint not found' in error(result)['message']


def test_train(tmp_path, tiny_run, mocker):
    train_model = mocker.patch('nfdoa.cli.train_model',
                               side_effect=fake_training)
    result = summary(invoke('--config', tiny_run, '--out', tmp_path, 'train'))
    assert train_model.call_count == 1
    args = train_model.call_args[0]
    train_set, validation = args[1], args[3]
    assert (len(train_set), len(validation)) == (18, 3)
    assert result['metrics'] == {'train_loss': 0.5, 'train_mae': 0.5}
    checkpoint = load_checkpoint(tmp_path / 'train' / 'cvnn.json')
    assert checkpoint.network.n_in == 9
    assert checkpoint.seed == 49430
    assert checkpoint.metrics == result['metrics']
    assert (tmp_path / 'train' / 'history.csv').exists()


def test_train_diverged(tmp_path, tiny_run, mocker):
    mocker.patch('nfdoa.cli.train_model',
                 side_effect=TrainingDivergedError(1, 0, float('nan'), 3.0))
    result = invoke('--config', tiny_run, '--out', tmp_path, 'train')
    assert result.exit_code == 3
    assert error(result)['kind'] == 'numeric'


def test_unknown_model(tmp_path, tiny_run):
    with open(tiny_run, 'a') as f:
        f.write('network.model = lstm\n')
    result = invoke('--config', tiny_run, '--out', tmp_path, 'train')
    assert result.exit_code == 2


def test_output_under_a_file(tmp_path):
    blocker = tmp_path / 'blocker'
    blocker.write_text('')
    result = invoke('--out', blocker / 'out', 'flops')
    assert result.exit_code == 4
    assert error(result)['kind'] == 'io'


def test_experiment_snr(tmp_path, tiny_run, mocker):
    mocker.patch('nfdoa.cli.train_model', side_effect=fake_training)
    result = summary(invoke('--config', tiny_run, '--out', tmp_path,
                            'experiment', 'snr'))
    assert result['command'] == 'experiment snr'
    out = tmp_path / 'experiment' / 'snr'
    frame = pd.read_csv(out / 'snr.csv')
    assert list(frame['distance']) == [60.0, 60.0, 80.0, 80.0]
    assert list(frame['snr_db']) == [0, 10, 0, 10]
    assert set(frame['method']) == {'cvnn'}
    assert set(frame['seed']) == {49432}
    assert (out / 'cvnn_n9.json').exists()
    assert (out / 'manifest.json').exists()


def test_experiment_uses_checkpoint(tmp_path, tiny_run, mocker):
    train_model = mocker.patch('nfdoa.cli.train_model')
    checkpoint = save_checkpoint(
        tmp_path / 'net.json',
        build_cvnn(9, channels=(2,), affine_width=4, hidden=(3,)))
    with open(tiny_run, 'a') as f:
        f.write('experiment.checkpoint = {}\n'.format(checkpoint))
    summary(invoke('--config', tiny_run, '--out', tmp_path, 'experiment',
                   'distance'))
    assert train_model.call_count == 0
    frame = pd.read_csv(tmp_path / 'experiment' / 'distance' / 'distance.csv')
    assert list(frame['distance']) == [60.0, 60.0, 80.0, 80.0]
    assert list(frame['snr_db']) == [0, 10, 0, 10]


def test_experiment_residual_blocks(tmp_path, tiny_run):
    summary(invoke('--config', tiny_run, '--out', tmp_path, 'experiment',
                   'residual_blocks'))
    frame = pd.read_csv(tmp_path / 'experiment' / 'residual_blocks'
                        / 'residual_blocks.csv', dtype={'blocks': str})
    assert list(frame['blocks']) == ['2', '2-2']


def test_unknown_experiment(tmp_path):
    result = invoke('--out', tmp_path, 'experiment', 'fig11')
    assert result.exit_code == 2
