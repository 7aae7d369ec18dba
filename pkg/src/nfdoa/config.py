"""
=================
Run Configuration
=================

Runs are configured by flat ``key = value`` files (UTF-8, ``#`` starts a
comment) whose dotted keys select a section and a setting::

    array.n_elements = 129
    train.epochs = 50
    experiment.snr_list = -10, -5, 0, 5, 10

Settings are resolved from three layers, in increasing priority: the
defaults below, the configuration file, and command-line options. Every
value is converted to the type of its default; unknown keys and duplicated
keys are errors.

"""
import math
from pathlib import Path

import jinja2
from layered_config_tree import LayeredConfigTree

from .baselines.music import MusicGrid
from .baselines.tdnn import TdnnSpec
from .errors import ConfigurationError
from .network.optimizer import TrainConfig
from .pipeline.dataset import DatasetSpec
from .signal.geometry import ArrayConfig


RANDOM_SEED = 49430

LAYERS = ['defaults', 'config_file', 'command_line']

SECTIONS = [
    ('run', 'Run control', [
        ('seed', RANDOM_SEED, 'The seed from which all randomness derives.'),
        ('workers', 1, 'The number of worker processes.'),
        ('out', 'results', 'The output directory.'),
    ]),
    ('array', 'Uniform linear array', [
        ('n_elements', 65, 'The number of elements.'),
        ('spacing', 0.5, 'The element spacing, in wavelengths.'),
        ('wavelength', 0.0107, 'The carrier wavelength, in metres.'),
    ]),
    ('source', 'Single-source scenario (simulate, music)', [
        ('theta_deg', 30.0, 'The direction of arrival, in degrees.'),
        ('range', 500.0, 'The source distance, in wavelengths.'),
        ('snapshots', 100, 'The number of snapshots.'),
        ('snr_db', 10.0, 'The signal-to-noise ratio, in dB.'),
        ('strict_fresnel', False,
         'Reject sources outside the Fresnel zone (otherwise warn).'),
    ]),
    ('dataset', 'Training dataset', [
        ('path', '', 'Load the training set from this HDF5 store '
                     '(empty: simulate it).'),
        ('distance_lo', 400.0, 'The smallest distance, in wavelengths.'),
        ('distance_hi', 1600.0, 'The largest distance, in wavelengths.'),
        ('distance_step', 400.0, 'The distance step, in wavelengths.'),
        ('theta_lo', -90.0, 'The smallest direction, in degrees.'),
        ('theta_hi', 90.0, 'The largest direction, in degrees.'),
        ('theta_step', 0.5, 'The direction step, in degrees.'),
        ('theta_endpoint', True, 'Include the largest direction.'),
        ('snapshots', 100, 'The number of snapshots per sample.'),
        ('snr_db', 10.0, 'The signal-to-noise ratio, in dB.'),
        ('n_in', 33, 'The size of the cropped VCM (the feature length).'),
        ('validation_fraction', 0.1,
         'The fraction of samples held out at every distance.'),
        ('strict_fresnel', False,
         'Reject distances outside the Fresnel zone (otherwise warn).'),
        ('write_csv', False, 'Also write every dataset table as CSV.'),
    ]),
    ('test', 'Held-out test set', [
        ('distance_lo', 1000.0, 'The smallest distance, in wavelengths.'),
        ('distance_hi', 1000.0, 'The largest distance, in wavelengths.'),
        ('distance_step', 100.0, 'The distance step, in wavelengths.'),
        ('theta_lo', -90.0, 'The smallest direction, in degrees.'),
        ('theta_hi', 90.0, 'The largest direction, in degrees.'),
        ('theta_step', 0.7, 'The direction step, in degrees.'),
        ('snapshots', 100, 'The number of snapshots per sample.'),
        ('snr_db', 10.0, 'The signal-to-noise ratio, in dB.'),
    ]),
    ('network', 'Network architecture', [
        ('model', 'cvnn', 'The network to train: cvnn or tdnn.'),
        ('channels', (8, 4), 'The output channels of each residual block.'),
        ('kernel_length', 3, 'The kernel length of the residual convolutions.'),
        ('affine_width', 20, 'The width of the complex affine layer.'),
        ('hidden', (10, 10), 'The widths of the hidden real affine layers.'),
        ('init', 'glorot', 'The weight initialisation: glorot or zeros.'),
        ('tdnn_context', 5, 'The context size of the TDNN layers.'),
        ('tdnn_filters', (8, 8, 4, 2, 1), 'The filter counts of the TDNN.'),
        ('tdnn_dense', (10, 10), 'The widths of the TDNN dense layers.'),
    ]),
    ('train', 'Training', [
        ('optimizer', 'adam', 'The optimiser: adam or sgd.'),
        ('learning_rate', 0.001, 'The learning rate.'),
        ('adam_beta1', 0.9, 'The first-moment decay rate.'),
        ('adam_beta2', 0.999, 'The second-moment decay rate.'),
        ('adam_eps', 1e-08, 'The Adam denominator offset.'),
        ('batch_size', 64, 'The mini-batch size.'),
        ('epochs', 200, 'The number of epochs.'),
        ('loss', 'mae', 'The loss: mae or mse.'),
        ('precision', 'float64', 'The arithmetic precision: float64 or '
                                 'float32.'),
    ]),
    ('music', 'Near-field MUSIC search grid', [
        ('theta_lo', -89.9, 'The smallest direction, in degrees.'),
        ('theta_hi', 89.9, 'The largest direction, in degrees.'),
        ('theta_step', 0.1, 'The direction step, in degrees.'),
        ('range_lo', 200.0, 'The smallest range, in wavelengths.'),
        ('range_hi', 1800.0, 'The largest range, in wavelengths.'),
        ('range_step', 25.0, 'The range step, in wavelengths.'),
        ('n_sources', 1, 'The number of sources.'),
        ('refine', True, 'Refine peaks by parabolic interpolation.'),
    ]),
    ('beampattern', 'Beam-pattern comparison', [
        ('doas_deg', (-30.0, 45.0), 'The source directions, in degrees.'),
        ('distance', 500.0, 'The source distance, in wavelengths.'),
        ('noise_var', 0.1, 'The noise variance.'),
        ('theta_step', 0.1, 'The spectrum resolution, in degrees.'),
        ('exclusion_deg', 5.0,
         'The half-width excluded around each source when measuring '
         'sidelobes, in degrees.'),
    ]),
    ('experiment', 'Experiments', [
        ('methods', ('cvnn', 'tdnn', 'music'),
         'The methods compared by the Monte-Carlo experiments.'),
        ('checkpoint', '', 'A trained CVNN checkpoint (empty: train one).'),
        ('tdnn_checkpoint', '',
         'A trained TDNN checkpoint (empty: train one).'),
        ('trials', 100, 'The number of Monte-Carlo trials per condition.'),
        ('theta_limit_deg', 60.0,
         'Trial directions are drawn uniformly within this limit.'),
        ('snr_db', 10.0,
         'The signal-to-noise ratio of the box-plot experiment, in dB.'),
        ('snapshots', 100, 'The number of snapshots.'),
        ('distance', 1000.0, 'The source distance, in wavelengths.'),
        ('snr_list', (-10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10),
         'The SNR values swept by the Monte-Carlo experiments.'),
        ('snapshot_list', (10, 20, 50, 100, 200),
         'The snapshot counts of the RMSE-vs-snapshots experiment.'),
        ('distance_list', (600.0, 800.0, 1000.0, 1200.0),
         'The distances of the RMSE-vs-SNR and distance experiments.'),
        ('antenna_list', (65, 97, 129),
         'The array sizes of the crop-invariance experiment.'),
        ('input_sizes', (17, 33, 49),
         'The input sizes of the RMSE-vs-input-size experiment.'),
        ('input_size_antennas', 129,
         'The array size of the RMSE-vs-input-size experiment.'),
        ('boxplot_directions', (-75.0, -45.0, -15.0, 15.0, 45.0, 75.0),
         'The directions of the box-plot experiment, in degrees.'),
        ('boxplot_realizations', 500,
         'The realizations per direction of the box-plot experiment.'),
        ('block_plans', '8 | 8,4 | 8,8,4',
         'The residual-block channel plans, separated by "|".'),
    ]),
]

DEFAULTS = {section: {key: value for key, value, _ in entries}
            for section, _, entries in SECTIONS}

TRUE_VALUES = ('true', 'yes', 'on', '1')
FALSE_VALUES = ('false', 'no', 'off', '0')

TEMPLATE = jinja2.Template("""\
# nfdoa run configuration.
#
# Lines have the form "section.key = value"; "#" starts a comment.
{% for section in sections %}

# {{ section.title }}
{% for entry in section.entries %}
# {{ entry.description }}
{{ entry.key }} = {{ entry.value }}
{% endfor %}
{% endfor %}
""", trim_blocks=True, lstrip_blocks=True)


def default_value(key):
    section, _, name = key.partition('.')
    try:
        return DEFAULTS[section][name]
    except KeyError:
        raise ConfigurationError('Unknown configuration key: {}'.format(
            key)) from None


def _convert_scalar(key, text, kind):
    text = text.strip()
    if kind is bool:
        if text.lower() in TRUE_VALUES:
            return True
        if text.lower() in FALSE_VALUES:
            return False
        raise ConfigurationError('Invalid boolean for {}: {!r}'.format(
            key, text))
    try:
        return kind(text)
    except ValueError:
        raise ConfigurationError('Invalid {} for {}: {!r}'.format(
            kind.__name__, key, text)) from None


def convert_value(key, value):
    """Convert a value (usually text) to the type of the key's default."""
    default = default_value(key)
    if isinstance(default, tuple):
        if isinstance(value, str):
            items = [item for item in value.split(',') if item.strip()]
        else:
            items = list(value)
        kind = type(default[0])
        return tuple(_convert_scalar(key, str(item), kind) for item in items)
    if isinstance(value, str):
        return _convert_scalar(key, value, type(default))
    if isinstance(default, float) and isinstance(value, int) \
            and not isinstance(value, bool):
        return float(value)
    if type(value) is not type(default):
        raise ConfigurationError('Invalid value for {}: {!r}'.format(
            key, value))
    return value


def parse_config_text(text, source='<string>'):
    """
    Parse ``key = value`` lines into a flat dictionary of typed values.

    :raises ConfigurationError: For malformed lines, unknown keys, duplicated
        keys and values that cannot be converted.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError('{}:{}: expected "key = value"'.format(
                source, lineno))
        key, value = (part.strip() for part in line.split('=', 1))
        if key in values:
            raise ConfigurationError('{}:{}: duplicate key {}'.format(
                source, lineno, key))
        values[key] = convert_value(key, value)
    return values


def load_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError('Configuration file not found: {}'.format(
            path))
    return parse_config_text(path.read_text(encoding='utf-8'), str(path))


def nest(flat):
    tree = {}
    for key, value in flat.items():
        section, _, name = key.partition('.')
        tree.setdefault(section, {})[name] = value
    return tree


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ', '.join(format_value(item) for item in value)
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return str(value)


def render_config(values):
    """Render a documented configuration file for ``{key: value}``."""
    sections = []
    for section, title, entries in SECTIONS:
        sections.append({'title': title, 'entries': [
            {'key': '{}.{}'.format(section, name),
             'value': format_value(values['{}.{}'.format(section, name)]),
             'description': description}
            for name, _, description in entries]})
    return TEMPLATE.render(sections=sections)


def default_config_text():
    return render_config({'{}.{}'.format(section, name): value
                          for section, names in DEFAULTS.items()
                          for name, value in names.items()})


class RunConfig:
    """
    The resolved settings of a run.

    :param path: An optional configuration file.
    :param overrides: Optional ``{dotted key: value}`` command-line settings.
    """

    def __init__(self, path=None, overrides=None):
        self.path = path
        self.tree = LayeredConfigTree(layers=LAYERS)
        self.tree.update(DEFAULTS, layer='defaults', source='nfdoa.config')
        if path is not None:
            self.tree.update(nest(load_config_file(path)),
                             layer='config_file', source=str(path))
        if overrides:
            converted = {key: convert_value(key, value)
                         for key, value in overrides.items()
                         if value is not None}
            if converted:
                self.tree.update(nest(converted), layer='command_line',
                                 source='command line')

    def __getitem__(self, key):
        section, _, name = key.partition('.')
        default_value(key)
        return self.tree[section][name]

    def flat(self):
        return {'{}.{}'.format(section, name): self['{}.{}'.format(section, name)]
                for section, names in DEFAULTS.items() for name in names}

    def to_dict(self):
        """The resolved settings, with tuples as lists (for JSON)."""
        return {key: list(value) if isinstance(value, tuple) else value
                for key, value in self.flat().items()}

    def render(self):
        return render_config(self.flat())

    @property
    def seed(self):
        return self['run.seed']

    @property
    def workers(self):
        return self['run.workers']

    @property
    def out(self):
        return Path(self['run.out'])

    def array_config(self, n_elements=None):
        return ArrayConfig(
            n_elements=self['array.n_elements'] if n_elements is None
            else n_elements,
            spacing=self['array.spacing'],
            wavelength=self['array.wavelength'])

    def dataset_spec(self, role='train', array=None, n_in=None):
        """
        The training (``role='train'``) or test (``role='test'``) dataset.

        The test set draws from the seed after the run seed, so its noise is
        independent of the training noise.
        """
        section = 'dataset' if role == 'train' else 'test'
        return DatasetSpec(
            distance_range=(self[section + '.distance_lo'],
                            self[section + '.distance_hi'],
                            self[section + '.distance_step']),
            theta_range=(self[section + '.theta_lo'],
                         self[section + '.theta_hi'],
                         self[section + '.theta_step']),
            snapshots=self[section + '.snapshots'],
            snr_db=self[section + '.snr_db'],
            seed=self.seed if role == 'train' else self.seed + 1,
            n_in=self['dataset.n_in'] if n_in is None else n_in,
            array=self.array_config() if array is None else array,
            role=role,
            theta_endpoint=self['dataset.theta_endpoint'],
            strict_fresnel=self['dataset.strict_fresnel'])

    def train_config(self):
        return TrainConfig(
            optimizer=self['train.optimizer'],
            learning_rate=self['train.learning_rate'],
            adam_beta1=self['train.adam_beta1'],
            adam_beta2=self['train.adam_beta2'],
            adam_eps=self['train.adam_eps'],
            batch_size=self['train.batch_size'],
            epochs=self['train.epochs'],
            loss=self['train.loss'],
            seed=self.seed,
            precision=self['train.precision'])

    def tdnn_spec(self, n_in=None):
        return TdnnSpec(n_in=self['dataset.n_in'] if n_in is None else n_in,
                        context=self['network.tdnn_context'],
                        filters=self['network.tdnn_filters'],
                        dense=self['network.tdnn_dense'])

    def music_grid(self):
        return MusicGrid.from_degrees(
            self['music.theta_lo'], self['music.theta_hi'],
            self['music.theta_step'], self['music.range_lo'],
            self['music.range_hi'], self['music.range_step'])

    def block_plans(self):
        plans = []
        for plan in self['experiment.block_plans'].split('|'):
            try:
                plans.append(tuple(int(c) for c in plan.split(',')
                                   if c.strip()))
            except ValueError:
                raise ConfigurationError('Invalid block plan: {!r}'.format(
                    plan)) from None
        if not all(plans):
            raise ConfigurationError('Empty residual-block plan')
        return plans
