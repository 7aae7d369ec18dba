"""
Write result tables, JSON documents and run manifests.

Data files depend only on the run configuration and seed; timings and
package versions are confined to the run manifest.
"""
import datetime
import json
import logging
import platform
import time
from pathlib import Path

import numpy as np
import pandas as pd
import scipy

from .. import __version__


def timestamp():
    return datetime.datetime.now().strftime("%H:%M:%S")


def output_csv_mkdir(data, path):
    """
    Wrapper for pandas .to_csv() method to create directory for path if it
    doesn't already exist.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data.to_csv(path, index=False)
    return path


def write_table(out_dir, name, data):
    """
    Write a data table to ``<out_dir>/<name>.csv``, after ensuring that it
    doesn't contain any NA values.

    :param out_dir: The output directory.
    :param name: The table name (may contain sub-directories).
    :param data: The table data.
    :returns: The path of the written file.
    """
    path = Path(out_dir) / (name + '.csv')
    if np.any(data.isna()):
        msg = 'NA values in table {} for {}'.format(name, path)
        raise ValueError(msg)

    logger = logging.getLogger(__name__)
    logger.info('{} Writing table {} to {}'.format(timestamp(), name, path))
    return output_csv_mkdir(data, path)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def package_versions():
    return {
        'nfdoa': __version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'python': platform.python_version(),
    }


class RunManifest:
    """
    Record a command's resolved configuration, seed and outputs, and write
    them to ``manifest.json`` in the output directory.
    """

    def __init__(self, command, config, seed):
        self.command = command
        self.config = config
        self.seed = seed
        self.outputs = []
        self.started = datetime.datetime.now()
        self._clock = time.perf_counter()

    def add_output(self, path):
        self.outputs.append(str(path))
        return path

    def to_dict(self):
        return {
            'command': self.command,
            'config': self.config,
            'seed': self.seed,
            'versions': package_versions(),
            'start_time': self.started.isoformat(timespec='seconds'),
            'wall_time_s': round(time.perf_counter() - self._clock, 3),
            'outputs': self.outputs,
        }

    def write(self, out_dir):
        return write_json(Path(out_dir) / 'manifest.json', self.to_dict())
