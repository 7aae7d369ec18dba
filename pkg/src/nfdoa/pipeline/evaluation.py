"""Error metrics for direction estimates, reported in degrees."""
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


@dataclass
class EvalReport:
    """
    :param rmse_deg: The root-mean-square error in degrees.
    :param mae_deg: The mean absolute error in degrees.
    :param errors_deg: The signed per-sample errors (estimate minus truth)
        in degrees.
    :param condition: The evaluation condition (e.g., SNR, snapshots,
        distance, number of antennas).
    """

    rmse_deg: float
    mae_deg: float
    errors_deg: np.ndarray
    condition: dict = field(default_factory=dict)

    def to_dict(self):
        return {'rmse_deg': self.rmse_deg, 'mae_deg': self.mae_deg,
                'n_samples': int(len(self.errors_deg)),
                'condition': self.condition}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def errors_frame(self, labels=None):
        df = pd.DataFrame({'error_deg': self.errors_deg})
        if labels is not None:
            df.insert(0, 'theta_deg', np.rad2deg(labels))
        return df


def error_report(estimates, labels, condition=None):
    """Compare estimated and true directions (both in radians)."""
    estimates = np.asarray(estimates, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if estimates.shape != labels.shape:
        raise ValueError('Estimates {} and labels {} differ in shape'.format(
            estimates.shape, labels.shape))
    if estimates.size == 0:
        raise ValueError('Nothing to evaluate')
    errors = np.rad2deg(estimates - labels)
    return EvalReport(rmse_deg=float(np.sqrt(np.mean(errors ** 2))),
                      mae_deg=float(np.mean(np.abs(errors))),
                      errors_deg=errors, condition=dict(condition or {}))


def evaluate(model, test_set, condition=None):
    """Evaluate a network on a labelled dataset."""
    return error_report(model.predict(test_set.features), test_set.labels,
                        condition)
