"""
========
Training
========

Mini-batch training of a network on a labelled dataset.

The samples are shuffled at the start of every epoch by a random stream
keyed by the training seed and the epoch number, so a training run is
reproducible bit for bit.

"""
import logging

import numpy as np
import pandas as pd

from ..errors import TrainingDivergedError
from ..network.loss import get_loss, mae_loss
from ..network.optimizer import make_optimizer_state, optimizer_step
from ..signal.simulation import make_rng
from .output import timestamp


def _largest_parameter(net):
    return max(float(np.max(np.abs(value))) for _, value in net.parameters())


def train_model(model, train_set, config, validation_set=None):
    """
    Train a network.

    Parameters
    ----------
    model
        The network; it is trained in place.
    train_set
        The training dataset.
    config
        The training configuration.
    validation_set
        An optional dataset evaluated at the end of every epoch.

    Returns
    -------
        The trained network and a data frame with one row per epoch
        (``epoch``, ``train_loss``, ``train_mae`` and, when a validation set
        is given, ``validation_loss`` and ``validation_mae``).

    Raises
    ------
    TrainingDivergedError
        If the loss becomes NaN or infinite.

    """
    logger = logging.getLogger(__name__)
    n = len(train_set)
    if n == 0:
        raise ValueError('Cannot train on an empty dataset')
    if train_set.n_in != model.n_in:
        raise ValueError('Features have length {}, the network expects {}'
                         .format(train_set.n_in, model.n_in))
    loss_fn, grad_fn = get_loss(config.loss)
    model.set_precision(config.precision)
    params = model.parameters()
    state = make_optimizer_state(params, config)

    rows = []
    for epoch in range(1, config.epochs + 1):
        order = make_rng(config.seed, epoch).permutation(n)
        total_loss = 0.0
        total_abs = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            ix = order[start:start + config.batch_size]
            features, labels = train_set[ix]
            pred = model.forward(features)
            loss = loss_fn(pred, labels)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, batch, loss,
                                            _largest_parameter(model))
            model.backward(grad_fn(pred, labels))
            optimizer_step(params, model.gradients(), state, config)
            total_loss += loss * len(ix)
            total_abs += mae_loss(pred, labels) * len(ix)

        row = {'epoch': epoch, 'train_loss': total_loss / n,
               'train_mae': total_abs / n}
        msg = '{} Epoch {}/{}: train {} = {:.6f}'.format(
            timestamp(), epoch, config.epochs, config.loss, row['train_loss'])
        if validation_set is not None and len(validation_set) > 0:
            pred = model.predict(validation_set.features)
            row['validation_loss'] = loss_fn(pred, validation_set.labels)
            row['validation_mae'] = mae_loss(pred, validation_set.labels)
            msg += ', validation {} = {:.6f}'.format(
                config.loss, row['validation_loss'])
        logger.info(msg)
        rows.append(row)

    history = pd.DataFrame(rows)
    return model, history
