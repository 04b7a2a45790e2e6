from __future__ import annotations

import numpy as np

from ..data.dataset import Dataset
from ..errors import DataError
from ..nn.model import ModelSpec, init_params
from .common import EpochLog, TrainConfig, TrainReport, epoch_batches, evaluate, root_rng, train_step
from .messages import Transcript


def run_centralized(model: ModelSpec, train: Dataset, config: TrainConfig,
                    test: Dataset | None = None) -> TrainReport:
    """Mini-batch Adam over the whole training set.

    Batches use the shuffle stream of client 0, which is what makes a
    one-client distributed run over the same data follow the same order.
    """
    if train is None or len(train) == 0:
        raise DataError("centralized training needs a non-empty dataset")
    params = init_params(model, root_rng(config).split("init"))
    opt = config.optimizer(params)
    transcript = Transcript()
    log = EpochLog(transcript)
    initial = evaluate(model, params, test, config.positive_only_f1)
    everything = np.arange(len(train))
    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        for idx in epoch_batches(config, 0, epoch, everything):
            params, opt, loss = train_step(model, params, opt, train.features[idx], train.labels[idx])
            loss_sum += loss * len(idx)
        log.close_epoch(epoch, loss_sum, len(train), evaluate(model, params, test, config.positive_only_f1),
                        params, config.record_trajectory)
    return TrainReport("centralized", config, [len(train)], initial, log.records, transcript, params,
                       trajectory=log.trajectory if config.record_trajectory else None)
