from __future__ import annotations

from ..data.dataset import Dataset, Partition
from ..errors import ConfigError
from ..nn.model import ModelSpec, Parameters, init_params
from .common import (EpochLog, TrainConfig, TrainReport, epoch_batches, evaluate, map_clients, root_rng,
                     train_step, weighted_sum)
from .messages import SERVER, Transcript, client


def aggregate(client_params: list[Parameters], weights: list[float]) -> Parameters:
    """Weighted parameter average; BatchNorm running stats use the same weights."""
    return Parameters(weighted_sum([p.trainable for p in client_params], weights),
                      weighted_sum([p.buffers for p in client_params], weights)
                      if client_params[0].buffers else {})


def run_fedavg(model: ModelSpec, train: Dataset, partition: Partition, config: TrainConfig,
               test: Dataset | None = None) -> TrainReport:
    """Each epoch every client trains one local epoch from the global model,
    then the server replaces it with the n_i/n weighted average.

    Each client keeps its own Adam moments across rounds.
    """
    if any(size == 0 for size in partition.sizes):
        raise ConfigError("every client shard must be non-empty")
    global_params = init_params(model, root_rng(config).split("init"))
    opts = [config.optimizer(global_params) for _ in range(partition.k)]
    weights = partition.weights()
    size = global_params.count() + global_params.buffer_count()
    transcript = Transcript()
    log = EpochLog(transcript)
    initial = evaluate(model, global_params, test, config.positive_only_f1)

    for epoch in range(1, config.epochs + 1):
        for i in range(partition.k):
            transcript.send("global-params", SERVER, client(i), epoch, size)

        def local_epoch(i: int):
            params, opt = global_params.copy(), opts[i]
            loss_sum = 0.0
            for idx in epoch_batches(config, i, epoch, partition.shards[i]):
                params, opt, loss = train_step(model, params, opt, train.features[idx], train.labels[idx])
                loss_sum += loss * len(idx)
            return params, opt, loss_sum

        results = map_clients(config, local_epoch, range(partition.k))
        for i in range(partition.k):
            transcript.send("client-params", client(i), SERVER, epoch, size)
        opts = [r[1] for r in results]
        global_params = aggregate([r[0] for r in results], weights)
        log.close_epoch(epoch, sum(r[2] for r in results), partition.total,
                        evaluate(model, global_params, test, config.positive_only_f1),
                        global_params, config.record_trajectory)
    return TrainReport("fedavg", config, partition.sizes, initial, log.records, transcript, global_params,
                       trajectory=log.trajectory if config.record_trajectory else None)
