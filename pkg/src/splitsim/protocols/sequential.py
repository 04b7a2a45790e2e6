from __future__ import annotations

from ..data.dataset import Dataset, Partition
from ..errors import ConfigError
from ..nn.model import init_params
from ..nn.optim import adam_step
from .common import EpochLog, TrainConfig, TrainReport, epoch_batches, evaluate, root_rng
from .messages import SERVER, Transcript, client
from .roles import SplitClient, serve
from .split import SplitSpec


def run_sl_sequential(split: SplitSpec, train: Dataset, partition: Partition, config: TrainConfig,
                      test: Dataset | None = None) -> TrainReport:
    """Round-robin split learning.

    Clients take turns over their whole shard, one mini-batch exchange at a
    time; after its turn a client hands the client-side parameters and its
    Adam state to the next client in the ring.
    """
    if any(size == 0 for size in partition.sizes):
        raise ConfigError("every client shard must be non-empty")
    full = init_params(split.model, root_rng(config).split("init"))
    cspec, sspec = split.client, split.server
    c_params, s_params = full.select(cspec.indices), full.select(sspec.indices)
    c_opt, s_opt = config.optimizer(c_params), config.optimizer(s_params)
    handoff_size = c_params.count() + c_params.buffer_count() + c_opt.element_count()
    transcript = Transcript()
    log = EpochLog(transcript)
    model = split.model
    initial = evaluate(model, c_params.merged(s_params), test, config.positive_only_f1)

    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        for i in range(partition.k):
            worker = SplitClient(i, cspec, c_params)
            for b, idx in enumerate(epoch_batches(config, i, epoch, partition.shards[i])):
                smashed = worker.smash(train.features[idx], train.labels[idx], (epoch, b))
                transcript.send("smashed", client(i), SERVER, epoch, smashed.activations.size)
                loss, reply, s_grads = serve(sspec, s_params, smashed)
                s_params, s_opt = adam_step(s_params, s_grads, s_opt)
                transcript.send("smashed-grad", SERVER, client(i), epoch, reply.grad.size)
                c_grads = worker.receive(reply)
                worker.params, c_opt = adam_step(worker.params, c_grads, c_opt)
                loss_sum += loss * len(idx)
            c_params = worker.params
            transcript.send("client-params", client(i), client((i + 1) % partition.k), epoch, handoff_size)
        merged = c_params.merged(s_params)
        log.close_epoch(epoch, loss_sum, partition.total,
                        evaluate(model, merged, test, config.positive_only_f1), merged, config.record_trajectory)
    return TrainReport("sl-sequential", config, partition.sizes, initial, log.records, transcript,
                       c_params.merged(s_params), cut=split.cut,
                       trajectory=log.trajectory if config.record_trajectory else None)
