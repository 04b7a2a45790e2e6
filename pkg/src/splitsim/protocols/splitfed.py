from __future__ import annotations

from ..data.dataset import Dataset, Partition
from ..errors import ConfigError, ProtocolError
from ..nn.model import Parameters, init_params
from ..nn.optim import adam_step
from .common import (EpochLog, TrainConfig, TrainReport, epoch_batches, evaluate, map_clients, root_rng,
                     weighted_sum)
from .messages import FED_SERVER, SERVER, Transcript, client
from .roles import SplitClient, serve
from .split import SplitSpec


def average_gradients(grads: list, weights: list[float]):
    """sum_i weights[i] * grads[i] in list order (weights are n_i/n, not renormalised)."""
    return weighted_sum(grads, weights)


def _average_buffers(replicas: list[Parameters], sizes: list[int]):
    if not replicas[0].buffers:
        return {}
    total = sum(sizes)
    return weighted_sum([r.buffers for r in replicas], [s / total for s in sizes])


def run_splitfed(split: SplitSpec, train: Dataset, partition: Partition, config: TrainConfig,
                 test: Dataset | None = None) -> TrainReport:
    """Parallel split learning with a main server and a federated server.

    Synchronisation is per mini-batch. In each step every client that still
    has data fetches the current client parameters, sends smashed data,
    and gets back its cut-layer gradients from a server replica. The main
    server then applies one Adam step on sum_i (n_i/n) dL_i/dw_s and the
    federated server one on sum_i (n_i/n) dL_i/dw_c, summed over the
    active clients only. Running stats are averaged over active clients
    with renormalised weights.
    """
    if any(size == 0 for size in partition.sizes):
        raise ConfigError("every client shard must be non-empty")
    full = init_params(split.model, root_rng(config).split("init"))
    cspec, sspec = split.client, split.server
    c_params, s_params = full.select(cspec.indices), full.select(sspec.indices)
    c_opt, s_opt = config.optimizer(c_params), config.optimizer(s_params)
    weights = partition.weights()
    c_size = c_params.count() + c_params.buffer_count()
    transcript = Transcript()
    log = EpochLog(transcript)
    model = split.model
    initial = evaluate(model, c_params.merged(s_params), test, config.positive_only_f1)

    for epoch in range(1, config.epochs + 1):
        schedules = [epoch_batches(config, i, epoch, partition.shards[i]) for i in range(partition.k)]
        steps = max(len(s) for s in schedules)
        loss_sum = 0.0
        for step in range(steps):
            active = [i for i in range(partition.k) if step < len(schedules[i])]

            def client_step(i: int):
                idx = schedules[i][step]
                worker = SplitClient(i, cspec, c_params.copy())
                smashed = worker.smash(train.features[idx], train.labels[idx], (epoch, step))
                replica = s_params.copy()
                loss, reply, s_grads = serve(sspec, replica, smashed)
                c_grads = worker.receive(reply)
                return i, len(idx), loss, smashed.activations.size, s_grads, c_grads, worker.params, replica

            results = map_clients(config, client_step, active)
            if [r[0] for r in results] != active:
                raise ProtocolError(f"step {step}: expected replies from clients {active}, "
                                    f"got {[r[0] for r in results]}")
            for i, _, _, elements, _, _, _, _ in results:
                transcript.send("global-params", FED_SERVER, client(i), epoch, c_size)
                transcript.send("smashed", client(i), SERVER, epoch, elements)
                transcript.send("smashed-grad", SERVER, client(i), epoch, elements)
                transcript.send("client-grads", client(i), FED_SERVER, epoch, c_size)
            w = [weights[i] for i in active]
            sizes = [partition.sizes[i] for i in active]
            s_grad = average_gradients([r[4] for r in results], w)
            c_grad = average_gradients([r[5] for r in results], w)
            s_params = Parameters(s_params.trainable, _average_buffers([r[7] for r in results], sizes))
            c_params = Parameters(c_params.trainable, _average_buffers([r[6] for r in results], sizes))
            s_params, s_opt = adam_step(s_params, s_grad, s_opt)
            c_params, c_opt = adam_step(c_params, c_grad, c_opt)
            loss_sum += sum(r[2] * r[1] for r in results)
        merged = c_params.merged(s_params)
        log.close_epoch(epoch, loss_sum, partition.total,
                        evaluate(model, merged, test, config.positive_only_f1), merged, config.record_trajectory)
    return TrainReport("splitfed", config, partition.sizes, initial, log.records, transcript,
                       c_params.merged(s_params), cut=split.cut,
                       trajectory=log.trajectory if config.record_trajectory else None)
