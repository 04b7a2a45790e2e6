import numpy as np

from ..data.dataset import Dataset, Partition
from ..errors import ConfigError
from ..nn.model import ModelSpec
from .centralized import run_centralized
from .common import EpochRecord, TrainConfig, TrainReport, epoch_batches
from .fedavg import aggregate, run_fedavg
from .messages import Message, SmashedBatch, SmashedGrad, Transcript, payload_bytes
from .sequential import run_sl_sequential
from .split import SplitSpec, legal_cuts, split_model
from .splitfed import average_gradients, run_splitfed

PROTOCOLS = ("centralized", "fedavg", "sl-sequential", "splitfed")


def run_protocol(protocol: str, model: ModelSpec, train: Dataset, partition: Partition | None,
                 config: TrainConfig, test: Dataset | None = None, cut: int | None = None) -> TrainReport:
    if protocol == "centralized":
        # the centralized baseline sees the union of all shards
        data = train if partition is None else train.subset(np.sort(np.concatenate(partition.shards)))
        return run_centralized(model, data, config, test)
    if partition is None:
        raise ConfigError(f"protocol {protocol!r} needs a client partition")
    if protocol == "fedavg":
        return run_fedavg(model, train, partition, config, test)
    if protocol in ("sl-sequential", "splitfed"):
        if cut is None:
            raise ConfigError(f"protocol {protocol!r} needs a cut index")
        split = split_model(model, cut)
        runner = run_sl_sequential if protocol == "sl-sequential" else run_splitfed
        return runner(split, train, partition, config, test)
    raise ConfigError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")


from .sweep import cell_seed, compare_sweep, sensitivity_sweep  # noqa: E402

__all__ = [
    "PROTOCOLS", "run_protocol", "run_centralized", "run_fedavg", "run_sl_sequential", "run_splitfed",
    "aggregate", "average_gradients", "TrainConfig", "TrainReport", "EpochRecord", "epoch_batches",
    "Message", "SmashedBatch", "SmashedGrad", "Transcript", "payload_bytes",
    "SplitSpec", "legal_cuts", "split_model", "cell_seed", "compare_sweep", "sensitivity_sweep",
]
