"""Shared pieces of the training protocols: configuration, batching,
evaluation, aggregation helpers and the run report."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..data.container import dumps
from ..data.dataset import Dataset
from ..errors import ConfigError
from ..metrics import METRIC_NAMES, ScoredPredictions, evaluate_all
from ..nn.losses import loss_and_grad, predict_scores
from ..nn.model import Group, ModelSpec, Parameters, backward, forward
from ..nn.optim import OptimizerState, adam_step
from ..tensor import SeededRng
from .messages import Transcript

EVAL_BATCH = 256


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 256
    lr: float = 1e-4
    weight_decay: float = 1e-5
    seed: int = 0
    workers: int = 1
    record_trajectory: bool = False
    positive_only_f1: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def optimizer(self, params: Parameters) -> OptimizerState:
        return OptimizerState.for_params(params, lr=self.lr, weight_decay=self.weight_decay)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("record_trajectory")
        d.pop("workers")  # execution detail, must not change the report
        return d


def root_rng(config: TrainConfig) -> SeededRng:
    return SeededRng(config.seed)


def epoch_batches(config: TrainConfig, client: int, epoch: int, shard: np.ndarray) -> list[np.ndarray]:
    """Seeded shuffle of one client's shard, cut into mini-batches (last may be short)."""
    order = root_rng(config).split("shuffle", client, epoch).permutation(len(shard))
    idx = np.asarray(shard)[order]
    bs = config.batch_size
    return [idx[i:i + bs] for i in range(0, len(idx), bs)]


def map_clients(config: TrainConfig, fn, items):
    """Apply ``fn`` to every item, serially or on a thread pool; results keep
    input order so reductions happen in client-index order either way."""
    items = list(items)
    if config.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def train_step(spec: ModelSpec, params: Parameters, opt: OptimizerState, x, y):
    logits, cache = forward(spec, params, x, "train")
    loss, dlogits = loss_and_grad(spec.loss, logits, y)
    _, grads = backward(spec, params, cache, dlogits, need_input_grad=False)
    params, opt = adam_step(params, grads, opt)
    return params, opt, loss


def weighted_sum(groups: list[Group], weights: list[float]) -> Group:
    """sum_i weights[i] * groups[i], accumulated in list order."""
    out: Group = {}
    for i, entries in groups[0].items():
        out[i] = {}
        for name, value in entries.items():
            acc = value * weights[0]
            for g, w in zip(groups[1:], weights[1:]):
                acc = acc + g[i][name] * w
            out[i][name] = acc
    return out


def evaluate(spec: ModelSpec, params: Parameters, data: Dataset | None,
             positive_only_f1: bool = False) -> dict[str, float | None] | None:
    if data is None:
        return None
    scores = []
    for start in range(0, len(data), EVAL_BATCH):
        logits, _ = forward(spec, params, data.features[start:start + EVAL_BATCH], "eval")
        scores.append(predict_scores(spec.loss, logits))
    return evaluate_all(ScoredPredictions(np.concatenate(scores), data.labels), positive_only_f1)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    metrics: dict | None
    messages: int
    bytes: int
    cumulative_bytes: int


@dataclass
class TrainReport:
    protocol: str
    config: TrainConfig
    client_sizes: list[int]
    initial_metrics: dict | None
    epochs: list[EpochRecord]
    transcript: Transcript
    params: Parameters
    cut: int | None = None
    trajectory: list[Parameters] | None = field(default=None, repr=False)

    def metric_series(self, name: str) -> list[float | None]:
        return [None if e.metrics is None else e.metrics.get(name) for e in self.epochs]

    def final_metric(self, name: str) -> float | None:
        if self.epochs:
            return self.epochs[-1].metrics.get(name) if self.epochs[-1].metrics else None
        return self.initial_metrics.get(name) if self.initial_metrics else None

    def params_digest(self) -> str:
        return hashlib.sha256(dumps(self.params)).hexdigest()

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "config": self.config.to_dict(),
            "clients": len(self.client_sizes),
            "client_sizes": list(self.client_sizes),
            "cut": self.cut,
            "initial_metrics": self.initial_metrics,
            "epochs": [asdict(e) for e in self.epochs],
            "communication": self.transcript.summary(),
            "param_count": self.params.count(),
            "params_sha256": self.params_digest(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["epoch", "train_loss", *METRIC_NAMES, "cumulative_bytes"])
        rows = []
        if self.initial_metrics is not None:
            rows.append((0, "", self.initial_metrics, 0))
        rows += [(e.epoch, repr(e.train_loss), e.metrics or {}, e.cumulative_bytes) for e in self.epochs]
        for epoch, loss, metrics, cum in rows:
            vals = ["" if metrics.get(m) is None else repr(metrics[m]) for m in METRIC_NAMES]
            writer.writerow([epoch, loss, *vals, cum])
        return buf.getvalue()


class EpochLog:
    """Accumulates per-epoch records against a shared transcript."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.records: list[EpochRecord] = []
        self.trajectory: list[Parameters] = []
        self._mark = 0

    def close_epoch(self, epoch: int, loss_sum: float, sample_count: int, metrics, params=None,
                    record: bool = False):
        new = self.transcript.messages[self._mark:]
        self._mark = len(self.transcript.messages)
        nbytes = sum(m.nbytes for m in new)
        cum = (self.records[-1].cumulative_bytes if self.records else 0) + nbytes
        self.records.append(EpochRecord(epoch, loss_sum / sample_count, metrics, len(new), nbytes, cum))
        if record and params is not None:
            self.trajectory.append(params.copy())
