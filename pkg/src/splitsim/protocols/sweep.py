"""Client-count x samples-per-client sensitivity grids."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..data.dataset import Dataset, partition_iid
from ..errors import ConfigError
from ..nn.model import ModelSpec
from ..tensor import SeededRng
from . import run_protocol
from .common import TrainConfig


def cell_seed(seed: int, k: int, per_client: int) -> int:
    """Seeds hang off the cell's (k, m) label, not its grid position."""
    return int(SeededRng(seed).split("cell", k, per_client).next_u64(1)[0] >> np.uint64(1))


def sensitivity_sweep(protocol: str, model: ModelSpec, pool: Dataset, client_counts, samples_per_client,
                      config: TrainConfig, test: Dataset | None = None, cut: int | None = None,
                      metric: str = "auprc") -> np.ndarray:
    """Final ``metric`` for one run per (client count, samples per client) cell.

    Each cell draws ``k * m`` disjoint samples from ``pool``.
    """
    client_counts, samples_per_client = list(client_counts), list(samples_per_client)
    if not client_counts or not samples_per_client:
        raise ConfigError("sweep grid must be non-empty")
    out = np.zeros((len(client_counts), len(samples_per_client)))
    for r, k in enumerate(client_counts):
        for c, m in enumerate(samples_per_client):
            s = cell_seed(config.seed, k, m)
            part = partition_iid(pool, k, [m] * k, seed=s)
            report = run_protocol(protocol, model, pool, part, replace(config, seed=s), test, cut)
            value = report.final_metric(metric)
            out[r, c] = np.nan if value is None else value
    return out


def compare_sweep(model: ModelSpec, pool: Dataset, client_counts, samples_per_client, config: TrainConfig,
                  test: Dataset | None = None, cut: int | None = None, metric: str = "auprc",
                  fl_protocol: str = "fedavg", sl_protocol: str = "splitfed") -> dict[str, np.ndarray]:
    """FL matrix, SL matrix and their difference (SL minus FL)."""
    fl = sensitivity_sweep(fl_protocol, model, pool, client_counts, samples_per_client, config, test, cut, metric)
    sl = sensitivity_sweep(sl_protocol, model, pool, client_counts, samples_per_client, config, test, cut, metric)
    return {"fl": fl, "sl": sl, "diff": sl - fl}
