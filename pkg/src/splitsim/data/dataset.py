from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..tensor import SeededRng


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if len(labels) == 0:
            raise DataError("dataset is empty")
        if features.shape[0] != labels.shape[0]:
            raise DataError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DataError(f"labels outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def sample_shape(self) -> tuple[int, ...]:
        return tuple(self.features.shape[1:])

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes, self.name)

    def label_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.num_classes).tolist()


@dataclass(frozen=True)
class Partition:
    """Disjoint client shards of dataset row indices."""

    shards: tuple[np.ndarray, ...]

    def __post_init__(self):
        shards = tuple(np.asarray(s, dtype=np.int64) for s in self.shards)
        object.__setattr__(self, "shards", shards)
        if not shards:
            raise ConfigError("partition needs at least one shard")
        for i, s in enumerate(shards):
            if len(s) == 0:
                raise ConfigError(f"shard {i} is empty")
        joined = np.concatenate(shards)
        if len(np.unique(joined)) != len(joined):
            raise ConfigError("partition shards overlap")

    @property
    def k(self) -> int:
        return len(self.shards)

    @property
    def sizes(self) -> list[int]:
        return [len(s) for s in self.shards]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def weights(self) -> list[float]:
        n = self.total
        return [size / n for size in self.sizes]

    @classmethod
    def whole(cls, n: int) -> "Partition":
        """A single shard holding every index in order."""
        return cls((np.arange(n),))


def partition_iid(dataset_or_n, k: int, sizes=None, seed: int = 0) -> Partition:
    """Slice a seeded permutation into ``k`` shards.

    Default sizes split everything evenly, the remainder going to the
    earliest shards.
    """
    n = dataset_or_n if isinstance(dataset_or_n, int) else len(dataset_or_n)
    if k < 1:
        raise ConfigError(f"client count must be >= 1, got {k}")
    if sizes is None:
        base, extra = divmod(n, k)
        sizes = [base + (1 if i < extra else 0) for i in range(k)]
    sizes = [int(s) for s in sizes]
    if len(sizes) != k:
        raise ConfigError(f"got {len(sizes)} shard sizes for {k} clients")
    if sum(sizes) > n:
        raise ConfigError(f"shard sizes sum to {sum(sizes)} but the dataset has {n} samples")
    if min(sizes) <= 0:
        raise ConfigError(f"every shard needs at least one sample, sizes={sizes}")
    perm = SeededRng(seed).split("partition").permutation(n)
    bounds = np.cumsum([0] + sizes)
    return Partition(tuple(perm[bounds[i]:bounds[i + 1]] for i in range(k)))
