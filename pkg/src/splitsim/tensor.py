"""Dense float64 tensors and a reproducible splitmix64 generator.

Tensors are plain C-contiguous ``numpy.float64`` arrays (row-major). The
generator is implemented here rather than borrowed from numpy so that a
stream is fully determined by its 64-bit seed and label path on every
platform.
"""
from __future__ import annotations

import hashlib
import math

import numpy as np

from .errors import ArgumentError, DimensionError, NumericError

# splitmix64 constants (Steele, Lea & Flood 2014); covered by a golden test.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

Tensor = np.ndarray


def as_tensor(x, *, check_finite: bool = True) -> Tensor:
    t = np.ascontiguousarray(x, dtype=np.float64)
    if check_finite and not np.all(np.isfinite(t)):
        raise NumericError("tensor contains NaN or Inf")
    return t


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply shapes {list(a.shape)} and {list(b.shape)}")
    return a @ b


def mix64(z: int) -> int:
    """Scalar splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MUL_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MUL_2)
        return z ^ (z >> np.uint64(31))


def _label_hash(label) -> int:
    if isinstance(label, (tuple, list)):
        label = "/".join(str(part) for part in label)
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SeededRng:
    """splitmix64 stream: draw ``j`` (1-based) is ``mix64(seed + j * gamma)``.

    ``split(label)`` derives a child from the seed alone, so children do not
    depend on how many values the parent has already produced.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.draws = 0

    @property
    def state(self) -> int:
        return (self.seed + self.draws * GOLDEN_GAMMA) & MASK64

    def split(self, *label) -> "SeededRng":
        return SeededRng(mix64(self.seed ^ _label_hash(label)))

    def next_u64(self, count: int) -> np.ndarray:
        if count < 0:
            raise ArgumentError("draw count must be non-negative")
        steps = np.arange(self.draws + 1, self.draws + count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + steps * np.uint64(GOLDEN_GAMMA)
        self.draws += count
        return _mix64_array(z)

    def uniform(self, shape, lo: float = 0.0, hi: float = 1.0) -> Tensor:
        if not lo < hi:
            raise ArgumentError(f"uniform needs lo < hi, got lo={lo}, hi={hi}")
        shape = tuple(int(s) for s in np.atleast_1d(shape)) if np.ndim(shape) else (int(shape),)
        bits = self.next_u64(math.prod(shape))
        unit = (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        out = lo + (hi - lo) * unit
        # rounding in lo + (hi-lo)*u can land exactly on hi
        np.minimum(out, np.nextafter(hi, lo), out=out)
        return out.reshape(shape)

    def normal(self, shape, mean: float = 0.0, std: float = 1.0) -> Tensor:
        """Box-Muller; consumes two draws per value."""
        shape = tuple(int(s) for s in np.atleast_1d(shape)) if np.ndim(shape) else (int(shape),)
        count = math.prod(shape)
        u = self.uniform((2, count))
        radius = np.sqrt(-2.0 * np.log1p(-u[0]))
        z = radius * np.cos(2.0 * np.pi * u[1])
        return (mean + std * z).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        keys = self.next_u64(n)
        return np.argsort(keys, kind="stable")


def rng_uniform(rng: SeededRng, shape, lo: float, hi: float) -> Tensor:
    return rng.uniform(shape, lo, hi)
