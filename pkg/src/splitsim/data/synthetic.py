"""Seeded synthetic classification data.

Train and test sets come from independent streams of the same seed; the
class structure (means, templates) is shared between them.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..tensor import SeededRng
from .dataset import Dataset


def blob_means(classes: int, dim: int) -> np.ndarray:
    """Class c sits on axis c mod dim, alternating sign, moving outward once
    both signs of every axis are used."""
    means = np.zeros((classes, dim))
    for c in range(classes):
        axis = c % dim
        sign = 1.0 if (c // dim) % 2 == 0 else -1.0
        means[c, axis] = sign * (1 + c // (2 * dim))
    return means


def gen_blobs(classes: int, dim: int, n_per_class: int, spread: float = 0.5, seed: int = 0,
              split: str = "train") -> Dataset:
    if classes < 2 or dim < 1:
        raise ConfigError(f"blobs need classes >= 2 and dim >= 1, got {classes}, {dim}")
    if spread < 0:
        raise ConfigError("spread must be non-negative")
    means = blob_means(classes, dim)
    labels = np.repeat(np.arange(classes), n_per_class)
    noise = SeededRng(seed).split("blobs", split).normal((len(labels), dim))
    features = means[labels] + spread * noise
    return Dataset(features, labels, classes, f"blobs-{split}")


def image_templates(classes: int, channels: int, size: int = 28) -> np.ndarray:
    """One noiseless pattern per class: a bar at angle pi*c/classes through
    the centre plus a small square blob whose position cycles with c."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    centre = (size - 1) / 2.0
    out = np.zeros((classes, channels, size, size))
    for c in range(classes):
        angle = np.pi * c / classes
        # distance from the line through the centre at this angle
        dist = np.abs((xx - centre) * np.sin(angle) - (yy - centre) * np.cos(angle))
        bar = np.clip(1.5 - dist, 0.0, 1.0)
        blob = np.zeros((size, size))
        quadrant = c % 4
        by = size // 4 if quadrant < 2 else 3 * size // 4
        bx = size // 4 if quadrant % 2 == 0 else 3 * size // 4
        blob[by - 2:by + 3, bx - 2:bx + 3] = 1.0
        for ch in range(channels):
            # channels weight the two components differently per class
            w_bar = 1.0 if channels == 1 else 0.5 + 0.5 * np.cos(2 * np.pi * (c + ch) / 3)
            w_blob = 1.0 if channels == 1 else 0.5 + 0.5 * np.sin(2 * np.pi * (c + 2 * ch) / 3)
            out[c, ch] = w_bar * bar + w_blob * blob
    return out


def gen_synth_images(classes: int, channels: int, n_per_class: int, seed: int = 0,
                     noise: float = 1.0, size: int = 28, split: str = "train") -> Dataset:
    if channels not in (1, 3):
        raise ConfigError(f"channels must be 1 or 3, got {channels}")
    if classes < 2:
        raise ConfigError("need at least two classes")
    templates = image_templates(classes, channels, size)
    labels = np.repeat(np.arange(classes), n_per_class)
    images = templates[labels]
    if noise > 0:
        images = images + noise * SeededRng(seed).split("images", split).normal(images.shape)
    return Dataset(images, labels, classes, f"images-{split}")
