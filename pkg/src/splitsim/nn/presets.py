"""Architectures used in the experiments."""
from __future__ import annotations

from .layers import BatchNorm2D, Conv2D, Dense, Flatten, MaxPool2D, ReLU
from .model import ModelSpec

IMAGE_CUT = 5
MLP_CUT = 1


def image_conv(channels: int = 3, classes: int = 9, size: int = 28) -> ModelSpec:
    """Five 3x3 valid convs with BatchNorm, two 2x2 pools, three FC layers.

    The client prefix (first five layers) carries no activation; the server
    side opens with a ReLU, which commutes with the preceding max-pool.
    """
    layers = [
        Conv2D(channels, 16), BatchNorm2D(16), Conv2D(16, 16), BatchNorm2D(16), MaxPool2D(),
        ReLU(), Conv2D(16, 64), BatchNorm2D(64), ReLU(),
        Conv2D(64, 64), BatchNorm2D(64), ReLU(),
        Conv2D(64, 64), BatchNorm2D(64), ReLU(), MaxPool2D(),
        Flatten(), Dense(64 * 3 * 3, 128), ReLU(), Dense(128, 128), ReLU(), Dense(128, classes),
    ]
    if size != 28:
        # recompute the flattened width for other input sizes
        probe = ModelSpec(tuple(layers[:17]), (channels, size, size), None)
        layers[17] = Dense(probe.output_shape[0], 128)
    return ModelSpec(tuple(layers), (channels, size, size), "softmax-cross-entropy")


def mlp_2808(in_features: int = 2808) -> ModelSpec:
    """2808-64-32-32-1 with ReLU and a sigmoid output, split after the first layer."""
    layers = [Dense(in_features, 64), ReLU(), Dense(64, 32), ReLU(), Dense(32, 32), ReLU(), Dense(32, 1)]
    return ModelSpec(tuple(layers), (in_features,), "sigmoid-binary-cross-entropy")
