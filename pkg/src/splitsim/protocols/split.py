from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ConfigError
from ..nn.layers import BatchNorm2D, Conv2D
from ..nn.model import ModelSpec


@dataclass(frozen=True)
class SplitSpec:
    """Client layers [0, cut) and server layers [cut, end) of ``model``."""

    model: ModelSpec
    cut: int

    @property
    def client(self) -> ModelSpec:
        return self.model.sub(0, self.cut, None)

    @property
    def server(self) -> ModelSpec:
        return self.model.sub(self.cut, len(self.model.layers), self.model.loss)

    @property
    def smashed_shape(self) -> tuple[int, ...]:
        return self.model.shapes()[self.cut]

    @property
    def d(self) -> int:
        return math.prod(self.smashed_shape)


def legal_cuts(model: ModelSpec) -> list[int]:
    layers = model.layers
    return [c for c in range(1, len(layers))
            if not (isinstance(layers[c - 1], Conv2D) and isinstance(layers[c], BatchNorm2D))]


def split_model(model: ModelSpec, cut: int) -> SplitSpec:
    """Partition at ``cut``; a cut between a conv and its BatchNorm is refused."""
    legal = legal_cuts(model)
    if cut not in legal:
        raise ConfigError(f"invalid cut {cut} for a {len(model.layers)}-layer model; legal cuts: {legal}")
    return SplitSpec(model, cut)
