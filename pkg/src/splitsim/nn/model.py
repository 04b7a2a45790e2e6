"""Sequential models: specs, parameter containers, forward/backward drivers."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError, NumericError, ProtocolError
from ..tensor import SeededRng
from .layers import BatchNorm2D, Conv2D, Dense, Layer, Shape, layer_from_dict

LOSS_KINDS = ("softmax-cross-entropy", "sigmoid-binary-cross-entropy")


@dataclass(frozen=True)
class ModelSpec:
    """An ordered layer list.

    ``first_index`` is the global position of ``layers[0]``; sub-models cut
    from a larger model keep global indices so their parameters can be
    merged back without renaming. ``loss`` is None for a client prefix.
    """

    layers: tuple[Layer, ...]
    input_shape: Shape
    loss: str | None = "softmax-cross-entropy"
    first_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if not self.layers:
            raise ConfigError("model needs at least one layer")
        if self.loss is not None and self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}; expected one of {LOSS_KINDS}")
        shapes = self.shapes()  # validates chaining
        if self.loss == "sigmoid-binary-cross-entropy" and shapes[-1] != (1,):
            raise ConfigError(f"binary loss needs final width 1, model outputs {shapes[-1]}")
        if self.loss == "softmax-cross-entropy" and (len(shapes[-1]) != 1 or shapes[-1][0] < 2):
            raise ConfigError(f"softmax loss needs a flat output of >= 2 classes, got {shapes[-1]}")

    def shapes(self) -> list[Shape]:
        """Per-sample shapes: input of each layer, then the final output."""
        out = [self.input_shape]
        for pos, layer in enumerate(self.layers):
            try:
                out.append(tuple(layer.output_shape(out[-1])))
            except DimensionError as exc:
                raise DimensionError(f"layer {self.first_index + pos} ({layer.kind}): {exc}") from None
        return out

    @property
    def output_shape(self) -> Shape:
        return self.shapes()[-1]

    @property
    def indices(self) -> range:
        return range(self.first_index, self.first_index + len(self.layers))

    def sub(self, start: int, stop: int, loss: str | None) -> "ModelSpec":
        """Layers with global indices [start, stop)."""
        lo, hi = start - self.first_index, stop - self.first_index
        return ModelSpec(self.layers[lo:hi], self.shapes()[lo], loss, start)

    def to_dict(self) -> dict:
        return {"layers": [layer.to_dict() for layer in self.layers],
                "input_shape": list(self.input_shape), "loss": self.loss,
                "first_index": self.first_index}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        try:
            layers = [layer_from_dict(x) for x in d["layers"]]
            return cls(tuple(layers), tuple(d["input_shape"]), d.get("loss", "softmax-cross-entropy"),
                       int(d.get("first_index", 0)))
        except KeyError as exc:
            raise ConfigError(f"model is missing field {exc.args[0]!r}") from None


Group = dict[int, dict[str, np.ndarray]]


def _copy_group(g: Group) -> Group:
    return {i: {k: v.copy() for k, v in entries.items()} for i, entries in g.items()}


@dataclass
class Parameters:
    """Trainable tensors plus non-trainable buffers (BatchNorm running stats),
    both keyed by global layer index then name."""

    trainable: Group = field(default_factory=dict)
    buffers: Group = field(default_factory=dict)

    def copy(self) -> "Parameters":
        return Parameters(_copy_group(self.trainable), _copy_group(self.buffers))

    def select(self, indices) -> "Parameters":
        keep = set(indices)
        return Parameters({i: e for i, e in self.trainable.items() if i in keep},
                          {i: e for i, e in self.buffers.items() if i in keep})

    def merged(self, other: "Parameters") -> "Parameters":
        return Parameters({**self.trainable, **other.trainable}, {**self.buffers, **other.buffers})

    def count(self) -> int:
        return sum(v.size for e in self.trainable.values() for v in e.values())

    def buffer_count(self) -> int:
        return sum(v.size for e in self.buffers.values() for v in e.values())

    def named(self, which: str = "trainable"):
        group = self.trainable if which == "trainable" else self.buffers
        for i in sorted(group):
            for name, value in group[i].items():
                yield i, name, value

    def flat(self, include_buffers: bool = False) -> np.ndarray:
        parts = [v.ravel() for _, _, v in self.named()]
        if include_buffers:
            parts += [v.ravel() for _, _, v in self.named("buffers")]
        return np.concatenate(parts) if parts else np.zeros(0)


def zeros_like_group(g: Group) -> Group:
    return {i: {k: np.zeros_like(v) for k, v in e.items()} for i, e in g.items()}


_batch_ids = itertools.count(1)


@dataclass
class ForwardCache:
    """Per-layer saved tensors from one train-mode forward call."""

    batch_id: int
    first_index: int
    n_layers: int
    entries: list
    consumed: bool = False


def forward(spec: ModelSpec, params: Parameters, x, mode: str = "train"):
    """Run ``spec`` on a batch. Train mode updates BatchNorm running stats
    in ``params.buffers`` and returns a cache; eval mode returns ``None``."""
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if tuple(x.shape[1:]) != spec.input_shape:
        raise DimensionError(f"input shape {tuple(x.shape[1:])} does not match model input {spec.input_shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite values in model input")
    train = mode == "train"
    entries = []
    for idx, layer in zip(spec.indices, spec.layers):
        p = params.trainable.get(idx, {})
        b = params.buffers.get(idx, {})
        x, cache = layer.forward(p, b, x, train)
        if train:
            entries.append(cache)
    if not train:
        return x, None
    return x, ForwardCache(next(_batch_ids), spec.first_index, len(spec.layers), entries)


def backward(spec: ModelSpec, params: Parameters, cache: ForwardCache, dy, need_input_grad: bool = True):
    """Exact gradients for the forward call that produced ``cache``.

    Returns ``(dx, grads)``; ``dx`` is None when ``need_input_grad`` is
    false (saves the first layer's input-gradient work on clients).
    """
    if cache is None:
        raise ProtocolError("backward needs a cache from a train-mode forward")
    if cache.consumed:
        raise ProtocolError(f"cache for batch {cache.batch_id} was already used")
    if (cache.first_index, cache.n_layers) != (spec.first_index, len(spec.layers)):
        raise ProtocolError(
            f"cache covers layers {cache.first_index}..{cache.first_index + cache.n_layers - 1}, "
            f"model covers {spec.first_index}..{spec.first_index + len(spec.layers) - 1}")
    cache.consumed = True
    grads: Group = {}
    dy = np.asarray(dy, dtype=np.float64)
    for pos in range(len(spec.layers) - 1, -1, -1):
        idx = spec.first_index + pos
        layer = spec.layers[pos]
        need = need_input_grad or pos > 0
        dy, g = layer.backward(params.trainable.get(idx, {}), cache.entries[pos], dy, need)
        if g:
            grads[idx] = g
    return dy, dict(sorted(grads.items()))


def init_params(spec: ModelSpec, rng: SeededRng) -> Parameters:
    """He-uniform weights (variance 2/fan_in), zero biases, identity BatchNorm.

    Each layer draws from its own stream, so a sub-model initialised alone
    gets the same weights as the corresponding layers of the full model.
    """
    params = Parameters()
    for idx, layer, in_shape in zip(spec.indices, spec.layers, spec.shapes()):
        shapes = layer.param_shapes(in_shape)
        if not shapes:
            continue
        stream = rng.split("layer", idx)
        if isinstance(layer, (Dense, Conv2D)):
            wshape = shapes["weight"]
            fan_in = wshape[0] if isinstance(layer, Dense) else math.prod(wshape[1:])
            bound = math.sqrt(6.0 / fan_in)
            params.trainable[idx] = {"weight": stream.uniform(wshape, -bound, bound),
                                     "bias": np.zeros(shapes["bias"])}
        elif isinstance(layer, BatchNorm2D):
            params.trainable[idx] = {"gamma": np.ones(shapes["gamma"]), "beta": np.zeros(shapes["beta"])}
        bshapes = layer.buffer_shapes(in_shape)
        if bshapes:
            params.buffers[idx] = {"running_mean": np.zeros(bshapes["running_mean"]),
                                   "running_var": np.ones(bshapes["running_var"])}
    return params


def count_params(spec: ModelSpec) -> int:
    return sum(math.prod(s) for layer, in_shape in zip(spec.layers, spec.shapes())
               for s in layer.param_shapes(in_shape).values())


def estimate_flops(spec: ModelSpec, input_shape: Shape | None = None) -> int:
    """Forward-pass operation count for one sample.

    Convention: conv/dense = outputs x (MACs per output + 1 bias op);
    BatchNorm 4 ops per element; max-pool k*k-1 comparisons per output;
    ReLU 1 op per element; Flatten free.
    """
    if input_shape is not None and tuple(input_shape) != spec.input_shape:
        spec = ModelSpec(spec.layers, tuple(input_shape), None, spec.first_index)
    return sum(layer.flops(in_shape) for layer, in_shape in zip(spec.layers, spec.shapes()))
