"""Layer specifications with shape inference, parameter/FLOP accounting and
explicit forward/backward kernels.

Image tensors use NCHW layout. Every kernel is written against float64
numpy arrays; caches hold exactly what the matching backward needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..errors import ConfigError, DimensionError

Shape = tuple[int, ...]


def _pair(v) -> tuple[int, int]:
    if isinstance(v, int):
        return (v, v)
    a, b = v
    return (int(a), int(b))


class Layer:
    """Base class. Subclasses are frozen dataclasses (pure specifications)."""

    kind: ClassVar[str] = ""

    def output_shape(self, in_shape: Shape) -> Shape:
        raise NotImplementedError

    def param_shapes(self, in_shape: Shape) -> dict[str, Shape]:
        return {}

    def buffer_shapes(self, in_shape: Shape) -> dict[str, Shape]:
        return {}

    def flops(self, in_shape: Shape) -> int:
        raise NotImplementedError

    def forward(self, params, buffers, x, train: bool):
        raise NotImplementedError

    def backward(self, params, cache, dy, need_dx: bool = True):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Dense(Layer):
    in_features: int
    out_features: int
    kind: ClassVar[str] = "dense"

    def output_shape(self, in_shape):
        if tuple(in_shape) != (self.in_features,):
            raise DimensionError(f"dense expects input ({self.in_features},), got {tuple(in_shape)}")
        return (self.out_features,)

    def param_shapes(self, in_shape):
        return {"weight": (self.in_features, self.out_features), "bias": (self.out_features,)}

    def flops(self, in_shape):
        return self.out_features * (self.in_features + 1)

    def forward(self, params, buffers, x, train):
        return x @ params["weight"] + params["bias"], x

    def backward(self, params, cache, dy, need_dx=True):
        x = cache
        grads = {"weight": x.T @ dy, "bias": dy.sum(axis=0)}
        dx = dy @ params["weight"].T if need_dx else None
        return dx, grads

    def to_dict(self):
        return {"type": self.kind, "in": self.in_features, "out": self.out_features}


@dataclass(frozen=True)
class Conv2D(Layer):
    in_channels: int
    out_channels: int
    kernel: tuple[int, int] = (3, 3)
    stride: tuple[int, int] = (1, 1)
    padding: str = "valid"
    kind: ClassVar[str] = "conv2d"

    def __post_init__(self):
        object.__setattr__(self, "kernel", _pair(self.kernel))
        object.__setattr__(self, "stride", _pair(self.stride))
        if self.padding not in ("valid", "same"):
            raise ConfigError(f"conv2d padding must be 'valid' or 'same', got {self.padding!r}")

    def _pads(self, h: int, w: int) -> tuple[int, int, int, int]:
        if self.padding == "valid":
            return (0, 0, 0, 0)
        (kh, kw), (sh, sw) = self.kernel, self.stride
        ph = max((math.ceil(h / sh) - 1) * sh + kh - h, 0)
        pw = max((math.ceil(w / sw) - 1) * sw + kw - w, 0)
        return (ph // 2, ph - ph // 2, pw // 2, pw - pw // 2)

    def output_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise DimensionError(
                f"conv2d expects input ({self.in_channels}, H, W), got {tuple(in_shape)}")
        _, h, w = in_shape
        top, bottom, left, right = self._pads(h, w)
        h, w = h + top + bottom, w + left + right
        (kh, kw), (sh, sw) = self.kernel, self.stride
        if h < kh or w < kw:
            raise DimensionError(f"conv2d kernel {self.kernel} larger than input {tuple(in_shape)}")
        return (self.out_channels, (h - kh) // sh + 1, (w - kw) // sw + 1)

    def param_shapes(self, in_shape):
        kh, kw = self.kernel
        return {"weight": (self.out_channels, self.in_channels, kh, kw),
                "bias": (self.out_channels,)}

    def flops(self, in_shape):
        kh, kw = self.kernel
        return math.prod(self.output_shape(in_shape)) * (self.in_channels * kh * kw + 1)

    def forward(self, params, buffers, x, train):
        n, c, h, w = x.shape
        top, bottom, left, right = self._pads(h, w)
        if top or bottom or left or right:
            x = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
        _, ho, wo = self.output_shape((c, h, w))
        (kh, kw), (sh, sw) = self.kernel, self.stride
        # im2col: rows are output pixels, columns run over (c, i, j) like the weight
        cols = np.empty((n, ho, wo, c, kh, kw))
        for i in range(kh):
            for j in range(kw):
                patch = x[:, :, i:i + sh * (ho - 1) + 1:sh, j:j + sw * (wo - 1) + 1:sw]
                cols[:, :, :, :, i, j] = patch.transpose(0, 2, 3, 1)
        cols = cols.reshape(n * ho * wo, c * kh * kw)
        wmat = params["weight"].reshape(self.out_channels, -1)
        y = cols @ wmat.T
        y += params["bias"]
        y = np.ascontiguousarray(y.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2))
        return y, (cols, x.shape, (h, w))

    def backward(self, params, cache, dy, need_dx=True):
        cols, padded_shape, (h, w) = cache
        n, oc, ho, wo = dy.shape
        dmat = dy.transpose(0, 2, 3, 1).reshape(-1, oc)
        wmat = params["weight"].reshape(oc, -1)
        grads = {"weight": (dmat.T @ cols).reshape(params["weight"].shape),
                 "bias": dmat.sum(axis=0)}
        if not need_dx:
            return None, grads
        (kh, kw), (sh, sw) = self.kernel, self.stride
        c = self.in_channels
        dcols = (dmat @ wmat).reshape(n, ho, wo, c, kh, kw)
        dxp = np.zeros((n, padded_shape[2], padded_shape[3], c))
        for i in range(kh):
            for j in range(kw):
                dxp[:, i:i + sh * (ho - 1) + 1:sh, j:j + sw * (wo - 1) + 1:sw, :] += dcols[:, :, :, :, i, j]
        top, _, left, _ = self._pads(h, w)
        dx = dxp[:, top:top + h, left:left + w, :].transpose(0, 3, 1, 2)
        return np.ascontiguousarray(dx), grads

    def to_dict(self):
        return {"type": self.kind, "in_ch": self.in_channels, "out_ch": self.out_channels,
                "kernel": list(self.kernel), "stride": list(self.stride), "padding": self.padding}


@dataclass(frozen=True)
class BatchNorm2D(Layer):
    """Batch statistics in train mode, running statistics in eval mode.

    Running variance is tracked with the unbiased batch variance.
    """

    channels: int
    eps: float = 1e-5
    momentum: float = 0.1
    kind: ClassVar[str] = "batchnorm2d"

    def output_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.channels:
            raise DimensionError(f"batchnorm2d expects ({self.channels}, H, W), got {tuple(in_shape)}")
        return tuple(in_shape)

    def param_shapes(self, in_shape):
        return {"gamma": (self.channels,), "beta": (self.channels,)}

    def buffer_shapes(self, in_shape):
        return {"running_mean": (self.channels,), "running_var": (self.channels,)}

    def flops(self, in_shape):
        return 4 * math.prod(self.output_shape(in_shape))

    def forward(self, params, buffers, x, train):
        gamma = params["gamma"][None, :, None, None]
        beta = params["beta"][None, :, None, None]
        if not train:
            mean = buffers["running_mean"][None, :, None, None]
            var = buffers["running_var"][None, :, None, None]
            return (x - mean) / np.sqrt(var + self.eps) * gamma + beta, None
        count = x.shape[0] * x.shape[2] * x.shape[3]
        mean = x.mean(axis=(0, 2, 3))
        centered = x - mean[None, :, None, None]
        var = (centered * centered).mean(axis=(0, 2, 3))
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = centered * inv_std[None, :, None, None]
        unbiased = var * count / (count - 1) if count > 1 else var
        m = self.momentum
        buffers["running_mean"] = (1.0 - m) * buffers["running_mean"] + m * mean
        buffers["running_var"] = (1.0 - m) * buffers["running_var"] + m * unbiased
        return xhat * gamma + beta, (xhat, inv_std)

    def backward(self, params, cache, dy, need_dx=True):
        xhat, inv_std = cache
        grads = {"gamma": (dy * xhat).sum(axis=(0, 2, 3)), "beta": dy.sum(axis=(0, 2, 3))}
        if not need_dx:
            return None, grads
        dxhat = dy * params["gamma"][None, :, None, None]
        mean_dxhat = dxhat.mean(axis=(0, 2, 3), keepdims=True)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=(0, 2, 3), keepdims=True)
        dx = (dxhat - mean_dxhat - xhat * mean_dxhat_xhat) * inv_std[None, :, None, None]
        return dx, grads

    def to_dict(self):
        return {"type": self.kind, "channels": self.channels, "eps": self.eps,
                "momentum": self.momentum}


@dataclass(frozen=True)
class MaxPool2D(Layer):
    kernel: tuple[int, int] = (2, 2)
    stride: tuple[int, int] = (2, 2)
    kind: ClassVar[str] = "maxpool2d"

    def __post_init__(self):
        object.__setattr__(self, "kernel", _pair(self.kernel))
        object.__setattr__(self, "stride", _pair(self.stride))

    def output_shape(self, in_shape):
        if len(in_shape) != 3:
            raise DimensionError(f"maxpool2d expects (C, H, W), got {tuple(in_shape)}")
        c, h, w = in_shape
        (kh, kw), (sh, sw) = self.kernel, self.stride
        if h < kh or w < kw:
            raise DimensionError(f"maxpool2d kernel {self.kernel} larger than input {tuple(in_shape)}")
        return (c, (h - kh) // sh + 1, (w - kw) // sw + 1)

    def flops(self, in_shape):
        kh, kw = self.kernel
        return math.prod(self.output_shape(in_shape)) * (kh * kw - 1)

    def _window(self, x, i, j, ho, wo):
        sh, sw = self.stride
        return x[:, :, i:i + sh * (ho - 1) + 1:sh, j:j + sw * (wo - 1) + 1:sw]

    def forward(self, params, buffers, x, train):
        _, ho, wo = self.output_shape(x.shape[1:])
        kh, kw = self.kernel
        best = self._window(x, 0, 0, ho, wo).copy()
        arg = np.zeros(best.shape, dtype=np.int64)
        for p in range(1, kh * kw):
            cand = self._window(x, p // kw, p % kw, ho, wo)
            better = cand > best  # strict: ties keep the first position
            best[better] = cand[better]
            arg[better] = p
        return best, (arg, x.shape)

    def backward(self, params, cache, dy, need_dx=True):
        if not need_dx:
            return None, {}
        arg, x_shape = cache
        _, _, ho, wo = dy.shape
        kh, kw = self.kernel
        dx = np.zeros(x_shape)
        for p in range(kh * kw):
            self._window(dx, p // kw, p % kw, ho, wo)[...] += np.where(arg == p, dy, 0.0)
        return dx, {}

    def to_dict(self):
        return {"type": self.kind, "kernel": list(self.kernel), "stride": list(self.stride)}


@dataclass(frozen=True)
class ReLU(Layer):
    kind: ClassVar[str] = "relu"

    def output_shape(self, in_shape):
        return tuple(in_shape)

    def flops(self, in_shape):
        return math.prod(in_shape)

    def forward(self, params, buffers, x, train):
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, params, cache, dy, need_dx=True):
        return (np.where(cache, dy, 0.0) if need_dx else None), {}

    def to_dict(self):
        return {"type": self.kind}


@dataclass(frozen=True)
class Flatten(Layer):
    kind: ClassVar[str] = "flatten"

    def output_shape(self, in_shape):
        return (math.prod(in_shape),)

    def flops(self, in_shape):
        return 0

    def forward(self, params, buffers, x, train):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, dy, need_dx=True):
        return (dy.reshape(cache) if need_dx else None), {}

    def to_dict(self):
        return {"type": self.kind}


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv2D, BatchNorm2D, MaxPool2D, ReLU, Flatten)}


def layer_from_dict(d: dict) -> Layer:
    d = dict(d)
    kind = d.pop("type", None)
    try:
        if kind == "dense":
            return Dense(int(d["in"]), int(d["out"]))
        if kind == "conv2d":
            return Conv2D(int(d["in_ch"]), int(d["out_ch"]), kernel=tuple(d.get("kernel", (3, 3))),
                          stride=tuple(d.get("stride", (1, 1))), padding=d.get("padding", "valid"))
        if kind == "batchnorm2d":
            return BatchNorm2D(int(d["channels"]), eps=float(d.get("eps", 1e-5)),
                               momentum=float(d.get("momentum", 0.1)))
        if kind == "maxpool2d":
            return MaxPool2D(kernel=tuple(d.get("kernel", (2, 2))), stride=tuple(d.get("stride", (2, 2))))
        if kind == "relu":
            return ReLU()
        if kind == "flatten":
            return Flatten()
    except KeyError as exc:
        raise ConfigError(f"layer {kind!r} is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown layer type {kind!r}; expected one of {sorted(LAYER_TYPES)}")
