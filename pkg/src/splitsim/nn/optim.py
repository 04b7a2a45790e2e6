"""Adam with L2 weight decay folded into the gradient."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from .model import Group, Parameters, _copy_group, zeros_like_group


@dataclass
class OptimizerState:
    m: Group
    v: Group
    lr: float = 1e-4
    weight_decay: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def for_params(cls, params: Parameters, lr: float = 1e-4, weight_decay: float = 1e-5, **kw):
        return cls(zeros_like_group(params.trainable), zeros_like_group(params.trainable),
                   lr=lr, weight_decay=weight_decay, **kw)

    def copy(self) -> "OptimizerState":
        return OptimizerState(_copy_group(self.m), _copy_group(self.v), self.lr, self.weight_decay,
                              self.beta1, self.beta2, self.eps, self.t)

    def element_count(self) -> int:
        return sum(a.size for e in self.m.values() for a in e.values()) * 2


def adam_step(params: Parameters, grads: Group, opt: OptimizerState) -> tuple[Parameters, OptimizerState]:
    """One bias-corrected Adam update. Inputs are left untouched.

    Buffers (BatchNorm running stats) are carried over unchanged.
    """
    if set(grads) != set(params.trainable):
        raise DimensionError(f"gradient layers {sorted(grads)} do not match parameters {sorted(params.trainable)}")
    t = opt.t + 1
    b1, b2 = opt.beta1, opt.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new_w: Group = {}
    new_m: Group = {}
    new_v: Group = {}
    for i, entries in params.trainable.items():
        new_w[i], new_m[i], new_v[i] = {}, {}, {}
        for name, w in entries.items():
            g = grads[i][name]
            if g.shape != w.shape:
                raise DimensionError(f"layer {i} {name}: gradient {g.shape} vs parameter {w.shape}")
            if opt.weight_decay:
                g = g + opt.weight_decay * w
            m = b1 * opt.m[i][name] + (1.0 - b1) * g
            v = b2 * opt.v[i][name] + (1.0 - b2) * (g * g)
            m_hat = m / corr1
            v_hat = v / corr2
            new_w[i][name] = w - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
            new_m[i][name] = m
            new_v[i][name] = v
    new_opt = OptimizerState(new_m, new_v, opt.lr, opt.weight_decay, b1, b2, opt.eps, t)
    return Parameters(new_w, params.buffers), new_opt
