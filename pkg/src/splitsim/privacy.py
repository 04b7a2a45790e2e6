"""Dimension-budget privacy proxy and client-side efficiency comparison.

A client with ``n_c`` samples reveals on average ``N_w / n_c`` scalars per
sample when it uploads a full model of ``N_w`` parameters, and ``d``
scalars per sample when it uploads cut-layer activations of width ``d``.
The two break even at ``n_c = N_w / d``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .errors import ArgumentError
from .nn.model import count_params, estimate_flops
from .protocols.split import SplitSpec


def dims_per_sample(n_w: int, n_c: int, d: int) -> tuple[float, int]:
    if n_c <= 0:
        raise ArgumentError(f"client sample count must be positive, got {n_c}")
    if d <= 0:
        raise ArgumentError(f"smashed dimension must be positive, got {d}")
    return n_w / n_c, d


def min_data_size(n_w: int, d: int) -> int:
    """Smallest local data size at which the FL budget no longer exceeds d
    (floored)."""
    if d <= 0:
        raise ArgumentError(f"smashed dimension must be positive, got {d}")
    return n_w // d


@dataclass(frozen=True)
class PrivacyReport:
    n_w: int
    d: int
    n_c: int
    dims_per_sample_fl: float
    dims_per_sample_sl: int
    min_data_size: int

    def to_dict(self) -> dict:
        return asdict(self)


def analyze(split: SplitSpec, n_c: int, override_n_w: int | None = None) -> PrivacyReport:
    n_w = count_params(split.model) if override_n_w is None else int(override_n_w)
    fl, sl = dims_per_sample(n_w, n_c, split.d)
    return PrivacyReport(n_w, split.d, n_c, fl, sl, min_data_size(n_w, split.d))


@dataclass(frozen=True)
class RoleCost:
    params: int
    flops: int


@dataclass(frozen=True)
class EfficiencyReport:
    client: RoleCost
    full: RoleCost

    @property
    def param_reduction(self) -> float:
        return 1.0 - self.client.params / self.full.params

    @property
    def flop_reduction(self) -> float:
        return 1.0 - self.client.flops / self.full.flops

    def to_dict(self) -> dict:
        return {"client": asdict(self.client), "full": asdict(self.full),
                "param_reduction": self.param_reduction, "flop_reduction": self.flop_reduction}


def efficiency_report(split: SplitSpec, input_shape=None) -> EfficiencyReport:
    shape = split.model.input_shape if input_shape is None else tuple(input_shape)
    client, full = split.client, split.model
    return EfficiencyReport(RoleCost(count_params(client), estimate_flops(client, shape)),
                            RoleCost(count_params(full), estimate_flops(full, shape)))


def format_table(name: str, eff: EfficiencyReport, privacy: PrivacyReport | None = None) -> str:
    """Text table in the shape of a client-efficiency comparison."""
    header = f"{'Dataset':<14}| {'SL # params':>12} {'SL FLOPs':>12} | {'FL # params':>12} {'FL FLOPs':>12}"
    row = (f"{name:<14}| {eff.client.params:>12,} {eff.client.flops:>12,} | "
           f"{eff.full.params:>12,} {eff.full.flops:>12,}")
    lines = [header, "-" * len(header), row]
    if privacy is not None:
        lines += ["", f"N_w = {privacy.n_w:,}   d = {privacy.d:,}   n_c = {privacy.n_c:,}",
                  f"dims/sample  FL = {privacy.dims_per_sample_fl:,.4f}   SL = {privacy.dims_per_sample_sl:,}",
                  f"minimum FL data size = {privacy.min_data_size:,}"]
    return "\n".join(lines) + "\n"


def report_json(eff: EfficiencyReport, privacy: PrivacyReport) -> str:
    return json.dumps({"efficiency": eff.to_dict(), "privacy": privacy.to_dict()}, sort_keys=True, indent=2) + "\n"
