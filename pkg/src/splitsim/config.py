"""Experiment configuration: one JSON document per experiment."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import Dataset, gen_blobs, gen_synth_images, read_container
from .errors import ConfigError
from .nn.model import ModelSpec
from .nn.presets import IMAGE_CUT, MLP_CUT, image_conv, mlp_2808
from .protocols import PROTOCOLS
from .protocols.common import TrainConfig

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class ExperimentConfig:
    protocol: str = "splitfed"
    model: dict = field(default_factory=lambda: {"preset": "image-conv"})
    cut: int | None = None
    data: dict = field(default_factory=dict)
    clients: int = 5
    client_sizes: list[int] | None = None
    epochs: int = 50
    batch_size: int = 256
    lr: float = 1e-4
    weight_decay: float = 1e-5
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    workers: int = 1
    positive_only_f1: bool = False
    analysis: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), repr=False)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"field 'protocol': expected one of {PROTOCOLS}, got {self.protocol!r}")
        if not isinstance(self.clients, int) or self.clients < 1:
            raise ConfigError(f"field 'clients': must be a positive integer, got {self.clients!r}")
        if not self.seeds:
            raise ConfigError("field 'seeds': at least one seed is required")
        self.train_config(self.seeds[0])  # validates the optimisation fields

    def train_config(self, seed: int) -> TrainConfig:
        try:
            return TrainConfig(epochs=int(self.epochs), batch_size=int(self.batch_size), lr=float(self.lr),
                               weight_decay=float(self.weight_decay), seed=int(seed), workers=int(self.workers),
                               positive_only_f1=bool(self.positive_only_f1))
        except ConfigError as exc:
            raise ConfigError(f"optimisation settings: {exc}") from None

    def build_model(self) -> ModelSpec:
        m = dict(self.model)
        preset = m.pop("preset", None)
        if preset == "image-conv":
            return image_conv(int(m.get("channels", 3)), int(m.get("classes", 9)), int(m.get("size", 28)))
        if preset == "mlp-2808":
            return mlp_2808(int(m.get("in_features", 2808)))
        if preset is None:
            return ModelSpec.from_dict(m)
        raise ConfigError(f"field 'model.preset': unknown preset {preset!r} (image-conv, mlp-2808)")

    def cut_index(self) -> int:
        if self.cut is not None:
            return int(self.cut)
        preset = self.model.get("preset")
        if preset == "image-conv":
            return IMAGE_CUT
        if preset == "mlp-2808":
            return MLP_CUT
        raise ConfigError("field 'cut': required for custom models")

    def load_data(self) -> tuple[Dataset, Dataset | None]:
        d = dict(self.data)
        if "train" in d:
            train = read_container(self.base_dir / d["train"])
            test = read_container(self.base_dir / d["test"]) if d.get("test") else None
            return train, test
        gen = d.pop("generator", None)
        seed = int(d.pop("seed", 0))
        test_per_class = int(d.pop("test_per_class", 100))
        try:
            if gen == "blobs":
                kw = dict(classes=int(d["classes"]), dim=int(d["dim"]), spread=float(d.get("spread", 0.5)), seed=seed)
                return (gen_blobs(n_per_class=int(d["n_per_class"]), **kw),
                        gen_blobs(n_per_class=test_per_class, split="test", **kw))
            if gen == "images":
                kw = dict(classes=int(d["classes"]), channels=int(d.get("channels", 3)),
                          noise=float(d.get("noise", 1.0)), seed=seed)
                return (gen_synth_images(n_per_class=int(d["n_per_class"]), **kw),
                        gen_synth_images(n_per_class=test_per_class, split="test", **kw))
        except KeyError as exc:
            raise ConfigError(f"field 'data.{exc.args[0]}' is required for generator {gen!r}") from None
        raise ConfigError(f"field 'data': need 'train' (container path) or 'generator' (blobs, images), got {gen!r}")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__) - {"base_dir"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    return ExperimentConfig(**raw, base_dir=path.parent)
