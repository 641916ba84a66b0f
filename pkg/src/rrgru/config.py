"""Flat run configuration stored as ``key = value`` text, plus seeded substreams."""

from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .net import VARIANTS, ModelConfig
from .train import LossConfig, TrainConfig


@dataclass
class RunConfig:
    # model
    d_e: int = 100
    d_h: int = 100
    k: int = 3
    variant: str = "full"
    # loss
    m_plus: float = 2.5
    m_minus: float = 0.5
    gamma: float = 2.0
    # optimisation
    batch_size: int = 10
    epochs: int = 100
    dropout_embed: float = 0.3
    dropout_hidden: float = 0.3
    dropout_final: float = 0.7
    l2_coeff: float = 1e-5
    l2_embeddings: bool = False
    l2_bias: bool = False
    rho: float = 0.95
    eps: float = 1e-6
    lr_scale: float = 1.0
    # validation split: fold `fold` of `folds`; folds < 2 trains on everything
    folds: int = 10
    fold: int = 0
    # paths
    train_file: str = ""
    test_file: str = ""
    embeddings: str = ""
    checkpoint: str = ""
    out_dir: str = "run"
    seed: int = 1

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}")
        if self.folds >= 2 and not 0 <= self.fold < self.folds:
            raise ConfigError(f"fold {self.fold} outside 0..{self.folds - 1}")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        try:
            self.model_config()
            self.train_config()
            self.loss_config()
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def model_config(self) -> ModelConfig:
        return ModelConfig(d_e=self.d_e, d_h=self.d_h, k=self.k, variant=self.variant)

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{n: getattr(self, n) for n in names})

    def loss_config(self) -> LossConfig:
        return LossConfig(self.m_plus, self.m_minus, self.gamma)

    @property
    def checkpoint_path(self) -> Path:
        return Path(self.checkpoint) if self.checkpoint else Path(self.out_dir) / "model.ckpt"

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_fmt(getattr(self, f.name))}\n" for f in fields(self))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def update(self, values: dict) -> "RunConfig":
        known = {f.name: f for f in fields(self)}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(self, key, _coerce(known[key], raw))
        return self

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        values = {}
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        return cls().update(values)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(f, raw):
    if not isinstance(raw, str):
        return raw
    typ = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {f.name} ({typ})") from None
    return raw


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named consumer (init, shuffle, dropout, folds)."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])


def substream_seed(seed: int, name: str) -> int:
    return int(substream(seed, name).integers(0, 2**31 - 1))
