"""Five-stage strided CNN exposing the tap points the rest of the model reads.

Stages 0..2 feed the style path, stage handles 3 and 4 are applied later,
once per attention order. Each stage runs a stride-2 conv block followed
by a stride-1 conv block, so the spatial extent halves exactly once per
stage and an input of size s yields taps of sizes s/2, s/4, s/8.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .layers import ConvBlock
from .tensor import Tensor


@dataclass(frozen=True)
class BackboneConfig:
    in_channels: int = 3
    stage_channels: tuple[int, ...] = (8, 16, 32, 64, 128)
    input_size: int = 64


class Stage:
    """One halving stage: conv(s2)+LN+relu then conv(s1)+LN+relu."""

    def __init__(self, rng: np.random.Generator, cin: int, cout: int):
        self.down = ConvBlock(rng, cin, cout, stride=2)
        self.keep = ConvBlock(rng, cout, cout, stride=1)

    def __call__(self, x: Tensor) -> Tensor:
        return self.keep(self.down(x))

    def params(self, prefix: str) -> dict[str, Tensor]:
        out = self.down.params(f"{prefix}/down")
        out.update(self.keep.params(f"{prefix}/keep"))
        return out


@dataclass
class FeatureTaps:
    """Style taps plus the two deferred content stages."""

    x0: Tensor
    x1: Tensor
    x2: Tensor
    f3: Callable[[Tensor], Tensor]
    f4: Callable[[Tensor], Tensor]


class Backbone:
    def __init__(self, cfg: BackboneConfig, rng: np.random.Generator):
        _validate_config(cfg)
        self.cfg = cfg
        chans = (cfg.in_channels,) + tuple(cfg.stage_channels)
        self.stages = [Stage(rng, chans[i], chans[i + 1]) for i in range(5)]

    def taps(self, images: Tensor) -> FeatureTaps:
        if images.ndim != 4 or images.shape[1] != self.cfg.in_channels:
            raise ContractViolation(f"backbone expects [B,{self.cfg.in_channels},H,W], got {images.shape}")
        s = self.cfg.input_size
        if images.shape[2] != s or images.shape[3] != s:
            raise ContractViolation(f"backbone expects {s}x{s} input, got {images.shape[2]}x{images.shape[3]}")
        x0 = self.stages[0](images)
        x1 = self.stages[1](x0)
        x2 = self.stages[2](x1)
        return FeatureTaps(x0=x0, x1=x1, x2=x2, f3=self.stages[3], f4=self.stages[4])

    def tap_spatial(self, k: int) -> int:
        """Spatial side of tap k (0-based stage index)."""
        return self.cfg.input_size // (2 ** (k + 1))

    def params(self, prefix: str = "backbone") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, stage in enumerate(self.stages):
            out.update(stage.params(f"{prefix}/stage{i}"))
        return out


def _validate_config(cfg: BackboneConfig) -> None:
    if cfg.input_size % 32 != 0 or cfg.input_size <= 0:
        raise ConfigurationError(f"input_size {cfg.input_size} must be a positive multiple of 32")
    if len(cfg.stage_channels) != 5:
        raise ConfigurationError(f"need 5 stage channel counts, got {cfg.stage_channels}")
    if any(c < 1 for c in cfg.stage_channels):
        raise ConfigurationError(f"stage_channels must be positive, got {cfg.stage_channels}")
    if list(cfg.stage_channels) != sorted(cfg.stage_channels):
        raise ConfigurationError(f"stage_channels must be nondecreasing, got {cfg.stage_channels}")
    if cfg.in_channels < 1:
        raise ConfigurationError(f"in_channels {cfg.in_channels}")


def build_backbone(cfg: BackboneConfig, seed: int) -> Backbone:
    """Build with parameters drawn deterministically from the seed."""
    return Backbone(cfg, np.random.default_rng(seed))


def forward_taps(bb: Backbone, images: Tensor) -> FeatureTaps:
    return bb.taps(images)
