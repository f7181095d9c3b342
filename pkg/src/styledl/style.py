"""Gram-based style statistics and the learned cross-layer correlation map.

Per backbone tap, the channel-by-channel inner products of the flattened
maps give a symmetric PSD matrix that ignores spatial layout. The three
matrices are nearest-upsampled to a common side, stacked as channels, and
pushed through two strided conv blocks to produce the style representation.
"""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ConfigurationError, ContractViolation
from .layers import ConvBlock
from .tensor import Tensor


def gram(x: Tensor, normalize: bool = False) -> Tensor:
    """Per-sample G = M @ M.T for the [C, H*W] flattening M of [B,C,H,W].

    `normalize` divides by H*W, which tames magnitudes on wide maps but is
    off by default.
    """
    if x.ndim != 4:
        raise ContractViolation(f"gram expects [B,C,H,W], got {x.shape}")
    b, c, h, w = x.shape
    m = x.reshape(b, c, h * w)
    g = T.matmul(m, m.transpose(0, 2, 1))
    if normalize:
        g = g * (1.0 / (h * w))
    return g


def stack_grams(g0: Tensor, g1: Tensor, g2: Tensor) -> Tensor:
    """Upsample each [B,c,c] matrix to the max side S and stack -> [B,3,S,S]."""
    parts = (g0, g1, g2)
    for g in parts:
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ContractViolation(f"stack_grams expects batched square matrices, got {g.shape}")
    side = max(g.shape[1] for g in parts)
    lifted = []
    for g in parts:
        up = T.upsample_nearest(g, side, side)
        lifted.append(up.reshape(up.shape[0], 1, side, side))
    return T.concat(lifted, axis=1)


class InterLayerCorrelation:
    """Two conv(3x3, stride 2)+LN+relu blocks over the stacked matrices."""

    def __init__(self, rng: np.random.Generator, in_channels: int = 3,
                 widths: tuple[int, int] = (16, 32)):
        self.block1 = ConvBlock(rng, in_channels, widths[0], stride=2)
        self.block2 = ConvBlock(rng, widths[0], widths[1], stride=2)
        self.out_channels = widths[1]

    def __call__(self, stack: Tensor) -> Tensor:
        if stack.ndim != 4:
            raise ContractViolation(f"inter-layer input must be [B,3,S,S], got {stack.shape}")
        side = stack.shape[-1]
        if side % 4 != 0:
            raise ConfigurationError(f"stack side {side} not divisible by 4")
        return self.block2(self.block1(stack))

    def params(self, prefix: str = "style") -> dict[str, Tensor]:
        out = self.block1.params(f"{prefix}/cc1")
        out.update(self.block2.params(f"{prefix}/cc2"))
        return out


def inter_layer_correlation(stack: Tensor, module: InterLayerCorrelation) -> Tensor:
    return module(stack)
