"""Assembly of the full network and its runnable ablation variants.

The forward pass runs backbone taps, the style-correlation path, the
attended per-order content path, the fusion head, and the label-graph
enhancement, then mixes the two distribution heads. Each ablation preset
switches whole subgraphs off; the parameter set shrinks accordingly so a
preset is a different (smaller) model, not a masked one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .backbone import Backbone, BackboneConfig
from .errors import ConfigurationError, ContractViolation
from .fusion import FusionHead, pooled_distribution, style_distribution
from .gcn import StylisticGcn, emotion_distribution
from .hoa import AdversaryHead, HighOrderAttention, adversary_loss, encode_orders, fpn_fuse
from .layers import Conv1x1
from .losses import combine_final
from .style import InterLayerCorrelation, gram, stack_grams
from .tensor import Tensor


@dataclass(frozen=True)
class AblationFlags:
    style: bool
    gram_intra: bool
    attention: bool
    gcn: bool
    gcn_dynamic: bool
    adversary: bool


ABLATION_PRESETS: dict[str, AblationFlags] = {
    "full": AblationFlags(True, True, True, True, True, True),
    "B": AblationFlags(False, True, False, False, False, False),
    "B+G": AblationFlags(True, True, False, False, False, False),
    "B+V": AblationFlags(False, True, True, False, False, True),
    "B+E": AblationFlags(False, True, False, True, True, False),
    "B+G+V": AblationFlags(True, True, True, False, False, True),
    "static_gcn_only": AblationFlags(True, True, True, True, False, True),
    "inter_only": AblationFlags(True, False, True, True, True, True),
    "noAN": AblationFlags(True, True, True, True, True, False),
}

STYLE_WIDTHS = (16, 32)


@dataclass
class ForwardOutput:
    """Everything a training step needs from one forward pass."""

    y: Tensor
    y_style: Tensor
    y_emotion: Tensor | None
    y_e: list[Tensor]
    x3: list[Tensor]
    x4: list[Tensor]


class EmotionDistributionNet:
    """The trainable network, specialized at build time by its preset."""

    def __init__(self, n_labels: int, orders: int = 2, lam: float = 0.8, mu: float = 0.6,
                 input_size: int = 64, stage_channels: tuple[int, ...] = (8, 16, 32, 64, 128),
                 gcn_hidden: int = 128, ablation: str = "full", gram_normalize: bool = False,
                 seed: int = 0):
        if ablation not in ABLATION_PRESETS:
            raise ConfigurationError(f"unknown ablation '{ablation}', "
                                     f"choose from {sorted(ABLATION_PRESETS)}")
        if not 0.0 <= mu <= 1.0:
            raise ConfigurationError(f"mu {mu} outside [0,1]")
        if lam < 0 or not np.isfinite(lam):
            raise ConfigurationError(f"lam {lam}")
        if n_labels < 2:
            raise ConfigurationError(f"need at least 2 labels, got {n_labels}")
        if orders < 1:
            raise ConfigurationError(f"orders {orders}")
        self.n_labels = n_labels
        self.orders = orders
        self.lam = lam
        self.mu = mu
        self.ablation = ablation
        self.flags = ABLATION_PRESETS[ablation]
        self.gram_normalize = gram_normalize
        self.seed = seed
        rng = np.random.default_rng(seed)

        cfg = BackboneConfig(stage_channels=tuple(stage_channels), input_size=input_size)
        self.backbone = Backbone(cfg, rng)
        c0, c1, c2, c3, c4 = cfg.stage_channels
        w3 = self.backbone.tap_spatial(3)
        w4 = self.backbone.tap_spatial(4)

        flags = self.flags
        self.style_module: InterLayerCorrelation | None = None
        if flags.style:
            if flags.gram_intra:
                stack_side = max(c0, c1, c2)
                stack_channels = 3
            else:
                # correlate the raw taps directly: resample each to the
                # widest tap's extent and stack along channels
                stack_side = self.backbone.tap_spatial(0)
                stack_channels = c0 + c1 + c2
            if stack_side % 4 != 0:
                raise ConfigurationError(f"style stack side {stack_side} not divisible by 4")
            self.style_module = InterLayerCorrelation(rng, stack_channels, STYLE_WIDTHS)

        self.attention: HighOrderAttention | None = None
        self.lateral: Conv1x1 | None = None
        if flags.attention:
            self.attention = HighOrderAttention(rng, c2, orders)
            self.lateral = Conv1x1(rng, c4, c3)
        self.effective_orders = orders if flags.attention else 1

        style_c = self.style_module.out_channels if self.style_module else None
        self.fusion = FusionHead(rng, n_labels, content_channels=c3, deep_channels=c4,
                                 style_channels=style_c)
        self.feature_width = w3 * w3 + w4 * w4

        self.gcn: StylisticGcn | None = None
        if flags.gcn:
            gcn_in = self.effective_orders * self.feature_width
            self.gcn = StylisticGcn(rng, n_labels, gcn_in, hidden=gcn_hidden,
                                    dynamic=flags.gcn_dynamic)
        self.static_adjacency = np.eye(n_labels)

        self.adv_head3: AdversaryHead | None = None
        self.adv_head4: AdversaryHead | None = None
        if flags.adversary and self.effective_orders > 1:
            self.adv_head3 = AdversaryHead(rng, c3 * w3 * w3)
            self.adv_head4 = AdversaryHead(rng, c4 * w4 * w4)

    # ------------------------------------------------------------ forward
    def set_static_adjacency(self, adjacency: np.ndarray) -> None:
        if adjacency.shape != (self.n_labels, self.n_labels):
            raise ContractViolation(f"adjacency {adjacency.shape} for {self.n_labels} labels")
        self.static_adjacency = np.asarray(adjacency, dtype=np.float64)

    def forward(self, images: Tensor | np.ndarray) -> ForwardOutput:
        x = images if isinstance(images, Tensor) else Tensor(images)
        taps = self.backbone.taps(x)
        flags = self.flags

        atts = self.attention(taps.x2) if self.attention else [taps.x2]
        x3, x4 = encode_orders(atts, taps.f3, taps.f4)
        content = fpn_fuse(x3, x4, self.lateral) if self.lateral else x3

        style = None
        if self.style_module:
            if flags.gram_intra:
                stacked = stack_grams(gram(taps.x0, self.gram_normalize),
                                      gram(taps.x1, self.gram_normalize),
                                      gram(taps.x2, self.gram_normalize))
            else:
                side = self.backbone.tap_spatial(0)
                lifted = [T.resample_nearest(t, side, side) for t in (taps.x0, taps.x1, taps.x2)]
                stacked = T.concat(lifted, axis=1)
            style = self.style_module(stacked)

        fe_slices = self.fusion(style, content, x4)
        y_e = pooled_distribution(fe_slices, self.lam)
        y_style = style_distribution(y_e)

        y_emotion = None
        if self.gcn:
            fe_joined = fe_slices[0] if len(fe_slices) == 1 else T.concat(fe_slices, axis=2)
            enhanced = self.gcn(self.static_adjacency, fe_joined)
            y_emotion = emotion_distribution(enhanced, self.lam)
            y = combine_final(y_emotion, y_style, self.mu)
        else:
            y = y_style
        return ForwardOutput(y=y, y_style=y_style, y_emotion=y_emotion, y_e=y_e, x3=x3, x4=x4)

    def adversary(self, out: ForwardOutput) -> Tensor:
        """Order-diversity loss for this forward pass; constant zero when
        the preset or order count leaves nothing to separate."""
        if self.adv_head3 is None or self.adv_head4 is None:
            return Tensor(0.0)
        return adversary_loss(out.x3, out.x4, self.adv_head3, self.adv_head4)

    # --------------------------------------------------------- parameters
    def parameters(self) -> dict[str, Tensor]:
        params = self.backbone.params("backbone")
        if self.style_module:
            params.update(self.style_module.params("style"))
        if self.attention:
            params.update(self.attention.params("hoa"))
        if self.lateral:
            params.update(self.lateral.params("fpn/lateral"))
        if self.adv_head3 and self.adv_head4:
            params.update(self.adv_head3.params("adversary/stage3"))
            params.update(self.adv_head4.params("adversary/stage4"))
        params.update(self.fusion.params("fusion"))
        if self.gcn:
            params.update(self.gcn.params("gcn"))
        return params


def forward_full(model: EmotionDistributionNet, images: Tensor | np.ndarray) -> ForwardOutput:
    return model.forward(images)
