"""Static and per-sample dynamic graph convolutions over the label axis.

The static pass propagates fused features along a fixed co-occurrence
adjacency. Its output regenerates a fresh adjacency per sample through a
sigmoid projection, and the dynamic pass propagates along that.
"""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ContractViolation
from .fusion import pooled_scores
from .tensor import Tensor


def static_gcn(a_static: Tensor | np.ndarray, features: Tensor, w_s: Tensor) -> Tensor:
    """LeakyReLU(A_s @ F @ W_s) with A_s shared across the batch."""
    a = a_static if isinstance(a_static, Tensor) else Tensor(a_static)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"static adjacency must be square, got {a.shape}")
    if features.ndim != 3 or features.shape[1] != a.shape[0]:
        raise ContractViolation(f"features {features.shape} vs adjacency {a.shape}")
    if w_s.shape[0] != features.shape[2]:
        raise ContractViolation(f"W_s {w_s.shape} vs feature width {features.shape[2]}")
    return T.matmul(T.matmul(a, features), w_s).leaky_relu(0.2)


def dynamic_adjacency(f_sgcn: Tensor, w_a: Tensor) -> Tensor:
    """Per-sample adjacency from each label row joined with the global mean.

    Returns sigmoid([F_sgcn | mean_labels(F_sgcn)] @ W_A), shape [B,C,C].
    """
    if f_sgcn.ndim != 3:
        raise ContractViolation(f"expected [B,C,D'], got {f_sgcn.shape}")
    b, c, width = f_sgcn.shape
    if w_a.shape != (2 * width, c):
        raise ContractViolation(f"W_A {w_a.shape}, expected {(2 * width, c)}")
    global_desc = f_sgcn.mean(axis=1).reshape(b, 1, width)
    joined = T.concat([f_sgcn, T.repeat_axis(global_desc, 1, c)], axis=2)
    return T.matmul(joined, w_a).sigmoid()


def dynamic_gcn(a_dynamic: Tensor, f_sgcn: Tensor, w_d: Tensor) -> Tensor:
    """LeakyReLU(A_d @ F_sgcn @ W_d) with a per-sample adjacency."""
    if a_dynamic.ndim != 3 or a_dynamic.shape[1] != a_dynamic.shape[2]:
        raise ContractViolation(f"dynamic adjacency must be [B,C,C], got {a_dynamic.shape}")
    if f_sgcn.ndim != 3 or f_sgcn.shape[:2] != a_dynamic.shape[:2]:
        raise ContractViolation(f"features {f_sgcn.shape} vs adjacency {a_dynamic.shape}")
    if w_d.shape[0] != f_sgcn.shape[2]:
        raise ContractViolation(f"W_d {w_d.shape} vs feature width {f_sgcn.shape[2]}")
    return T.matmul(T.matmul(a_dynamic, f_sgcn), w_d).leaky_relu(0.2)


def emotion_distribution(features: Tensor, lam: float) -> Tensor:
    """Pool the graph-enhanced features into a per-sample distribution."""
    return pooled_scores(features, lam)


class StylisticGcn:
    """Parameter container for the two-pass label graph."""

    def __init__(self, rng: np.random.Generator, n_labels: int, in_width: int,
                 hidden: int = 128, dynamic: bool = True):
        self.n_labels = n_labels
        self.dynamic = dynamic
        self.w_s = T.he_normal(rng, (in_width, hidden), fan_in=in_width)
        if dynamic:
            self.w_d = T.he_normal(rng, (hidden, hidden), fan_in=hidden)
            self.w_a = T.he_normal(rng, (2 * hidden, n_labels), fan_in=2 * hidden)

    def __call__(self, a_static: Tensor | np.ndarray, features: Tensor) -> Tensor:
        enhanced = static_gcn(a_static, features, self.w_s)
        if not self.dynamic:
            return enhanced
        a_d = dynamic_adjacency(enhanced, self.w_a)
        return dynamic_gcn(a_d, enhanced, self.w_d)

    def params(self, prefix: str = "gcn") -> dict[str, Tensor]:
        out = {f"{prefix}/w_s": self.w_s}
        if self.dynamic:
            out[f"{prefix}/w_d"] = self.w_d
            out[f"{prefix}/w_a"] = self.w_a
        return out
