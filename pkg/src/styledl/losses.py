"""Training losses: KL against simplex targets, intermediate supervision,
the adaptive adversarial balance, and the final convex combine."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .tensor import Tensor

SIMPLEX_TOL = 1e-6
KL_EPS = 1e-12


def _check_simplex(values: np.ndarray, what: str) -> None:
    if np.any(values < -SIMPLEX_TOL):
        raise ContractViolation(f"{what} has negative entries")
    sums = values.sum(axis=-1)
    if values.size and np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
        raise ContractViolation(f"{what} rows must sum to 1, got sums in "
                                f"[{sums.min():.8f}, {sums.max():.8f}]")


def kl_loss(target: np.ndarray | Tensor, pred: Tensor, eps: float = KL_EPS) -> Tensor:
    """KL(target || pred) with the prediction clamped away from zero.

    Zero-mass target entries contribute nothing. A 2-d input is treated
    as a batch and the per-row divergences are averaged.
    """
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if t.shape != pred.shape:
        raise ContractViolation(f"kl_loss shapes {t.shape} vs {pred.shape}")
    if t.ndim not in (1, 2):
        raise ContractViolation(f"kl_loss expects [C] or [B,C], got {t.shape}")
    _check_simplex(t, "kl target")
    _check_simplex(pred.data, "kl prediction")
    rows = 1 if t.ndim == 1 else t.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(t > 0, t * np.log(t), 0.0).sum()
    mask = Tensor(t)
    cross = (mask * pred.clamp_min(eps).log()).sum()
    return (float(ent) - cross) * (1.0 / rows)


def pred_loss(y_e: Sequence[Tensor], y_emotion: Tensor | None,
              target: np.ndarray | Tensor) -> Tensor:
    """Batch-mean KL over the per-order heads (averaged) plus the
    graph-enhanced head when present."""
    if not y_e:
        raise ContractViolation("pred_loss needs at least one order distribution")
    orders = len(y_e)
    total = kl_loss(target, y_e[0])
    for y in y_e[1:]:
        total = total + kl_loss(target, y)
    total = total * (1.0 / orders)
    if y_emotion is not None:
        total = total + kl_loss(target, y_emotion)
    return total


def total_loss(l_pred: Tensor, l_adv: Tensor, eps: float = 1e-8) -> Tensor:
    """Adaptive balance: L_pred + c * L_adv with c detached as
    L_pred / max(L_adv, eps), so the adversary term's weight tracks the
    prediction loss but contributes gradient only through L_adv."""
    coeff = l_pred.item() / max(l_adv.item(), eps)
    return l_pred + coeff * l_adv


def combine_final(y_emotion: Tensor, y_style: Tensor, mu: float) -> Tensor:
    """Convex mix of the two distribution heads."""
    if not 0.0 <= mu <= 1.0:
        raise ConfigurationError(f"combine coefficient {mu} outside [0,1]")
    return mu * y_emotion + (1.0 - mu) * y_style
