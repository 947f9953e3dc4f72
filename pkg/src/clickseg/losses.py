"""Segmentation losses over probability maps: bce, focal, nfl, soft_iou.

Each loss returns both the scalar value (sum reduction, not mean) and the
analytic per-pixel gradient with respect to the prediction, so training
needs no autodiff framework.

The first three fold the binary target into a true-class confidence
p = pred where target is 1 and p = 1 - pred elsewhere, then clamp p to
[eps, 1 - eps] before logs and powers.

nfl divides the focal sum by the total focal weight P = sum((1 - p)^gamma).
Its gradient treats P as a constant: no gradient flows through the
normalizer. Under that rule the per-pixel gradients are exactly the bce
gradients scaled by weights that sum to 1, so the loss keeps bce's total
gradient magnitude while still down-weighting easy pixels. A finite
difference check of the nfl gradient must therefore hold P fixed at the
evaluation point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ShapeError, as_mask, as_probmap

DEFAULT_GAMMA = 2.0
DEFAULT_EPS = 1e-12

LOSS_KINDS = ("bce", "focal", "nfl", "soft_iou")


@dataclass(frozen=True, slots=True)
class LossConfig:
    gamma: float = DEFAULT_GAMMA
    kind: str = "nfl"
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind: {self.kind!r}")


@dataclass
class LossResult:
    """Scalar loss and d(loss)/d(pred), same shape as the prediction."""

    value: float
    grad: np.ndarray


def _fold(pred: np.ndarray, target: np.ndarray, eps: float):
    """Clamp pred and fold the label in.

    Returns (p_true, sign) where p_true is the confidence assigned to the
    correct class and sign = dp_true/dpred (+1 on foreground, -1 on
    background).
    """
    pred = as_probmap(pred)
    target = as_mask(target)
    if pred.shape != target.shape:
        raise ShapeError(f"pred {pred.shape} vs target {target.shape}")
    p = np.clip(pred, eps, 1.0 - eps)
    fg = target != 0
    sign = np.where(fg, 1.0, -1.0)
    p_true = np.where(fg, p, 1.0 - p)
    return p_true, sign


def bce(pred: np.ndarray, target: np.ndarray, cfg: LossConfig = LossConfig()) -> LossResult:
    p, sign = _fold(pred, target, cfg.eps)
    value = float(-np.log(p).sum())
    grad = -sign / p
    return LossResult(value=value, grad=grad)


def focal(pred: np.ndarray, target: np.ndarray, cfg: LossConfig = LossConfig()) -> LossResult:
    p, sign = _fold(pred, target, cfg.eps)
    value, grad = _focal_terms(p, sign, cfg.gamma)
    return LossResult(value=float(value.sum()), grad=grad)


def _focal_terms(p: np.ndarray, sign: np.ndarray, gamma: float):
    """Per-pixel focal values and the gradient field w.r.t. pred."""
    q = 1.0 - p
    w = q**gamma
    values = w * (-np.log(p))
    # d/dp [ (1-p)^g * (-log p) ] = g*(1-p)^(g-1)*log(p) - (1-p)^g / p
    d_dp = gamma * q ** (gamma - 1.0) * np.log(p) - w / p
    return values, sign * d_dp


def nfl(pred: np.ndarray, target: np.ndarray, cfg: LossConfig = LossConfig()) -> LossResult:
    p, sign = _fold(pred, target, cfg.eps)
    weights = (1.0 - p) ** cfg.gamma
    norm = float(weights.sum())
    if norm < cfg.eps:
        raise ValueError("degenerate normalizer: all pixels predicted exactly right")
    values, grad = _focal_terms(p, sign, cfg.gamma)
    return LossResult(value=float(values.sum()) / norm, grad=grad / norm)


def soft_iou(pred: np.ndarray, target: np.ndarray, cfg: LossConfig = LossConfig()) -> LossResult:
    pred = as_probmap(pred)
    target = as_mask(target)
    if pred.shape != target.shape:
        raise ShapeError(f"pred {pred.shape} vs target {target.shape}")
    t = target.astype(np.float64)
    inter = float((pred * t).sum())
    union = float((pred + t - pred * t).sum())
    if union < cfg.eps:
        raise ValueError("soft_iou undefined: empty target and empty prediction")
    # d/dpred_i [1 - I/U] = -(t_i*U - I*(1 - t_i)) / U^2
    grad = -(t * union - inter * (1.0 - t)) / (union * union)
    return LossResult(value=1.0 - inter / union, grad=grad)


_DISPATCH = {"bce": bce, "focal": focal, "nfl": nfl, "soft_iou": soft_iou}


def compute_loss(pred: np.ndarray, target: np.ndarray, cfg: LossConfig) -> LossResult:
    """Dispatch on cfg.kind."""
    return _DISPATCH[cfg.kind](pred, target, cfg)
