"""Training objectives: correlation loss, pairwise rank hinge, and the
auxiliary 10-way generator-classification cross-entropy.

All losses compute in float64 regardless of model precision; correlation
terms on small batches are sensitive enough that float32 noise shows up in
property tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .dataset import NUM_DOMAINS
from .errors import DegenerateBatchError, DomainRangeError, SchemaError
from .utils import seeded_init_

EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.3  # rank-loss weight
    beta: float = 0.2  # classification weight
    rank_margin: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"loss weights must be >= 0, got ({self.alpha}, {self.beta})")


def _as_double(x) -> torch.Tensor:
    # plain sequences must not round-trip through torch's float32 default
    if torch.is_tensor(x):
        return x.double()
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def _pair(pred, target) -> tuple[torch.Tensor, torch.Tensor]:
    pred = _as_double(pred).reshape(-1)
    target = _as_double(target).reshape(-1)
    if pred.shape != target.shape:
        raise SchemaError(f"pred/target lengths differ: {pred.shape} vs {target.shape}")
    return pred, target


def plcc_loss(pred, target) -> torch.Tensor:
    """(1 - Pearson(pred, target)) / 2, in [0, 1]."""
    pred, target = _pair(pred, target)
    n = pred.shape[0]
    if n < 2:
        raise DegenerateBatchError(f"correlation loss needs n >= 2, got {n}")
    if torch.all(target == target[0]):
        raise DegenerateBatchError("target is constant; correlation undefined, skip batch")
    vx = pred - pred.mean()
    vy = target - target.mean()
    r = (vx @ vy) / (torch.sqrt((vx @ vx) + EPS) * torch.sqrt((vy @ vy) + EPS))
    return (1.0 - r) / 2.0


def rank_loss(pred, target, margin: float = 0.0) -> torch.Tensor:
    """Mean hinge over ordered pairs where target_i > target_j; ties skipped."""
    pred, target = _pair(pred, target)
    if pred.shape[0] < 2:
        raise DegenerateBatchError(f"rank loss needs n >= 2, got {pred.shape[0]}")
    ordered = (target[:, None] - target[None, :]) > 0
    if not ordered.any():
        return torch.zeros((), dtype=torch.float64)
    hinge = torch.relu(margin - (pred[:, None] - pred[None, :]))
    return hinge[ordered].mean()


def aux_ce_loss(logits, labels) -> torch.Tensor:
    """Mean softmax cross-entropy over the generator-label batch."""
    logits = _as_double(logits)
    labels = torch.as_tensor(np.asarray(labels)).long().reshape(-1)
    if logits.ndim != 2 or logits.shape[1] != NUM_DOMAINS:
        raise SchemaError(f"logits must be (batch, {NUM_DOMAINS}), got {tuple(logits.shape)}")
    if logits.shape[0] != labels.shape[0]:
        raise SchemaError(
            f"batch size mismatch: {logits.shape[0]} logits vs {labels.shape[0]} labels"
        )
    if labels.numel() and (labels.min() < 0 or labels.max() >= NUM_DOMAINS):
        raise DomainRangeError(
            f"labels must lie in [0, {NUM_DOMAINS - 1}], got range "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    return F.cross_entropy(logits, labels)


def combine_components(
    plcc_term: torch.Tensor,
    rank_term: torch.Tensor,
    cls_term: torch.Tensor,
    weights: LossWeights,
) -> torch.Tensor:
    return plcc_term + weights.alpha * rank_term + weights.beta * cls_term


def combined_loss(
    pred, target, logits, labels, weights: LossWeights
) -> tuple[torch.Tensor, dict[str, float]]:
    """Total objective plus per-component values for the step log.

    logits=None drops the classification term (ablation without the aux head).
    """
    plcc_term = plcc_loss(pred, target)
    rank_term = rank_loss(pred, target, margin=weights.rank_margin)
    if logits is None:
        cls_term = torch.zeros((), dtype=torch.float64)
    else:
        cls_term = aux_ce_loss(logits, labels)
    total = combine_components(plcc_term, rank_term, cls_term, weights)
    parts = {
        "L_plcc": float(plcc_term.detach()),
        "L_rank": float(rank_term.detach()),
        "L_cls": float(cls_term.detach()),
        "total": float(total.detach()),
    }
    return total, parts


class DomainClassifier(nn.Module):
    """Two-layer head mapping a fused embedding to 10 generator logits."""

    def __init__(self, d: int, seed: int = 0):
        super().__init__()
        hidden = max(d // 2, 1)
        self.fc1 = nn.Linear(d, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, NUM_DOMAINS)
        seeded_init_(self, seed)

    def forward(self, embedding: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(embedding)))
