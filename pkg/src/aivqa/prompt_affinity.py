"""Implicit text guidance: hard-prompt affinity plus a learned feature score.

Quality is probed without the generating prompt by comparing every frame
embedding against fixed positive/negative text pairs (sigmoid-remapped
affinity), adding a learned score of the mean frame feature, and combining
the three numbers linearly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import SchemaError
from .sampling import FrameStack
from .utils import seeded_init_

DEFAULT_TEXT_PAIRS = (
    ("a high quality photo", "a low quality photo"),
    ("a good photo", "a bad photo"),
)


@dataclass(frozen=True)
class TextPair:
    """A positive/negative hard-prompt pair with cached unit embeddings."""

    positive: str
    negative: str
    f_pos: torch.Tensor = field(repr=False)
    f_neg: torch.Tensor = field(repr=False)

    def __post_init__(self):
        if not self.positive or not self.negative:
            raise SchemaError("text pair prompts must be non-empty")
        for name, vec in (("positive", self.f_pos), ("negative", self.f_neg)):
            if vec.ndim != 1:
                raise SchemaError(f"{name} embedding must be a vector")
            if abs(float(vec.norm()) - 1.0) > 1e-5:
                raise SchemaError(f"{name} embedding is not unit-normalized")

    @classmethod
    def from_encoder(cls, positive: str, negative: str, text_encoder) -> "TextPair":
        with torch.no_grad():
            f_pos = text_encoder.sentence_embedding(positive).detach().clone()
            f_neg = text_encoder.sentence_embedding(negative).detach().clone()
        return cls(positive=positive, negative=negative, f_pos=f_pos, f_neg=f_neg)


def frame_features(stack: FrameStack, frame_encoder) -> torch.Tensor:
    """Unit-normalized embedding per frame, all frames used."""
    if stack.frame_count < 1:
        raise SchemaError("cannot extract frame features from an empty stack")
    feats = frame_encoder.frame_embeddings(stack)
    if feats.ndim != 2 or feats.shape[0] != stack.frame_count:
        raise SchemaError(
            f"frame encoder returned shape {tuple(feats.shape)} for "
            f"{stack.frame_count} frames"
        )
    return feats


def affinity_score(frame_feats: torch.Tensor, pair: TextPair) -> torch.Tensor:
    """sigmoid of the mean positive-minus-negative frame/text dot product."""
    if frame_feats.ndim != 2 or frame_feats.shape[0] < 1:
        raise SchemaError(
            f"frame features must be (N >= 1, c), got {tuple(frame_feats.shape)}"
        )
    pos = pair.f_pos.to(frame_feats.dtype)
    neg = pair.f_neg.to(frame_feats.dtype)
    diff = frame_feats @ pos - frame_feats @ neg
    return torch.sigmoid(diff.mean())


class ImplicitScoreParams(nn.Module):
    """Feature-score MLP plus the 3-input linear combiner."""

    def __init__(self, channels: int, seed: int = 0):
        super().__init__()
        self.fc1 = nn.Linear(channels, channels)
        self.fc2 = nn.Linear(channels, 1)
        self.act = nn.GELU()
        self.combiner = nn.Linear(3, 1)
        seeded_init_(self, seed)

    def feature_score(self, mean_frame_feat: torch.Tensor) -> torch.Tensor:
        raw = self.fc2(self.act(self.fc1(mean_frame_feat))).squeeze(-1)
        return torch.sigmoid(self.act(raw))

    def combine(
        self, s_f: torch.Tensor, s_a0: torch.Tensor, s_a1: torch.Tensor
    ) -> torch.Tensor:
        dtype = self.combiner.weight.dtype
        parts = [
            v.to(dtype) if torch.is_tensor(v) else torch.as_tensor(v, dtype=dtype)
            for v in (s_f, s_a0, s_a1)
        ]
        return self.combiner(torch.stack(parts)).squeeze(-1)


def feature_score(mean_frame_feat: torch.Tensor, params: ImplicitScoreParams) -> torch.Tensor:
    return params.feature_score(mean_frame_feat)


def implicit_text_score(s_f, s_a0, s_a1, params: ImplicitScoreParams) -> torch.Tensor:
    """Affine combination of (feature score, pair-0 affinity, pair-1 affinity)."""
    return params.combine(s_f, s_a0, s_a1)


def score_stack(
    stack: FrameStack,
    frame_encoder,
    pairs: tuple[TextPair, TextPair],
    params: ImplicitScoreParams,
) -> torch.Tensor:
    """Full implicit-branch score for one video's frame stack."""
    if len(pairs) != 2:
        raise SchemaError(f"implicit branch needs exactly 2 text pairs, got {len(pairs)}")
    feats = frame_features(stack, frame_encoder)
    s_a0 = affinity_score(feats, pairs[0])
    s_a1 = affinity_score(feats, pairs[1])
    s_f = params.feature_score(feats.mean(dim=0))
    return params.combine(s_f, s_a0, s_a1)
