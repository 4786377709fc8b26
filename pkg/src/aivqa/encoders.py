"""Video and text encoder interfaces plus self-contained toy implementations.

The toy encoders exist so the whole pipeline trains and tests without any
external weights: the video side averages patch cells and projects them with
one trainable linear map, the text side hashes whitespace tokens into a
trainable embedding table with a reserved end-of-text row.  Real backbones
plug in through the same registries and must return the same two types.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, SchemaError
from .sampling import FrameStack
from .utils import Registry, seeded_init_, stable_hash

TEXT_HASH_BUCKETS = 4096


@dataclass(frozen=True)
class EncoderSpec:
    kind: str = "toy"
    seed: int = 0
    channels: int = 64
    patch: int = 32

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigError(f"encoder channels must be >= 1, got {self.channels}")
        if self.patch < 1:
            raise ConfigError(f"encoder patch must be >= 1, got {self.patch}")


class TokenGrid:
    """Spatio-temporal token array (t', h', w', c) with a flattened view."""

    def __init__(self, tokens: torch.Tensor):
        if tokens.ndim != 4:
            raise SchemaError(f"TokenGrid expects (t', h', w', c), got {tuple(tokens.shape)}")
        if not torch.isfinite(tokens).all():
            raise SchemaError("TokenGrid contains non-finite entries")
        self.tokens = tokens

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(self.tokens.shape)

    @property
    def channels(self) -> int:
        return self.tokens.shape[-1]

    def flatten(self) -> torch.Tensor:
        t, h, w, c = self.tokens.shape
        return self.tokens.reshape(t * h * w, c)


class PromptEncoding:
    """Per-token embeddings for one prompt; the summary vector is the last row."""

    def __init__(self, token_embeddings: torch.Tensor):
        if token_embeddings.ndim != 2 or token_embeddings.shape[0] < 1:
            raise SchemaError(
                f"PromptEncoding expects (length >= 1, c), got {tuple(token_embeddings.shape)}"
            )
        self.token_embeddings = token_embeddings

    @property
    def eot(self) -> torch.Tensor:
        return self.token_embeddings[-1]

    @property
    def channels(self) -> int:
        return self.token_embeddings.shape[-1]

    def __len__(self) -> int:
        return self.token_embeddings.shape[0]


class ToyVideoEncoder(nn.Module):
    """Patch-cell means projected to c channels through one seeded linear map."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        self.proj = nn.Linear(3, spec.channels)
        seeded_init_(self, spec.seed)

    def forward(self, stack: FrameStack) -> TokenGrid:
        data = stack.data
        t, h, w, _ = data.shape
        patch = self.spec.patch
        if h % patch or w % patch:
            raise ConfigError(
                f"patch size {patch} does not divide frame size {h}x{w}"
            )
        ph, pw = h // patch, w // patch
        cells = data.reshape(t, ph, patch, pw, patch, 3).mean(axis=(2, 4))
        cells_t = torch.from_numpy(np.ascontiguousarray(cells, dtype=np.float32))
        return TokenGrid(self.proj(cells_t))

    def frame_embeddings(self, stack: FrameStack) -> torch.Tensor:
        """One unit-normalized embedding per frame (token mean per frame)."""
        grid = self.forward(stack)
        per_frame = grid.tokens.mean(dim=(1, 2))
        norms = per_frame.norm(dim=-1, keepdim=True).clamp_min(1e-12)
        return per_frame / norms


class ToyTextEncoder(nn.Module):
    """Hashed-token embedding table; row TEXT_HASH_BUCKETS is the end-of-text slot."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        self.table = nn.Embedding(TEXT_HASH_BUCKETS + 1, spec.channels)
        seeded_init_(self, spec.seed)

    def token_ids(self, prompt: str) -> list[int]:
        words = prompt.split()
        if not words:
            raise SchemaError("cannot encode an empty prompt")
        return [stable_hash(word, TEXT_HASH_BUCKETS) for word in words] + [TEXT_HASH_BUCKETS]

    def forward(self, prompt: str) -> PromptEncoding:
        ids = torch.tensor(self.token_ids(prompt), dtype=torch.long)
        return PromptEncoding(self.table(ids))

    def sentence_embedding(self, prompt: str) -> torch.Tensor:
        """Unit-normalized mean of the word rows (end-of-text row excluded)."""
        enc = self.forward(prompt)
        mean = enc.token_embeddings[:-1].mean(dim=0)
        return mean / mean.norm().clamp_min(1e-12)


video_encoder_registry = Registry("video encoder")
text_encoder_registry = Registry("text encoder")
video_encoder_registry.register("toy", ToyVideoEncoder)
text_encoder_registry.register("toy", ToyTextEncoder)


@lru_cache(maxsize=32)
def _video_encoder(spec: EncoderSpec) -> nn.Module:
    return video_encoder_registry.get(spec.kind)(spec)


@lru_cache(maxsize=32)
def _text_encoder(spec: EncoderSpec) -> nn.Module:
    return text_encoder_registry.get(spec.kind)(spec)


def encode_video(stack: FrameStack, spec: EncoderSpec) -> TokenGrid:
    """Stateless convenience: encode one stack with a cached encoder for spec."""
    with torch.no_grad():
        return _video_encoder(spec)(stack)


def encode_text(prompt: str, spec: EncoderSpec) -> PromptEncoding:
    with torch.no_grad():
        return _text_encoder(spec)(prompt)
