"""Attention pooling primitives and the scalar score heads.

Both pooling variants reduce a token grid to one vector through a single
scaled-dot attention read-out; they differ only in where the query comes
from (token mean vs. the prompt's end-of-text embedding).
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .encoders import TokenGrid
from .errors import ConfigError, SchemaError
from .utils import seeded_init_


def scaled_dot_attention(
    query: torch.Tensor,
    keys: torch.Tensor,
    values: torch.Tensor,
    d_k: int,
    return_weights: bool = False,
):
    """softmax(query . keys^T / sqrt(d_k)) . values for a single query vector."""
    if d_k < 1:
        raise SchemaError(f"d_k must be >= 1, got {d_k}")
    if query.ndim != 1 or keys.ndim != 2 or values.ndim != 2:
        raise SchemaError(
            f"expected query (d,), keys (n,d), values (n,d_v); got "
            f"{tuple(query.shape)}, {tuple(keys.shape)}, {tuple(values.shape)}"
        )
    if keys.shape[0] < 1 or keys.shape[0] != values.shape[0]:
        raise SchemaError(
            f"keys/values row counts disagree: {keys.shape[0]} vs {values.shape[0]}"
        )
    if keys.shape[1] != query.shape[0]:
        raise SchemaError(
            f"query width {query.shape[0]} does not match key width {keys.shape[1]}"
        )
    logits = keys @ query / math.sqrt(d_k)
    weights = torch.softmax(logits, dim=0)
    out = weights @ values
    if return_weights:
        return out, weights
    return out


class AttentionParams(nn.Module):
    """Projection bundle for one attention read-out.

    query_width, when it differs from c_in, adds a bias-free alignment map so
    a narrower (or wider) query space can address the token projections.
    """

    def __init__(
        self,
        c_in: int,
        d: int,
        head_count: int = 1,
        query_width: int | None = None,
        output_proj: bool = False,
        seed: int = 0,
    ):
        super().__init__()
        if head_count < 1:
            raise ConfigError(f"head_count must be >= 1, got {head_count}")
        if d % head_count:
            raise ConfigError(f"attention width {d} not divisible by head_count {head_count}")
        self.c_in = c_in
        self.d = d
        self.head_count = head_count
        self.d_k = d // head_count
        self.w_q = nn.Linear(c_in, d, bias=False)
        self.w_k = nn.Linear(c_in, d, bias=False)
        self.w_v = nn.Linear(c_in, d, bias=False)
        self.w_o = nn.Linear(d, d, bias=False) if output_proj else None
        if query_width is not None and query_width != c_in:
            self.align = nn.Linear(query_width, c_in, bias=False)
        else:
            self.align = None
        seeded_init_(self, seed)

    def attend(self, query_in: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        """Project, attend (per head), and optionally re-project."""
        if tokens.ndim != 2 or tokens.shape[1] != self.c_in:
            raise SchemaError(
                f"tokens must be (n, {self.c_in}), got {tuple(tokens.shape)}"
            )
        if query_in.shape[-1] != self.c_in:
            raise SchemaError(
                f"query width {query_in.shape[-1]} does not match c_in {self.c_in}"
            )
        q = self.w_q(query_in)
        k = self.w_k(tokens)
        v = self.w_v(tokens)
        if self.head_count == 1:
            out = scaled_dot_attention(q, k, v, self.d_k)
        else:
            h, dk = self.head_count, self.d_k
            qh = q.reshape(h, dk)
            kh = k.reshape(-1, h, dk).permute(1, 0, 2)
            vh = v.reshape(-1, h, dk).permute(1, 0, 2)
            out = torch.cat(
                [scaled_dot_attention(qh[i], kh[i], vh[i], dk) for i in range(h)]
            )
        return self.w_o(out) if self.w_o is not None else out


def attention_pool(token_grid: TokenGrid, params: AttentionParams) -> torch.Tensor:
    """Pool a token grid with its own mean token as the query."""
    tokens = token_grid.flatten()
    return params.attend(tokens.mean(dim=0), tokens)


def text2video_cross_attention(
    eot: torch.Tensor, token_grid: TokenGrid, params: AttentionParams
) -> torch.Tensor:
    """Pool visual tokens with the prompt's end-of-text vector as the query."""
    if eot.ndim != 1:
        raise SchemaError(f"eot must be a vector, got shape {tuple(eot.shape)}")
    if params.align is not None:
        query_in = params.align(eot)
    elif eot.shape[0] == params.c_in:
        query_in = eot
    else:
        raise SchemaError(
            f"eot width {eot.shape[0]} does not match token width {params.c_in} "
            "and no alignment projection is configured"
        )
    return params.attend(query_in, token_grid.flatten())


class ScoreHead(nn.Module):
    """Two-layer perceptron d -> d/2 -> 1 with GELU, emitting one real score."""

    def __init__(self, d: int, seed: int = 0):
        super().__init__()
        hidden = max(d // 2, 1)
        self.fc1 = nn.Linear(d, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, 1)
        seeded_init_(self, seed)

    def forward(self, embedding: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(embedding))).squeeze(-1)
