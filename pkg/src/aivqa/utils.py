"""Small shared helpers: adapter registries, stable hashing, seeded parameter init."""

from __future__ import annotations

import hashlib
import math

import numpy as np
import torch
from torch import nn

from .errors import ConfigError


class Registry:
    """Named constructor registry for pluggable adapters (encoders, captioners, ...)."""

    def __init__(self, label: str):
        self.label = label
        self._entries: dict[str, object] = {}

    def register(self, name: str, ctor):
        self._entries[name] = ctor
        return ctor

    def get(self, name: str):
        try:
            return self._entries[name]
        except KeyError:
            known = ", ".join(sorted(self._entries)) or "<none>"
            raise ConfigError(
                f"unknown {self.label} kind {name!r}; registered kinds: {known}"
            ) from None

    def names(self) -> list[str]:
        return sorted(self._entries)


def stable_hash(text: str, buckets: int) -> int:
    """Process-independent hash of a token into ``[0, buckets)``.

    Python's builtin ``hash`` is salted per interpreter, so it cannot back a
    reproducible embedding table.
    """
    digest = hashlib.blake2s(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


def seeded_init_(module: nn.Module, seed: int) -> nn.Module:
    """Fill all Linear/Embedding parameters of ``module`` from a seeded RNG.

    Uses an explicit numpy generator instead of torch's global RNG so that
    model construction is bit-reproducible regardless of what ran before.
    Iteration follows registration order, which is fixed by the module code.
    """
    rng = np.random.default_rng(seed)
    for sub in module.modules():
        if isinstance(sub, nn.Linear):
            bound = 1.0 / math.sqrt(sub.in_features)
            _fill(sub.weight, rng, bound)
            if sub.bias is not None:
                _fill(sub.bias, rng, bound)
        elif isinstance(sub, nn.Embedding):
            bound = 1.0 / math.sqrt(sub.embedding_dim)
            _fill(sub.weight, rng, bound)
    return module


def _fill(param: nn.Parameter, rng: np.random.Generator, bound: float) -> None:
    values = rng.uniform(-bound, bound, size=tuple(param.shape))
    with torch.no_grad():
        param.copy_(torch.from_numpy(values.astype(np.float32)))
