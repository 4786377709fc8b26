"""Caption-similarity scoring: 5-shot captioning prompt, pluggable captioner
and sentence embedder, cosine similarity against the generating prompt.

The in-repo captioner and embedder are deliberately tiny (frame statistics,
hashed bag of words) so the route runs end to end offline; real multimodal
models bolt on through the registries.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateEmbeddingError, SchemaError
from .utils import Registry, stable_hash

EXEMPLAR_COUNT = 5

captioner_registry = Registry("captioner")
embedder_registry = Registry("sentence embedder")


@dataclass(frozen=True)
class IclPromptTemplate:
    """Few-shot captioning context: instruction, 5 exemplar prompts, video slot."""

    exemplars: tuple[str, ...]
    instruction: str = (
        "Here are example prompts that describe videos from this collection:"
    )
    placeholder: str = "<video>"

    def __post_init__(self):
        if len(self.exemplars) != EXEMPLAR_COUNT:
            raise ValueError(
                f"need exactly {EXEMPLAR_COUNT} exemplar prompts, got {len(self.exemplars)}"
            )
        if any(not e for e in self.exemplars):
            raise ValueError("exemplar prompts must be non-empty")

    def render(self) -> str:
        lines = [self.instruction]
        lines += [f"{i + 1}. {text}" for i, text in enumerate(self.exemplars)]
        lines.append(
            f"Describe the video {self.placeholder} in the same style, in one sentence."
        )
        return "\n".join(lines)


def build_icl_prompt(exemplars=None, manifest=None, seed: int = 0) -> str:
    """Render the captioning context from 5 given exemplars or a seeded sample."""
    if exemplars is None:
        if manifest is None:
            raise ValueError("need either 5 exemplar prompts or a manifest to sample from")
        prompts = sorted({r.prompt for r in manifest})
        if len(prompts) < EXEMPLAR_COUNT:
            raise ValueError(
                f"manifest has only {len(prompts)} distinct prompts, "
                f"need {EXEMPLAR_COUNT}"
            )
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(prompts), size=EXEMPLAR_COUNT, replace=False)
        exemplars = tuple(prompts[i] for i in sorted(picks.tolist()))
    return IclPromptTemplate(exemplars=tuple(exemplars)).render()


@dataclass(frozen=True)
class SimilarityScore:
    cosine: float
    normalized: float

    def __post_init__(self):
        if not -1.0 <= self.cosine <= 1.0:
            raise ValueError(f"cosine {self.cosine} outside [-1, 1]")
        if abs(self.normalized - (self.cosine + 1.0) / 2.0) > 1e-12:
            raise ValueError("normalized score must equal (cosine + 1) / 2")

    @classmethod
    def from_cosine(cls, cosine: float) -> "SimilarityScore":
        cosine = float(np.clip(cosine, -1.0, 1.0))
        return cls(cosine=cosine, normalized=(cosine + 1.0) / 2.0)


class HashedBagOfWordsEmbedder:
    """Token counts scattered into a fixed-dim vector by a stable hash, unit-normalized."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError(f"embedder dim must be >= 1, got {dim}")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in text.lower().split():
            vec[stable_hash(token, self.dim)] += 1.0
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise DegenerateEmbeddingError(f"text {text!r} embeds to the zero vector")
        return vec / norm


class FrameStatsCaptioner:
    """Deterministic stand-in captioner: verbalizes brightness/contrast/motion."""

    def caption(self, frames: np.ndarray, icl_prompt: str) -> str:
        if frames.ndim != 4 or frames.shape[0] < 1:
            raise SchemaError(f"captioner expects (t, h, w, c) frames, got {frames.shape}")
        brightness = float(frames.mean())
        contrast = float(frames.std())
        motion = float(np.abs(np.diff(frames, axis=0)).mean()) if frames.shape[0] > 1 else 0.0

        b_word = "dark" if brightness < 0.35 else ("gray" if brightness < 0.65 else "bright")
        c_word = "flat" if contrast < 0.08 else "textured"
        m_word = "static" if motion < 0.01 else "moving"
        return f"a {b_word} {c_word} {m_word} scene"


captioner_registry.register("frame-stats", FrameStatsCaptioner)
embedder_registry.register("hashed-bow", HashedBagOfWordsEmbedder)


def caption_similarity(caption: str, prompt: str, embedder) -> SimilarityScore:
    """Cosine similarity of the two sentence embeddings, mapped to [0, 1]."""
    if not caption or not prompt:
        raise SchemaError("caption and prompt must both be non-empty")
    a = np.asarray(embedder.embed(caption), dtype=np.float64)
    b = np.asarray(embedder.embed(prompt), dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbeddingError("cannot take cosine of a zero-norm embedding")
    return SimilarityScore.from_cosine(float(a @ b / (na * nb)))


def caption_videos(frame_stacks, captioner, icl_prompt: str, max_workers: int = 4) -> list[str]:
    """Caption many videos with bounded concurrency, preserving input order."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda fr: captioner.caption(fr, icl_prompt), frame_stacks))


def read_caption_cache(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"video_name", "caption"} - set(reader.fieldnames):
            raise SchemaError(f"{path} is not a video_name,caption cache file")
        return {row["video_name"]: row["caption"] for row in reader}


def write_caption_cache(path: str | Path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_name", "caption"])
        for name, caption in rows:
            writer.writerow([name, caption])


def write_similarity_csv(path: str | Path, rows) -> None:
    """Rows of (video_name, cosine, normalized) at 6 decimals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_name", "cosine", "normalized"])
        for name, cosine, normalized in rows:
            writer.writerow([name, f"{cosine:.6f}", f"{normalized:.6f}"])
