"""The full scoring network: per-branch encoders, attention pooling, score
heads, the implicit-text scorer, and the auxiliary generator classifier.

Branch scores are fused by a fixed weighted sum; correlation training is
scale-free, so the weights act as a prior over branch trust rather than
something the optimizer must undo.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .config import EncoderConfig, TrainConfig
from .encoders import EncoderSpec, text_encoder_registry, video_encoder_registry
from .errors import ConfigError
from .fusion import AttentionParams, ScoreHead, attention_pool, text2video_cross_attention
from .losses import DomainClassifier
from .prompt_affinity import ImplicitScoreParams, TextPair, affinity_score, frame_features
from .utils import stable_hash
from .views import VideoInputs

BRANCH_NAMES = ("aesthetic", "technical", "explicit_prompt", "implicit_text", "caption_sim")


@dataclass(frozen=True)
class ScoreBundle:
    """Per-branch scores for one video, plus their weighted fusion."""

    video_name: str
    fused: float
    aesthetic: float | None = None
    technical: float | None = None
    explicit_prompt: float | None = None
    implicit_text: float | None = None
    caption_sim: float | None = None

    def to_dict(self) -> dict:
        return {
            "video_name": self.video_name,
            "fused": self.fused,
            "aesthetic": self.aesthetic,
            "technical": self.technical,
            "explicit_prompt": self.explicit_prompt,
            "implicit_text": self.implicit_text,
            "caption_sim": self.caption_sim,
        }


def _component_seed(global_seed: int, name: str) -> int:
    return stable_hash(f"{global_seed}/{name}", 2**31 - 1)


def _encoder_spec(cfg: EncoderConfig, global_seed: int) -> EncoderSpec:
    return EncoderSpec(
        kind=cfg.kind,
        seed=_component_seed(global_seed, f"encoder:{cfg.seed_offset}"),
        channels=cfg.channels,
        patch=cfg.patch,
    )


class QualityNet(nn.Module):
    """Multi-branch quality scorer driven entirely by a TrainConfig."""

    def __init__(self, cfg: TrainConfig):
        super().__init__()
        self.cfg = cfg
        seed = cfg.seed
        t = cfg.branches

        if cfg.aux_classification and not (t.aesthetic or t.technical or t.explicit_prompt):
            raise ConfigError(
                "auxiliary classification needs at least one pooled visual branch "
                "(aesthetic, technical, or explicit_prompt)"
            )

        self.aesthetic_encoder = video_encoder_registry.get(cfg.aesthetic_encoder.kind)(
            _encoder_spec(cfg.aesthetic_encoder, seed)
        )
        self.technical_encoder = video_encoder_registry.get(cfg.technical_encoder.kind)(
            _encoder_spec(cfg.technical_encoder, seed)
        )
        self.text_encoder = text_encoder_registry.get(cfg.text_encoder.kind)(
            _encoder_spec(cfg.text_encoder, seed)
        )
        if cfg.implicit_shares_encoder:
            self.implicit_encoder = self.aesthetic_encoder
        else:
            self.implicit_encoder = video_encoder_registry.get(cfg.implicit_encoder.kind)(
                _encoder_spec(cfg.implicit_encoder, seed)
            )

        d = cfg.attention.d
        c_vis = cfg.aesthetic_encoder.channels
        c_tech = cfg.technical_encoder.channels
        c_text = cfg.text_encoder.channels

        self.aesthetic_pool = AttentionParams(
            c_vis, d, head_count=cfg.attention.head_count,
            output_proj=cfg.attention.output_proj, seed=_component_seed(seed, "pool:aesthetic"),
        )
        self.technical_pool = AttentionParams(
            c_tech, d, head_count=cfg.attention.head_count,
            output_proj=cfg.attention.output_proj, seed=_component_seed(seed, "pool:technical"),
        )
        self.cross_pool = AttentionParams(
            c_vis, d, head_count=cfg.attention.head_count, query_width=c_text,
            output_proj=cfg.attention.output_proj, seed=_component_seed(seed, "pool:cross"),
        )
        self.aesthetic_head = ScoreHead(d, seed=_component_seed(seed, "head:aesthetic"))
        self.technical_head = ScoreHead(d, seed=_component_seed(seed, "head:technical"))
        self.explicit_head = ScoreHead(d, seed=_component_seed(seed, "head:explicit"))
        self.implicit_params = ImplicitScoreParams(
            cfg.implicit_encoder.channels if not cfg.implicit_shares_encoder else c_vis,
            seed=_component_seed(seed, "head:implicit"),
        )
        self.classifier = (
            DomainClassifier(d, seed=_component_seed(seed, "head:classifier"))
            if cfg.aux_classification
            else None
        )

        # hard-prompt embeddings are computed once and kept frozen as buffers
        pairs = []
        for idx, pc in enumerate(cfg.text_pairs):
            pair = TextPair.from_encoder(pc.positive, pc.negative, self.text_encoder)
            self.register_buffer(f"_pair{idx}_pos", pair.f_pos)
            self.register_buffer(f"_pair{idx}_neg", pair.f_neg)
            pairs.append((pc.positive, pc.negative))
        self._pair_texts = tuple(pairs)

    def text_pairs(self) -> tuple[TextPair, TextPair]:
        out = []
        for idx, (pos, neg) in enumerate(self._pair_texts):
            out.append(
                TextPair(
                    positive=pos,
                    negative=neg,
                    f_pos=getattr(self, f"_pair{idx}_pos"),
                    f_neg=getattr(self, f"_pair{idx}_neg"),
                )
            )
        return tuple(out)

    def backbone_parameters(self) -> list[nn.Parameter]:
        mods = {
            id(m): m
            for m in (
                self.aesthetic_encoder,
                self.technical_encoder,
                self.implicit_encoder,
                self.text_encoder,
            )
        }
        seen: dict[int, nn.Parameter] = {}
        for m in mods.values():
            for p in m.parameters():
                seen[id(p)] = p
        return list(seen.values())

    def head_parameters(self) -> list[nn.Parameter]:
        backbone_ids = {id(p) for p in self.backbone_parameters()}
        return [p for p in self.parameters() if id(p) not in backbone_ids]

    def forward_one(self, inputs: VideoInputs) -> dict[str, torch.Tensor]:
        """Branch scores and pooled embeddings for one video."""
        t = self.cfg.branches
        out: dict[str, torch.Tensor] = {}
        pooled: list[torch.Tensor] = []

        aesthetic_tokens = None
        if t.aesthetic or t.explicit_prompt:
            aesthetic_tokens = self.aesthetic_encoder(inputs.resized)

        if t.aesthetic:
            emb = attention_pool(aesthetic_tokens, self.aesthetic_pool)
            pooled.append(emb)
            out["aesthetic"] = self.aesthetic_head(emb)
        if t.technical:
            emb = attention_pool(self.technical_encoder(inputs.fragments), self.technical_pool)
            pooled.append(emb)
            out["technical"] = self.technical_head(emb)
        if t.explicit_prompt:
            eot = self.text_encoder(inputs.record.prompt).eot
            emb = text2video_cross_attention(eot, aesthetic_tokens, self.cross_pool)
            pooled.append(emb)
            out["explicit_prompt"] = self.explicit_head(emb)
        if t.implicit_text:
            feats = frame_features(inputs.cropped, self.implicit_encoder)
            pairs = self.text_pairs()
            s_a0 = affinity_score(feats, pairs[0])
            s_a1 = affinity_score(feats, pairs[1])
            s_f = self.implicit_params.feature_score(feats.mean(dim=0))
            out["implicit_text"] = self.implicit_params.combine(s_f, s_a0, s_a1)

        if pooled:
            out["_pooled"] = torch.stack(pooled).mean(dim=0)
        return out

    def fuse(self, branch_scores: dict[str, torch.Tensor], caption_sim: float | None) -> torch.Tensor:
        w = self.cfg.fusion_weights
        parts = [
            getattr(w, name) * branch_scores[name]
            for name in ("aesthetic", "technical", "explicit_prompt", "implicit_text")
            if name in branch_scores
        ]
        if self.cfg.branches.caption_sim and caption_sim is not None:
            dtype = parts[0].dtype if parts else torch.float32
            parts.append(torch.as_tensor(w.caption_sim * caption_sim, dtype=dtype))
        if not parts:
            raise ConfigError("no enabled branch produced a score")
        return torch.stack([p.squeeze() for p in parts]).sum()

    def forward(self, batch: list[VideoInputs]) -> tuple[torch.Tensor, torch.Tensor | None, list[dict]]:
        """Fused scores for a batch, domain logits when enabled, raw branch dicts."""
        fused = []
        logits = []
        raw = []
        for inputs in batch:
            scores = self.forward_one(inputs)
            fused.append(self.fuse(scores, inputs.caption_similarity))
            if self.classifier is not None:
                logits.append(self.classifier(scores["_pooled"]))
            raw.append(scores)
        fused_t = torch.stack(fused)
        logits_t = torch.stack(logits) if logits else None
        return fused_t, logits_t, raw

    def score_bundle(self, inputs: VideoInputs) -> ScoreBundle:
        with torch.no_grad():
            scores = self.forward_one(inputs)
            fused = self.fuse(scores, inputs.caption_similarity)
        def val(name):
            return float(scores[name]) if name in scores else None
        return ScoreBundle(
            video_name=inputs.record.video_name,
            fused=float(fused),
            aesthetic=val("aesthetic"),
            technical=val("technical"),
            explicit_prompt=val("explicit_prompt"),
            implicit_text=val("implicit_text"),
            caption_sim=inputs.caption_similarity if self.cfg.branches.caption_sim else None,
        )
