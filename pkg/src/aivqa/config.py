"""Configuration tree for training, prediction, and the service layer.

Everything is a pydantic model so the CLI and the HTTP API validate the same
way; a config file is the JSON dump of TrainConfig.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .prompt_affinity import DEFAULT_TEXT_PAIRS


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SamplingConfig(StrictModel):
    frame_count: int = Field(default=16, ge=1)
    side: int = Field(default=224, ge=1)
    grid: int = Field(default=7, ge=1)
    fragment_side: int = Field(default=32, ge=1)
    mean: tuple[float, float, float] = (0.5, 0.5, 0.5)
    std: tuple[float, float, float] = (0.5, 0.5, 0.5)
    # fragments are fixed per (seed, video) unless this re-seeds them each epoch
    epoch_varying_fragments: bool = False


class EncoderConfig(StrictModel):
    kind: str = "toy"
    channels: int = Field(default=64, ge=1)
    patch: int = Field(default=32, ge=1)
    seed_offset: int = 0


class BranchToggles(StrictModel):
    aesthetic: bool = True
    technical: bool = True
    explicit_prompt: bool = True
    implicit_text: bool = True
    caption_sim: bool = False

    @model_validator(mode="after")
    def _at_least_one_trainable(self):
        if not (self.aesthetic or self.technical or self.explicit_prompt or self.implicit_text):
            raise ValueError("at least one trainable branch must stay enabled")
        return self


class FusionWeights(StrictModel):
    aesthetic: float = 0.3
    technical: float = 0.3
    explicit_prompt: float = 0.2
    implicit_text: float = 0.1
    caption_sim: float = 0.1


class LossConfig(StrictModel):
    alpha: float = Field(default=0.3, ge=0.0)
    beta: float = Field(default=0.2, ge=0.0)
    rank_margin: float = Field(default=0.0, ge=0.0)
    # hook for a caption-similarity regularizer; off by default
    caption_reg_weight: float = Field(default=0.0, ge=0.0)


class OptimizerConfig(StrictModel):
    weight_decay: float = Field(default=0.05, ge=0.0)
    lr_backbone: float = Field(default=6.25e-5, gt=0.0)
    lr_heads: float = Field(default=6.25e-4, gt=0.0)
    grad_clip: float = Field(default=1.0, gt=0.0)


class ScheduleConfig(StrictModel):
    linear_probe_epochs: int = Field(default=10, ge=0)
    finetune_epochs: int = Field(default=15, ge=0)

    @property
    def total_epochs(self) -> int:
        return self.linear_probe_epochs + self.finetune_epochs

    @model_validator(mode="after")
    def _nonzero(self):
        if self.total_epochs < 1:
            raise ValueError("schedule must include at least one epoch")
        return self


class TextPairConfig(StrictModel):
    positive: str
    negative: str


class CaptionConfig(StrictModel):
    captioner: str = "frame-stats"
    embedder: str = "hashed-bow"
    exemplars: tuple[str, ...] | None = None
    exemplar_seed: int = 0
    cache_path: str | None = None
    max_workers: int = Field(default=4, ge=1)


class AttentionConfig(StrictModel):
    d: int = Field(default=64, ge=1)
    head_count: int = Field(default=1, ge=1)
    output_proj: bool = False

    @model_validator(mode="after")
    def _divisible(self):
        if self.d % self.head_count:
            raise ValueError(f"attention width {self.d} not divisible by {self.head_count} heads")
        return self


class TrainConfig(StrictModel):
    seed: int = 0
    batch_size: int = Field(default=8, ge=2)
    deterministic: bool = False
    val_fraction: float = Field(default=0.25, gt=0.0, lt=1.0)
    branches: BranchToggles = BranchToggles()
    fusion_weights: FusionWeights = FusionWeights()
    loss: LossConfig = LossConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    sampling: SamplingConfig = SamplingConfig()
    attention: AttentionConfig = AttentionConfig()
    aesthetic_encoder: EncoderConfig = EncoderConfig(seed_offset=11)
    technical_encoder: EncoderConfig = EncoderConfig(seed_offset=23)
    implicit_encoder: EncoderConfig = EncoderConfig(seed_offset=37)
    text_encoder: EncoderConfig = EncoderConfig(seed_offset=53, patch=1)
    # the implicit branch defaults to its own encoder; share to reuse aesthetic's
    implicit_shares_encoder: bool = False
    aux_classification: bool = True
    text_pairs: tuple[TextPairConfig, TextPairConfig] = tuple(
        TextPairConfig(positive=p, negative=n) for p, n in DEFAULT_TEXT_PAIRS
    )
    caption: CaptionConfig = CaptionConfig()


def config_from_dict(data: dict | None, overrides: dict | None = None) -> TrainConfig:
    """Validate a TrainConfig payload after applying dotted-key overrides."""
    data = dict(data or {})
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends through a non-object")
        node[parts[-1]] = value
    try:
        return TrainConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def load_config(path: str | Path | None, overrides: dict | None = None) -> TrainConfig:
    """Build a TrainConfig from a JSON file plus dotted-key overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data, overrides)


def parse_override(text: str) -> tuple[str, object]:
    """Parse one --set KEY=VALUE override; VALUE is JSON when it parses as such."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def ablation_ladder() -> list[tuple[str, dict]]:
    """The cumulative toggle rows exercised by the ablation runner.

    Visual branches stay on throughout; the rows switch the three additions
    on in the documented order.
    """
    rows = [
        ("baseline", (False, False, False)),
        ("+explicit", (True, False, False)),
        ("+implicit", (False, True, False)),
        ("+explicit+implicit", (True, True, False)),
        ("+explicit+aux-cls", (True, False, True)),
        ("+explicit+implicit+aux-cls", (True, True, True)),
    ]
    out = []
    for label, (explicit, implicit, aux) in rows:
        out.append(
            (
                label,
                {
                    "branches": {
                        "aesthetic": True,
                        "technical": True,
                        "explicit_prompt": explicit,
                        "implicit_text": implicit,
                        "caption_sim": False,
                    },
                    "aux_classification": aux,
                },
            )
        )
    return out
