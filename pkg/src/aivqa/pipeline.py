"""Training, prediction, evaluation, and ablation orchestration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .captioning import (
    build_icl_prompt,
    caption_similarity,
    caption_videos,
    captioner_registry,
    embedder_registry,
    read_caption_cache,
    write_caption_cache,
    write_similarity_csv,
)
from .checkpoint import load_model_checkpoint, save_model_checkpoint
from .config import TrainConfig, ablation_ladder
from .dataset import (
    DatasetManifest,
    align_by_name,
    read_score_csv,
    split_manifest,
    write_predictions,
)
from .decode import decode_video
from .errors import (
    DegenerateBatchError,
    DivergenceError,
    SchemaError,
    UndefinedCorrelationError,
    VideoQAError,
)
from .losses import LossWeights, combined_loss
from .metrics import EvalReport, eval_report
from .model import QualityNet
from .sampling import sample_frames_uniform
from .views import VideoInputs, prepare_inputs


@dataclass(frozen=True)
class TrainResult:
    best_checkpoint: str
    last_checkpoint: str
    log_path: str
    epochs_run: int
    steps_run: int
    best_epoch: int | None
    best_val: dict | None


@dataclass(frozen=True)
class PredictResult:
    out_csv: str
    rows: int
    failures: tuple[tuple[str, str], ...]
    bundle_log: str | None = None


def make_batches(mos_values: list[float], batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    """Shuffled index batches, each guaranteed to hold >= 2 distinct MOS values.

    Constant batches are repaired by swapping with a donor batch that stays
    distinct; unrepairable ones are dropped (so are 1-element tails).
    """
    n = len(mos_values)
    if n < 2 or len(set(mos_values)) < 2:
        raise DegenerateBatchError(
            "training needs >= 2 videos with >= 2 distinct MOS values"
        )
    order = rng.permutation(n).tolist()
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches[-1]) < 2:
        batches.pop()

    def distinct(batch: list[int]) -> bool:
        return len({mos_values[i] for i in batch}) >= 2

    for bi, batch in enumerate(batches):
        if distinct(batch):
            continue
        v = mos_values[batch[0]]
        done = False
        for bj, donor in enumerate(batches):
            if bj == bi or done:
                continue
            for k, x in enumerate(donor):
                if mos_values[x] == v:
                    continue
                rest = donor[:k] + donor[k + 1:]
                if not any(mos_values[z] != v for z in rest):
                    continue  # swap would leave the donor constant
                donor[k], batch[0] = batch[0], x
                done = True
                break

    batches = [b for b in batches if distinct(b)]
    if not batches:
        raise DegenerateBatchError("no batch with >= 2 distinct MOS values could be formed")
    return batches


def _validate_train_manifest(manifest: DatasetManifest, cfg: TrainConfig) -> None:
    for r in manifest:
        if r.mos is None:
            raise SchemaError(f"training requires a MOS value for {r.video_name!r}")
        if cfg.aux_classification and r.domain_label is None:
            raise SchemaError(
                f"auxiliary classification requires a domain label for {r.video_name!r}"
            )


def _evaluate_inputs(model: QualityNet, inputs: list[VideoInputs]) -> EvalReport:
    with torch.no_grad():
        preds = [float(model.fuse(model.forward_one(v), v.caption_similarity)) for v in inputs]
    targets = [v.record.mos for v in inputs]
    return eval_report(preds, targets)


def train(
    cfg: TrainConfig,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest | None,
    out_dir: str | Path,
) -> TrainResult:
    """Two-phase fit: heads only on frozen encoders, then everything."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.deterministic:
        torch.set_num_threads(1)

    if val_manifest is None:
        train_manifest, val_manifest = split_manifest(train_manifest, cfg.val_fraction, cfg.seed)
    _validate_train_manifest(train_manifest, cfg)

    model = QualityNet(cfg)
    weights = LossWeights(alpha=cfg.loss.alpha, beta=cfg.loss.beta, rank_margin=cfg.loss.rank_margin)

    def prepare_train(epoch: int | None):
        return [
            prepare_inputs(r, cfg, center_fragments=False, epoch=epoch)
            for r in train_manifest
        ]

    train_inputs = prepare_train(None)
    val_inputs = [prepare_inputs(r, cfg, center_fragments=True) for r in val_manifest]
    mos_values = [r.mos for r in train_manifest]

    log_path = out_dir / "train_log.jsonl"
    best_path = out_dir / "best.ckpt"
    last_path = out_dir / "last.ckpt"
    rng = np.random.default_rng(cfg.seed)
    opt_cfg = cfg.optimizer

    step = 0
    best_main = -math.inf
    best_epoch: int | None = None
    best_val: dict | None = None
    config_dict = cfg.model_dump(mode="json")

    phases = (
        ("probe", cfg.schedule.linear_probe_epochs),
        ("finetune", cfg.schedule.finetune_epochs),
    )
    epoch = 0
    with open(log_path, "w", encoding="utf-8") as log:

        def emit(obj: dict) -> None:
            log.write(json.dumps(obj, sort_keys=True) + "\n")
            log.flush()

        for phase_name, phase_epochs in phases:
            if phase_epochs == 0:
                continue
            backbone = model.backbone_parameters()
            heads = model.head_parameters()
            if phase_name == "probe":
                for p in backbone:
                    p.requires_grad_(False)
                optimizer = torch.optim.AdamW(
                    heads, lr=opt_cfg.lr_heads, weight_decay=opt_cfg.weight_decay
                )
            else:
                for p in backbone:
                    p.requires_grad_(True)
                optimizer = torch.optim.AdamW(
                    [
                        {"params": backbone, "lr": opt_cfg.lr_backbone},
                        {"params": heads, "lr": opt_cfg.lr_heads},
                    ],
                    weight_decay=opt_cfg.weight_decay,
                )

            for _ in range(phase_epochs):
                if cfg.sampling.epoch_varying_fragments:
                    train_inputs = prepare_train(epoch)
                for batch_idx in make_batches(mos_values, cfg.batch_size, rng):
                    batch = [train_inputs[i] for i in batch_idx]
                    records = [train_manifest.records[i] for i in batch_idx]
                    fused, logits, _ = model(batch)
                    target = torch.tensor([r.mos for r in records], dtype=torch.float64)
                    labels = (
                        torch.tensor([r.domain_label for r in records], dtype=torch.long)
                        if logits is not None
                        else None
                    )
                    total, parts = combined_loss(fused, target, logits, labels, weights)
                    if not math.isfinite(parts["total"]):
                        raise DivergenceError(f"non-finite loss at step {step}: {parts}")
                    optimizer.zero_grad()
                    total.backward()
                    torch.nn.utils.clip_grad_norm_(
                        [p for p in model.parameters() if p.requires_grad],
                        opt_cfg.grad_clip,
                    )
                    optimizer.step()
                    emit({"step": step, **parts})
                    step += 1

                epoch_row: dict = {"epoch": epoch, "phase": phase_name}
                try:
                    report = _evaluate_inputs(model, val_inputs)
                    epoch_row.update(
                        val_plcc=report.plcc,
                        val_srocc=report.srocc,
                        val_main_score=report.main_score,
                    )
                    if report.main_score > best_main:
                        best_main = report.main_score
                        best_epoch = epoch
                        best_val = report.to_dict()
                        save_model_checkpoint(
                            best_path, model, config_dict, epoch,
                            rng_state=rng.bit_generator.state,
                        )
                except UndefinedCorrelationError as exc:
                    epoch_row["val_error"] = str(exc)
                emit(epoch_row)
                epoch += 1

    save_model_checkpoint(last_path, model, config_dict, epoch - 1, rng_state=rng.bit_generator.state)
    if best_epoch is None:
        save_model_checkpoint(best_path, model, config_dict, epoch - 1, rng_state=rng.bit_generator.state)
    return TrainResult(
        best_checkpoint=str(best_path),
        last_checkpoint=str(last_path),
        log_path=str(log_path),
        epochs_run=epoch,
        steps_run=step,
        best_epoch=best_epoch,
        best_val=best_val,
    )


def _caption_similarities(
    model_cfg: TrainConfig, manifest: DatasetManifest
) -> dict[str, tuple[str, float, float]]:
    """video_name -> (caption, cosine, normalized) for every decodable video."""
    cap_cfg = model_cfg.caption
    captioner = captioner_registry.get(cap_cfg.captioner)()
    embedder = embedder_registry.get(cap_cfg.embedder)()
    icl = build_icl_prompt(
        exemplars=cap_cfg.exemplars, manifest=manifest, seed=cap_cfg.exemplar_seed
    )
    cache = read_caption_cache(cap_cfg.cache_path) if cap_cfg.cache_path else {}

    uncached = [r for r in manifest if r.video_name not in cache]
    stacks = []
    decodable = []
    for r in uncached:
        try:
            frames = sample_frames_uniform(
                decode_video(r.video_path), model_cfg.sampling.frame_count
            )
        except (SchemaError, OSError):
            continue
        stacks.append(frames)
        decodable.append(r)
    captions = caption_videos(stacks, captioner, icl, max_workers=cap_cfg.max_workers)
    for r, caption in zip(decodable, captions):
        cache[r.video_name] = caption

    if cap_cfg.cache_path:
        write_caption_cache(cap_cfg.cache_path, sorted(cache.items()))

    out = {}
    for r in manifest:
        if r.video_name not in cache or not r.prompt:
            continue
        sim = caption_similarity(cache[r.video_name], r.prompt, embedder)
        out[r.video_name] = (cache[r.video_name], sim.cosine, sim.normalized)
    return out


def predict(
    checkpoint_path: str | Path,
    manifest: DatasetManifest,
    out_csv: str | Path,
    bundle_log: str | Path | None = None,
) -> PredictResult:
    """Score every manifest row; per-row failures are collected, not fatal."""
    model, cfg, _ = load_model_checkpoint(checkpoint_path)
    if cfg.deterministic:
        torch.set_num_threads(1)
    model.eval()

    similarities: dict[str, tuple[str, float, float]] = {}
    if cfg.branches.caption_sim:
        similarities = _caption_similarities(cfg, manifest)

    rows: list[tuple[str, float]] = []
    bundles = []
    failures: list[tuple[str, str]] = []
    for record in manifest:
        try:
            inputs = prepare_inputs(record, cfg, center_fragments=True)
            if cfg.branches.caption_sim and record.video_name in similarities:
                inputs = inputs.with_caption_similarity(similarities[record.video_name][2])
            bundle = model.score_bundle(inputs)
        except (VideoQAError, OSError) as exc:
            failures.append((record.video_name, str(exc)))
            continue
        rows.append((bundle.video_name, bundle.fused))
        bundles.append(bundle)

    write_predictions(out_csv, rows)
    if bundle_log is not None:
        with open(bundle_log, "w", encoding="utf-8") as fh:
            for bundle in bundles:
                fh.write(json.dumps(bundle.to_dict(), sort_keys=True) + "\n")
    return PredictResult(
        out_csv=str(out_csv),
        rows=len(rows),
        failures=tuple(failures),
        bundle_log=str(bundle_log) if bundle_log is not None else None,
    )


def evaluate(pred_csv: str | Path, target_csv: str | Path) -> EvalReport:
    _, pred, target = align_by_name(read_score_csv(pred_csv), read_score_csv(target_csv))
    return eval_report(pred, target)


def caption_sim_run(
    cfg: TrainConfig,
    manifest: DatasetManifest,
    out_csv: str | Path,
) -> int:
    """Caption every video, score similarity vs. its prompt, write the CSV."""
    for r in manifest:
        if not r.prompt:
            raise SchemaError(f"caption similarity needs a prompt for {r.video_name!r}")
    similarities = _caption_similarities(cfg, manifest)
    rows = [
        (r.video_name, similarities[r.video_name][1], similarities[r.video_name][2])
        for r in manifest
        if r.video_name in similarities
    ]
    write_similarity_csv(out_csv, rows)
    return len(rows)


def run_ablation(
    base_cfg: TrainConfig,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest | None,
    out_dir: str | Path,
) -> list[tuple[str, float | None]]:
    """Run the cumulative toggle ladder; returns (row label, val MainScore)."""
    out_dir = Path(out_dir)
    results = []
    base = base_cfg.model_dump(mode="json")
    for idx, (label, patch) in enumerate(ablation_ladder()):
        merged = json.loads(json.dumps(base))
        for key, value in patch.items():
            if isinstance(value, dict):
                merged.setdefault(key, {}).update(value)
            else:
                merged[key] = value
        cfg = TrainConfig.model_validate(merged)
        result = train(cfg, train_manifest, val_manifest, out_dir / f"row{idx}")
        main = result.best_val["main_score"] if result.best_val else None
        results.append((label, main))
    return results
