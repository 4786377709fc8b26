"""Procedural desk-scale dataset: 16 tiny clips with known quality structure.

Quality (MOS) tracks mean brightness monotonically, each clip carries a
generator-specific spatial pattern so the domain classifier has signal, and
prompts verbalize the brightness band so the text branches correlate with
quality instead of fighting it.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import NUM_DOMAINS

BRIGHTNESS_WORDS = ((0.35, "dark"), (0.65, "gray"), (1.01, "bright"))


def _brightness_word(value: float) -> str:
    for limit, word in BRIGHTNESS_WORDS:
        if value < limit:
            return word
    return BRIGHTNESS_WORDS[-1][1]


def generate_synthetic_dataset(
    root: str | Path,
    n_videos: int = 16,
    frames: int = 8,
    side: int = 64,
    seed: int = 0,
) -> Path:
    """Write n_videos .npy clips plus manifest.csv under root; returns manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    yy, xx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    rows = []
    for i in range(n_videos):
        domain = i % NUM_DOMAINS
        brightness = 0.15 + 0.7 * (i / max(n_videos - 1, 1))
        mos = 1.0 + 4.0 * (i / max(n_videos - 1, 1))

        # generator signature: a fixed angled stripe pattern per domain
        angle = 2 * np.pi * domain / NUM_DOMAINS
        pattern = 0.05 * np.sin(
            (np.cos(angle) * xx + np.sin(angle) * yy) * (2 * np.pi / 16.0)
        )

        clip = np.empty((frames, side, side, 3), dtype=np.float32)
        for f in range(frames):
            drift = 0.01 * np.sin(2 * np.pi * f / frames)
            frame = brightness + drift + pattern + rng.normal(0.0, 0.02, size=(side, side))
            clip[f] = np.clip(frame, 0.0, 1.0)[..., None].repeat(3, axis=-1)

        name = f"{i}_{domain}.npy"
        np.save(root / name, clip)
        prompt = f"a {_brightness_word(brightness)} striped scene number {i}"
        rows.append((name, prompt, f"{mos:.3f}", str(domain)))

    manifest_path = root / "manifest.csv"
    with open(manifest_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_name", "prompt", "mos", "domain"])
        writer.writerows(rows)
    return manifest_path
