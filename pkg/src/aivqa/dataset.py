"""Manifest ingestion and the flat-file formats the pipeline reads and writes.

The challenge data ships as a CSV keyed by video filename.  Filenames follow
the ``<video id>_<generator id>.mp4`` convention, which lets us recover the
generator (domain) label when the manifest does not carry it explicitly.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    DomainRangeError,
    DuplicateVideoIdError,
    FilenameParseError,
    SchemaError,
)

NUM_DOMAINS = 10

MANIFEST_COLUMNS = ("video_name", "prompt", "mos", "domain")
SPLIT_TAGS = ("train", "val", "test")

_FILENAME_RE = re.compile(r"^(\d+)_(\d+)\.mp4$")
_STEM_RE = re.compile(r"^(\d+)_(\d+)$")


@dataclass(frozen=True)
class VideoRecord:
    video_name: str
    video_path: Path
    prompt: str
    video_id: int
    mos: float | None = None
    domain_label: int | None = None

    def __post_init__(self):
        if not self.prompt:
            raise SchemaError(f"empty prompt for video {self.video_name!r}")
        if self.video_id < 0:
            raise SchemaError(f"negative video_id for {self.video_name!r}")
        if self.domain_label is not None and not 0 <= self.domain_label < NUM_DOMAINS:
            raise DomainRangeError(
                f"domain label {self.domain_label} for {self.video_name!r} "
                f"outside [0, {NUM_DOMAINS - 1}]"
            )


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[VideoRecord, ...]
    split_tag: str

    def __post_init__(self):
        if self.split_tag not in SPLIT_TAGS:
            raise SchemaError(f"split_tag must be one of {SPLIT_TAGS}, got {self.split_tag!r}")
        ids = [r.video_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateVideoIdError(f"duplicate video ids in manifest: {dupes}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def video_names(self) -> list[str]:
        return [r.video_name for r in self.records]


def parse_video_filename(name: str) -> tuple[int, int]:
    """Split ``"<x>_<y>.mp4"`` into (video_id, domain_label)."""
    m = _FILENAME_RE.match(name)
    if m is None:
        raise FilenameParseError(
            f"filename {name!r} does not match the '<digits>_<digits>.mp4' convention"
        )
    video_id, domain = int(m.group(1)), int(m.group(2))
    if domain >= NUM_DOMAINS:
        raise DomainRangeError(
            f"domain label {domain} in {name!r} outside [0, {NUM_DOMAINS - 1}]"
        )
    return video_id, domain


def format_video_filename(video_id: int, domain_label: int) -> str:
    """Inverse of :func:`parse_video_filename`."""
    if video_id < 0 or not 0 <= domain_label < NUM_DOMAINS:
        raise ValueError(f"cannot format filename for ({video_id}, {domain_label})")
    return f"{video_id}_{domain_label}.mp4"


def _parse_stem(name: str) -> tuple[int, int] | None:
    """Filename-convention parse that tolerates non-mp4 extensions.

    Synthetic fixtures store frames as ``.npy`` with the same stem convention;
    returns None when the stem does not conform instead of raising.
    """
    m = _STEM_RE.match(Path(name).stem)
    if m is None:
        return None
    video_id, domain = int(m.group(1)), int(m.group(2))
    if domain >= NUM_DOMAINS:
        raise DomainRangeError(
            f"domain label {domain} in {name!r} outside [0, {NUM_DOMAINS - 1}]"
        )
    return video_id, domain


def load_manifest(
    path: str | Path,
    split_tag: str,
    video_root: str | Path | None = None,
) -> DatasetManifest:
    """Read a manifest CSV (``video_name,prompt,mos,domain``) into records.

    Train manifests must provide ``mos`` for every row and a domain label for
    every row, either in the ``domain`` column or derivable from the filename.
    An explicit ``domain`` value wins over the filename-derived one.  Video
    paths are resolved against ``video_root`` (default: the manifest's
    directory).
    """
    path = Path(path)
    if split_tag not in SPLIT_TAGS:
        raise SchemaError(f"split_tag must be one of {SPLIT_TAGS}, got {split_tag!r}")
    root = Path(video_root) if video_root is not None else path.parent

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = {"video_name", "prompt"}
        if split_tag == "train":
            required.add("mos")
        missing = required - set(header)
        if missing:
            raise SchemaError(
                f"manifest {path} is missing required column(s) {sorted(missing)} "
                f"for split {split_tag!r}"
            )
        rows = list(reader)

    records = []
    for idx, row in enumerate(rows):
        name = (row.get("video_name") or "").strip()
        if not name:
            raise SchemaError(f"row {idx} of {path} has an empty video_name")
        prompt = row.get("prompt") or ""
        parsed = _parse_stem(name)

        mos_raw = (row.get("mos") or "").strip()
        if mos_raw:
            try:
                mos = float(mos_raw)
            except ValueError:
                raise SchemaError(f"row {idx} of {path}: mos {mos_raw!r} is not a number") from None
        elif split_tag == "train":
            raise SchemaError(f"row {idx} of {path}: train manifests require a mos value")
        else:
            mos = None

        domain_raw = (row.get("domain") or "").strip()
        if domain_raw:
            try:
                domain = int(domain_raw)
            except ValueError:
                raise SchemaError(
                    f"row {idx} of {path}: domain {domain_raw!r} is not an integer"
                ) from None
        elif parsed is not None:
            domain = parsed[1]
        elif split_tag == "train":
            raise SchemaError(
                f"row {idx} of {path}: no domain column value and filename {name!r} "
                "does not encode one"
            )
        else:
            domain = None

        video_id = parsed[0] if parsed is not None else idx
        records.append(
            VideoRecord(
                video_name=name,
                video_path=root / name,
                prompt=prompt,
                video_id=video_id,
                mos=mos,
                domain_label=domain,
            )
        )

    return DatasetManifest(records=tuple(records), split_tag=split_tag)


def split_manifest(
    manifest: DatasetManifest, val_fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministic disjoint train/val partition of one manifest."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    n = len(manifest.records)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_val = int(round(n * val_fraction))
    n_val = min(max(n_val, 1), n - 1)
    val_idx = set(perm[:n_val].tolist())

    train_records = tuple(r for i, r in enumerate(manifest.records) if i not in val_idx)
    val_records = tuple(r for i, r in enumerate(manifest.records) if i in val_idx)
    return (
        DatasetManifest(records=train_records, split_tag="train"),
        DatasetManifest(records=val_records, split_tag="val"),
    )


def write_predictions(path: str | Path, rows) -> None:
    """Write the ``video_name,score`` prediction CSV (scores at 6 decimals)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_name", "score"])
        for name, score in rows:
            writer.writerow([name, f"{float(score):.6f}"])


def read_score_csv(path: str | Path) -> list[tuple[str, float]]:
    """Read a two-column score CSV; the value column may be ``score`` or ``mos``."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "video_name" not in header:
            raise SchemaError(f"{path} lacks a video_name column")
        value_col = next((c for c in ("score", "mos") if c in header), None)
        if value_col is None:
            raise SchemaError(f"{path} lacks a score/mos column")
        out = []
        for idx, row in enumerate(reader):
            raw = (row.get(value_col) or "").strip()
            try:
                out.append(((row.get("video_name") or "").strip(), float(raw)))
            except ValueError:
                raise SchemaError(f"row {idx} of {path}: {value_col} {raw!r} is not a number") from None
    return out


def align_by_name(
    left: list[tuple[str, float]], right: list[tuple[str, float]]
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Join two score lists on video_name; error if the name sets differ."""
    left_map = dict(left)
    right_map = dict(right)
    if len(left_map) != len(left) or len(right_map) != len(right):
        raise SchemaError("duplicate video_name entries in a score CSV")
    if left_map.keys() != right_map.keys():
        only_left = sorted(left_map.keys() - right_map.keys())
        only_right = sorted(right_map.keys() - left_map.keys())
        raise AlignmentError(
            f"video sets differ; only in first: {only_left}, only in second: {only_right}"
        )
    names = [name for name, _ in left]
    a = np.array([left_map[n] for n in names], dtype=np.float64)
    b = np.array([right_map[n] for n in names], dtype=np.float64)
    return names, a, b
