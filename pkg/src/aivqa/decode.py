"""Clip decoding: turn a video file into a float32 frame array in [0, 1].

Decoders are looked up by file extension.  Array fixtures (.npy/.npz) need
only numpy; container formats (.mp4 and friends) go through OpenCV, which is
an optional extra and imported lazily.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError, SchemaError
from .utils import Registry

decoder_registry = Registry("decoder")


def _to_float01(frames: np.ndarray, path: Path) -> np.ndarray:
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise SchemaError(
            f"{path}: expected frames shaped (t, h, w, 3), got {frames.shape}"
        )
    if frames.dtype == np.uint8:
        return frames.astype(np.float32) / 255.0
    frames = frames.astype(np.float32)
    if frames.size and (frames.min() < 0.0 or frames.max() > 1.0):
        raise SchemaError(f"{path}: float frames must already lie in [0, 1]")
    return frames


def decode_array_file(path: Path) -> np.ndarray:
    if path.suffix == ".npz":
        with np.load(path) as bundle:
            if "frames" not in bundle:
                raise SchemaError(f"{path}: .npz clip must contain a 'frames' array")
            frames = bundle["frames"]
    else:
        frames = np.load(path)
    return _to_float01(np.asarray(frames), path)


def decode_cv2(path: Path) -> np.ndarray:
    try:
        import cv2
    except ImportError:
        raise ConfigError(
            f"decoding {path.suffix} files requires the 'video' extra (opencv)"
        ) from None
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise SchemaError(f"could not open video file {path}")
    frames = []
    try:
        while True:
            ok, bgr = cap.read()
            if not ok:
                break
            frames.append(cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB))
    finally:
        cap.release()
    if not frames:
        raise SchemaError(f"{path}: video contains no decodable frames")
    return _to_float01(np.stack(frames), path)


decoder_registry.register(".npy", decode_array_file)
decoder_registry.register(".npz", decode_array_file)
for _ext in (".mp4", ".avi", ".mkv", ".mov", ".webm"):
    decoder_registry.register(_ext, decode_cv2)


def decode_video(path: str | Path) -> np.ndarray:
    """Decode ``path`` to (t, h, w, 3) float32 in [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"video file not found: {path}")
    decoder = decoder_registry.get(path.suffix.lower())
    return decoder(path)
