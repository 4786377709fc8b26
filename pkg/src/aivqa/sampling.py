"""Per-branch frame preparation.

Two input views feed the model: whole frames resized to 224x224 for the
aesthetic and text-conditioned branches, and a grid of small fragments
stitched back together for the technical branch, which needs native-resolution
texture rather than a smoothed global view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError

DEFAULT_SIDE = 224
DEFAULT_GRID = 7
DEFAULT_FRAGMENT_SIDE = 32


@dataclass(frozen=True)
class FrameStack:
    """A sampled, spatially prepared batch of frames for one video."""

    data: np.ndarray  # (frames, height, width, 3) float32
    sample_kind: str  # "resized" | "fragments"
    source_id: int

    def __post_init__(self):
        if self.data.ndim != 4 or self.data.shape[-1] != 3:
            raise SchemaError(f"FrameStack data must be (t, h, w, 3), got {self.data.shape}")
        if self.data.shape[0] < 1:
            raise SchemaError("FrameStack needs at least one frame")
        if self.sample_kind not in ("resized", "fragments"):
            raise SchemaError(f"unknown sample_kind {self.sample_kind!r}")

    @property
    def frame_count(self) -> int:
        return self.data.shape[0]


def sample_frames_uniform(frames: np.ndarray, target_count: int) -> np.ndarray:
    """Pick target_count frames spread evenly over the clip.

    Short clips keep every frame and repeat the last one to pad; longer clips
    take indices round(i*(n-1)/(target_count-1)), which are non-decreasing and
    hit both endpoints.
    """
    if target_count < 1:
        raise ValueError(f"target_count must be >= 1, got {target_count}")
    n = frames.shape[0]
    if n == 0:
        raise SchemaError("cannot sample frames from an empty video")
    if n <= target_count:
        idx = list(range(n)) + [n - 1] * (target_count - n)
    else:
        denom = max(target_count - 1, 1)
        idx = [int(np.floor(i * (n - 1) / denom + 0.5)) for i in range(target_count)]
    return frames[np.array(idx)]


def bilinear_resize(frames: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers and edge clamping.

    Matching-size inputs pass through untouched so 224x224 sources are exact.
    """
    t, h, w, c = frames.shape
    if (h, w) == (out_h, out_w):
        return frames.astype(np.float32, copy=True)

    src_y = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    src_x = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0f = np.floor(src_y)
    x0f = np.floor(src_x)
    wy = (src_y - y0f)[None, :, None, None]
    wx = (src_x - x0f)[None, None, :, None]

    y0 = np.clip(y0f.astype(np.int64), 0, h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, h - 1)
    x0 = np.clip(x0f.astype(np.int64), 0, w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, w - 1)

    fr = frames.astype(np.float64)
    top = fr[:, y0[:, None], x0[None, :], :] * (1 - wx) + fr[:, y0[:, None], x1[None, :], :] * wx
    bot = fr[:, y1[:, None], x0[None, :], :] * (1 - wx) + fr[:, y1[:, None], x1[None, :], :] * wx
    out = top * (1 - wy) + bot * wy
    return out.astype(np.float32)


def resize_frames(frames: np.ndarray, side: int = DEFAULT_SIDE, source_id: int = 0) -> FrameStack:
    """Whole-frame view: every frame resized to side x side."""
    if frames.shape[0] == 0:
        raise SchemaError("cannot resize an empty frame sequence")
    data = bilinear_resize(np.asarray(frames, dtype=np.float32), side, side)
    return FrameStack(data=data, sample_kind="resized", source_id=source_id)


def fragment_sample(
    frames: np.ndarray,
    grid: int = DEFAULT_GRID,
    fragment_side: int = DEFAULT_FRAGMENT_SIDE,
    seed: int = 0,
    center: bool = False,
    source_id: int = 0,
) -> FrameStack:
    """Technical-branch view: one fragment cropped per grid cell, composited.

    Offsets are drawn once per video so every frame is cropped at the same
    spot (temporal alignment). center=True skips the RNG entirely and crops
    cell centers, used for validation so val batches never consume randomness.
    Cells narrower than the fragment are upscaled before cropping.
    """
    if grid < 1 or fragment_side < 1:
        raise ValueError(f"grid and fragment_side must be >= 1, got ({grid}, {fragment_side})")
    frames = np.asarray(frames, dtype=np.float32)
    t, h, w, c = frames.shape
    if t == 0:
        raise SchemaError("cannot fragment-sample an empty frame sequence")

    rng = None if center else np.random.default_rng(seed)
    side = grid * fragment_side
    out = np.empty((t, side, side, c), dtype=np.float32)

    row_edges = [int(round(i * h / grid)) for i in range(grid + 1)]
    col_edges = [int(round(j * w / grid)) for j in range(grid + 1)]

    for gi in range(grid):
        for gj in range(grid):
            cell = frames[:, row_edges[gi]:row_edges[gi + 1], col_edges[gj]:col_edges[gj + 1], :]
            ch, cw = cell.shape[1], cell.shape[2]
            if ch < fragment_side or cw < fragment_side:
                cell = bilinear_resize(cell, max(ch, fragment_side), max(cw, fragment_side))
                ch, cw = cell.shape[1], cell.shape[2]
            if center:
                oy, ox = (ch - fragment_side) // 2, (cw - fragment_side) // 2
            else:
                oy = int(rng.integers(0, ch - fragment_side + 1))
                ox = int(rng.integers(0, cw - fragment_side + 1))
            out[
                :,
                gi * fragment_side:(gi + 1) * fragment_side,
                gj * fragment_side:(gj + 1) * fragment_side,
                :,
            ] = cell[:, oy:oy + fragment_side, ox:ox + fragment_side, :]

    return FrameStack(data=out, sample_kind="fragments", source_id=source_id)


def center_crop(frames: np.ndarray, side: int = DEFAULT_SIDE) -> np.ndarray:
    """Center crop to side x side, upscaling first when a dimension is short."""
    frames = np.asarray(frames, dtype=np.float32)
    t, h, w, c = frames.shape
    if h < side or w < side:
        frames = bilinear_resize(frames, max(h, side), max(w, side))
        t, h, w, c = frames.shape
    oy, ox = (h - side) // 2, (w - side) // 2
    return frames[:, oy:oy + side, ox:ox + side, :].copy()


def normalize(stack: FrameStack, mean, std) -> FrameStack:
    """Channelwise (x - mean) / std."""
    mean = np.asarray(mean, dtype=np.float32).reshape(1, 1, 1, -1)
    std = np.asarray(std, dtype=np.float32).reshape(1, 1, 1, -1)
    if np.any(std == 0):
        raise ValueError("normalization std must be nonzero")
    return FrameStack(
        data=(stack.data - mean) / std,
        sample_kind=stack.sample_kind,
        source_id=stack.source_id,
    )
