"""Per-video input preparation: decode once, derive every branch view.

Each video contributes three spatial views: whole frames resized (aesthetic
and prompt-conditioned branches), fragment composites (technical branch), and
a center crop (implicit text branch).  Views are normalized here so the model
never touches raw pixel ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import TrainConfig
from .dataset import VideoRecord
from .decode import decode_video
from .sampling import (
    FrameStack,
    center_crop,
    fragment_sample,
    normalize,
    resize_frames,
    sample_frames_uniform,
)
from .utils import stable_hash


@dataclass(frozen=True)
class VideoInputs:
    record: VideoRecord
    resized: FrameStack
    fragments: FrameStack
    cropped: FrameStack
    caption_similarity: float | None = None

    def with_caption_similarity(self, normalized: float) -> "VideoInputs":
        return replace(self, caption_similarity=normalized)


def fragment_seed(cfg_seed: int, video_id: int, epoch: int | None = None) -> int:
    """Per-video offset seed; mixing in the epoch is opt-in via config."""
    base = cfg_seed if epoch is None else stable_hash(f"{cfg_seed}:{epoch}", 2**31)
    return base ^ video_id


def prepare_inputs(
    record: VideoRecord,
    cfg: TrainConfig,
    center_fragments: bool = False,
    epoch: int | None = None,
) -> VideoInputs:
    """Decode one video and build all three normalized branch views.

    center_fragments=True picks cell-center fragments without consuming any
    randomness; training uses seeded offsets instead.
    """
    s = cfg.sampling
    frames = decode_video(record.video_path)
    frames = sample_frames_uniform(frames, s.frame_count)

    resized = resize_frames(frames, s.side, source_id=record.video_id)
    fragments = fragment_sample(
        frames,
        grid=s.grid,
        fragment_side=s.fragment_side,
        seed=fragment_seed(cfg.seed, record.video_id, epoch),
        center=center_fragments,
        source_id=record.video_id,
    )
    cropped = FrameStack(
        data=center_crop(frames, s.side),
        sample_kind="resized",
        source_id=record.video_id,
    )
    return VideoInputs(
        record=record,
        resized=normalize(resized, s.mean, s.std),
        fragments=normalize(fragments, s.mean, s.std),
        cropped=normalize(cropped, s.mean, s.std),
    )
