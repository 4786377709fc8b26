"""Quality assessment for generated videos: multi-branch scoring, correlation
training, and evaluation tooling."""

__version__ = "0.1.0"

from .config import TrainConfig, load_config
from .dataset import DatasetManifest, VideoRecord, load_manifest, parse_video_filename
from .metrics import EvalReport, main_score, plcc, srocc
from .model import QualityNet, ScoreBundle

__all__ = [
    "TrainConfig",
    "load_config",
    "DatasetManifest",
    "VideoRecord",
    "load_manifest",
    "parse_video_filename",
    "EvalReport",
    "main_score",
    "plcc",
    "srocc",
    "QualityNet",
    "ScoreBundle",
    "__version__",
]
