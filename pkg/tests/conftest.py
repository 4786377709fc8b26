import sys
from pathlib import Path

import pytest

from aivqa.dataset import load_manifest
from aivqa.synthetic import generate_synthetic_dataset

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    """16 procedural clips plus manifest, shared across the suite."""
    root = tmp_path_factory.mktemp("synth")
    generate_synthetic_dataset(root, n_videos=16, frames=8, side=64, seed=0)
    return root


@pytest.fixture(scope="session")
def synth_manifest(synth_root):
    return load_manifest(synth_root / "manifest.csv", "train")


@pytest.fixture()
def fast_config_payload():
    """Config small enough for per-test training runs.

    side=64 keeps the resize a passthrough on the synthetic clips; grid 2 with
    16px fragments gives a 32px composite, and patch 32 divides both.
    """
    return {
        "seed": 7,
        "batch_size": 8,
        "deterministic": True,
        "sampling": {"frame_count": 2, "side": 64, "grid": 2, "fragment_side": 16},
        "schedule": {"linear_probe_epochs": 1, "finetune_epochs": 1},
    }
