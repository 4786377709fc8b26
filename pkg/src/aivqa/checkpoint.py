"""Self-describing checkpoint container.

Layout: 8-byte magic, little-endian u64 header length, UTF-8 JSON header
(tensor names/dtypes/shapes/offsets plus free-form meta), then the raw
C-order tensor payload.  Arrays round-trip bit-exactly; the header carries
the config snapshot so a checkpoint alone can rebuild its model.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import SchemaError

MAGIC = b"AVQC0001"


def save_checkpoint(path: str | Path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    entries = {}
    payload = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        entries[name] = {
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": arr.nbytes,
        }
        payload += arr.tobytes()

    header = json.dumps({"tensors": entries, "meta": meta}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(bytes(payload))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise SchemaError(f"{path} is not a checkpoint file (bad magic {magic!r})")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path}: corrupt checkpoint header: {exc}") from None
        payload = fh.read()

    tensors = {}
    for name, entry in header["tensors"].items():
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise SchemaError(f"{path}: tensor {name!r} extends past end of file")
        arr = np.frombuffer(payload[start:start + nbytes], dtype=np.dtype(entry["dtype"]))
        tensors[name] = arr.reshape(entry["shape"]).copy()
    return tensors, header["meta"]


def model_state_arrays(model: torch.nn.Module) -> dict[str, np.ndarray]:
    """state_dict as numpy arrays (buffers included)."""
    return {
        name: tensor.detach().cpu().numpy().copy()
        for name, tensor in model.state_dict().items()
    }


def save_model_checkpoint(
    path: str | Path, model: torch.nn.Module, config_dict: dict, epoch: int, rng_state: dict | None
) -> None:
    meta = {
        "format_version": 1,
        "config": config_dict,
        "epoch": epoch,
        "rng_state": rng_state,
    }
    save_checkpoint(path, model_state_arrays(model), meta)


def load_model_checkpoint(path: str | Path):
    """Rebuild the model a checkpoint was saved from.

    Imports locally to keep this module free of a model dependency cycle.
    """
    from .config import TrainConfig
    from .model import QualityNet

    tensors, meta = load_checkpoint(path)
    if "config" not in meta:
        raise SchemaError(f"{path}: checkpoint meta lacks a config snapshot")
    cfg = TrainConfig.model_validate(meta["config"])
    model = QualityNet(cfg)
    state = {name: torch.from_numpy(arr) for name, arr in tensors.items()}
    model.load_state_dict(state, strict=True)
    return model, cfg, meta
