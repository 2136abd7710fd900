"""Versioned JSON model checkpoints.

One document holds the architecture descriptor, every parameter tensor
(name, shape, row-major float64 values), the batch-norm buffers, an
optional optimizer state and the RNG state. Python float repr is exact
under round-trip, so JSON is lossless here.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor

CHECKPOINT_FORMAT = "forestvol-checkpoint-v1"


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(
    path: str | Path,
    architecture: dict,
    params: dict[str, Tensor],
    buffers: dict[str, np.ndarray] | None = None,
    optimizer_state: dict | None = None,
    rng_state: list | None = None,
    meta: dict | None = None,
) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "architecture": architecture,
        "parameters": [
            {"name": k, "shape": list(p.data.shape), "values": p.data.ravel().tolist()}
            for k, p in sorted(params.items())
        ],
        "buffers": [
            {"name": k, "shape": list(b.shape), "values": b.ravel().tolist()}
            for k, b in sorted((buffers or {}).items())
        ],
        "optimizer_state": optimizer_state,
        "rng_state": rng_state,
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {doc.get('format')!r}")
    return doc


def restore_arrays(doc_section: list[dict]) -> dict[str, np.ndarray]:
    return {
        entry["name"]: np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for entry in doc_section
    }


def apply_parameters(model, doc: dict) -> None:
    """Load checkpoint parameter/buffer values into a built model in place."""
    params = model.named_parameters()
    stored = restore_arrays(doc["parameters"])
    if set(params) != set(stored):
        missing = set(params) ^ set(stored)
        raise CheckpointError(f"parameter names do not match checkpoint: {sorted(missing)[:4]}")
    for name, tensor in params.items():
        if tuple(tensor.data.shape) != stored[name].shape:
            raise CheckpointError(f"shape mismatch for {name}")
        tensor.data[...] = stored[name]
    buffers = model.named_buffers()
    for name, arr in restore_arrays(doc.get("buffers", [])).items():
        if name in buffers:
            buffers[name][...] = arr
