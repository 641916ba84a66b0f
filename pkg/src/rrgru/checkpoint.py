"""Checkpoint container.

Layout: a magic line, one line of JSON header (config, vocabulary hash,
array table), then the arrays as raw little-endian float64 in table order.
Everything is written deterministically so save/load/save is bitwise stable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import CheckpointError

MAGIC = b"RRGRU-CHECKPOINT 1\n"
_DTYPE = np.dtype("<f8")


def save_checkpoint(path, arrays: Mapping[str, np.ndarray], config: dict, vocab_sha256: str) -> None:
    table = []
    offset = 0
    blobs = []
    for name, arr in arrays.items():
        blob = np.ascontiguousarray(arr, dtype=_DTYPE).tobytes()
        table.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(blob)})
        offset += len(blob)
        blobs.append(blob)
    header = {"config": config, "vocab_sha256": vocab_sha256, "dtype": "<f8", "arrays": table}
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(line)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Return ``(header, arrays)``; arrays keep the file's order."""
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err.strerror}") from None
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{path} is not a checkpoint file")
    end = raw.index(b"\n", len(MAGIC))
    header = json.loads(raw[len(MAGIC) : end])
    body = raw[end + 1 :]
    arrays = {}
    for entry in header["arrays"]:
        lo, n = entry["offset"], entry["nbytes"]
        if lo + n > len(body):
            raise CheckpointError(f"{path}: truncated array {entry['name']}")
        arr = np.frombuffer(body[lo : lo + n], dtype=_DTYPE).astype(np.float64)
        if arr.size != int(np.prod(entry["shape"], dtype=np.int64)):
            raise CheckpointError(f"{path}: array {entry['name']} size does not match its shape")
        arrays[entry["name"]] = arr.reshape(entry["shape"])
    return header, arrays


def check_arrays(arrays: Mapping[str, np.ndarray], expected: Mapping[str, tuple]) -> None:
    if list(arrays) != list(expected):
        missing = sorted(set(expected) - set(arrays))
        extra = sorted(set(arrays) - set(expected))
        raise CheckpointError(f"parameter names differ: missing {missing}, unexpected {extra}")
    for name, shape in expected.items():
        if tuple(arrays[name].shape) != tuple(shape):
            raise CheckpointError(f"{name}: checkpoint shape {arrays[name].shape}, expected {tuple(shape)}")
