"""Binary model checkpoints.

Layout (all integers little-endian)::

    magic        8 bytes  b"FNFCKPT\\0"
    version      u32
    header_len   u32
    header       header_len bytes of UTF-8 JSON {"variant", "hyper", "seed", "extra"}
    n_blocks     u32
    n_blocks x:
        name_len u32, name UTF-8
        ndim     u32, dims ndim x u64
        values   prod(dims) float64 little-endian, row-major

Blocks hold every parameter followed by every buffer (BatchNorm running stats)
under their dotted registry names.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .model import ForecastModel, ModelHyper

MAGIC = b"FNFCKPT\x00"
FORMAT_VERSION = 1


def save_checkpoint(model: ForecastModel, path, extra: dict | None = None) -> None:
    header = json.dumps({
        "variant": model.variant,
        "hyper": model.hyper.to_dict(),
        "seed": model.seed,
        "extra": extra or {},
    }, sort_keys=True).encode()
    state = model.state_dict()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header, struct.pack("<I", len(state))]
    for name, arr in state.items():
        raw = name.encode()
        arr = np.asarray(arr, dtype="<f8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack(f"<I{arr.ndim}Q", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint is truncated")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    r = _Reader(Path(path).read_bytes())
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header = json.loads(r.take(hlen).decode())
    (count,) = r.unpack("<I")
    state = {}
    for _ in range(count):
        (nlen,) = r.unpack("<I")
        name = r.take(nlen).decode()
        (ndim,) = r.unpack("<I")
        dims = r.unpack(f"<{ndim}Q")
        n = int(np.prod(dims, dtype=np.int64))
        state[name] = np.frombuffer(r.take(8 * n), dtype="<f8").reshape(dims).astype(np.float64)
    if r.pos != len(r.buf):
        raise CheckpointError(f"{path}: trailing bytes after the last block")
    return header, state


def load_checkpoint(path) -> ForecastModel:
    header, state = read_checkpoint(path)
    model = ForecastModel(header["variant"], ModelHyper(**header["hyper"]), header.get("seed", 0))
    model.load_state_dict(state)
    return model
