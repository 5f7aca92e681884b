"""Bit-exact binary serialization of morphable models (M4DM format).

Layout, little-endian, no padding:

    magic   b"M4DM"
    u32     version (= 1)
    u16     model_id byte length, then UTF-8 model_id
    u32     N, K_id, K_exp, L, T
    f64[]   mean_shape (3N), id_basis (3N*K_id, column-major), id_stddev (K_id),
            exp_basis (3N*K_exp, column-major), exp_stddev (K_exp)
    u32[]   landmark_indices (L), triangles (3T, row-major)
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import FormatError
from .model import MorphableModel, validate_model

__all__ = ["save_model", "load_model", "MAGIC", "VERSION"]

MAGIC = b"M4DM"
VERSION = 1


def save_model(model: MorphableModel, sink: BinaryIO) -> None:
    """Write ``model`` to a binary sink; the round trip through load_model is bit-exact."""
    ident = model.model_id.encode("utf-8")
    if len(ident) > 0xFFFF:
        raise FormatError("model_id longer than 65535 bytes")
    sink.write(MAGIC)
    sink.write(struct.pack("<IH", VERSION, len(ident)))
    sink.write(ident)
    sink.write(struct.pack(
        "<5I", model.n_vertices, model.k_id, model.k_exp,
        model.n_landmarks, model.triangles.shape[0]))
    sink.write(np.ascontiguousarray(model.mean_shape, dtype="<f8").tobytes())
    sink.write(np.asarray(model.id_basis, dtype="<f8").tobytes(order="F"))
    sink.write(np.ascontiguousarray(model.id_stddev, dtype="<f8").tobytes())
    sink.write(np.asarray(model.exp_basis, dtype="<f8").tobytes(order="F"))
    sink.write(np.ascontiguousarray(model.exp_stddev, dtype="<f8").tobytes())
    sink.write(np.ascontiguousarray(model.landmark_indices, dtype="<u4").tobytes())
    sink.write(np.ascontiguousarray(model.triangles, dtype="<u4").tobytes())


class _Cursor:
    """Sequential reader over a byte buffer that turns overruns into FormatError."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated stream: need {n} bytes at offset {self.pos}, "
                              f"have {len(self.buf) - self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(count * itemsize), dtype=dtype).copy()


def load_model(source: BinaryIO) -> MorphableModel:
    """Read a model written by save_model, validating format and invariants."""
    cur = _Cursor(source.read())
    if cur.take(4) != MAGIC:
        raise FormatError("bad magic: not an M4DM stream")
    (version,) = cur.unpack("<I")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    (id_len,) = cur.unpack("<H")
    try:
        model_id = cur.take(id_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"model_id is not valid UTF-8: {exc}") from None
    n, k_id, k_exp, n_lmk, n_tri = cur.unpack("<5I")

    mean_shape = cur.array("<f8", 3 * n)
    id_basis = cur.array("<f8", 3 * n * k_id).reshape((3 * n, k_id), order="F")
    id_stddev = cur.array("<f8", k_id)
    exp_basis = cur.array("<f8", 3 * n * k_exp).reshape((3 * n, k_exp), order="F")
    exp_stddev = cur.array("<f8", k_exp)
    landmark_indices = cur.array("<u4", n_lmk)
    triangles = cur.array("<u4", 3 * n_tri).reshape((n_tri, 3))
    if cur.pos != len(cur.buf):
        raise FormatError(f"{len(cur.buf) - cur.pos} trailing bytes after model data")

    return validate_model(MorphableModel(
        model_id=model_id,
        mean_shape=mean_shape,
        id_basis=id_basis,
        id_stddev=id_stddev,
        exp_basis=exp_basis,
        exp_stddev=exp_stddev,
        landmark_indices=landmark_indices,
        triangles=triangles,
    ))
