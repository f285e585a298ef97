"""Versioned binary container for trained models.

Layout (little-endian):

    magic "UNMX" | version u32 | kind u32 | source_id u32
    | n_layer_sizes u32 | layer_sizes u32...
    | n_matrices u32 | (rows u32, cols u32, float64 row-major data)...
    | crc32 u32 over everything after the magic

NMF models store one matrix (the dictionary); DNN models store the layer
size header plus alternating weight and bias matrices.
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from unmix.dnn import DnnModel
from unmix.nmf import NmfModel

MAGIC = b"UNMX"
VERSION = 1
KIND_NMF = 1
KIND_DNN = 2

_U32 = struct.Struct("<I")


def _pack_container(
    kind: int, source_id: int, layer_sizes: list[int], matrices: list[np.ndarray]
) -> bytes:
    parts = [MAGIC]
    body = [_U32.pack(VERSION), _U32.pack(kind), _U32.pack(source_id)]
    body.append(_U32.pack(len(layer_sizes)))
    body.extend(_U32.pack(n) for n in layer_sizes)
    body.append(_U32.pack(len(matrices)))
    for m in matrices:
        m = np.ascontiguousarray(np.atleast_2d(np.asarray(m, dtype=np.float64)))
        body.append(_U32.pack(m.shape[0]))
        body.append(_U32.pack(m.shape[1]))
        body.append(m.tobytes())
    payload = b"".join(body)
    parts.append(payload)
    parts.append(_U32.pack(zlib.crc32(payload)))
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ValueError("model file is truncated")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def matrix(self) -> np.ndarray:
        rows, cols = self.u32(), self.u32()
        data = self.take(rows * cols * 8)
        return np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()


def _unpack_container(blob: bytes) -> tuple[int, int, list[int], list[np.ndarray]]:
    if blob[:4] != MAGIC:
        raise ValueError("not a model file (bad magic bytes)")
    if len(blob) < 8:
        raise ValueError("model file is truncated")
    payload, checksum = blob[4:-4], _U32.unpack(blob[-4:])[0]
    if zlib.crc32(payload) != checksum:
        raise ValueError("model file is corrupt (checksum mismatch)")
    r = _Reader(payload)
    version = r.u32()
    if version != VERSION:
        raise ValueError(f"unsupported model format version {version}")
    kind = r.u32()
    source_id = r.u32()
    layer_sizes = [r.u32() for _ in range(r.u32())]
    matrices = [r.matrix() for _ in range(r.u32())]
    return kind, source_id, layer_sizes, matrices


def _atomic_write(path, blob: bytes) -> None:
    tmp = f"{path}.part"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def save_nmf(path, model: NmfModel) -> None:
    _atomic_write(path, _pack_container(KIND_NMF, model.source_id, [], [model.dictionary]))


def load_nmf(path) -> NmfModel:
    with open(path, "rb") as fh:
        kind, source_id, _, matrices = _unpack_container(fh.read())
    if kind != KIND_NMF or len(matrices) != 1:
        raise ValueError(f"{path}: not a dictionary model file")
    return NmfModel(matrices[0], source_id)


def save_dnn(path, model: DnnModel) -> None:
    matrices: list[np.ndarray] = []
    for W, b in zip(model.weights, model.biases):
        matrices.append(W)
        matrices.append(b.reshape(-1, 1))
    _atomic_write(path, _pack_container(KIND_DNN, 0, model.layer_sizes, matrices))


def load_dnn(path) -> DnnModel:
    with open(path, "rb") as fh:
        kind, _, layer_sizes, matrices = _unpack_container(fh.read())
    if kind != KIND_DNN or len(matrices) != 2 * (len(layer_sizes) - 1):
        raise ValueError(f"{path}: not a classifier model file")
    weights = [matrices[2 * k] for k in range(len(layer_sizes) - 1)]
    biases = [matrices[2 * k + 1].ravel() for k in range(len(layer_sizes) - 1)]
    model = DnnModel(weights, biases)
    if model.layer_sizes != layer_sizes:
        raise ValueError(f"{path}: layer size header does not match the stored matrices")
    return model
