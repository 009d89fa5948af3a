"""Readers/writers for the shared binary patch-dataset and weight formats.

Implemented independently from the inference side on purpose: the files are
the contract, and both ends must agree byte for byte. See the inference
package for the authoritative layout description.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PATCH_MAGIC = b"DSEPATCH"
WEIGHT_MAGIC = b"DSEWGHT\x00"
NORMALIZATION_TAG = "center-row-unit-max-v1"

KIND_CODES = {"classifier": 0, "projector": 1}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
LAYER_CODES = {"linear": 0, "relu": 1, "global-maxpool": 2, "concat-global": 3}
LAYER_NAMES = {v: k for k, v in LAYER_CODES.items()}


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class PatchRecords:
    """Columnar view of a patch dataset: arrays indexed [record, candidate]."""

    K: int
    k: int
    center_ids: np.ndarray  # (R,)
    candidate_ids: np.ndarray  # (R, K)
    rel_positions: np.ndarray  # (R, K, 3) float32
    distances: np.ndarray  # (R, K) float32
    member_flags: np.ndarray  # (R, K) uint8
    gt_coords: np.ndarray  # (R, k, 2) float32

    def __len__(self):
        return len(self.center_ids)


def read_patch_dataset(path) -> PatchRecords:
    data = Path(path).read_bytes()
    if data[:8] != PATCH_MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, K, k, count = struct.unpack_from("<IIII", data, 8)
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    rec_size = 4 + K * 4 + K * 12 + K * 4 + K + k * 8
    if len(data) != 24 + rec_size * count:
        raise FormatError(f"{path}: size mismatch")
    centers = np.empty(count, dtype=np.int64)
    cand = np.empty((count, K), dtype=np.int64)
    rel = np.empty((count, K, 3), dtype=np.float32)
    dist = np.empty((count, K), dtype=np.float32)
    flags = np.empty((count, K), dtype=np.uint8)
    coords = np.empty((count, k, 2), dtype=np.float32)
    offset = 24
    for r in range(count):
        (centers[r],) = struct.unpack_from("<I", data, offset)
        offset += 4
        cand[r] = np.frombuffer(data, dtype="<u4", count=K, offset=offset)
        offset += K * 4
        rel[r] = np.frombuffer(data, dtype="<f4", count=K * 3, offset=offset).reshape(K, 3)
        offset += K * 12
        dist[r] = np.frombuffer(data, dtype="<f4", count=K, offset=offset)
        offset += K * 4
        flags[r] = np.frombuffer(data, dtype="<u1", count=K, offset=offset)
        offset += K
        coords[r] = np.frombuffer(data, dtype="<f4", count=k * 2, offset=offset).reshape(k, 2)
        offset += k * 8
        if int(flags[r].sum()) != k:
            raise FormatError(f"{path}: record {r} flags do not sum to k")
    return PatchRecords(
        K=K, k=k, center_ids=centers, candidate_ids=cand,
        rel_positions=rel, distances=dist, member_flags=flags, gt_coords=coords,
    )


def write_weights(path, kind: str, layers, matrices, biases, normalization=NORMALIZATION_TAG):
    """layers: list of (kind, in_width, out_width); matrices/biases float32."""
    norm = normalization.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<II", 1, KIND_CODES[kind]))
        fh.write(struct.pack("<I", len(norm)))
        fh.write(norm)
        fh.write(struct.pack("<I", len(layers)))
        for lk, w_in, w_out in layers:
            fh.write(struct.pack("<III", LAYER_CODES[lk], w_in, w_out))
        for m, b in zip(matrices, biases):
            fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def read_weights(path):
    """Returns (kind, layers, matrices, biases, normalization)."""
    data = Path(path).read_bytes()
    if data[:8] != WEIGHT_MAGIC:
        raise FormatError(f"{path}: bad magic")
    version, kind_code = struct.unpack_from("<II", data, 8)
    offset = 16
    (norm_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    norm = data[offset : offset + norm_len].decode("utf-8")
    offset += norm_len
    (n_layers,) = struct.unpack_from("<I", data, offset)
    offset += 4
    layers = []
    for _ in range(n_layers):
        code, w_in, w_out = struct.unpack_from("<III", data, offset)
        offset += 12
        layers.append((LAYER_NAMES[code], int(w_in), int(w_out)))
    matrices, biases = [], []
    for lk, w_in, w_out in layers:
        if lk != "linear":
            continue
        n = w_in * w_out
        matrices.append(
            np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(w_out, w_in).copy()
        )
        offset += n * 4
        biases.append(np.frombuffer(data, dtype="<f4", count=w_out, offset=offset).copy())
        offset += w_out * 4
    if offset != len(data):
        raise FormatError(f"{path}: trailing bytes")
    return KIND_NAMES[kind_code], layers, matrices, biases, norm
