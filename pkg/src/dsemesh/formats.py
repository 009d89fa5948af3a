"""Bit-exact binary formats shared with the training component.

Both files are little-endian with fixed-width fields so they can be read
and written from any language without drift.

Patch dataset (.dsepatch):
    magic   8s   "DSEPATCH"
    version u32  (1)
    K       u32  candidates per record
    k       u32  geodesic members per record
    count   u32  records
    per record:
        center id          u32
        candidate ids      K * u32
        relative positions K * 3 * f32   (candidate minus center)
        center distances   K * f32
        member flags       K * u8        (exactly k ones)
        chart coordinates  k * 2 * f32   (for flagged candidates, in order)

Weight file (.dsewght):
    magic   8s   "DSEWGHT\\0"
    version u32  (1)
    kind    u32  0 classifier, 1 projector
    norm    u32 length + utf-8 bytes     (featurization contract tag)
    layers  u32 count, then per layer: kind u32 (0 linear, 1 relu,
            2 global-maxpool, 3 concat-global), in u32, out u32
    blocks  per linear layer, in order: weights out*in f32 row-major,
            then bias out * f32
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import (
    LAYER_CONCAT,
    LAYER_LINEAR,
    LAYER_MAXPOOL,
    LAYER_RELU,
    KIND_CLASSIFIER,
    KIND_PROJECTOR,
    LayerSpec,
    NetworkWeights,
    WeightFormatError,
)

PATCH_MAGIC = b"DSEPATCH"
WEIGHT_MAGIC = b"DSEWGHT\x00"

_KIND_CODES = {KIND_CLASSIFIER: 0, KIND_PROJECTOR: 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_LAYER_CODES = {LAYER_LINEAR: 0, LAYER_RELU: 1, LAYER_MAXPOOL: 2, LAYER_CONCAT: 3}
_LAYER_NAMES = {v: k for k, v in _LAYER_CODES.items()}


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PatchRecord:
    center_id: int
    candidate_ids: np.ndarray  # (K,) int64
    rel_positions: np.ndarray  # (K, 3) float
    distances: np.ndarray  # (K,) float
    member_flags: np.ndarray  # (K,) uint8, exactly k ones
    gt_coords: np.ndarray  # (k, 2) float, flagged candidates in order


@dataclass(frozen=True)
class PatchDataset:
    K: int
    k: int
    records: tuple[PatchRecord, ...]
    version: int = 1

    def __len__(self):
        return len(self.records)


def write_patch_dataset(path, dataset: PatchDataset):
    K, k = dataset.K, dataset.k
    with open(path, "wb") as fh:
        fh.write(PATCH_MAGIC)
        fh.write(struct.pack("<IIII", dataset.version, K, k, len(dataset.records)))
        for rec in dataset.records:
            if len(rec.candidate_ids) != K or len(rec.member_flags) != K:
                raise DatasetFormatError("record does not match header K")
            if int(rec.member_flags.sum()) != k or rec.gt_coords.shape != (k, 2):
                raise DatasetFormatError("record does not match header k")
            fh.write(struct.pack("<I", rec.center_id))
            fh.write(rec.candidate_ids.astype("<u4").tobytes())
            fh.write(rec.rel_positions.astype("<f4").tobytes())
            fh.write(rec.distances.astype("<f4").tobytes())
            fh.write(rec.member_flags.astype("<u1").tobytes())
            fh.write(rec.gt_coords.astype("<f4").tobytes())


def read_patch_dataset(path) -> PatchDataset:
    data = Path(path).read_bytes()
    if data[:8] != PATCH_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic")
    version, K, k, count = struct.unpack_from("<IIII", data, 8)
    offset = 24
    rec_size = 4 + K * 4 + K * 12 + K * 4 + K + k * 8
    if len(data) != offset + rec_size * count:
        raise DatasetFormatError(
            f"{path}: size mismatch (expected {offset + rec_size * count} bytes, "
            f"have {len(data)})"
        )
    records = []
    for _ in range(count):
        (center,) = struct.unpack_from("<I", data, offset)
        offset += 4
        ids = np.frombuffer(data, dtype="<u4", count=K, offset=offset).astype(np.int64)
        offset += K * 4
        rel = np.frombuffer(data, dtype="<f4", count=K * 3, offset=offset).reshape(K, 3).astype(np.float64)
        offset += K * 12
        dist = np.frombuffer(data, dtype="<f4", count=K, offset=offset).astype(np.float64)
        offset += K * 4
        flags = np.frombuffer(data, dtype="<u1", count=K, offset=offset).copy()
        offset += K
        coords = np.frombuffer(data, dtype="<f4", count=k * 2, offset=offset).reshape(k, 2).astype(np.float64)
        offset += k * 8
        if int(flags.sum()) != k:
            raise DatasetFormatError(f"{path}: record flags do not sum to k={k}")
        records.append(
            PatchRecord(
                center_id=int(center),
                candidate_ids=ids,
                rel_positions=rel,
                distances=dist,
                member_flags=flags,
                gt_coords=coords,
            )
        )
    return PatchDataset(K=K, k=k, records=tuple(records), version=version)


def write_weights(path, weights: NetworkWeights):
    norm = weights.normalization.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<II", weights.version, _KIND_CODES[weights.kind]))
        fh.write(struct.pack("<I", len(norm)))
        fh.write(norm)
        fh.write(struct.pack("<I", len(weights.layers)))
        for spec in weights.layers:
            fh.write(struct.pack("<III", _LAYER_CODES[spec.kind], spec.in_width, spec.out_width))
        for m, b in zip(weights.matrices, weights.biases):
            fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def read_weights(path) -> NetworkWeights:
    data = Path(path).read_bytes()
    if data[:8] != WEIGHT_MAGIC:
        raise WeightFormatError(f"{path}: bad magic")
    version, kind_code = struct.unpack_from("<II", data, 8)
    if kind_code not in _KIND_NAMES:
        raise WeightFormatError(f"{path}: unknown kind code {kind_code}")
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
        if code not in _LAYER_NAMES:
            raise WeightFormatError(f"{path}: unknown layer code {code}")
        layers.append(LayerSpec(_LAYER_NAMES[code], int(w_in), int(w_out)))
    expected = sum(
        (s.out_width * s.in_width + s.out_width) * 4
        for s in layers
        if s.kind == LAYER_LINEAR
    )
    if len(data) - offset != expected:
        raise WeightFormatError(
            f"{path}: payload size mismatch (expected {expected} bytes after "
            f"header, have {len(data) - offset})"
        )
    matrices, biases = [], []
    for spec in layers:
        if spec.kind != LAYER_LINEAR:
            continue
        n = spec.out_width * spec.in_width
        m = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(
            spec.out_width, spec.in_width
        ).copy()
        offset += n * 4
        b = np.frombuffer(data, dtype="<f4", count=spec.out_width, offset=offset).copy()
        offset += spec.out_width * 4
        matrices.append(m)
        biases.append(b)
    return NetworkWeights(
        kind=_KIND_NAMES[kind_code],
        layers=tuple(layers),
        matrices=tuple(matrices),
        biases=tuple(biases),
        normalization=norm,
        version=version,
    )
