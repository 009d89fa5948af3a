"""Weight export and the reference forward pass used for cross-checks.

Exports are float32; the reference forward recomputes outputs from the
exported float32 blocks in float64, which is the arithmetic contract the
inference side follows, so both ends agree to rounding.
"""

from __future__ import annotations

import numpy as np

from .formats import NORMALIZATION_TAG, read_weights, write_weights
from .model import PatchNet


def export_weights(net: PatchNet, kind: str, path):
    if kind not in ("classifier", "projector"):
        raise ValueError(f"unknown kind {kind!r}")
    expected = 1 if kind == "classifier" else 2
    if net.out_width != expected:
        raise ValueError(f"{kind} must end at width {expected}")
    mats, biases = net.linear_blocks()
    write_weights(path, kind, net.layer_table(), mats, biases, NORMALIZATION_TAG)


def reference_forward(path, rows: np.ndarray) -> np.ndarray:
    """Float64 forward pass straight off an exported weight file.

    rows: (n, 4) normalized feature rows (center first). Returns the raw
    per-row outputs before any sigmoid.
    """
    kind, layers, matrices, biases, norm = read_weights(path)
    if norm != NORMALIZATION_TAG:
        raise ValueError(f"normalization tag mismatch: {norm!r}")
    x = np.asarray(rows, dtype=np.float64)
    raw = x
    mi = 0
    for lk, w_in, w_out in layers:
        if lk == "linear":
            x = x @ matrices[mi].astype(np.float64).T + biases[mi].astype(np.float64)
            mi += 1
        elif lk == "relu":
            x = np.maximum(x, 0.0)
        elif lk == "global-maxpool":
            x = np.broadcast_to(x.max(axis=0), x.shape).copy()
        elif lk == "concat-global":
            x = np.concatenate([x, raw], axis=1)
    return x
