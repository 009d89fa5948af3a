"""Deterministic forward passes for the classifier and projector networks.

Both networks share one dataflow: a per-point encoder MLP, a max-pool into a
global feature, re-concatenation of that feature onto each point's raw
input, and two per-point decoder MLP blocks down to the output width.
Weights are stored as 32-bit floats; all arithmetic here runs in float64 so
results are bit-stable across platforms.

Patch features follow a fixed normalization contract shared with training:
row 0 is the patch center at (0, 0, 0, 0), remaining rows are
center-relative positions plus the Euclidean center distance, all divided
by the maximum distance. The contract is named in every weight file header
and checked at load time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORMALIZATION_TAG = "center-row-unit-max-v1"

KIND_CLASSIFIER = "classifier"
KIND_PROJECTOR = "projector"

LAYER_LINEAR = "linear"
LAYER_RELU = "relu"
LAYER_MAXPOOL = "global-maxpool"
LAYER_CONCAT = "concat-global"

GLOBAL_FEATURE_WIDTH = 1024


class WeightFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_width: int
    out_width: int


@dataclass(frozen=True)
class NetworkWeights:
    """Self-describing network: ordered layers plus coefficient blocks.

    matrices[i] / biases[i] pair with the i-th linear layer, in order.
    """

    kind: str
    layers: tuple[LayerSpec, ...]
    matrices: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    normalization: str = NORMALIZATION_TAG
    version: int = 1

    def __post_init__(self):
        if self.kind not in (KIND_CLASSIFIER, KIND_PROJECTOR):
            raise WeightFormatError(f"unknown network kind {self.kind!r}")
        expected_out = 1 if self.kind == KIND_CLASSIFIER else 2
        width = 4
        pools = 0
        mi = 0
        for spec in self.layers:
            if spec.in_width != width:
                raise WeightFormatError(
                    f"layer {spec.kind} expects width {spec.in_width}, chain gives {width}"
                )
            if spec.kind == LAYER_LINEAR:
                m = self.matrices[mi]
                b = self.biases[mi]
                if m.shape != (spec.out_width, spec.in_width) or b.shape != (spec.out_width,):
                    raise WeightFormatError("coefficient block shape mismatch")
                mi += 1
                width = spec.out_width
            elif spec.kind == LAYER_RELU:
                if spec.out_width != spec.in_width:
                    raise WeightFormatError("activation cannot change width")
            elif spec.kind == LAYER_MAXPOOL:
                if spec.out_width != spec.in_width:
                    raise WeightFormatError("maxpool cannot change width")
                if spec.in_width != GLOBAL_FEATURE_WIDTH:
                    raise WeightFormatError(
                        f"maxpool must produce the {GLOBAL_FEATURE_WIDTH}-wide global feature"
                    )
                pools += 1
            elif spec.kind == LAYER_CONCAT:
                if spec.out_width != spec.in_width + 4:
                    raise WeightFormatError("concat-global must append the 4 raw inputs")
                width = spec.out_width
            else:
                raise WeightFormatError(f"unknown layer kind {spec.kind!r}")
        if pools != 1:
            raise WeightFormatError("architecture needs exactly one global-maxpool")
        if mi != len(self.matrices):
            raise WeightFormatError("unused coefficient blocks")
        if width != expected_out:
            raise WeightFormatError(
                f"{self.kind} must end at width {expected_out}, chain gives {width}"
            )


def default_architecture(kind: str) -> tuple[LayerSpec, ...]:
    """Encoder 4-64-128-1024, maxpool, concat, decoder (1028)-512-256-128-64-out."""
    out = 1 if kind == KIND_CLASSIFIER else 2
    dims_enc = [4, 64, 128, GLOBAL_FEATURE_WIDTH]
    layers: list[LayerSpec] = []
    for a, b in zip(dims_enc[:-1], dims_enc[1:]):
        layers.append(LayerSpec(LAYER_LINEAR, a, b))
        layers.append(LayerSpec(LAYER_RELU, b, b))
    layers.append(LayerSpec(LAYER_MAXPOOL, GLOBAL_FEATURE_WIDTH, GLOBAL_FEATURE_WIDTH))
    layers.append(LayerSpec(LAYER_CONCAT, GLOBAL_FEATURE_WIDTH, GLOBAL_FEATURE_WIDTH + 4))
    dims_dec = [GLOBAL_FEATURE_WIDTH + 4, 512, 256, 128, 64, out]
    for i, (a, b) in enumerate(zip(dims_dec[:-1], dims_dec[1:])):
        layers.append(LayerSpec(LAYER_LINEAR, a, b))
        if b != out:
            layers.append(LayerSpec(LAYER_RELU, b, b))
    return tuple(layers)


def random_weights(kind: str, seed: int = 0, layers: tuple[LayerSpec, ...] | None = None) -> NetworkWeights:
    """He-initialized float32 weights (testing and training bootstrap)."""
    rng = np.random.default_rng(seed)
    layers = layers or default_architecture(kind)
    mats, biases = [], []
    for spec in layers:
        if spec.kind == LAYER_LINEAR:
            std = np.sqrt(2.0 / spec.in_width)
            mats.append((rng.normal(0.0, std, (spec.out_width, spec.in_width))).astype(np.float32))
            biases.append(np.zeros(spec.out_width, dtype=np.float32))
    return NetworkWeights(kind=kind, layers=layers, matrices=tuple(mats), biases=tuple(biases))


@dataclass(frozen=True)
class PatchFeatures:
    """Normalized per-point network input; row 0 is the center."""

    rows: np.ndarray  # (1 + count, 4) float64
    scale: float  # multiplier that was applied (1 / max distance)


def featurize(patch) -> PatchFeatures:
    """Build normalized [relative position, center distance] rows for a patch."""
    rel = np.asarray(patch.rel_positions, dtype=np.float64)
    dist = np.asarray(patch.distances, dtype=np.float64)
    if len(rel) == 0:
        raise ValueError("empty patch")
    dmax = float(dist.max())
    if dmax <= 0.0:
        raise ValueError("zero-radius patch cannot be normalized")
    scale = 1.0 / dmax
    rows = np.zeros((len(rel) + 1, 4))
    rows[1:, :3] = rel * scale
    rows[1:, 3] = dist * scale
    return PatchFeatures(rows=rows, scale=scale)


def _forward(rows: np.ndarray, weights: NetworkWeights) -> np.ndarray:
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 4:
        raise ValueError(f"features must be (rows, 4), got {x.shape}")
    raw = x
    mi = 0
    for spec in weights.layers:
        if spec.kind == LAYER_LINEAR:
            w = weights.matrices[mi].astype(np.float64)
            b = weights.biases[mi].astype(np.float64)
            x = x @ w.T + b
            mi += 1
        elif spec.kind == LAYER_RELU:
            x = np.maximum(x, 0.0)
        elif spec.kind == LAYER_MAXPOOL:
            g = x.max(axis=0)
            x = np.broadcast_to(g, x.shape).copy()
        elif spec.kind == LAYER_CONCAT:
            x = np.concatenate([x, raw], axis=1)
    return x


def forward_classifier(features: PatchFeatures, weights: NetworkWeights) -> np.ndarray:
    """Per-row scores in (0, 1); row order matches the feature rows."""
    if weights.kind != KIND_CLASSIFIER:
        raise WeightFormatError("classifier weights required")
    _check_normalization(weights)
    logits = _forward(features.rows, weights)[:, 0]
    return 1.0 / (1.0 + np.exp(-logits))


def forward_projector(features: PatchFeatures, weights: NetworkWeights) -> np.ndarray:
    """Per-row 2D coordinates in normalized units; rescale by 1/features.scale."""
    if weights.kind != KIND_PROJECTOR:
        raise WeightFormatError("projector weights required")
    _check_normalization(weights)
    return _forward(features.rows, weights)


def _check_normalization(weights: NetworkWeights):
    if weights.normalization != NORMALIZATION_TAG:
        raise WeightFormatError(
            f"weight normalization {weights.normalization!r} does not match "
            f"runtime contract {NORMALIZATION_TAG!r}"
        )
