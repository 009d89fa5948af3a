"""Training loops for the classification and projection networks.

Both consume patch datasets produced by the meshing side's gen-data
command and share its featurization contract: rows are [relative position,
center distance] scaled by 1/(max distance), with the center prepended as
an all-zero row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .formats import PatchRecords
from .model import PatchNet, classifier_net, projector_net


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    coord_weight: float = 1.0
    radial_weight: float = 1.0
    holdout_fraction: float = 0.1


def _feature_rows(rel: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """(B, n, 3) + (B, n) -> (B, n+1, 4) normalized rows, center first."""
    dmax = dist.max(axis=1, keepdims=True)
    scale = 1.0 / np.maximum(dmax, 1e-30)
    rows = np.zeros((rel.shape[0], rel.shape[1] + 1, 4), dtype=np.float32)
    rows[:, 1:, :3] = rel * scale[:, :, None]
    rows[:, 1:, 3] = dist * scale
    return rows


def classifier_batches(records: PatchRecords):
    rows = _feature_rows(records.rel_positions, records.distances)
    targets = records.member_flags.astype(np.float32)
    return rows, targets


def projector_batches(records: PatchRecords):
    """Member-only rows plus chart targets in normalized units."""
    R, K = records.distances.shape
    k = records.k
    rel = np.empty((R, k, 3), dtype=np.float32)
    dist = np.empty((R, k), dtype=np.float32)
    for r in range(R):
        members = np.flatnonzero(records.member_flags[r])
        rel[r] = records.rel_positions[r, members]
        dist[r] = records.distances[r, members]
    rows = _feature_rows(rel, dist)
    scale = 1.0 / np.maximum(dist.max(axis=1, keepdims=True), 1e-30)
    targets = records.gt_coords * scale[:, :, None]
    return rows, targets.astype(np.float32)


def kabsch_rotation(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Batch of optimal 2x2 orthogonal maps (reflections allowed) pred -> target.

    Differentiable orthogonal Procrustes via SVD of the cross-covariance.
    """
    m = pred.transpose(1, 2) @ target  # (B, 2, 2)
    u, s, vh = torch.linalg.svd(m)
    return (u @ vh).transpose(1, 2)


def projector_loss(pred: torch.Tensor, target: torch.Tensor, config: TrainConfig) -> torch.Tensor:
    """Rotation-aligned coordinate error plus radial (distance) error."""
    pred = pred - pred[:, :1, :]  # re-center on the predicted origin
    pred_m = pred[:, 1:, :]
    rot = kabsch_rotation(pred_m, target)
    aligned = pred_m @ rot.transpose(1, 2)
    coord = ((aligned - target) ** 2).sum(dim=2).mean()
    radial = ((pred_m.norm(dim=2) - target.norm(dim=2)) ** 2).mean()
    return config.coord_weight * coord + config.radial_weight * radial


def classifier_loss(logits: torch.Tensor, flags: torch.Tensor) -> torch.Tensor:
    """L2 between the sigmoid of the per-candidate logit and the 0/1 flag."""
    scores = torch.sigmoid(logits[:, 1:, 0])  # drop the center row
    return ((scores - flags) ** 2).mean()


def _split(n: int, holdout_fraction: float, seed: int):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_hold = int(round(n * holdout_fraction))
    return order[n_hold:], order[:n_hold]


def train_classifier(records: PatchRecords, config: TrainConfig) -> tuple[PatchNet, dict]:
    if len(records) == 0:
        raise ValueError("empty dataset")
    rows, targets = classifier_batches(records)
    net = classifier_net()
    history = _run(net, rows, targets, classifier_loss, config)
    return net, history


def train_projector(records: PatchRecords, config: TrainConfig) -> tuple[PatchNet, dict]:
    if len(records) == 0:
        raise ValueError("empty dataset")
    rows, targets = projector_batches(records)
    net = projector_net()

    def loss_fn(out, tgt):
        return projector_loss(out, tgt, config)

    history = _run(net, rows, targets, loss_fn, config)
    return net, history


def _run(net: PatchNet, rows: np.ndarray, targets: np.ndarray, loss_fn, config: TrainConfig) -> dict:
    torch.manual_seed(config.seed)
    # re-init parameters under the fixed seed for run-to-run determinism
    for mod in net.modules():
        if isinstance(mod, torch.nn.Linear):
            torch.nn.init.kaiming_uniform_(mod.weight, a=5 ** 0.5)
            torch.nn.init.zeros_(mod.bias)
    train_idx, hold_idx = _split(len(rows), config.holdout_fraction, config.seed)
    if len(train_idx) == 0:
        train_idx, hold_idx = np.arange(len(rows)), np.empty(0, dtype=np.int64)
    rows_t = torch.from_numpy(rows)
    targets_t = torch.from_numpy(targets)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed + 1)
    history = {"train_loss": [], "holdout_loss": []}
    for epoch in range(config.epochs):
        order = rng.permutation(train_idx)
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            out = net(rows_t[batch])
            loss = loss_fn(out, targets_t[batch])
            loss.backward()
            optimizer.step()
            total += float(loss.detach())
            batches += 1
        history["train_loss"].append(total / max(batches, 1))
        if len(hold_idx):
            with torch.no_grad():
                hold = float(loss_fn(net(rows_t[hold_idx]), targets_t[hold_idx]))
            history["holdout_loss"].append(hold)
    history["holdout_indices"] = hold_idx.tolist()
    return history
