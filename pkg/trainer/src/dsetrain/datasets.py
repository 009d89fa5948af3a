"""Loading and combining patch datasets for training."""

from __future__ import annotations

import numpy as np

from .formats import FormatError, PatchRecords, read_patch_dataset


def load_datasets(paths) -> list[PatchRecords]:
    return [read_patch_dataset(p) for p in paths]


def concatenate_datasets(datasets: list[PatchRecords]) -> PatchRecords:
    if not datasets:
        raise FormatError("no datasets given")
    K, k = datasets[0].K, datasets[0].k
    for d in datasets[1:]:
        if d.K != K or d.k != k:
            raise FormatError("datasets disagree on K or k")
    return PatchRecords(
        K=K,
        k=k,
        center_ids=np.concatenate([d.center_ids for d in datasets]),
        candidate_ids=np.concatenate([d.candidate_ids for d in datasets]),
        rel_positions=np.concatenate([d.rel_positions for d in datasets]),
        distances=np.concatenate([d.distances for d in datasets]),
        member_flags=np.concatenate([d.member_flags for d in datasets]),
        gt_coords=np.concatenate([d.gt_coords for d in datasets]),
    )
