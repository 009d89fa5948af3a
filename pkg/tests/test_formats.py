import numpy as np
import pytest

from dsemesh.formats import (
    DatasetFormatError,
    PatchDataset,
    PatchRecord,
    read_patch_dataset,
    read_weights,
    write_patch_dataset,
    write_weights,
)
from dsemesh.network import (
    KIND_CLASSIFIER,
    KIND_PROJECTOR,
    PatchFeatures,
    WeightFormatError,
    forward_projector,
    random_weights,
)


def sample_dataset(K=10, k=4, n=3, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for r in range(n):
        flags = np.zeros(K, dtype=np.uint8)
        flags[rng.choice(K, size=k, replace=False)] = 1
        records.append(
            PatchRecord(
                center_id=r,
                candidate_ids=rng.integers(0, 1000, size=K).astype(np.int64),
                rel_positions=rng.normal(size=(K, 3)),
                distances=rng.random(K),
                member_flags=flags,
                gt_coords=rng.normal(size=(k, 2)),
            )
        )
    return PatchDataset(K=K, k=k, records=tuple(records))


class TestPatchDataset:
    def test_round_trip(self, tmp_path):
        ds = sample_dataset()
        path = tmp_path / "patches.dsepatch"
        write_patch_dataset(path, ds)
        back = read_patch_dataset(path)
        assert back.K == ds.K and back.k == ds.k and len(back) == len(ds)
        for a, b in zip(ds.records, back.records):
            assert a.center_id == b.center_id
            assert np.array_equal(a.candidate_ids, b.candidate_ids)
            assert np.array_equal(a.member_flags, b.member_flags)
            # payload stored as float32
            assert np.abs(a.rel_positions - b.rel_positions).max() < 1e-6
            assert np.abs(a.gt_coords - b.gt_coords).max() < 1e-6

    def test_byte_identical_rewrite(self, tmp_path):
        ds = sample_dataset(seed=1)
        p1, p2 = tmp_path / "a.dsepatch", tmp_path / "b.dsepatch"
        write_patch_dataset(p1, ds)
        write_patch_dataset(p2, read_patch_dataset(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_rejected(self, tmp_path):
        ds = sample_dataset()
        path = tmp_path / "patches.dsepatch"
        write_patch_dataset(path, ds)
        data = path.read_bytes()
        path.write_bytes(data[:-7])
        with pytest.raises(DatasetFormatError):
            read_patch_dataset(path)

    def test_bad_flags_rejected(self, tmp_path):
        ds = sample_dataset()
        rec = ds.records[0]
        bad_flags = rec.member_flags.copy()
        bad_flags[:] = 1
        bad = PatchRecord(
            center_id=rec.center_id,
            candidate_ids=rec.candidate_ids,
            rel_positions=rec.rel_positions,
            distances=rec.distances,
            member_flags=bad_flags,
            gt_coords=rec.gt_coords,
        )
        with pytest.raises(DatasetFormatError):
            write_patch_dataset(tmp_path / "x.dsepatch", PatchDataset(K=10, k=4, records=(bad,)))


class TestWeightFile:
    def test_round_trip_preserves_forward(self, tmp_path):
        weights = random_weights(KIND_PROJECTOR, seed=3)
        path = tmp_path / "proj.dsewght"
        write_weights(path, weights)
        back = read_weights(path)
        rng = np.random.default_rng(0)
        rows = np.vstack([np.zeros(4), rng.normal(size=(8, 4))])
        feats = PatchFeatures(rows=rows, scale=1.0)
        a = forward_projector(feats, weights)
        b = forward_projector(feats, back)
        assert np.array_equal(a, b)

    def test_byte_identical_rewrite(self, tmp_path):
        weights = random_weights(KIND_CLASSIFIER, seed=4)
        p1, p2 = tmp_path / "a.dsewght", tmp_path / "b.dsewght"
        write_weights(p1, weights)
        write_weights(p2, read_weights(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_rejected(self, tmp_path):
        weights = random_weights(KIND_CLASSIFIER, seed=5)
        path = tmp_path / "w.dsewght"
        write_weights(path, weights)
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(WeightFormatError):
            read_weights(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.dsewght"
        path.write_bytes(b"NOTAFILE" + b"\x00" * 64)
        with pytest.raises(WeightFormatError):
            read_weights(path)

    def test_normalization_tag_preserved(self, tmp_path):
        weights = random_weights(KIND_CLASSIFIER, seed=6)
        path = tmp_path / "w.dsewght"
        write_weights(path, weights)
        assert read_weights(path).normalization == weights.normalization
