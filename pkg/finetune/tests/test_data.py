import numpy as np
import pytest

from finetune_harness.data import (
    ManifestRowError,
    PairDataset,
    load_pair_manifest,
    load_png,
    save_png,
    synthetic_pairs,
    write_pair_manifest,
)


class TestPngIo:
    def test_round_trip(self, tmp_path, rng):
        img = rng.uniform(0, 1, (12, 10, 3))
        save_png(img, tmp_path / "x.png")
        back = load_png(tmp_path / "x.png")
        assert back.shape == (12, 10, 3)
        assert np.max(np.abs(back - img)) <= 1 / 255

    def test_grayscale_replicated(self, tmp_path, rng):
        img = rng.uniform(0, 1, (8, 8))
        save_png(img, tmp_path / "g.png")
        back = load_png(tmp_path / "g.png")
        assert back.shape == (8, 8, 3)
        np.testing.assert_array_equal(back[:, :, 0], back[:, :, 1])


class TestPairDataset:
    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            PairDataset([], [], [])

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            PairDataset(
                [rng.uniform(0, 1, (8, 8, 3))],
                [rng.uniform(0, 1, (9, 8, 3))],
                ["a"],
            )

    def test_synthetic_pairs_deterministic(self):
        a = synthetic_pairs(3, seed=5)
        b = synthetic_pairs(3, seed=5)
        for xa, xb in zip(a.inputs, b.inputs):
            np.testing.assert_array_equal(xa, xb)
        assert a.min_side == 64

    def test_synthetic_pair_is_degraded(self):
        ds = synthetic_pairs(1, seed=2)
        diff = ds.inputs[0] - ds.targets[0]
        assert diff.max() > 0.2  # bright streaks present
        assert diff.min() >= -1e-12  # rain only brightens


class TestManifest:
    def test_round_trip_via_files(self, tmp_path):
        ds = synthetic_pairs(3, seed=1, h=24, w=24)
        manifest = write_pair_manifest(ds, tmp_path)
        back = load_pair_manifest(manifest)
        assert len(back) == 3
        assert back.ids == ds.ids
        for x, y in zip(back.inputs, ds.inputs):
            assert np.max(np.abs(x - y)) <= 1 / 255

    def test_broken_path_names_row(self, tmp_path):
        ds = synthetic_pairs(2, seed=1, h=16, w=16)
        manifest = write_pair_manifest(ds, tmp_path)
        lines = manifest.read_text().splitlines()
        lines[1] = "missing.png\tpair_0001_target.png\tsynthetic1"
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(ManifestRowError, match="row 2"):
            load_pair_manifest(manifest)

    def test_malformed_row_names_row(self, tmp_path):
        manifest = tmp_path / "pairs.tsv"
        manifest.write_text("only two\tcolumns\n")
        with pytest.raises(ManifestRowError, match="row 1"):
            load_pair_manifest(manifest)

    def test_empty_manifest_rejected(self, tmp_path):
        manifest = tmp_path / "pairs.tsv"
        manifest.write_text("")
        with pytest.raises(ManifestRowError, match="no rows"):
            load_pair_manifest(manifest)
