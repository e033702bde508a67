"""Dataset tests: synthetic moons, IDX parsing, stratified subsetting."""

import gzip
import struct

import numpy as np
import pytest

from hqnnlab.data import (
    BadMagicError,
    CountMismatchError,
    InsufficientClassError,
    TruncatedFileError,
    dataset_manifest,
    downscale_images,
    generate_synthetic,
    load_idx,
    stratified_subset,
    synthesize_images,
    write_idx,
)

from oracles import parzen_rbf_classifier


class TestSynthetic:
    def test_split_sizes(self):
        ds = generate_synthetic(500, seed=0)
        assert len(ds.train_idx) == 350
        assert len(ds.val_idx) == 150

    def test_classes_balanced(self):
        ds = generate_synthetic(500, seed=1)
        assert np.bincount(ds.labels).tolist() == [250, 250]

    def test_split_is_partition(self):
        ds = generate_synthetic(201, seed=2)
        merged = np.concatenate([ds.train_idx, ds.val_idx])
        assert len(np.intersect1d(ds.train_idx, ds.val_idx)) == 0
        assert sorted(merged.tolist()) == list(range(201))

    def test_split_stratified_within_one(self):
        ds = generate_synthetic(500, seed=3)
        counts = np.bincount(ds.labels[ds.train_idx])
        assert abs(counts[0] - counts[1]) <= 1

    def test_seed_reproducible_bitwise(self):
        a = generate_synthetic(120, seed=9)
        b = generate_synthetic(120, seed=9)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.train_idx, b.train_idx)

    def test_noiseless_moons_separable_by_rbf_rule(self):
        ds = generate_synthetic(200, noise=0.0, seed=4)
        preds = parzen_rbf_classifier(ds.train_features, ds.train_labels, ds.val_features)
        assert np.mean(preds == ds.val_labels) == 1.0

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            generate_synthetic(5)


def idx_image_bytes(images: np.ndarray) -> bytes:
    n, rows, cols = images.shape
    return struct.pack(">4I", 0x00000803, n, rows, cols) + images.astype(np.uint8).tobytes()


def idx_label_bytes(labels) -> bytes:
    return struct.pack(">2I", 0x00000801, len(labels)) + bytes(labels)


class TestIdx:
    def test_hand_crafted_fixture_recovers_pixels(self, tmp_path):
        # 2 images of 2x2, pixel bytes written by hand
        raw = np.array([[[0, 255], [128, 64]], [[1, 2], [3, 4]]], dtype=np.uint8)
        (tmp_path / "img").write_bytes(idx_image_bytes(raw))
        (tmp_path / "lab").write_bytes(idx_label_bytes([7, 2]))
        ds = load_idx(tmp_path / "img", tmp_path / "lab")
        assert ds.features.shape == (2, 2, 2)
        assert ds.features[0] == pytest.approx(raw[0] / 255.0)
        assert ds.features[1, 1, 1] == pytest.approx(4 / 255.0)
        assert ds.labels.tolist() == [7, 2]

    def test_header_dimensions(self, tmp_path):
        images = np.zeros((3, 28, 28), dtype=np.uint8)
        (tmp_path / "img").write_bytes(idx_image_bytes(images))
        (tmp_path / "lab").write_bytes(idx_label_bytes([0, 1, 2]))
        ds = load_idx(tmp_path / "img", tmp_path / "lab")
        assert ds.features.shape == (3, 28, 28)

    def test_gzip_autodetect(self, tmp_path):
        images = np.full((2, 3, 3), 255, dtype=np.uint8)
        (tmp_path / "img.gz").write_bytes(gzip.compress(idx_image_bytes(images)))
        (tmp_path / "lab.gz").write_bytes(gzip.compress(idx_label_bytes([1, 0])))
        ds = load_idx(tmp_path / "img.gz", tmp_path / "lab.gz")
        assert np.all(ds.features == 1.0)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "img").write_bytes(struct.pack(">4I", 0x00000999, 1, 2, 2) + b"\x00" * 4)
        (tmp_path / "lab").write_bytes(idx_label_bytes([0]))
        with pytest.raises(BadMagicError):
            load_idx(tmp_path / "img", tmp_path / "lab")

    def test_truncated_pixels(self, tmp_path):
        (tmp_path / "img").write_bytes(struct.pack(">4I", 0x00000803, 2, 2, 2) + b"\x00" * 5)
        (tmp_path / "lab").write_bytes(idx_label_bytes([0, 1]))
        with pytest.raises(TruncatedFileError):
            load_idx(tmp_path / "img", tmp_path / "lab")

    def test_truncated_header(self, tmp_path):
        (tmp_path / "img").write_bytes(b"\x00\x00")
        (tmp_path / "lab").write_bytes(idx_label_bytes([0]))
        with pytest.raises(TruncatedFileError):
            load_idx(tmp_path / "img", tmp_path / "lab")

    def test_count_mismatch(self, tmp_path):
        images = np.zeros((2, 2, 2), dtype=np.uint8)
        (tmp_path / "img").write_bytes(idx_image_bytes(images))
        (tmp_path / "lab").write_bytes(idx_label_bytes([0, 1, 1]))
        with pytest.raises(CountMismatchError):
            load_idx(tmp_path / "img", tmp_path / "lab")

    def test_write_read_roundtrip(self, tmp_path):
        images, labels = synthesize_images(3, 4, size=6, seed=0)
        write_idx(images, labels, tmp_path / "img", tmp_path / "lab")
        ds = load_idx(tmp_path / "img", tmp_path / "lab")
        assert ds.features.shape == (12, 6, 6)
        assert np.abs(ds.features - images).max() <= 0.5 / 255.0
        assert np.array_equal(ds.labels, labels)


class TestStratifiedSubset:
    @staticmethod
    def image_dataset(per_class_available=30, classes=10):
        images, labels = synthesize_images(classes, per_class_available, size=8, seed=1)
        from hqnnlab.data import LabeledDataset

        return LabeledDataset(images, labels, np.arange(len(labels)), np.zeros(0, dtype=int))

    def test_counts_and_split(self):
        ds = stratified_subset(self.image_dataset(), classes=10, per_class=20, seed=0)
        assert len(ds.labels) == 200
        assert np.bincount(ds.labels).tolist() == [20] * 10
        assert len(ds.train_idx) == 160
        assert len(ds.val_idx) == 40
        val_counts = np.bincount(ds.labels[ds.val_idx], minlength=10)
        assert np.all(val_counts == 4)

    def test_tiny_subset(self):
        ds = stratified_subset(self.image_dataset(classes=2), classes=2, per_class=1, seed=0)
        assert len(ds.labels) == 2

    def test_seed_deterministic(self):
        a = stratified_subset(self.image_dataset(), classes=10, per_class=10, seed=5)
        b = stratified_subset(self.image_dataset(), classes=10, per_class=10, seed=5)
        assert np.array_equal(a.train_idx, b.train_idx)
        assert np.array_equal(a.features, b.features)

    def test_insufficient_class(self):
        with pytest.raises(InsufficientClassError):
            stratified_subset(self.image_dataset(per_class_available=5), classes=10, per_class=6, seed=0)

    def test_full_scale_counts(self):
        ds = stratified_subset(self.image_dataset(per_class_available=400), classes=10, per_class=400, seed=0)
        assert len(ds.labels) == 4000
        assert len(ds.train_idx) == 3200
        assert len(ds.val_idx) == 800


class TestImages:
    def test_downscale_28_to_8(self):
        images = np.random.default_rng(0).uniform(size=(5, 28, 28))
        from hqnnlab.data import LabeledDataset

        ds = LabeledDataset(images, np.zeros(5, dtype=int), np.arange(5), np.zeros(0, dtype=int))
        small = downscale_images(ds, 8)
        assert small.features.shape == (5, 8, 8)
        assert small.features.min() >= 0.0 and small.features.max() <= 1.0

    def test_downscale_too_small(self):
        from hqnnlab.data import LabeledDataset

        ds = LabeledDataset(np.zeros((1, 4, 4)), np.zeros(1, dtype=int), np.arange(1), np.zeros(0, dtype=int))
        with pytest.raises(ValueError):
            downscale_images(ds, 8)

    def test_synthesized_classes_distinguishable(self):
        images, labels = synthesize_images(4, 20, size=8, seed=2)
        flat = images.reshape(len(labels), -1)
        preds = parzen_rbf_classifier(flat[::2], labels[::2], flat[1::2], bandwidth=1.0)
        assert np.mean(preds == labels[1::2]) > 0.9

    def test_manifest_fields(self):
        ds = generate_synthetic(100, seed=0)
        manifest = dataset_manifest(ds, "synthetic", 0)
        assert manifest["class_counts"] == {0: 50, 1: 50}
        assert manifest["n_train"] + manifest["n_validation"] == 100
        assert manifest["source"] == "synthetic"
