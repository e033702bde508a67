"""Datasets: synthetic two-class features and IDX-format image ingestion.

The synthetic set is two interleaving half-moon arcs in 2-D with Gaussian
jitter, balanced classes, and a seeded stratified 70/30 split.  Images are
read from IDX files (raw or gzip, auto-detected), scaled to [0, 1], and
subset per class with a seeded stratified 80/20 split.  All randomness
flows through explicit seeds; there is no hidden global RNG.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"


class IdxFormatError(ValueError):
    pass


class BadMagicError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class CountMismatchError(IdxFormatError):
    pass


class InsufficientClassError(ValueError):
    pass


@dataclass
class LabeledDataset:
    features: np.ndarray  # (N, 2) points or (N, H, W) images
    labels: np.ndarray  # (N,) int class ids
    train_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    val_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def val_features(self) -> np.ndarray:
        return self.features[self.val_idx]

    @property
    def val_labels(self) -> np.ndarray:
        return self.labels[self.val_idx]


def _stratified_split(labels: np.ndarray, train_fraction: float, rng: np.random.Generator):
    """Per-class seeded permutation, first round(f * count) into train."""
    train, val = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        cut = int(round(train_fraction * len(idx)))
        train.append(idx[:cut])
        val.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def generate_synthetic(n_samples: int = 500, noise: float = 0.15, seed: int = 0) -> LabeledDataset:
    """Two interleaving half-moons with N(0, noise^2) jitter, 70/30 split."""
    if n_samples < 10:
        raise ValueError(f"n_samples must be >= 10, got {n_samples}")
    rng = np.random.default_rng(seed)
    n0 = n_samples // 2
    n1 = n_samples - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    features = np.vstack([upper, lower]) + rng.normal(0.0, noise, size=(n_samples, 2))
    labels = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    train_idx, val_idx = _stratified_split(labels, 0.7, rng)
    return LabeledDataset(features, labels, train_idx, val_idx)


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == GZIP_MAGIC:
        return gzip.decompress(raw)
    return raw


def _read_header(data: bytes, expected_magic: int, n_dims: int, path) -> tuple:
    header = 4 * (1 + n_dims)
    if len(data) < header:
        raise TruncatedFileError(f"{path}: shorter than its {header}-byte header")
    fields = struct.unpack(f">{1 + n_dims}I", data[:header])
    if fields[0] != expected_magic:
        raise BadMagicError(f"{path}: magic 0x{fields[0]:08x}, expected 0x{expected_magic:08x}")
    return fields[1:], data[header:]


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Read an IDX image/label file pair; pixels are scaled to [0, 1]."""
    (n_images, rows, cols), pixels = _read_header(
        _read_bytes(images_path), IDX_IMAGE_MAGIC, 3, images_path
    )
    if len(pixels) < n_images * rows * cols:
        raise TruncatedFileError(
            f"{images_path}: {len(pixels)} pixel bytes for {n_images}x{rows}x{cols}"
        )
    (n_labels,), label_bytes = _read_header(
        _read_bytes(labels_path), IDX_LABEL_MAGIC, 1, labels_path
    )
    if len(label_bytes) < n_labels:
        raise TruncatedFileError(f"{labels_path}: {len(label_bytes)} label bytes for {n_labels}")
    if n_images != n_labels:
        raise CountMismatchError(f"{n_images} images but {n_labels} labels")
    images = (
        np.frombuffer(pixels[: n_images * rows * cols], dtype=np.uint8)
        .reshape(n_images, rows, cols)
        .astype(float)
        / 255.0
    )
    labels = np.frombuffer(label_bytes[:n_labels], dtype=np.uint8).astype(int)
    return LabeledDataset(images, labels, train_idx=np.arange(n_images), val_idx=np.zeros(0, dtype=int))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Write an IDX pair (fixture/tooling support; pixels in [0, 1])."""
    n, rows, cols = images.shape
    payload = struct.pack(">4I", IDX_IMAGE_MAGIC, n, rows, cols)
    payload += np.clip(np.round(images * 255.0), 0, 255).astype(np.uint8).tobytes()
    Path(images_path).write_bytes(payload)
    payload = struct.pack(">2I", IDX_LABEL_MAGIC, n)
    payload += np.asarray(labels, dtype=np.uint8).tobytes()
    Path(labels_path).write_bytes(payload)


def stratified_subset(
    dataset: LabeledDataset, classes: int = 10, per_class: int = 400, seed: int = 0
) -> LabeledDataset:
    """Exactly ``per_class`` samples for each class id, 80/20 split."""
    rng = np.random.default_rng(seed)
    keep = []
    for cls in range(classes):
        idx = np.flatnonzero(dataset.labels == cls)
        if len(idx) < per_class:
            raise InsufficientClassError(
                f"class {cls} has {len(idx)} samples, need {per_class}"
            )
        keep.append(idx[rng.permutation(len(idx))][:per_class])
    keep = np.concatenate(keep)
    features = dataset.features[keep].copy()
    labels = dataset.labels[keep].copy()
    train_idx, val_idx = _stratified_split(labels, 0.8, rng)
    return LabeledDataset(features, labels, train_idx, val_idx)


def downscale_images(dataset: LabeledDataset, size: int = 8) -> LabeledDataset:
    """Center-crop to a multiple of ``size`` and block-average down.

    Desk-scale option to keep search smoke runs fast; the native resolution
    is the default everywhere else.
    """
    _, h, w = dataset.features.shape
    factor = min(h, w) // size
    if factor < 1:
        raise ValueError(f"images of size {h}x{w} cannot be reduced to {size}x{size}")
    ch, cw = size * factor, size * factor
    top, left = (h - ch) // 2, (w - cw) // 2
    cropped = dataset.features[:, top : top + ch, left : left + cw]
    small = cropped.reshape(-1, size, factor, size, factor).mean(axis=(2, 4))
    return LabeledDataset(small, dataset.labels.copy(), dataset.train_idx.copy(), dataset.val_idx.copy())


def synthesize_images(
    n_classes: int, per_class: int, size: int = 8, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Class-separable stand-in images for desk-scale runs.

    Each class is a Gaussian blob at a class-specific grid position plus
    uniform pixel noise, clipped to [0, 1].
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    grid = max(2, int(np.ceil(np.sqrt(n_classes))))
    images = np.empty((n_classes * per_class, size, size))
    labels = np.empty(n_classes * per_class, dtype=int)
    for cls in range(n_classes):
        cy = (cls // grid + 0.5) * size / grid
        cx = (cls % grid + 0.5) * size / grid
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * (size / 6.0) ** 2))
        for i in range(per_class):
            img = blob + rng.uniform(0.0, 0.35, size=(size, size))
            images[cls * per_class + i] = np.clip(img, 0.0, 1.0)
            labels[cls * per_class + i] = cls
    return images, labels


def dataset_manifest(dataset: LabeledDataset, source: str, seed: int) -> dict:
    classes, counts = np.unique(dataset.labels, return_counts=True)
    return {
        "source": source,
        "seed": seed,
        "class_counts": {int(c): int(k) for c, k in zip(classes, counts)},
        "n_train": int(len(dataset.train_idx)),
        "n_validation": int(len(dataset.val_idx)),
    }
