"""MNIST-style dataset I/O: flat binary/text files and the IDX container.

Two on-disk forms are supported and kept byte-compatible with each other:

* flat form: a raw image file with 784 bytes per image (row-major 28x28,
  no header) plus a text label file with one decimal digit per line;
* IDX form: the canonical big-endian MNIST container (magic 0x00000803
  for images, 0x00000801 for labels).

Pixel values are carried through untouched; no normalization happens at
this layer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from colanet.errors import DataFormatError

IMAGE_SIDE = 28
PIXELS_PER_IMAGE = IMAGE_SIDE * IMAGE_SIDE  # 784
N_CLASSES = 10

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class ImageRecord:
    """One labelled image: 784 brightness bytes plus a class index."""

    pixels: np.ndarray  # shape (784,), uint8
    label: int

    def __post_init__(self):
        if self.pixels.shape != (PIXELS_PER_IMAGE,):
            raise DataFormatError(
                f"image record needs {PIXELS_PER_IMAGE} pixels, got shape {self.pixels.shape}"
            )
        if not 0 <= self.label < N_CLASSES:
            raise DataFormatError(f"label {self.label} outside [0, {N_CLASSES - 1}]")

    def __eq__(self, other):
        if not isinstance(other, ImageRecord):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.pixels, other.pixels)


@dataclass
class Dataset:
    """Ordered image collection with a positional train/test split.

    The first ``train_count`` records are the training portion; everything
    after is the test portion. Storage is two dense arrays so that 70k
    records stay cheap to hold and slice.
    """

    images: np.ndarray  # shape (n, 784), uint8
    labels: np.ndarray  # shape (n,), int64
    train_count: int = field(default=-1)  # -1: all records are training

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2 or self.images.shape[1] != PIXELS_PER_IMAGE:
            raise DataFormatError(
                f"image array must be (n, {PIXELS_PER_IMAGE}), got {self.images.shape}"
            )
        if self.labels.shape != (self.images.shape[0],):
            raise DataFormatError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= N_CLASSES):
            bad = self.labels[(self.labels < 0) | (self.labels >= N_CLASSES)][0]
            raise DataFormatError(f"label {bad} outside [0, {N_CLASSES - 1}]")
        if self.train_count == -1:
            self.train_count = len(self.labels)
        if not 0 <= self.train_count <= len(self.labels):
            raise DataFormatError(
                f"train_count {self.train_count} outside [0, {len(self.labels)}]"
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    def record(self, i: int) -> ImageRecord:
        return ImageRecord(pixels=self.images[i], label=int(self.labels[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def slice(self, start: int, stop: int, train_count: int = -1) -> "Dataset":
        return Dataset(self.images[start:stop], self.labels[start:stop], train_count)

    @classmethod
    def concat(cls, parts: list["Dataset"], train_count: int = -1) -> "Dataset":
        """Concatenate in order; default split = everything up to the last part."""
        images = np.concatenate([p.images for p in parts]) if parts else np.zeros((0, PIXELS_PER_IMAGE), np.uint8)
        labels = np.concatenate([p.labels for p in parts]) if parts else np.zeros((0,), np.int64)
        if train_count == -1 and len(parts) > 1:
            train_count = sum(len(p) for p in parts[:-1])
        return cls(images, labels, train_count)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.images, other.images)
            and np.array_equal(self.labels, other.labels)
            and self.train_count == other.train_count
        )


def _read_labels_text(labels_path: Path) -> np.ndarray:
    labels = []
    with open(labels_path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                value = int(text)
            except ValueError:
                raise DataFormatError(
                    f"{labels_path}:{lineno}: unparsable label line {text!r}"
                ) from None
            if not 0 <= value < N_CLASSES:
                raise DataFormatError(
                    f"{labels_path}:{lineno}: label {value} outside [0, {N_CLASSES - 1}]"
                )
            labels.append(value)
    return np.asarray(labels, dtype=np.int64)


def load_flat(images_path, labels_path, train_count: int = -1) -> Dataset:
    """Load the flat binary image file plus the one-label-per-line text file."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    raw = images_path.read_bytes()
    if len(raw) % PIXELS_PER_IMAGE != 0:
        raise DataFormatError(
            f"{images_path}: {len(raw)} bytes is not a multiple of {PIXELS_PER_IMAGE}"
        )
    n = len(raw) // PIXELS_PER_IMAGE
    labels = _read_labels_text(labels_path)
    if len(labels) != n:
        raise DataFormatError(
            f"{images_path} holds {n} images but {labels_path} holds {len(labels)} labels"
        )
    images = np.frombuffer(raw, dtype=np.uint8).reshape(n, PIXELS_PER_IMAGE)
    return Dataset(images.copy(), labels, train_count)


def write_flat(dataset: Dataset, images_path, labels_path) -> None:
    """Write the flat pair; inverse of :func:`load_flat`."""
    Path(images_path).write_bytes(dataset.images.tobytes())
    text = "".join(f"{label}\n" for label in dataset.labels)
    Path(labels_path).write_text(text, encoding="ascii")


def _read_idx_header(raw: bytes, path: Path, expect_magic: int, n_dims: int):
    header_len = 4 * (1 + n_dims)
    if len(raw) < header_len:
        raise DataFormatError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expect_magic:
        raise DataFormatError(
            f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expect_magic:08x}"
        )
    dims = struct.unpack(f">{n_dims}I", raw[4:header_len])
    return dims, raw[header_len:]


def load_idx(images_path, labels_path, train_count: int = -1) -> Dataset:
    """Load one IDX image/label file pair (the standard MNIST distribution)."""
    images_path, labels_path = Path(images_path), Path(labels_path)

    (n, rows, cols), payload = _read_idx_header(
        images_path.read_bytes(), images_path, IDX_IMAGE_MAGIC, 3
    )
    if rows * cols != PIXELS_PER_IMAGE:
        raise DataFormatError(
            f"{images_path}: {rows}x{cols} images, expected {IMAGE_SIDE}x{IMAGE_SIDE}"
        )
    if len(payload) != n * PIXELS_PER_IMAGE:
        raise DataFormatError(
            f"{images_path}: payload {len(payload)} bytes, expected {n * PIXELS_PER_IMAGE}"
        )
    images = np.frombuffer(payload, dtype=np.uint8).reshape(n, PIXELS_PER_IMAGE)

    (n_labels,), label_payload = _read_idx_header(
        labels_path.read_bytes(), labels_path, IDX_LABEL_MAGIC, 1
    )
    if n_labels != n:
        raise DataFormatError(
            f"count mismatch: {images_path} holds {n} images, {labels_path} holds {n_labels} labels"
        )
    if len(label_payload) != n_labels:
        raise DataFormatError(f"{labels_path}: truncated label payload")
    labels = np.frombuffer(label_payload, dtype=np.uint8).astype(np.int64)

    return Dataset(images.copy(), labels, train_count)


def write_idx(dataset: Dataset, images_path, labels_path) -> None:
    """Write one IDX pair; inverse of :func:`load_idx` (used by fixtures)."""
    n = len(dataset)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, IMAGE_SIDE, IMAGE_SIDE))
        f.write(dataset.images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        f.write(dataset.labels.astype(np.uint8).tobytes())
