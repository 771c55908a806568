"""IDX image ingestion, unit normalization, flip augmentation, and seeded
train/test splits.

Datasets are user-supplied IDX3 files (see ``find_idx`` for the search
path). Labels are never read: reconstruction targets are the images
themselves.
"""

from __future__ import annotations

import csv
import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX3_MAGIC = 0x00000803
IMAGE_SIDE = 28
DATASET_NAMES = ("mnist-digits", "fashion", "kuzushiji", "arabic")
SPLIT_NAMES = ("train", "test", "validation")
DATA_ENV_VAR = "VORTEXBRAIN_DATA"


class DatasetError(Exception):
    """Base for dataset ingestion failures."""


class BadMagicError(DatasetError):
    """File does not start with the IDX3 image magic."""


class TruncatedIdxError(DatasetError):
    """File ends before the header-declared payload."""


class ShapeMismatchError(DatasetError):
    """Images are not the expected 28x28."""


@dataclass(frozen=True)
class ImageSet:
    """A named, nonempty stack of 28x28 images with values in [0, 1]."""

    name: str
    images: np.ndarray  # (n, 28, 28) float64
    split: str

    def __post_init__(self):
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"split must be one of {SPLIT_NAMES}, got {self.split!r}")
        img = np.asarray(self.images, dtype=np.float64)
        if img.ndim != 3 or img.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
            raise ShapeMismatchError(
                f"expected (n, {IMAGE_SIDE}, {IMAGE_SIDE}) images, got {img.shape}"
            )
        if img.shape[0] == 0:
            raise ValueError("image set is empty")
        if img.min() < 0.0 or img.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "images", img)

    @property
    def n(self) -> int:
        return self.images.shape[0]


def _read_bytes(path) -> bytes:
    if str(path).endswith(".gz"):
        with gzip.open(path, "rb") as fh:
            return fh.read()
    with open(path, "rb") as fh:
        return fh.read()


def load_idx(path) -> np.ndarray:
    """Parse an IDX3 image file; returns (count, rows, cols) uint8.

    Transparently decompresses ``.gz``. Raises BadMagicError on any magic
    other than 0x00000803 (so label files are rejected) and
    TruncatedIdxError when the payload is shorter than the header declares.
    """
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise TruncatedIdxError(f"{path}: {len(raw)} bytes is too short for an IDX3 header")
    magic, count, rows, cols = struct.unpack(">4I", raw[:16])
    if magic != IDX3_MAGIC:
        raise BadMagicError(f"{path}: magic 0x{magic:08X}, expected 0x{IDX3_MAGIC:08X}")
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise TruncatedIdxError(
            f"{path}: header declares {count} {rows}x{cols} images "
            f"({need} bytes) but file has {len(raw)}"
        )
    data = np.frombuffer(raw[16:need], dtype=np.uint8)
    return data.reshape(count, rows, cols).copy()


def write_idx(path, images: np.ndarray) -> None:
    """Write a uint8 image stack as IDX3 (big-endian header)."""
    images = np.asarray(images)
    if images.dtype != np.uint8:
        raise ValueError(f"write_idx takes uint8, got {images.dtype}")
    if images.ndim != 3:
        raise ValueError(f"expected (count, rows, cols), got shape {images.shape}")
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IDX3_MAGIC, count, rows, cols))
        fh.write(images.tobytes())


def normalize_unit(raw: np.ndarray) -> np.ndarray:
    """uint8 -> float64 in [0, 1] by dividing by 255."""
    raw = np.asarray(raw)
    if raw.dtype != np.uint8:
        raise ValueError(f"normalize_unit takes uint8, got {raw.dtype}")
    return raw.astype(np.float64) / 255.0


def load_image_set(path, name: str, split: str) -> ImageSet:
    """load_idx + 28x28 check + unit normalization in one step."""
    raw = load_idx(path)
    if raw.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
        raise ShapeMismatchError(
            f"{path}: {raw.shape[1]}x{raw.shape[2]} images, expected "
            f"{IMAGE_SIDE}x{IMAGE_SIDE}"
        )
    return ImageSet(name=name, images=normalize_unit(raw), split=split)


def flip_augment(s: ImageSet) -> ImageSet:
    """Union of original, horizontal flip, vertical flip, and double flip.

    Output order is [originals, h-flips, v-flips, hv-flips], 4x the size.
    """
    img = s.images
    stacked = np.concatenate(
        [img, img[:, :, ::-1], img[:, ::-1, :], img[:, ::-1, ::-1]], axis=0
    )
    return ImageSet(name=s.name, images=stacked, split=s.split)


def split(s: ImageSet, n_train: int, n_test: int, seed: int) -> tuple[ImageSet, ImageSet]:
    """Disjoint seeded-shuffle subsets of sizes (n_train, n_test)."""
    if n_train <= 0 or n_test <= 0:
        raise ValueError("n_train and n_test must be positive")
    if n_train + n_test > s.n:
        raise ValueError(f"asked for {n_train}+{n_test} images from a set of {s.n}")
    order = np.random.default_rng(seed).permutation(s.n)
    train = ImageSet(name=s.name, images=s.images[order[:n_train]], split="train")
    test = ImageSet(
        name=s.name, images=s.images[order[n_train : n_train + n_test]], split="test"
    )
    return train, test


def csv_to_idx(csv_path, idx_path) -> int:
    """Convert rows of 784 comma-separated uint8 values to an IDX3 file.

    One-time ingestion path for datasets distributed as CSV. Returns the
    number of images written.
    """
    rows = []
    with open(csv_path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != IMAGE_SIDE * IMAGE_SIDE:
                raise DatasetError(
                    f"{csv_path}:{lineno}: {len(row)} fields, expected "
                    f"{IMAGE_SIDE * IMAGE_SIDE}"
                )
            try:
                vals = [int(v) for v in row]
            except ValueError as exc:
                raise DatasetError(f"{csv_path}:{lineno}: non-integer field") from exc
            if any(v < 0 or v > 255 for v in vals):
                raise DatasetError(f"{csv_path}:{lineno}: value outside [0, 255]")
            rows.append(vals)
    if not rows:
        raise DatasetError(f"{csv_path}: no image rows found")
    images = np.array(rows, dtype=np.uint8).reshape(-1, IMAGE_SIDE, IMAGE_SIDE)
    write_idx(idx_path, images)
    return images.shape[0]


def data_roots() -> list[Path]:
    """Search roots for user-supplied data: $VORTEXBRAIN_DATA, then ./data."""
    roots = []
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        roots.append(Path(env))
    roots.append(Path("data"))
    return roots


def find_idx(name: str, split: str) -> Path | None:
    """Locate a user-supplied IDX3 file for a dataset/split, or None.

    Looks for MNIST-convention filenames (train-images-idx3-ubyte /
    t10k-images-idx3-ubyte, optionally .gz) under <root>/<name>/ and, for
    mnist-digits, under <root>/ directly.
    """
    if name not in DATASET_NAMES:
        raise ValueError(f"unknown dataset {name!r}, expected one of {DATASET_NAMES}")
    stem = "train-images-idx3-ubyte" if split == "train" else "t10k-images-idx3-ubyte"
    candidates = []
    for root in data_roots():
        dirs = [root / name]
        if name == "mnist-digits":
            dirs.append(root)
        for d in dirs:
            candidates.append(d / stem)
            candidates.append(d / f"{stem}.gz")
    for c in candidates:
        if c.is_file():
            return c
    return None
