"""Reader/writer for the big-endian IDX image/label container.

Images use magic 0x00000803 (three dimensions: count x rows x cols, unsigned
bytes); labels use 0x00000801.  Pixels are scaled to [0, 1] on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = [
    "IdxFormatError",
    "load_idx",
    "load_idx_images",
    "load_idx_labels",
    "write_idx_images",
    "write_idx_labels",
]

MAGIC_IMAGES = 0x00000803
MAGIC_LABELS = 0x00000801


class IdxFormatError(ValueError):
    """Bad magic, wrong dimensionality, or truncated payload."""


def _read_header(data: bytes, path) -> tuple[int, tuple[int, ...], int]:
    if len(data) < 4:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic == MAGIC_IMAGES:
        ndim = 3
    elif magic == MAGIC_LABELS:
        ndim = 1
    else:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxFormatError(f"{path}: truncated dimension table")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    return magic, dims, header


def load_idx(path) -> np.ndarray:
    """Parse an IDX file: images come back as float64 in [0, 1] with shape
    (count, rows, cols); labels as an int64 vector."""
    path = Path(path)
    data = path.read_bytes()
    magic, dims, header = _read_header(data, path)
    expected = int(np.prod(dims))
    payload = data[header:]
    if len(payload) != expected:
        raise IdxFormatError(
            f"{path}: payload holds {len(payload)} bytes, dimensions require {expected}")
    raw = np.frombuffer(payload, dtype=np.uint8)
    if magic == MAGIC_IMAGES:
        return raw.reshape(dims).astype(np.float64) / 255.0
    return raw.astype(np.int64)


def load_idx_images(path) -> np.ndarray:
    arr = load_idx(path)
    if arr.ndim != 3:
        raise IdxFormatError(f"{path}: expected an image file, found labels")
    return arr


def load_idx_labels(path) -> np.ndarray:
    arr = load_idx(path)
    if arr.ndim != 1:
        raise IdxFormatError(f"{path}: expected a label file, found images")
    return arr


def write_idx_images(path, images: np.ndarray) -> None:
    """Write float images in [0, 1] (or uint8) as an IDX image file."""
    imgs = np.asarray(images)
    if imgs.ndim != 3:
        raise IdxFormatError(f"images must be (count, rows, cols), got {imgs.shape}")
    if imgs.dtype != np.uint8:
        imgs = np.clip(np.rint(imgs * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", MAGIC_IMAGES, *imgs.shape))
        fh.write(imgs.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    lab = np.asarray(labels)
    if lab.ndim != 1 or np.any(lab < 0) or np.any(lab > 255):
        raise IdxFormatError("labels must be a vector of bytes")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", MAGIC_LABELS, lab.shape[0]))
        fh.write(lab.astype(np.uint8).tobytes())
