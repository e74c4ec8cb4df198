"""Binary cache for built composite datasets (magic ``GWDS``).

Same container style as the model checkpoint: little-endian header, version,
then exact float64/int64 payloads per split, so a cached set is bit-identical
to the freshly composed one.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .multimnist import ImageTaskSplit, MultiTaskImageSet

__all__ = ["MAGIC", "FORMAT_VERSION", "save_image_set", "load_image_set", "DatasetCacheError"]

MAGIC = b"GWDS"
FORMAT_VERSION = 1
_SPLITS = ("train", "val", "test")


class DatasetCacheError(ValueError):
    """Malformed or truncated dataset cache."""


def save_image_set(path, dataset: MultiTaskImageSet) -> None:
    meta = json.dumps(dataset.meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(meta)))
        fh.write(meta)
        for name in _SPLITS:
            split: ImageTaskSplit = getattr(dataset, name)
            fh.write(struct.pack("<Q", len(split)))
            fh.write(np.ascontiguousarray(split.inputs, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(split.targets_cls, dtype="<i8").tobytes())
            fh.write(np.ascontiguousarray(split.targets_rec, dtype="<f8").tobytes())


def load_image_set(path) -> MultiTaskImageSet:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise DatasetCacheError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    off = 4
    version, meta_len = struct.unpack_from("<II", data, off)
    off += 8
    if version != FORMAT_VERSION:
        raise DatasetCacheError(f"unsupported dataset cache version {version}")
    meta = json.loads(data[off:off + meta_len].decode())
    off += meta_len
    splits = {}
    for name in _SPLITS:
        if off + 8 > len(data):
            raise DatasetCacheError("truncated split header")
        (count,) = struct.unpack_from("<Q", data, off)
        off += 8
        n_inp = count * 784
        n_rec = count * 784
        need = 8 * (n_inp + count + n_rec)
        if off + need > len(data):
            raise DatasetCacheError(f"truncated payload in split {name}")
        inputs = np.frombuffer(data, dtype="<f8", count=n_inp, offset=off).copy()
        off += 8 * n_inp
        cls = np.frombuffer(data, dtype="<i8", count=count, offset=off).copy()
        off += 8 * count
        rec = np.frombuffer(data, dtype="<f8", count=n_rec, offset=off).copy()
        off += 8 * n_rec
        splits[name] = ImageTaskSplit(
            inputs=inputs.reshape(count, 1, 28, 28),
            targets_cls=cls,
            targets_rec=rec.reshape(count, 784),
            split=name,
        )
    return MultiTaskImageSet(meta=meta, **splits)
