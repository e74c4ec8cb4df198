"""Two-digit composites for the joint classification + reconstruction tasks.

Each composite places one 28x28 source digit in the upper-left and another in
the lower-right corner of a 32x32 canvas (overlap resolved by pixel-wise
maximum), then downscales back to 28x28 with bilinear interpolation.  The
classification target is the upper-left digit's label; the reconstruction
target is the clean lower-right source image.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..netcore import Batch
from ..numkit import RngStream
from .idx import load_idx_images, load_idx_labels

__all__ = [
    "MnistCorpus",
    "ImageTaskSplit",
    "MultiTaskImageSet",
    "load_corpus_dir",
    "bilinear_resize",
    "compose_multi_mnist",
]

# Conventional file names inside a corpus directory.
CORPUS_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class MnistCorpus:
    """One split of raw source digits: images in [0, 1], integer labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.shape[1:] != (28, 28):
            raise ValueError(f"expected (N, 28, 28) images, got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ValueError("label count does not match image count")
        if np.any(self.labels < 0) or np.any(self.labels > 9):
            raise ValueError("labels must be digits 0-9")

    def __len__(self) -> int:
        return self.images.shape[0]


def load_corpus_dir(directory) -> tuple[MnistCorpus, MnistCorpus]:
    """Load the four canonical IDX files from ``directory``."""
    d = Path(directory)
    train = MnistCorpus(
        load_idx_images(d / CORPUS_FILES["train_images"]),
        load_idx_labels(d / CORPUS_FILES["train_labels"]),
    )
    test = MnistCorpus(
        load_idx_images(d / CORPUS_FILES["test_images"]),
        load_idx_labels(d / CORPUS_FILES["test_labels"]),
    )
    return train, test


@dataclass
class ImageTaskSplit:
    """One split of composites with both task targets."""

    inputs: np.ndarray        # (N, 1, 28, 28)
    targets_cls: np.ndarray   # (N,) int labels of the upper-left digit
    targets_rec: np.ndarray   # (N, 784) clean lower-right digit
    split: str

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def targets_for(self, heads: tuple[str, ...]) -> list:
        table = {"cls": self.targets_cls, "rec": self.targets_rec}
        return [table[h] for h in heads]


@dataclass
class MultiTaskImageSet:
    train: ImageTaskSplit
    val: ImageTaskSplit
    test: ImageTaskSplit
    meta: dict


class SplitBatches:
    """Minibatch view of a split restricted to a head subset; reshuffles every
    epoch from the run's own stream."""

    def __init__(self, split: ImageTaskSplit, heads: tuple[str, ...], batch_size: int):
        self.split = split
        self.heads = heads
        self.batch_size = batch_size

    @property
    def tasks(self) -> int:
        return len(self.heads)

    def epoch_batches(self, rng: RngStream):
        n = len(self.split)
        order = rng.permutation(n) if rng is not None else np.arange(n)
        targets = self.split.targets_for(self.heads)
        for start in range(0, n, self.batch_size):
            idx = order[start:start + self.batch_size]
            yield Batch(self.split.inputs[idx], [t[idx] for t in targets])


def _resize_weights(src: int, dst: int) -> np.ndarray:
    """Dense (dst, src) bilinear interpolation matrix with pixel-center
    alignment; rows sum to one, so constant images are preserved exactly."""
    w = np.zeros((dst, src))
    scale = src / dst
    for d in range(dst):
        pos = (d + 0.5) * scale - 0.5
        lo = int(np.floor(pos))
        frac = pos - lo
        lo_c = min(max(lo, 0), src - 1)
        hi_c = min(max(lo + 1, 0), src - 1)
        w[d, lo_c] += 1.0 - frac
        w[d, hi_c] += frac
    return w


def bilinear_resize(images: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Separable bilinear resize of a stack of images (N, H, W)."""
    single = images.ndim == 2
    x = images[None] if single else images
    wr = _resize_weights(x.shape[1], out_hw[0])
    wc = _resize_weights(x.shape[2], out_hw[1])
    out = np.einsum("rh,nhw,cw->nrc", wr, x, wc, optimize=True)
    return out[0] if single else out


def _compose_split(pool_images, pool_labels, count, rng, split_name) -> ImageTaskSplit:
    pool = pool_images.shape[0]
    ul = rng.integers(count, pool)
    lr = rng.integers(count, pool)
    canvas = np.zeros((count, 32, 32))
    canvas[:, 0:28, 0:28] = pool_images[ul]
    np.maximum(canvas[:, 4:32, 4:32], pool_images[lr], out=canvas[:, 4:32, 4:32])
    composites = bilinear_resize(canvas, (28, 28))
    return ImageTaskSplit(
        inputs=composites[:, None, :, :],
        targets_cls=pool_labels[ul].copy(),
        targets_rec=pool_images[lr].reshape(count, 784).copy(),
        split=split_name,
    )


def compose_multi_mnist(
    train_corpus: MnistCorpus,
    test_corpus: MnistCorpus,
    seed: int,
    counts: tuple[int, int, int] = (50_000, 10_000, 10_000),
) -> MultiTaskImageSet:
    """Build train/val/test composite splits.

    Train and validation composites draw from disjoint source pools carved out
    of the training corpus (no leakage); test composites draw from the test
    corpus.  All randomness comes from one stream seeded with ``seed``, so
    identical arguments rebuild a bit-identical set.
    """
    n_train, n_val, n_test = counts
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"all split counts must be positive, got {counts}")
    rng = RngStream(seed)

    order = rng.permutation(len(train_corpus))
    val_pool_size = max(1, round(len(train_corpus) * n_val / (n_train + n_val)))
    if val_pool_size >= len(train_corpus):
        raise ValueError("training corpus too small to carve a validation pool")
    val_idx = order[:val_pool_size]
    train_idx = order[val_pool_size:]

    for name, requested, pool in (
        ("train", n_train, train_idx.size),
        ("val", n_val, val_pool_size),
        ("test", n_test, len(test_corpus)),
    ):
        if requested > pool * pool:
            raise ValueError(
                f"{name}: requested {requested} composites exceeds the {pool * pool} "
                f"available source pairs")

    train = _compose_split(train_corpus.images[train_idx], train_corpus.labels[train_idx],
                           n_train, rng, "train")
    val = _compose_split(train_corpus.images[val_idx], train_corpus.labels[val_idx],
                         n_val, rng, "val")
    test = _compose_split(test_corpus.images, test_corpus.labels, n_test, rng, "test")
    meta = {"seed": int(seed), "counts": [int(n_train), int(n_val), int(n_test)],
            "train_pool": int(train_idx.size), "val_pool": int(val_pool_size)}
    return MultiTaskImageSet(train=train, val=val, test=test, meta=meta)
