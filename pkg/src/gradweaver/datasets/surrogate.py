"""Procedurally rendered digit glyphs as a stand-in source corpus.

Raw source digits are user-supplied and never downloaded.  When none are
available, this module renders a deterministic ten-class corpus of
seven-segment-style glyphs with random affine jitter (rotation, scale, shift,
stroke width) and anti-aliased strokes, written through the same IDX container
the real corpus would use.  It preserves the experiments' task structure --
digit classification conflicting with digit reconstruction -- not the exact
pixel statistics of handwritten digits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..numkit import RngStream
from .idx import write_idx_images, write_idx_labels
from .multimnist import CORPUS_FILES

__all__ = ["render_digit", "render_corpus", "ensure_surrogate_idx"]

# Seven-segment endpoints on the unit square (x right, y down).
_SEGS = {
    "A": ((0.25, 0.12), (0.75, 0.12)),
    "B": ((0.75, 0.12), (0.75, 0.50)),
    "C": ((0.75, 0.50), (0.75, 0.88)),
    "D": ((0.25, 0.88), (0.75, 0.88)),
    "E": ((0.25, 0.50), (0.25, 0.88)),
    "F": ((0.25, 0.12), (0.25, 0.50)),
    "G": ((0.25, 0.50), (0.75, 0.50)),
}
_DIGIT_SEGS = {
    0: "ABCDEF", 1: "BC", 2: "ABDEG", 3: "ABCDG", 4: "BCFG",
    5: "ACDFG", 6: "ACDEFG", 7: "ABC", 8: "ABCDEFG", 9: "ABCDFG",
}

_GRID = (np.arange(28) + 0.5) / 28.0
_PX, _PY = np.meshgrid(_GRID, _GRID)  # (28, 28) pixel centers


def _segment_distance(px, py, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / length2
    t = np.clip(t, 0.0, 1.0)
    cx = ax + t * dx
    cy = ay + t * dy
    return np.hypot(px - cx, py - cy)


def render_digit(digit: int, rng: RngStream) -> np.ndarray:
    """One 28x28 anti-aliased glyph with random affine jitter, values in [0, 1]."""
    angle = rng.uniform(-0.18, 0.18)
    scale = rng.uniform(0.85, 1.15)
    tx = rng.uniform(-0.07, 0.07)
    ty = rng.uniform(-0.07, 0.07)
    half_w = rng.uniform(0.030, 0.048)
    cos_a, sin_a = np.cos(angle), np.sin(angle)

    def jitter(p):
        x, y = p[0] - 0.5, p[1] - 0.5
        return (scale * (cos_a * x - sin_a * y) + 0.5 + tx,
                scale * (sin_a * x + cos_a * y) + 0.5 + ty)

    dist = np.full((28, 28), np.inf)
    for seg in _DIGIT_SEGS[digit]:
        a, b = _SEGS[seg]
        np.minimum(dist, _segment_distance(_PX, _PY, jitter(a), jitter(b)), out=dist)
    aa = 0.022  # anti-alias band width in unit coordinates
    return np.clip((half_w + aa - dist) / aa, 0.0, 1.0)


def render_corpus(seed: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` glyphs with uniformly drawn labels; fully seed-determined."""
    rng = RngStream(seed)
    labels = rng.integers(count, 10)
    images = np.empty((count, 28, 28))
    for i in range(count):
        images[i] = render_digit(int(labels[i]), rng)
    return images, labels


def ensure_surrogate_idx(directory, seed: int = 90210,
                         n_train: int = 14_000, n_test: int = 4_000) -> Path:
    """Write the surrogate corpus as canonical IDX files if not already there."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {key: d / name for key, name in CORPUS_FILES.items()}
    if not all(p.exists() for p in paths.values()):
        train_images, train_labels = render_corpus(seed, n_train)
        test_images, test_labels = render_corpus(seed + 1, n_test)
        write_idx_images(paths["train_images"], train_images)
        write_idx_labels(paths["train_labels"], train_labels)
        write_idx_images(paths["test_images"], test_images)
        write_idx_labels(paths["test_labels"], test_labels)
    return d
