"""Experiment corpora: scaled logic tasks, IDX parsing, two-digit composites,
the surrogate glyph corpus, and the binary dataset cache."""

from .container import load_image_set, save_image_set
from .idx import (
    IdxFormatError,
    load_idx,
    load_idx_images,
    load_idx_labels,
    write_idx_images,
    write_idx_labels,
)
from .logic import LOGIC_INPUTS, LogicDataset, logic_dataset
from .multimnist import (
    ImageTaskSplit,
    MnistCorpus,
    MultiTaskImageSet,
    SplitBatches,
    bilinear_resize,
    compose_multi_mnist,
    load_corpus_dir,
)
from .surrogate import ensure_surrogate_idx, render_corpus, render_digit

__all__ = [
    "IdxFormatError",
    "ImageTaskSplit",
    "LOGIC_INPUTS",
    "LogicDataset",
    "MnistCorpus",
    "MultiTaskImageSet",
    "SplitBatches",
    "bilinear_resize",
    "compose_multi_mnist",
    "ensure_surrogate_idx",
    "load_corpus_dir",
    "load_idx",
    "load_idx_images",
    "load_idx_labels",
    "load_image_set",
    "logic_dataset",
    "render_corpus",
    "render_digit",
    "save_image_set",
    "write_idx_images",
    "write_idx_labels",
]
