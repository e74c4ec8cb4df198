"""Shared-trunk multi-head networks: layers, per-task backprop, oracles,
recipes and the binary checkpoint container."""

from .builders import LATENT_SIZE, build_image_net, build_logic_net
from .checkpoint import CheckpointError, load_net, save_net
from .gradcheck import finite_diff_gradient, gradcheck_suite, relative_error
from .layers import LAYER_KINDS, Layer, LayerSpec, build_layer
from .network import LOSS_KINDS, Batch, GradientSet, MultiHeadNet, NumericFailure

__all__ = [
    "LATENT_SIZE",
    "LAYER_KINDS",
    "LOSS_KINDS",
    "Batch",
    "CheckpointError",
    "GradientSet",
    "Layer",
    "LayerSpec",
    "MultiHeadNet",
    "NumericFailure",
    "build_image_net",
    "build_layer",
    "build_logic_net",
    "finite_diff_gradient",
    "gradcheck_suite",
    "load_net",
    "relative_error",
    "save_net",
]
