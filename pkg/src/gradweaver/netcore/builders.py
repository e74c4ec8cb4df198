"""Network recipes for the two experiment families.

Logic nets: 2 inputs -> 2 shared dense+sigmoid neurons -> one linear output
neuron per task, MSE per head.  The heads are linear (no output squashing)
because the second task's targets are scaled by an arbitrary constant c >= 1
and must remain exactly reachable.

Image nets: a LeNet-style shared encoder compressing 28x28 inputs to a 50-dim
latent, with a 10-class log-softmax classification head (NLL) and a sigmoid
reconstruction head decoding back to 784 pixels (MSE).
"""

from __future__ import annotations

from ..numkit import RngStream
from .layers import LayerSpec
from .network import MultiHeadNet

__all__ = ["build_logic_net", "build_image_net", "LATENT_SIZE"]

LATENT_SIZE = 50


def _dense(i, o):
    return LayerSpec("dense", {"in": i, "out": o})


def _conv(c, f, k):
    return LayerSpec("conv2d", {"in_channels": c, "filters": f, "kernel": k})


def build_logic_net(rng: RngStream, tasks: int = 2) -> MultiHeadNet:
    """Two-task (or single-task) logic MLP: shared 2->2 sigmoid trunk, one
    linear unit per head."""
    if tasks < 1:
        raise ValueError("tasks must be >= 1")
    shared = [_dense(2, 2), LayerSpec("sigmoid")]
    heads = [[_dense(2, 1)] for _ in range(tasks)]
    return MultiHeadNet.build(shared, heads, ["mse"] * tasks, (2,), rng)


def _encoder_specs() -> list[LayerSpec]:
    return [
        _conv(1, 10, 5),          # 28 -> 24
        LayerSpec("maxpool2x2"),  # 24 -> 12
        LayerSpec("relu"),
        _conv(10, 20, 5),         # 12 -> 8
        LayerSpec("maxpool2x2"),  # 8 -> 4
        LayerSpec("relu"),
        LayerSpec("flatten"),     # 20*4*4 = 320
        _dense(320, LATENT_SIZE),
    ]


def _cls_head() -> list[LayerSpec]:
    return [_dense(LATENT_SIZE, 10), LayerSpec("logsoftmax")]


def _rec_head() -> list[LayerSpec]:
    return [
        _dense(LATENT_SIZE, 320),
        LayerSpec("relu"),
        _dense(320, 784),
        LayerSpec("sigmoid"),
    ]


def build_image_net(rng: RngStream, heads: tuple[str, ...] = ("cls", "rec")) -> MultiHeadNet:
    """LeNet-style shared encoder with any subset of {cls, rec} heads."""
    if not heads:
        raise ValueError("need at least one head")
    head_specs = []
    losses = []
    for name in heads:
        if name == "cls":
            head_specs.append(_cls_head())
            losses.append("nll")
        elif name == "rec":
            head_specs.append(_rec_head())
            losses.append("mse")
        else:
            raise ValueError(f"unknown head {name!r}; expected 'cls' or 'rec'")
    return MultiHeadNet.build(_encoder_specs(), head_specs, losses, (1, 28, 28), rng)
