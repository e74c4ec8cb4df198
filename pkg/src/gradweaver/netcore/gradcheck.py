"""Finite-difference gradient oracle and the layer-coverage check suite.

The oracle recomputes a task's loss with each shared parameter nudged by
``+/-h`` and never touches the backprop path, so the two stay independent.
Intended for nets up to a few thousand parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import RngStream
from .layers import LayerSpec
from .network import Batch, MultiHeadNet

__all__ = ["finite_diff_gradient", "relative_error", "gradcheck_suite", "GradcheckCase"]


def finite_diff_gradient(net: MultiHeadNet, batch: Batch, m: int, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of task ``m``'s mean loss over the shared
    partition.  Restores the parameters exactly afterwards."""
    theta = net.shared_vector()
    grad = np.empty_like(theta)
    probe = theta.copy()
    for i in range(theta.size):
        probe[i] = theta[i] + h
        net.set_shared_vector(probe)
        up = net.task_loss(batch, m)
        probe[i] = theta[i] - h
        net.set_shared_vector(probe)
        down = net.task_loss(batch, m)
        probe[i] = theta[i]
        grad[i] = (up - down) / (2.0 * h)
    net.set_shared_vector(theta)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """L2 distance over the larger of the two norms (floored to avoid 0/0)."""
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-12)
    return float(np.linalg.norm(a - b)) / scale


@dataclass
class GradcheckCase:
    name: str
    rel_error: float


def _dense(i, o):
    return LayerSpec("dense", {"in": i, "out": o})


def _conv(c, f, k):
    return LayerSpec("conv2d", {"in_channels": c, "filters": f, "kernel": k})


def _case_nets(seed: int):
    """Small randomized nets covering every layer kind in the shared trunk."""
    rng = RngStream(seed)

    def batch_for(net, n, classes=None):
        x = rng.uniform_array(n * int(np.prod(net.input_shape)), -1.0, 1.0).reshape(
            (n,) + net.input_shape)
        targets = []
        for m in range(net.tasks):
            out_shape = net.latent_shape
            for layer in net.heads[m]:
                out_shape = layer.out_shape(out_shape)
            if net.losses[m] == "nll":
                t = rng.integers(n, classes or out_shape[0])
            else:
                t = rng.uniform_array(n * int(np.prod(out_shape)), -1.0, 1.0).reshape(
                    (n,) + out_shape)
            targets.append(t)
        return Batch(x, targets)

    cases = []

    net = MultiHeadNet.build(
        [_dense(3, 4), LayerSpec("sigmoid"), _dense(4, 3)],
        [[_dense(3, 2)]], ["mse"], (3,), rng)
    cases.append(("dense+sigmoid", net, batch_for(net, 5)))

    net = MultiHeadNet.build(
        [_dense(4, 6), LayerSpec("relu"), _dense(6, 3)],
        [[_dense(3, 2)]], ["mse"], (4,), rng)
    cases.append(("dense+relu", net, batch_for(net, 5)))

    net = MultiHeadNet.build(
        [_conv(1, 2, 3), LayerSpec("maxpool2x2"), LayerSpec("relu"),
         LayerSpec("flatten"), _dense(2 * 3 * 3, 4)],
        [[_dense(4, 2)]], ["mse"], (1, 8, 8), rng)
    cases.append(("conv+maxpool+relu+flatten", net, batch_for(net, 3)))

    net = MultiHeadNet.build(
        [_dense(5, 6), LayerSpec("sigmoid")],
        [[_dense(6, 4), LayerSpec("logsoftmax")]], ["nll"], (5,), rng)
    cases.append(("logsoftmax+nll", net, batch_for(net, 6)))

    net = MultiHeadNet.build(
        [_dense(3, 4), LayerSpec("sigmoid")],
        [[_dense(4, 2)], [_dense(4, 3), LayerSpec("sigmoid")]], ["mse", "mse"], (3,), rng)
    cases.append(("two-head shared trunk", net, batch_for(net, 4)))

    return cases


def gradcheck_suite(seed: int = 0, repeats: int = 4, h: float = 1e-6) -> list[GradcheckCase]:
    """Backprop vs. central differences across every layer kind.

    Each repeat redraws parameters and data; the reported number per case is
    the worst relative error over repeats and tasks.
    """
    results: dict[str, float] = {}
    for r in range(repeats):
        for name, net, batch in _case_nets(seed + 1000 * r):
            grads = net.backward_per_task(batch)
            worst = results.get(name, 0.0)
            for m in range(net.tasks):
                fd = finite_diff_gradient(net, batch, m, h)
                worst = max(worst, relative_error(fd, grads.shared[m]))
            results[name] = worst
    return [GradcheckCase(name, err) for name, err in results.items()]
