"""Shared-trunk multi-head networks with per-task gradients.

A ``MultiHeadNet`` is a stack of shared layers feeding ``M`` independent head
stacks, one loss per head.  ``backward_per_task`` produces, for every task,
the exact gradient of that task's mean loss with respect to the shared
parameters (flattened into one vector) and its own head parameters -- the raw
material every combination strategy works on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import DimensionError, RngStream
from .layers import Layer, LayerSpec, build_layer

__all__ = ["NumericFailure", "Batch", "GradientSet", "MultiHeadNet", "LOSS_KINDS"]

LOSS_KINDS = ("mse", "nll")


class NumericFailure(RuntimeError):
    """A loss or gradient stopped being finite; the message names the task."""


@dataclass
class Batch:
    """Inputs plus one target array per task."""

    inputs: np.ndarray
    targets: list

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        if self.inputs.shape[0] < 1:
            raise DimensionError("batch must contain at least one sample")
        for t in self.targets:
            if np.asarray(t).shape[0] != self.inputs.shape[0]:
                raise DimensionError("target count does not match batch size")

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


@dataclass
class GradientSet:
    """Per-task gradients: ``shared`` is (M, D) over the flattened shared
    partition, ``task`` holds each head's parameter gradients, ``losses`` the
    per-task mean losses."""

    shared: np.ndarray
    task: list
    losses: np.ndarray

    @property
    def tasks(self) -> int:
        return self.shared.shape[0]

    def shared_norms(self) -> np.ndarray:
        return np.linalg.norm(self.shared, axis=1)


def _mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean over samples of the per-sample mean squared error."""
    if pred.shape != target.shape:
        raise DimensionError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def _nll_loss(logp: np.ndarray, target: np.ndarray):
    """Mean negative log-likelihood; ``logp`` are log-probabilities, targets
    integer class ids."""
    t = np.asarray(target)
    n = logp.shape[0]
    if t.shape != (n,):
        raise DimensionError(f"nll targets must be ({n},), got {t.shape}")
    rows = np.arange(n)
    loss = -float(np.mean(logp[rows, t]))
    dlogp = np.zeros_like(logp)
    dlogp[rows, t] = -1.0 / n
    return loss, dlogp


_LOSS_FNS = {"mse": _mse_loss, "nll": _nll_loss}


class MultiHeadNet:
    """Shared trunk plus per-task heads.

    Mutated by exactly one training run at a time; concurrent runs each own
    their own instance.
    """

    def __init__(self, shared: list[Layer], heads: list[list[Layer]], losses: list[str],
                 input_shape: tuple):
        if len(heads) < 1:
            raise DimensionError("need at least one head")
        if len(losses) != len(heads):
            raise DimensionError("one loss kind per head required")
        for kind in losses:
            if kind not in LOSS_KINDS:
                raise ValueError(f"unknown loss kind {kind!r}")
        self.shared = shared
        self.heads = heads
        self.losses = list(losses)
        self.input_shape = tuple(input_shape)
        self._check_shapes()

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, shared_specs: list[LayerSpec], head_specs: list[list[LayerSpec]],
              losses: list[str], input_shape: tuple, rng: RngStream | None = None
              ) -> "MultiHeadNet":
        """Build from specs and, when a stream is given, initialize every
        parameter uniformly in ``[-1/sqrt(fan_in), +1/sqrt(fan_in)]``.

        Draw order is fixed (shared layers first, then heads in order; weights
        before biases) so a seed pins the full parameter vector.
        """
        net = cls(
            [build_layer(s) for s in shared_specs],
            [[build_layer(s) for s in specs] for specs in head_specs],
            losses,
            input_shape,
        )
        if rng is not None:
            for layer in net.shared:
                layer.init_params(rng)
            for head in net.heads:
                for layer in head:
                    layer.init_params(rng)
        return net

    def _check_shapes(self):
        shape = self.input_shape
        for layer in self.shared:
            shape = layer.out_shape(shape)
        self.latent_shape = shape
        for head in self.heads:
            hshape = shape
            for layer in head:
                hshape = layer.out_shape(hshape)

    @property
    def tasks(self) -> int:
        return len(self.heads)

    def specs(self) -> tuple[list[LayerSpec], list[list[LayerSpec]]]:
        return ([l.spec() for l in self.shared],
                [[l.spec() for l in head] for head in self.heads])

    # -- forward / loss -----------------------------------------------------

    def _forward_shared(self, x: np.ndarray):
        caches = []
        for layer in self.shared:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def _forward_head(self, m: int, latent: np.ndarray):
        caches = []
        y = latent
        for layer in self.heads[m]:
            y, cache = layer.forward(y)
            caches.append(cache)
        return y, caches

    def forward(self, inputs: np.ndarray) -> list[np.ndarray]:
        """Head outputs for a batch of inputs."""
        x = np.ascontiguousarray(inputs, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise DimensionError(f"expected input shape {self.input_shape}, got {x.shape[1:]}")
        latent, _ = self._forward_shared(x)
        return [self._forward_head(m, latent)[0] for m in range(self.tasks)]

    def task_loss(self, batch: Batch, m: int) -> float:
        """Mean loss of task ``m`` on ``batch`` (forward only)."""
        latent, _ = self._forward_shared(batch.inputs)
        out, _ = self._forward_head(m, latent)
        loss, _ = _LOSS_FNS[self.losses[m]](out, batch.targets[m])
        return loss

    # -- backward -----------------------------------------------------------

    def backward_per_task(self, batch: Batch) -> GradientSet:
        """Exact per-task gradients of the mean losses.

        The trunk is forwarded once; each task then backpropagates its own
        loss through its head and the shared trunk separately, so the shared
        rows are the individual (unconflated) task gradients.
        """
        if batch.inputs.shape[1:] != self.input_shape:
            raise DimensionError(
                f"expected input shape {self.input_shape}, got {batch.inputs.shape[1:]}")
        latent, shared_caches = self._forward_shared(batch.inputs)
        shared_rows = []
        task_grads = []
        losses = np.empty(self.tasks)
        for m in range(self.tasks):
            out, head_caches = self._forward_head(m, latent)
            loss, dout = _LOSS_FNS[self.losses[m]](out, batch.targets[m])
            if not np.isfinite(loss):
                raise NumericFailure(f"task {m} loss is not finite ({loss})")
            losses[m] = loss
            head = self.heads[m]
            grads_m = [None] * len(head)
            d = dout
            for i in range(len(head) - 1, -1, -1):
                d, g = head[i].backward(d, head_caches[i])
                grads_m[i] = g
            flat_shared = []
            for i in range(len(self.shared) - 1, -1, -1):
                d, g = self.shared[i].backward(d, shared_caches[i])
                flat_shared.append(g)
            row = (np.concatenate([a.ravel() for g in reversed(flat_shared) for a in g])
                   if self.shared_size() else np.zeros(0))
            shared_rows.append(row)
            task_grads.append([a for g in grads_m for a in g])
        return GradientSet(shared=np.stack(shared_rows), task=task_grads, losses=losses)

    # -- parameter access ---------------------------------------------------

    def _shared_params(self) -> list[np.ndarray]:
        return [p for layer in self.shared for p in layer.params()]

    def task_params(self, m: int) -> list[np.ndarray]:
        return [p for layer in self.heads[m] for p in layer.params()]

    def shared_size(self) -> int:
        return sum(p.size for p in self._shared_params())

    def shared_vector(self) -> np.ndarray:
        """Flattened copy of the shared partition (bijective with unflatten)."""
        params = self._shared_params()
        if not params:
            return np.zeros(0)
        return np.concatenate([p.ravel() for p in params])

    def set_shared_vector(self, vec: np.ndarray) -> None:
        """Inverse of ``shared_vector``: scatter a flat vector back in place."""
        vec = np.ascontiguousarray(vec, dtype=np.float64)
        if vec.shape != (self.shared_size(),):
            raise DimensionError(f"expected {self.shared_size()} entries, got {vec.shape}")
        off = 0
        for p in self._shared_params():
            p[...] = vec[off:off + p.size].reshape(p.shape)
            off += p.size

    def add_to_shared(self, delta: np.ndarray) -> None:
        """In-place shared-parameter update by a precomputed step."""
        delta = np.ascontiguousarray(delta, dtype=np.float64)
        if delta.shape != (self.shared_size(),):
            raise DimensionError(f"expected {self.shared_size()} entries, got {delta.shape}")
        off = 0
        for p in self._shared_params():
            p += delta[off:off + p.size].reshape(p.shape)
            off += p.size

    def add_to_task(self, m: int, deltas: list) -> None:
        params = self.task_params(m)
        if len(deltas) != len(params):
            raise DimensionError(f"head {m} expects {len(params)} arrays, got {len(deltas)}")
        for p, d in zip(params, deltas):
            if p.shape != d.shape:
                raise DimensionError(f"head {m} shape mismatch: {p.shape} vs {d.shape}")
            p += d
