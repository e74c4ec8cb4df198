"""Versioned little-endian model container (magic ``GWNT``).

Layout: magic, format version, head count, input shape, a layer table for the
shared trunk and each head (kind id + three shape args), then the raw float64
parameter payload per layer in declaration order.  Round-trips are
bit-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .layers import LayerSpec
from .network import MultiHeadNet

__all__ = ["MAGIC", "FORMAT_VERSION", "save_net", "load_net", "CheckpointError"]

MAGIC = b"GWNT"
FORMAT_VERSION = 1

_KIND_IDS = {
    "dense": 1,
    "conv2d": 2,
    "maxpool2x2": 3,
    "relu": 4,
    "sigmoid": 5,
    "logsoftmax": 6,
    "flatten": 7,
}
_KIND_NAMES = {v: k for k, v in _KIND_IDS.items()}
_LOSS_IDS = {"mse": 0, "nll": 1}
_LOSS_NAMES = {v: k for k, v in _LOSS_IDS.items()}


class CheckpointError(ValueError):
    """Malformed or truncated checkpoint data."""


def _spec_args(spec: LayerSpec) -> tuple[int, int, int]:
    if spec.kind == "dense":
        return (spec.args["in"], spec.args["out"], 0)
    if spec.kind == "conv2d":
        return (spec.args["in_channels"], spec.args["filters"], spec.args["kernel"])
    return (0, 0, 0)


def _spec_from(kind_id: int, a: int, b: int, c: int) -> LayerSpec:
    kind = _KIND_NAMES.get(kind_id)
    if kind is None:
        raise CheckpointError(f"unknown layer kind id {kind_id}")
    if kind == "dense":
        return LayerSpec(kind, {"in": a, "out": b})
    if kind == "conv2d":
        return LayerSpec(kind, {"in_channels": a, "filters": b, "kernel": c})
    return LayerSpec(kind)


def save_net(net: MultiHeadNet, path) -> None:
    """Write the network's architecture and parameters to ``path``."""
    shared_specs, head_specs = net.specs()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<III", FORMAT_VERSION, net.tasks, len(net.input_shape))
    out += struct.pack(f"<{len(net.input_shape)}I", *net.input_shape)
    out += struct.pack("<I", len(shared_specs))
    for spec in shared_specs:
        out += struct.pack("<IIII", _KIND_IDS[spec.kind], *_spec_args(spec))
    for m, specs in enumerate(head_specs):
        out += struct.pack("<II", len(specs), _LOSS_IDS[net.losses[m]])
        for spec in specs:
            out += struct.pack("<IIII", _KIND_IDS[spec.kind], *_spec_args(spec))
    layers = list(net.shared) + [l for head in net.heads for l in head]
    for layer in layers:
        for p in layer.params():
            out += struct.pack("<Q", p.size)
            out += np.ascontiguousarray(p, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.off + size > len(self.data):
            raise CheckpointError("truncated checkpoint")
        vals = struct.unpack_from(fmt, self.data, self.off)
        self.off += size
        return vals

    def take_f64(self, count: int) -> np.ndarray:
        size = count * 8
        if self.off + size > len(self.data):
            raise CheckpointError("truncated parameter payload")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.off).copy()
        self.off += size
        return arr


def load_net(path) -> MultiHeadNet:
    """Rebuild a network saved by :func:`save_net`."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    r = _Reader(data)
    r.off = 4
    version, tasks, in_ndim = r.take("<III")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    input_shape = r.take(f"<{in_ndim}I")
    (n_shared,) = r.take("<I")
    shared_specs = [_spec_from(*r.take("<IIII")) for _ in range(n_shared)]
    head_specs = []
    losses = []
    for _ in range(tasks):
        n_layers, loss_id = r.take("<II")
        if loss_id not in _LOSS_NAMES:
            raise CheckpointError(f"unknown loss id {loss_id}")
        losses.append(_LOSS_NAMES[loss_id])
        head_specs.append([_spec_from(*r.take("<IIII")) for _ in range(n_layers)])
    net = MultiHeadNet.build(shared_specs, head_specs, losses, input_shape)
    layers = list(net.shared) + [l for head in net.heads for l in head]
    for layer in layers:
        for p in layer.params():
            (count,) = r.take("<Q")
            if count != p.size:
                raise CheckpointError(
                    f"parameter size mismatch: stored {count}, expected {p.size}")
            p[...] = r.take_f64(count).reshape(p.shape)
    return net
