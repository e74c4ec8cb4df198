"""The scaled two-gate logic corpus.

Four input patterns; the AND head learns {0, 1} levels while the XOR head's
targets are multiplied by a constant ``c >= 1`` to push the two tasks'
gradient magnitudes apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..netcore import Batch

__all__ = ["LogicDataset", "logic_dataset", "LOGIC_INPUTS"]

LOGIC_INPUTS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
_AND = np.array([0.0, 0.0, 0.0, 1.0])
_XOR = np.array([0.0, 1.0, 1.0, 0.0])


@dataclass
class LogicDataset:
    """Full-batch logic tasks; one epoch is one iteration."""

    inputs: np.ndarray
    targets: list          # one (4, 1) array per task
    scales: list           # per-task target scale (AND: 1, XOR: c)
    task_names: list
    c: float

    @property
    def tasks(self) -> int:
        return len(self.targets)

    def batch(self) -> Batch:
        return Batch(self.inputs, self.targets)

    def epoch_batches(self, rng=None):
        yield self.batch()


def logic_dataset(c: float, tasks: tuple[str, ...] = ("and", "xor")) -> LogicDataset:
    """Build the logic corpus with the XOR annotations scaled by ``c``."""
    if c < 1.0:
        raise ValueError(f"scale constant must satisfy c >= 1, got {c}")
    targets = []
    scales = []
    for name in tasks:
        if name == "and":
            targets.append(_AND.reshape(4, 1).copy())
            scales.append(1.0)
        elif name == "xor":
            targets.append((c * _XOR).reshape(4, 1))
            scales.append(float(c))
        else:
            raise ValueError(f"unknown logic task {name!r}")
    return LogicDataset(LOGIC_INPUTS.copy(), targets, scales, list(tasks), float(c))
