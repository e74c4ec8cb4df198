"""SGD with classical momentum, applied per parameter partition.

The shared partition is driven by a pseudo-gradient: the combined direction
already points downhill, so the trainer passes its negation and the usual
``params -= lr * velocity`` update moves the trunk along the direction.
"""

from __future__ import annotations

import numpy as np

from ..netcore import MultiHeadNet

__all__ = ["SgdMomentum"]


class SgdMomentum:
    """velocity <- mu * velocity + pseudo_grad; params <- params - lr * velocity."""

    def __init__(self, lr: float, momentum: float = 0.9):
        if lr <= 0.0:
            raise ValueError(f"lr must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        self.lr = lr
        self.momentum = momentum
        self._shared_vel: np.ndarray | None = None
        self._task_vel: dict[int, list[np.ndarray]] = {}

    def step_shared(self, net: MultiHeadNet, pseudo_grad: np.ndarray) -> None:
        if self._shared_vel is None:
            self._shared_vel = np.zeros_like(pseudo_grad)
        self._shared_vel *= self.momentum
        self._shared_vel += pseudo_grad
        net.add_to_shared(-self.lr * self._shared_vel)

    def step_task(self, net: MultiHeadNet, m: int, grads: list) -> None:
        if m not in self._task_vel:
            self._task_vel[m] = [np.zeros_like(g) for g in grads]
        vel = self._task_vel[m]
        deltas = []
        for v, g in zip(vel, grads):
            v *= self.momentum
            v += g
            deltas.append(-self.lr * v)
        net.add_to_task(m, deltas)
