"""History-driven correction of a combined descent direction.

Each task keeps a sliding window of its shared-gradient norms.  The ratio of
the two most recent window means, plus a log10 penalty on the task's current
loss, yields a relative-change score ``delta``; a sigmoid squashes it into a
tension factor ``c`` in ``[1 - alpha, 1]``.  Each task then pulls the base
direction toward its own negative gradient with strength ``c``, and the sum
of the pulls is scaled back (beta-halving) until the corrected direction is
feasible for every task again.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .combiners import Direction, is_feasible

__all__ = [
    "HistoryNotReady",
    "TensionConfig",
    "NormHistory",
    "TensionDiagnostics",
    "push_norm",
    "zeta",
    "relative_change",
    "tension_factor",
    "tension_vector",
    "tensioned_direction",
]

# Stand-in for "this task has fully converged": drives the sigmoid to its
# minimal-tension plateau.  Continuous limit of the relative-change score as
# either the loss or the previous window mean goes to zero.
CONVERGED_DELTA = -1e9

_ZERO_DIFF = 1e-12
_EXP_ARG_MAX = 700.0  # math.exp overflows just above 709


class HistoryNotReady(Exception):
    """Raised when the norm history is too short for the requested window."""


@dataclass(frozen=True)
class TensionConfig:
    """Tuning knobs: ``alpha`` is the sensitivity in [0, 1], ``window`` the
    accumulation period in iterations."""

    alpha: float = 0.3
    window: int = 10
    backtrack_shrink: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not 0.0 < self.backtrack_shrink < 1.0:
            raise ValueError(f"backtrack_shrink must be in (0, 1), got {self.backtrack_shrink}")
        if self.max_backtracks < 0:
            raise ValueError(f"max_backtracks must be >= 0, got {self.max_backtracks}")


class NormHistory:
    """Per-task ring buffers of the last ``window + 1`` shared-gradient norms.

    ``window + 1`` entries allow both the current window mean and the mean
    shifted back by one iteration.
    """

    def __init__(self, tasks: int, window: int):
        if tasks < 1 or window < 1:
            raise ValueError("tasks and window must be positive")
        self.window = window
        self.iteration = 0
        self._buffers = [deque(maxlen=window + 1) for _ in range(tasks)]

    @property
    def tasks(self) -> int:
        return len(self._buffers)

    def __len__(self) -> int:
        return len(self._buffers[0])

    def ready(self, offset: int = 1) -> bool:
        """Whether ``zeta(m, offset)`` can be computed."""
        return len(self) >= self.window + offset

    def values(self, m: int) -> list[float]:
        """Stored norms for task ``m``, oldest first."""
        return list(self._buffers[m])


def push_norm(history: NormHistory, norms) -> None:
    """Append one iteration's per-task gradient norms, evicting the oldest."""
    norms = np.asarray(norms, dtype=np.float64)
    if norms.shape != (history.tasks,):
        raise ValueError(f"expected {history.tasks} norms, got shape {norms.shape}")
    if np.any(~np.isfinite(norms)) or np.any(norms < 0.0):
        raise ValueError(f"norms must be finite and non-negative, got {norms}")
    for m in range(history.tasks):
        history._buffers[m].append(float(norms[m]))
    history.iteration += 1


def zeta(history: NormHistory, m: int, offset: int = 0) -> float:
    """Mean of the ``window`` most recent norms for task ``m``, shifted back by
    ``offset`` iterations (offset 0 or 1)."""
    if offset not in (0, 1):
        raise ValueError(f"offset must be 0 or 1, got {offset}")
    buf = history._buffers[m]
    w = history.window
    if len(buf) < w + offset:
        raise HistoryNotReady(
            f"task {m}: have {len(buf)} norms, need {w + offset} for offset {offset}"
        )
    vals = list(buf)
    window_vals = vals[-w:] if offset == 0 else vals[-w - 1:-1]
    return float(np.mean(window_vals))


def relative_change(history: NormHistory, m: int, loss: float) -> float:
    """Relative-change score: window-mean ratio plus a log10 penalty on the
    current loss.

    A zero previous window mean or a zero loss means the task has nothing left
    to gain; both collapse to the converged surrogate.
    """
    zeta_prev = zeta(history, m, offset=1)
    if zeta_prev <= 0.0 or loss <= 0.0:
        return CONVERGED_DELTA
    zeta_now = zeta(history, m, offset=0)
    return zeta_now / zeta_prev + math.log10(loss)


def tension_factor(delta: float, alpha: float) -> float:
    """Sigmoid-shaped factor in ``[1 - alpha, 1]``, non-decreasing in ``delta``.

    ``c = alpha / (1 + exp(-delta*e + e)) + 1 - alpha`` with e = Euler's number.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    arg = min(-delta * math.e + math.e, _EXP_ARG_MAX)
    return alpha / (1.0 + math.exp(arg)) + 1.0 - alpha


def tension_vector(neg_grad, v, factor: float) -> np.ndarray:
    """Pull of one task on the direction: ``c * (n - v) / ||n - v||`` where
    ``n`` is the task's negative gradient.  Zero when the task already owns
    the direction (``n == v``)."""
    n = np.ascontiguousarray(neg_grad, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if n.shape != v.shape:
        raise ValueError(f"shape mismatch: {n.shape} vs {v.shape}")
    diff = n - v
    dn = float(np.linalg.norm(diff))
    if dn < _ZERO_DIFF:
        return np.zeros_like(diff)
    return factor * diff / dn


@dataclass
class TensionDiagnostics:
    """Per-task tension quantities plus the applied backtrack scale."""

    zeta_now: np.ndarray
    zeta_prev: np.ndarray
    delta: np.ndarray
    factor: np.ndarray
    tension: list = field(default_factory=list)
    beta: float = 1.0
    backtracks: int = 0


def tensioned_direction(
    grads, base: Direction, history: NormHistory, cfg: TensionConfig
) -> tuple[Direction, TensionDiagnostics]:
    """Correct ``base`` by the summed task tensions, backtracking to feasibility.

    The corrected direction is ``v + beta * sum_m u_m`` with ``beta`` starting
    at 1 and shrunk geometrically until the result is feasible for every task;
    if no scale works the base direction is returned unchanged (beta = 0).
    Requires ``window + 1`` pushed norms.
    """
    g = np.ascontiguousarray(getattr(grads, "shared", grads), dtype=np.float64)
    losses = np.asarray(getattr(grads, "losses", np.ones(g.shape[0])), dtype=np.float64)
    m_tasks = g.shape[0]
    if history.tasks != m_tasks:
        raise ValueError(f"history tracks {history.tasks} tasks, gradients have {m_tasks}")

    zeta_now = np.empty(m_tasks)
    zeta_prev = np.empty(m_tasks)
    delta = np.empty(m_tasks)
    factor = np.empty(m_tasks)
    tensions = []
    total = np.zeros_like(base.v)
    for m in range(m_tasks):
        zeta_prev[m] = zeta(history, m, offset=1)
        zeta_now[m] = zeta(history, m, offset=0)
        delta[m] = relative_change(history, m, float(losses[m]))
        factor[m] = tension_factor(float(delta[m]), cfg.alpha)
        u = tension_vector(-g[m], base.v, float(factor[m]))
        tensions.append(u)
        total += u

    beta = 1.0
    backtracks = 0
    v_new = base.v + beta * total
    while not is_feasible(g, v_new):
        if backtracks >= cfg.max_backtracks:
            beta = 0.0
            v_new = base.v.copy()
            break
        beta *= cfg.backtrack_shrink
        backtracks += 1
        v_new = base.v + beta * total

    diag = TensionDiagnostics(
        zeta_now=zeta_now,
        zeta_prev=zeta_prev,
        delta=delta,
        factor=factor,
        tension=tensions,
        beta=beta,
        backtracks=backtracks,
    )
    corrected = Direction(
        v=v_new,
        weights=base.weights,
        strategy=base.strategy + "_tensor",
        gamma=base.gamma,
        meta=dict(base.meta),
    )
    return corrected, diag
