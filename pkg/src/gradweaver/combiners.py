"""Stateless descent-direction strategies over per-task shared gradients.

All strategies operate in negative-gradient space: a returned direction ``v``
points downhill for every task, and the training loop applies
``theta_sh <- theta_sh + step * v``.  A direction is *feasible* when it does
not increase any task's loss to first order, i.e. ``(-g_m) . v >= 0`` for all
tasks ``m``.

Strategies:

* ``uniform_direction``   -- plain average of the negative gradients.
* ``min_norm_direction``  -- minimum-norm point of the convex hull of the
  task gradients (Frank-Wolfe with a closed-form two-point line search).
* ``central_direction``   -- min-norm weights of the *unit* gradients, scaled
  back into the hull; keeps an equal angle to every task regardless of the
  tasks' gradient magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numkit import DimensionError

__all__ = [
    "ParetoStationary",
    "DegenerateTaskError",
    "SimplexWeights",
    "Direction",
    "is_feasible",
    "uniform_direction",
    "min_norm_2task",
    "min_norm_weights",
    "min_norm_direction",
    "central_direction",
    "direction_for",
]

FEASIBLE_TOL = 1e-12
STATIONARY_NORM = 1e-10
DEGENERATE_NORM = 1e-12
FW_MAX_ITERS = 250
FW_GAP_TOL = 1e-7
SIMPLEX_TOL = 1e-9


class ParetoStationary(Exception):
    """Signals that some convex combination of the task gradients is (numerically)
    zero: no common descent direction exists and the shared update should be
    skipped this iteration."""


class DegenerateTaskError(ValueError):
    """A task's gradient norm is too small to normalize."""

    def __init__(self, task: int, norm_value: float):
        self.task = task
        super().__init__(f"task {task} has degenerate gradient norm {norm_value:.3e}")


@dataclass(frozen=True)
class SimplexWeights:
    """Convex-combination coefficients: non-negative, summing to one."""

    k: np.ndarray

    def __post_init__(self):
        k = np.ascontiguousarray(self.k, dtype=np.float64)
        object.__setattr__(self, "k", k)
        if k.ndim != 1 or k.size == 0:
            raise DimensionError("weights must be a non-empty 1-D vector")
        if np.any(k < -SIMPLEX_TOL) or abs(float(k.sum()) - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights not on the simplex: {k}")


@dataclass
class Direction:
    """A combined update direction over the shared parameters.

    ``v`` lives in negative-gradient space (downhill for every task when the
    producing strategy guarantees feasibility).  ``gamma`` is only set by the
    central strategy.
    """

    v: np.ndarray
    weights: SimplexWeights | None
    strategy: str
    gamma: float | None = None
    meta: dict = field(default_factory=dict)


def _as_matrix(grads) -> np.ndarray:
    """Accept a GradientSet, a 2-D array or a sequence of vectors; return (M, D)."""
    shared = getattr(grads, "shared", grads)
    g = np.ascontiguousarray(shared, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if g.ndim != 2 or g.shape[1] == 0:
        raise DimensionError(f"expected an (M, D) gradient matrix, got shape {g.shape}")
    return g


def is_feasible(grads, v, tol: float = FEASIBLE_TOL) -> bool:
    """True iff ``(-g_m) . v >= -tol`` for every task gradient ``g_m``."""
    g = _as_matrix(grads)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (g.shape[1],):
        raise DimensionError(f"direction length {v.shape} does not match gradients {g.shape}")
    return bool(np.all(-(g @ v) >= -tol))


def uniform_direction(grads) -> Direction:
    """Average of the negative gradients with weights 1/M."""
    g = _as_matrix(grads)
    m = g.shape[0]
    k = np.full(m, 1.0 / m)
    return Direction(v=-g.mean(axis=0), weights=SimplexWeights(k), strategy="uniform")


def _min_norm_pair(v1v1: float, v1v2: float, v2v2: float) -> float:
    """Weight on the first vector minimizing ``||k*v1 + (1-k)*v2||`` over [0, 1].

    Closed form: k = ((v2 - v1) . v2) / ||v1 - v2||^2, clamped to the unit
    interval.  Degenerate (equal vectors) returns 0.5.
    """
    denom = v1v1 - 2.0 * v1v2 + v2v2
    if denom <= 0.0:
        return 0.5
    return min(1.0, max(0.0, (v2v2 - v1v2) / denom))


def min_norm_2task(g1, g2) -> SimplexWeights:
    """Closed-form two-task minimum-norm weights.

    Both gradients zero is a Pareto-stationary point and raises; exactly equal
    gradients share the weight evenly.
    """
    g1 = np.ascontiguousarray(g1, dtype=np.float64)
    g2 = np.ascontiguousarray(g2, dtype=np.float64)
    if g1.shape != g2.shape:
        raise DimensionError(f"gradient shapes differ: {g1.shape} vs {g2.shape}")
    n1 = float(np.dot(g1, g1))
    n2 = float(np.dot(g2, g2))
    if n1 == 0.0 and n2 == 0.0:
        raise ParetoStationary("both task gradients are zero")
    k1 = _min_norm_pair(n1, float(np.dot(g1, g2)), n2)
    return SimplexWeights(np.array([k1, 1.0 - k1]))


def min_norm_weights(grads) -> SimplexWeights:
    """Frank-Wolfe solution of the min-norm-point problem over the simplex.

    Initialized at the best two-vertex solution, then at most ``FW_MAX_ITERS``
    vertex steps, each with the exact two-point line search of
    :func:`min_norm_2task`; stops when the duality-gap surrogate
    ``||p||^2 - min_t p.g_t`` falls below ``FW_GAP_TOL``.
    """
    g = _as_matrix(grads)
    m = g.shape[0]
    if m == 1:
        if float(np.dot(g[0], g[0])) == 0.0:
            raise ParetoStationary("the single task gradient is zero")
        return SimplexWeights(np.array([1.0]))
    if m == 2:
        return min_norm_2task(g[0], g[1])

    gram = g @ g.T
    if not np.any(np.diag(gram) > 0.0):
        raise ParetoStationary("all task gradients are zero")

    # Best pair of vertices as the starting point.
    best_cost = np.inf
    k = np.full(m, 1.0 / m)
    for i in range(m):
        for j in range(i + 1, m):
            kij = _min_norm_pair(gram[i, i], gram[i, j], gram[j, j])
            cost = (
                kij * kij * gram[i, i]
                + 2.0 * kij * (1.0 - kij) * gram[i, j]
                + (1.0 - kij) * (1.0 - kij) * gram[j, j]
            )
            if cost < best_cost:
                best_cost = cost
                k = np.zeros(m)
                k[i] = kij
                k[j] = 1.0 - kij
    for _ in range(FW_MAX_ITERS):
        proj = gram @ k            # (G k) . g_t for every vertex t
        t = int(np.argmin(proj))
        pp = float(k @ proj)       # ||G k||^2
        gap = pp - float(proj[t])
        if gap < FW_GAP_TOL:
            break
        lam = _min_norm_pair(gram[t, t], float(proj[t]), pp)  # weight on vertex t
        k = (1.0 - lam) * k + lam * np.eye(m)[t]
    return SimplexWeights(k)


def min_norm_direction(grads) -> Direction:
    """Negative of the minimum-norm element of the gradients' convex hull."""
    g = _as_matrix(grads)
    w = min_norm_weights(g)
    combo = w.k @ g
    if float(np.linalg.norm(combo)) < STATIONARY_NORM:
        raise ParetoStationary("minimum-norm combination is numerically zero")
    return Direction(v=-combo, weights=w, strategy="minnorm")


def central_direction(grads) -> Direction:
    """Equal-angle direction: min-norm weights of the unit gradients, rescaled
    by ``gamma = (sum_m k_m / ||g_m||)^-1`` so the result lies in the convex
    hull of the negative gradients."""
    g = _as_matrix(grads)
    norms = np.linalg.norm(g, axis=1)
    for m, nm in enumerate(norms):
        if nm <= DEGENERATE_NORM:
            raise DegenerateTaskError(m, float(nm))
    unit = g / norms[:, None]
    w = min_norm_weights(unit)
    combo = w.k @ unit
    if float(np.linalg.norm(combo)) < STATIONARY_NORM:
        raise ParetoStationary("unit-gradient min-norm combination is numerically zero")
    gamma = 1.0 / float(np.sum(w.k / norms))
    return Direction(v=-gamma * combo, weights=w, strategy="central", gamma=gamma)


_STRATEGIES = {
    "uniform": uniform_direction,
    "minnorm": min_norm_direction,
    "central": central_direction,
}


def direction_for(strategy: str, grads) -> Direction:
    """Dispatch to a base strategy by name."""
    try:
        fn = _STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {sorted(_STRATEGIES)}")
    return fn(grads)
