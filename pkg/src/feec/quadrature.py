"""Collapsed Gauss–Jacobi rules on the reference simplex."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def _jacobi_01(q: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0,1] for the weight (1-t)^alpha."""
    x, w = roots_jacobi(q, alpha, 0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def simplex_rule(m: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points (P, m+1) and weights summing to 1/m!, exact for total degree <= order."""
    if m == 0:
        return np.ones((1, 1)), np.ones(1)
    q = max(1, (order + 2) // 2)
    nodes = [_jacobi_01(q, m - 1 - d) for d in range(m)]
    grids = np.meshgrid(*[n for n, _ in nodes], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in nodes], indexing="ij")
    t = np.stack([g.reshape(-1) for g in grids], axis=1)
    w = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    x = np.empty_like(t)
    scale = np.ones(t.shape[0])
    for d in range(m):
        x[:, d] = t[:, d] * scale
        scale = scale * (1.0 - t[:, d])
    bary = np.concatenate([1.0 - x.sum(axis=1, keepdims=True), x], axis=1)
    return bary, w


def integrate_reference(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.dot(weights, values))


def physical_weights(m: int, order: int, volume: float) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ∫_F f dvol on a simplex of the given volume."""
    bary, w = simplex_rule(m, order)
    return bary, w * math.factorial(m) * volume
