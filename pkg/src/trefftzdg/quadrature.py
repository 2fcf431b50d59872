"""Gauss-Legendre quadrature on segments and rectangles.

Nodes are computed by Newton iteration on the Legendre three-term
recurrence, converged to residual below 1e-15, so rules are
deterministic across runs and platforms with the same libm.
"""

from functools import lru_cache

import numpy as np

from .errors import DegenerateSegment, ZeroPoints


def _legendre_and_deriv(n, x):
    """Values and derivatives of P_n at points x via the recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for j in range(1, n):
        p, p_prev = ((2 * j + 1) * x * p - j * p_prev) / (j + 1), p
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def _gauss_cached(n):
    k = np.arange(n)
    x = np.cos(np.pi * (4 * k + 3) / (4 * n + 2))
    for _ in range(100):
        p, dp = _legendre_and_deriv(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_and_deriv(n, x)
    # enforce symmetry exactly; nodes come out in descending order
    x = 0.5 * (x - x[::-1])
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    order = np.argsort(x)
    x = np.ascontiguousarray(x[order])
    w = np.ascontiguousarray(w[order])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(n):
    """Return (nodes, weights) of the n-point Gauss-Legendre rule on [-1, 1].

    Exact for polynomials of degree <= 2n - 1. Nodes ascend and are
    symmetric about 0; weights sum to 2.
    """
    if n < 1:
        raise ZeroPoints(f"quadrature rule needs at least one node, got {n}")
    return _gauss_cached(int(n))


def map_to_segment(n, a, b):
    """Map the n-point rule to the segment [a, b].

    Returns (points, weights) with weights summing to b - a. Raises
    DegenerateSegment when b <= a.
    """
    if not b > a:
        raise DegenerateSegment(f"segment [{a}, {b}] has non-positive length")
    xi, w = gauss_rule(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * xi, half * w


def tensor_rule(nx, nt, rect):
    """Tensor Gauss rule on the rectangle (x0, x1) x (t0, t1).

    Returns flattened arrays (X, T, W); W sums to the rectangle area.
    """
    x0, x1, t0, t1 = rect
    px, wx = map_to_segment(nx, x0, x1)
    pt, wt = map_to_segment(nt, t0, t1)
    X = np.repeat(px, nt)
    T = np.tile(pt, nx)
    W = np.repeat(wx, nt) * np.tile(wt, nx)
    return X, T, W
