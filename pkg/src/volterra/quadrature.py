"""Product-integration weights on uniform and graded node sets.

Weights are stored packed lower-triangular: row ``i`` holds the node weights
``w_i0 .. w_ii`` of ``int_0^{t_i} a(t_i - s) u(s) ds`` at offset ``i(i+1)/2``.
"""
from __future__ import annotations

import functools
import math

import numpy as np

from . import backend

DEFAULT_GRADING = 0.01


def sweep(weights, f, mus):
    return backend.volterra_sweep(
        np.ascontiguousarray(weights, dtype=float),
        np.ascontiguousarray(f, dtype=float),
        np.ascontiguousarray(mus, dtype=float),
    )


def apply(weights, values):
    """``Q[a, u](t_i)`` for every row of ``values``."""
    return backend.packed_apply(
        np.ascontiguousarray(weights, dtype=float), np.ascontiguousarray(np.atleast_2d(values), dtype=float)
    )


def uniform_moments(kernel, h: float, n: int):
    """Panel moments ``near[d], far[d]`` for ``L = (d-1) h``, ``d = 1..n`` (index 0 unused)."""
    lower = h * np.arange(n)
    near, far = kernel.panel_moments(lower, np.full(n, h))
    return np.concatenate([[0.0], near]), np.concatenate([[0.0], far])


def toeplitz_from_moments(near, far):
    """Split uniform node weights into a Toeplitz part and the ``j = 0`` column.

    ``Q_i = sum_{1<=j<=i} v[i-j] u_j + first[i] u_0``.
    """
    n = len(near) - 1
    v = np.zeros(n + 1)
    v[0] = near[1] if n >= 1 else 0.0
    v[1:n] = far[1:n] + near[2 : n + 1]
    if n >= 1:
        v[n] = far[n]
    first = far.copy()
    first[0] = 0.0
    return v, first


def uniform_toeplitz(kernel, grid):
    near, far = uniform_moments(kernel, grid.dt, grid.steps)
    return toeplitz_from_moments(near, far)


def memory_toeplitz(kernel, grid):
    """Toeplitz weights for ``int_0^{t_i} a'(t_i - s) u(s) ds`` (needs finite ``a(0)``)."""
    n, h = grid.steps, grid.dt
    lower = h * np.arange(n)
    near, far = kernel.derivative_panel_moments(lower, np.full(n, h))
    return toeplitz_from_moments(np.concatenate([[0.0], near]), np.concatenate([[0.0], far]))


def pack_toeplitz(v, first):
    n = len(v)
    out = np.empty(n * (n + 1) // 2)
    for i in range(n):
        off = i * (i + 1) // 2
        out[off] = first[i]
        if i:
            out[off + 1 : off + i + 1] = v[i - 1 :: -1]
    return out


@functools.lru_cache(maxsize=8)
def uniform_node_weights(kernel, grid):
    v, first = uniform_toeplitz(kernel, grid)
    w = pack_toeplitz(v, first)
    w.setflags(write=False)
    return w


def node_weights(kernel, nodes, tail_start: int | None = None):
    """Packed weights on arbitrary nondecreasing nodes.

    Nodes from ``tail_start`` on must be uniformly spaced; panels there reuse
    one table of moments instead of being integrated row by row.
    """
    nodes = np.asarray(nodes, dtype=float)
    m = len(nodes)
    dt = np.diff(nodes)
    out = np.zeros(m * (m + 1) // 2)
    if tail_start is None or tail_start >= m - 1:
        tail_start = m - 1
    h = dt[tail_start] if tail_start < m - 1 else 0.0
    if tail_start < m - 1:
        near_t, far_t = uniform_moments(kernel, h, m - 1 - tail_start)
    for i in range(1, m):
        row = out[i * (i + 1) // 2 : i * (i + 1) // 2 + i + 1]
        head = min(i, tail_start)
        if head:
            near, far = kernel.panel_moments(nodes[i] - nodes[1 : head + 1], dt[:head])
            row[:head] += far
            row[1 : head + 1] += near
        if i > tail_start:
            d = i - np.arange(tail_start, i)
            row[tail_start:i] += far_t[d]
            row[tail_start + 1 : i + 1] += near_t[d]
    return out


def stiffness_time(kernel, mu: float, horizon: float) -> float:
    """Smallest ``tau`` with ``mu * int_0^tau a = 1``; ``inf`` if not reached on ``[0, horizon]``."""
    if mu <= 0:
        return math.inf
    probe = horizon * np.geomspace(1e-12, 1.0, 400)
    vals = mu * np.asarray(kernel.integral(probe)) - 1.0
    hit = np.nonzero(vals >= 0)[0]
    if not len(hit):
        return math.inf
    j = hit[0]
    if j == 0:
        return float(probe[0])
    from scipy.optimize import brentq

    return float(brentq(lambda t: mu * kernel.integral(t) - 1.0, probe[j - 1], probe[j], xtol=1e-14 * horizon))


# Kernels singular at 0 give solutions like 1 - c t^alpha: start the graded
# head this much below the stiffness time.
SINGULAR_SCALE = 1e-4


def graded_nodes(grid, tau: float, ratio: float = DEFAULT_GRADING):
    """Refine ``grid`` near the origin so node spacing stays near ``ratio * max(t, tau)``.

    Returns ``(nodes, index, tail_start)``: ``nodes[index]`` equals
    ``grid.points`` exactly, and nodes from ``tail_start`` on are the
    untouched uniform tail.
    """
    pts = grid.points
    n, h = grid.steps, grid.dt
    hmin = ratio * tau
    if not math.isfinite(hmin) or hmin >= h:
        return pts, np.arange(n + 1), 0
    if hmin < ratio * h:
        head = hmin * np.arange(int(math.ceil(1.0 / ratio)) + 1)
        head = head[head < h * (1.0 - 0.5 * ratio)]
        geo = []
        t = head[-1]
        while True:
            t *= 1.0 + ratio
            if t >= h * (1.0 - 0.5 * ratio):
                break
            geo.append(t)
        pieces = [np.concatenate([head, geo])]
    else:
        m0 = int(math.ceil(h / hmin))
        pieces = [pts[0] + (pts[1] - pts[0]) * np.arange(m0) / m0]
    index = [0]
    count = len(pieces[0])
    i = 1
    while i < n:
        spacing = min(max(ratio * pts[i], hmin), h)
        m = int(math.ceil(h / spacing - 1e-9))
        if m <= 1:
            break
        index.append(count)
        pieces.append(pts[i] + (pts[i + 1] - pts[i]) * np.arange(m) / m)
        count += m
        i += 1
    tail_start = count
    pieces.append(pts[i:])
    index.extend(range(count, count + n + 1 - i))
    return np.concatenate(pieces), np.asarray(index), tail_start


@functools.lru_cache(maxsize=6)
def graded_weights(kernel, grid, tau: float, ratio: float = DEFAULT_GRADING):
    if kernel.singular_at_origin:
        tau *= SINGULAR_SCALE
    nodes, index, tail = graded_nodes(grid, tau, ratio)
    if len(nodes) == len(grid):
        weights = uniform_node_weights(kernel, grid)
    else:
        weights = node_weights(kernel, nodes, tail)
        weights.setflags(write=False)
    nodes.setflags(write=False)
    index.setflags(write=False)
    return nodes, index, weights
