"""Pure-Python/numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` call for call; used when the extension is not built
or when ``STACKDEC_PURE_PYTHON=1``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_ITERATION_LIMIT = 2

RULE_BLAND = 0
RULE_DANTZIG = 1

_CHUNK = 1 << 16


def run_simplex(T, basis, n_eligible, max_iter, tol, rule=RULE_BLAND):
    """Primal simplex iterations on a dense tableau, in place.

    ``T`` has one row per constraint plus the objective row last; the last
    column is the right-hand side.  Objective-row entries are ``z_j - c_j`` for
    a maximisation, so a column may enter while its entry is below ``-tol``.
    Only columns ``< n_eligible`` may enter.
    """
    m = T.shape[0] - 1
    obj = T[m]
    iterations = 0
    while True:
        reduced = obj[:n_eligible]
        if rule == RULE_BLAND:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return STATUS_OPTIMAL, iterations
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -tol:
                return STATUS_OPTIMAL, iterations
        if iterations >= max_iter:
            return STATUS_ITERATION_LIMIT, iterations

        row = -1
        best_ratio = 0.0
        for i in range(m):
            a = T[i, col]
            if a > tol:
                ratio = T[i, -1] / a
                if (row < 0 or ratio < best_ratio - tol
                        or (ratio <= best_ratio + tol and basis[i] < basis[row])):
                    row = i
                    best_ratio = ratio
        if row < 0:
            return STATUS_UNBOUNDED, iterations

        pivot(T, row, col)
        basis[row] = col
        iterations += 1


def pivot(T, row, col):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


@lru_cache(maxsize=4096)
def _compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``,
    lexicographically ascending (last coordinate determined by the rest)."""
    if parts == 1:
        out = np.array([[total]], dtype=np.int64)
        out.flags.writeable = False
        return out
    blocks = []
    for first in range(total + 1):
        tail = _compositions(total - first, parts - 1)
        head = np.full((tail.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, tail]))
    out = np.vstack(blocks)
    out.flags.writeable = False
    return out


def grid_search(r_d, r_a, defender_idx, attacker_idx, steps, tie_tol):
    """Evaluate every defender strategy on the simplex grid with ``steps`` cells.

    Returns ``(counts, value, action, n_points)`` where ``counts`` are grid
    counts over ``defender_idx`` of the first point reaching the maximal
    defender utility against a strong-Stackelberg best response.
    """
    rd = np.ascontiguousarray(r_d[np.ix_(defender_idx, attacker_idx)])
    ra = np.ascontiguousarray(r_a[np.ix_(defender_idx, attacker_idx)])
    points = _compositions(steps, len(defender_idx))
    best_value = -np.inf
    best_point = None
    best_action = -1
    for start in range(0, points.shape[0], _CHUNK):
        block = points[start:start + _CHUNK] * (1.0 / steps)
        ud = block @ rd
        ua = block @ ra
        tied = ua >= ua.max(axis=1, keepdims=True) - tie_tol
        masked = np.where(tied, ud, -np.inf)
        actions = np.argmax(masked, axis=1)
        values = masked[np.arange(block.shape[0]), actions]
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_point = points[start + k].copy()
            best_action = int(attacker_idx[actions[k]])
    return best_point, best_value, best_action, int(points.shape[0])
