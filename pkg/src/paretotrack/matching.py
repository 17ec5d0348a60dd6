"""Maximum-weight bipartite matching via shortest augmenting paths.

The core routine solves the square assignment problem with the classic
Jonker-Volgenant / Hungarian potential scheme in O(n^3), with the inner
column scan vectorized.  On top of it, positive_matching() finds a
maximum-total-gain matching where leaving a node unmatched is free and only
strictly positive gains are worth taking: the rectangular gain matrix is
padded to a square with zero "skip" cells, so any partial matching extends to
a perfect assignment of equal total gain.
"""

from __future__ import annotations

import numpy as np


def min_cost_assignment(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment on a square matrix.

    Returns col_of_row: col_of_row[i] is the column assigned to row i.
    Deterministic: ties are resolved by the lowest column index scanned first.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)

    # 1-based arrays; column 0 is the virtual start of each augmenting path.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j] = row matched to column j
    way = np.zeros(n + 1, dtype=np.int64)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            idx = np.nonzero(free)[0]
            cur = cost[i0 - 1, idx - 1] - u[i0] - v[idx]
            better = cur < minv[idx]
            upd = idx[better]
            minv[upd] = cur[better]
            way[upd] = j0
            k = int(np.argmin(minv[idx]))
            j1 = int(idx[k])
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1

    col_of_row = np.zeros(n, dtype=np.int64)
    col_of_row[p[1:] - 1] = np.arange(n)
    return col_of_row


def positive_matching(gain: np.ndarray) -> list[tuple[int, int]]:
    """Matching maximizing the sum of gains, using only strictly positive cells.

    Rows/columns may stay unmatched at zero gain.  Returns (row, col) pairs
    sorted by row index.
    """
    gain = np.asarray(gain, dtype=np.float64)
    if gain.ndim != 2:
        raise ValueError(f"gain matrix must be 2D, got shape {gain.shape}")
    n, m = gain.shape
    if n == 0 or m == 0 or not (gain > 0).any():
        return []
    k = max(n, m)
    padded = np.zeros((k, k))
    padded[:n, :m] = np.maximum(gain, 0.0)
    col_of_row = min_cost_assignment(-padded)
    pairs = [
        (i, int(col_of_row[i]))
        for i in range(n)
        if col_of_row[i] < m and gain[i, col_of_row[i]] > 0.0
    ]
    return pairs
