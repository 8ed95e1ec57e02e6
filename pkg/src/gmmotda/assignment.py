"""Dense assignment by the auction algorithm with epsilon scaling.

Serves the uniform equal-size case of empirical optimal transport, where
the LP optimum is attained at a permutation.  Epsilon scaling runs the
auction down to a final bid increment small enough that the assignment
cost is within 1e-10 * max|C| of the optimum, far below the tolerances
any caller asserts.  Falls back to scipy's Hungarian solver in the
(never observed) event a phase exceeds its bid budget.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ValidationError

_SCALING_FACTOR = 6.0
_REL_COST_TOL = 1e-10


@njit(cache=True)
def _auction_phase(C, eps, prices, owner, assigned_col, max_bids):
    n, m = C.shape
    for i in range(n):
        assigned_col[i] = -1
    for j in range(m):
        owner[j] = -1
    n_unassigned = n
    bids = 0
    while n_unassigned > 0:
        for i in range(n):
            if assigned_col[i] != -1:
                continue
            best_j = -1
            best_v = -1e300
            second_v = -1e300
            for j in range(m):
                v = -C[i, j] - prices[j]
                if v > best_v:
                    second_v = best_v
                    best_v = v
                    best_j = j
                elif v > second_v:
                    second_v = v
            if m == 1:
                second_v = best_v
            prices[best_j] += (best_v - second_v) + eps
            prev = owner[best_j]
            owner[best_j] = i
            assigned_col[i] = best_j
            if prev != -1:
                assigned_col[prev] = -1
            else:
                n_unassigned -= 1
            bids += 1
            if bids > max_bids:
                return False
    return True


@njit(cache=True)
def _auction_scaled(C, eps_final, factor):
    n = C.shape[0]
    prices = np.zeros(C.shape[1])
    owner = np.full(C.shape[1], -1, dtype=np.int64)
    assigned = np.full(n, -1, dtype=np.int64)
    scale = np.abs(C).max()
    eps = max(scale / 2.0, eps_final)
    max_bids = 2000 * n + 2000
    while True:
        ok = _auction_phase(C, eps, prices, owner, assigned, max_bids)
        if not ok:
            return assigned, False
        if eps <= eps_final:
            return assigned, True
        eps = max(eps / factor, eps_final)


def solve_assignment(C: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns ``cols`` with row i matched to column cols[i].
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValidationError("assignment needs a square cost matrix")
    n = C.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    scale = max(1.0, float(np.abs(C).max()))
    eps_final = _REL_COST_TOL * scale / n
    cols, ok = _auction_scaled(C, eps_final, _SCALING_FACTOR)
    if not ok:
        from scipy.optimize import linear_sum_assignment

        _, cols = linear_sum_assignment(C)
        cols = cols.astype(np.int64)
    return cols
