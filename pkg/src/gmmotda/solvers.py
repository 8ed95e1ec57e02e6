"""Discrete optimal transport solvers.

`solve_exact` computes a vertex-optimal Kantorovich plan with a
transportation network simplex (northwest-corner start, Dantzig entering
rule with lowest-index tie-breaking, Bland fallback under degenerate
stalling).  Uniform equal-size problems dispatch to the auction
assignment solver, which returns the same optimum as a permutation.
`solve_sinkhorn` is a log-domain stabilized Sinkhorn with epsilon
scaling.  Costs are always reported as <gamma, C> without any entropy
term.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import _freeze
from .errors import ValidationError

HIST_TOL = 1e-12
_MASS_MATCH_TOL = 1e-9


def uniform_histogram(n: int) -> np.ndarray:
    """Uniform weights of length n, renormalized to sum to 1 exactly."""
    if n <= 0:
        raise ValidationError("histogram length must be positive")
    w = np.full(n, 1.0 / n)
    return w / w.sum()


def check_histogram(w: np.ndarray, name: str = "histogram") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(w)):
        raise ValidationError(f"{name} has non-finite entries")
    if np.any(w < 0.0):
        raise ValidationError(f"{name} has negative entries")
    if abs(w.sum() - 1.0) > _MASS_MATCH_TOL:
        raise ValidationError(
            f"{name} sums to {w.sum():.12g}; expected 1 (not renormalizing)"
        )
    return w


def squared_euclidean_cost(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clamped at zero."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValidationError("cost inputs must be 2-D with matching dimension")
    sq = (
        (X * X).sum(axis=1)[:, None]
        + (Y * Y).sum(axis=1)[None, :]
        - 2.0 * (X @ Y.T)
    )
    return np.maximum(sq, 0.0)


@dataclass(frozen=True)
class TransportPlan:
    """A coupling gamma with its cost and solver diagnostics."""

    gamma: np.ndarray
    cost: float
    marginal_violation: float
    converged: bool = True
    n_iter: int = 0
    method: str = "exact"

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.ndim != 2:
            raise ValidationError("transport plan must be a 2-D array")
        object.__setattr__(self, "gamma", _freeze(g))

    @property
    def shape(self) -> tuple[int, int]:
        return self.gamma.shape

    def n_positive(self, tol: float = 0.0) -> int:
        return int(np.count_nonzero(self.gamma > tol))

    def diagnostics(self) -> dict:
        n, m = self.gamma.shape
        return {
            "method": self.method,
            "shape": [n, m],
            "cost": float(self.cost),
            "marginal_violation": float(self.marginal_violation),
            "converged": bool(self.converged),
            "n_iter": int(self.n_iter),
            "n_positive": self.n_positive(),
        }

    def save(self, csv_path, json_path=None) -> None:
        """Dense CSV dump of gamma plus a JSON diagnostics sidecar."""
        np.savetxt(csv_path, self.gamma, delimiter=",", fmt="%.17g")
        if json_path is None:
            json_path = f"{csv_path}.meta.json"
        with open(json_path, "w") as fh:
            json.dump(self.diagnostics(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _northwest_corner(p, q):
    n, m = p.size, q.size
    k = n + m - 1
    rows = np.empty(k, dtype=np.int64)
    cols = np.empty(k, dtype=np.int64)
    flow = np.zeros(k)
    a = p.copy()
    b = q.copy()
    i = j = t = 0
    while True:
        rows[t] = i
        cols[t] = j
        amt = min(a[i], b[j])
        flow[t] = amt
        a[i] -= amt
        b[j] -= amt
        if i == n - 1 and j == m - 1:
            break
        if i < n - 1 and (a[i] <= b[j] or j == m - 1):
            i += 1
        else:
            j += 1
        t += 1
    return rows, cols, flow


def _tree_duals(rows, cols, C, n, m):
    """Node potentials from the spanning tree of basic arcs."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n + m)]
    for t in range(rows.size):
        i, j = rows[t], cols[t]
        adj[i].append((n + j, t))
        adj[n + j].append((i, t))
    u = np.zeros(n)
    v = np.zeros(m)
    seen = np.zeros(n + m, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other, t in adj[node]:
            if seen[other]:
                continue
            seen[other] = True
            i, j = rows[t], cols[t]
            if other >= n:
                v[j] = C[i, j] - u[i]
            else:
                u[i] = C[i, j] - v[j]
            queue.append(other)
    return u, v, adj


def _tree_path(adj, start, goal, n_nodes):
    """Arc indices along the unique tree path start -> goal."""
    parent_node = np.full(n_nodes, -1, dtype=np.int64)
    parent_arc = np.full(n_nodes, -1, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other, t in adj[node]:
            if seen[other]:
                continue
            seen[other] = True
            parent_node[other] = node
            parent_arc[other] = t
            queue.append(other)
    path = []
    node = goal
    while node != start:
        path.append(parent_arc[node])
        node = parent_node[node]
    path.reverse()
    return path


def _transport_simplex(p, q, C, max_pivots=None):
    n, m = p.size, q.size
    if max_pivots is None:
        max_pivots = 200 * (n + m) + 2000
    rows, cols, flow = _northwest_corner(p, q)
    scale = max(1.0, float(np.abs(C).max()))
    tol = 1e-11 * scale
    bland = False
    stall = 0
    n_pivots = 0
    while True:
        u, v, adj = _tree_duals(rows, cols, C, n, m)
        red = C - u[:, None] - v[None, :]
        red[rows, cols] = 0.0
        if bland:
            neg_i, neg_j = np.nonzero(red < -tol)
            if neg_i.size == 0:
                break
            ei, ej = int(neg_i[0]), int(neg_j[0])
        else:
            k = int(np.argmin(red))
            ei, ej = divmod(k, m)
            if red[ei, ej] >= -tol:
                break
        if n_pivots >= max_pivots:
            raise RuntimeError("transport simplex exceeded pivot budget")
        path = _tree_path(adj, ei, n + ej, n + m)
        minus = path[0::2]
        theta = flow[minus].min()
        cand = [t for t in minus if flow[t] == theta]
        leave = min(cand, key=lambda t: (rows[t], cols[t]))
        flow[minus] -= theta
        plus = path[1::2]
        flow[plus] += theta
        rows[leave] = ei
        cols[leave] = ej
        flow[leave] = theta
        n_pivots += 1
        if theta == 0.0:
            stall += 1
            if stall > n + m:
                bland = True
        else:
            stall = 0
            bland = False
    gamma = np.zeros((n, m))
    gamma[rows, cols] = np.maximum(flow, 0.0)
    return gamma, n_pivots


def _is_uniform(w):
    n = w.size
    return bool(np.all(np.abs(w * n - 1.0) <= 1e-9))


def solve_exact(
    p: np.ndarray,
    q: np.ndarray,
    C: np.ndarray,
    method: str = "auto",
    max_pivots: int | None = None,
) -> TransportPlan:
    """Exact Kantorovich plan between histograms p and q under cost C.

    The returned plan is a vertex of the transport polytope (at most
    n + m - 1 positive entries).  `method` is "auto", "simplex" or
    "assignment"; auto picks the assignment fast path for uniform
    square problems and the simplex otherwise.
    """
    p = check_histogram(p, "source histogram")
    q = check_histogram(q, "target histogram")
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (p.size, q.size):
        raise ValidationError(
            f"cost matrix shape {C.shape} does not match ({p.size}, {q.size})"
        )
    if not np.all(np.isfinite(C)):
        raise ValidationError("cost matrix has non-finite entries")
    if abs(p.sum() - q.sum()) > _MASS_MATCH_TOL:
        raise ValidationError("marginal masses differ (not renormalizing)")
    if method not in ("auto", "simplex", "assignment"):
        raise ValidationError(f"unknown exact method {method!r}")

    sup_p = np.nonzero(p > 0.0)[0]
    sup_q = np.nonzero(q > 0.0)[0]
    ps, qs = p[sup_p], q[sup_q]
    Cs = C[np.ix_(sup_p, sup_q)]
    ns, ms = sup_p.size, sup_q.size

    use_assignment = method == "assignment" or (
        method == "auto" and ns == ms and _is_uniform(ps) and _is_uniform(qs)
    )
    if use_assignment and not (ns == ms and _is_uniform(ps) and _is_uniform(qs)):
        raise ValidationError("assignment method needs uniform equal-size marginals")

    if use_assignment:
        from .assignment import solve_assignment

        cols = solve_assignment(Cs)
        sub = np.zeros((ns, ms))
        sub[np.arange(ns), cols] = ps
        n_iter = 0
        meth = "assignment"
    else:
        sub, n_iter = _transport_simplex(ps, qs, Cs, max_pivots=max_pivots)
        meth = "simplex"

    gamma = np.zeros((p.size, q.size))
    gamma[np.ix_(sup_p, sup_q)] = sub
    cost = float((gamma * C).sum())
    viol = max(
        float(np.abs(gamma.sum(axis=1) - p).max()),
        float(np.abs(gamma.sum(axis=0) - q).max()),
    )
    return TransportPlan(
        gamma=gamma,
        cost=cost,
        marginal_violation=viol,
        converged=True,
        n_iter=n_iter,
        method=meth,
    )


def _logsumexp(a, axis):
    mx = np.max(a, axis=axis, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    out = np.log(np.sum(np.exp(a - mx), axis=axis)) + np.squeeze(mx, axis=axis)
    return out


_ABSORB_CAP = 1e30
_MATVEC_FLOOR = 1e-300


def _scaled_kernel(f, g, Cs, eps):
    # exponent capped so transient over-estimates of the potentials
    # cannot overflow; converged exponents are <= 0 and unaffected
    return np.exp(np.minimum((f[:, None] + g[None, :] - Cs) / eps, 700.0))


def solve_sinkhorn(
    p: np.ndarray,
    q: np.ndarray,
    C: np.ndarray,
    epsilon: float,
    max_iter: int = 20000,
    tol: float = 1e-7,
    eps_scaling: bool = True,
) -> TransportPlan:
    """Entropic OT via log-domain stabilized Sinkhorn with epsilon scaling.

    The dual potentials live in log space; inner iterations run on a
    rescaled kernel and are absorbed back into the potentials whenever
    the scalings grow large, so small epsilon cannot overflow.  Stops
    when the worst marginal violation drops below `tol`.  The reported
    cost is <gamma, C>, without the entropy term, so it upper bounds the
    exact Kantorovich cost.
    """
    p = check_histogram(p, "source histogram")
    q = check_histogram(q, "target histogram")
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (p.size, q.size):
        raise ValidationError(
            f"cost matrix shape {C.shape} does not match ({p.size}, {q.size})"
        )
    if not np.all(np.isfinite(C)):
        raise ValidationError("cost matrix has non-finite entries")
    if not (np.isfinite(epsilon) and epsilon > 0.0):
        raise ValidationError("epsilon must be positive")

    sup_p = np.nonzero(p > 0.0)[0]
    sup_q = np.nonzero(q > 0.0)[0]
    ps, qs = p[sup_p], q[sup_q]
    Cs = C[np.ix_(sup_p, sup_q)]

    c_max = float(np.abs(Cs).max())
    if eps_scaling and c_max > 0 and epsilon < c_max / 2.0:
        stages = []
        e = c_max / 2.0
        while e > epsilon:
            stages.append(e)
            e /= 4.0
        stages.append(epsilon)
    else:
        stages = [epsilon]

    f = np.zeros(ps.size)
    g = np.zeros(qs.size)
    u = np.ones(ps.size)
    v = np.ones(qs.size)
    it = 0
    viol = np.inf
    converged = False
    for stage_idx, eps in enumerate(stages):
        final = stage_idx == len(stages) - 1
        stage_tol = tol if final else max(tol, 1e-3)
        stage_cap = max_iter - it if final else min(200, max(0, max_iter - it))
        K = _scaled_kernel(f, g, Cs, eps)
        u.fill(1.0)
        v.fill(1.0)
        for _ in range(stage_cap):
            Kv = np.maximum(K @ v, _MATVEC_FLOOR)
            viol = float(np.abs(u * Kv - ps).max())
            if viol < stage_tol:
                break
            u = ps / Kv
            v = qs / np.maximum(K.T @ u, _MATVEC_FLOOR)
            it += 1
            if max(u.max(), v.max()) > _ABSORB_CAP:
                f = f + eps * np.log(u)
                g = g + eps * np.log(v)
                K = _scaled_kernel(f, g, Cs, eps)
                u.fill(1.0)
                v.fill(1.0)
        f = f + eps * np.log(u)
        g = g + eps * np.log(v)
        u.fill(1.0)
        v.fill(1.0)
        if final:
            converged = viol < tol

    log_gamma = (f[:, None] + g[None, :] - Cs) / eps
    sub = np.exp(log_gamma)
    gamma = np.zeros((p.size, q.size))
    gamma[np.ix_(sup_p, sup_q)] = sub
    viol = max(
        float(np.abs(gamma.sum(axis=1) - p).max()),
        float(np.abs(gamma.sum(axis=0) - q).max()),
    )
    cost = float((gamma * C).sum())
    return TransportPlan(
        gamma=gamma,
        cost=cost,
        marginal_violation=viol,
        converged=converged,
        n_iter=it,
        method="sinkhorn",
    )


def barycentric_map(plan: TransportPlan, Y: np.ndarray) -> np.ndarray:
    """Map each source atom to its gamma-weighted average of target points."""
    Y = np.asarray(Y, dtype=np.float64)
    gamma = plan.gamma
    if Y.ndim != 2 or Y.shape[0] != gamma.shape[1]:
        raise ValidationError("target points do not match plan columns")
    row_mass = gamma.sum(axis=1)
    if np.any(row_mass <= 0.0):
        raise ValidationError("barycentric map undefined for zero-mass rows")
    return (gamma @ Y) / row_mass[:, None]


def w2_empirical(X: np.ndarray, Y: np.ndarray) -> float:
    """Exact W2 distance between uniform empirical measures on X and Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    C = squared_euclidean_cost(X, Y)
    plan = solve_exact(uniform_histogram(X.shape[0]), uniform_histogram(Y.shape[0]), C)
    return float(np.sqrt(max(plan.cost, 0.0)))
