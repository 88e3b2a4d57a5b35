"""Stage-one solvers for the discrete transport assignment.

Two routes to a coupling between weighted sources and targets: an exact
transportation-simplex solver and entropically regularized matrix
scaling.  Both are deterministic; the exact solver breaks every pivot
tie by lowest index so relabeling inputs relabels the plan and nothing
else.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import (
    ConvergenceError,
    ParameterError,
    TransportInstance,
    TransportPlan,
)

_FEAS_TOL = 1e-9      # allowed |sum(p) - sum(q)|
_PRICE_TOL = 1e-11    # reduced-cost threshold for entering variables


def cost_matrix(instance: TransportInstance) -> np.ndarray:
    """Pairwise Euclidean distances from sources to targets."""
    diff = instance.sources[:, None, :] - instance.targets[None, :, :]
    return np.linalg.norm(diff, axis=2)


def _check_cost(c, m: int, n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (m, n):
        raise ParameterError(f"cost matrix must have shape {(m, n)}, got {c.shape}")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ParameterError("cost entries must be finite and nonnegative")
    return c


def plan_cost(plan: TransportPlan, c) -> float:
    """Total cost of a plan: elementwise product with the cost matrix."""
    c = _check_cost(c, *plan.gamma.shape)
    return float(np.sum(plan.gamma * c))


# ---------------------------------------------------------------------------
# exact solver: transportation simplex on the bipartite graph


def _initial_basis(p: np.ndarray, q: np.ndarray, c: np.ndarray):
    """Least-cost starting basis: allocate to the cheapest open cell.

    Every allocation closes exactly one row or column, which keeps the
    chosen cells acyclic and yields exactly m + n - 1 basic cells.
    """
    m, n = c.shape
    a = p.copy()
    b = q.copy()
    cc = c.copy()
    rows_open = m
    alloc: dict[tuple[int, int], float] = {}
    for _ in range(m + n - 1):
        flat = int(np.argmin(cc))
        i, j = divmod(flat, n)
        x = min(a[i], b[j])
        alloc[(i, j)] = x
        a[i] -= x
        b[j] -= x
        if a[i] == 0.0 and b[j] == 0.0:
            # tie: keep the last open row available for degenerate fills
            if rows_open > 1:
                cc[i, :] = np.inf
                rows_open -= 1
            else:
                cc[:, j] = np.inf
        elif a[i] == 0.0:
            cc[i, :] = np.inf
            rows_open -= 1
        else:
            cc[:, j] = np.inf
    return alloc


def _compute_duals(adj, c, m: int, n: int):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if node < m:  # row -> col
                if math.isnan(v[nb - m]):
                    v[nb - m] = c[node, nb - m] - u[node]
                    stack.append(nb)
            else:  # col -> row
                if math.isnan(u[nb]):
                    u[nb] = c[nb, node - m] - v[node - m]
                    stack.append(nb)
    return u, v


def _tree_path(adj, start: int, goal: int, size: int) -> list[int]:
    prev = [-1] * size
    prev[start] = start
    dq = deque([start])
    while dq:
        node = dq.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if prev[nb] == -1:
                prev[nb] = node
                dq.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def _rebuild_from_basis(adj, p, q, m: int, n: int) -> np.ndarray:
    """Recompute basic allocations from scratch via subtree cuts.

    Each basic cell's value is the net demand of the component holding
    the cell's column node after cutting the tree edge.  That component
    is a label-invariant set and ``fsum`` is order-independent, so the
    result depends only on the final basis, not on pivot history or on
    node labeling.
    """
    size = m + n
    order: list[int] = []
    parent = [-1] * size
    parent[0] = 0
    dq = [0]
    while dq:
        node = dq.pop()
        order.append(node)
        for nb in adj[node]:
            if parent[nb] == -1:
                parent[nb] = node
                dq.append(nb)

    tin = [0] * size
    tout = [0] * size
    for t, node in enumerate(order):
        tin[node] = t
    # order[] is a DFS preorder; subtree extents come from children extents
    tout_arr = [tin[node] for node in range(size)]
    for node in reversed(order):
        par = parent[node]
        if par != node:
            tout_arr[par] = max(tout_arr[par], tout_arr[node])
    for node in range(size):
        tout[node] = tout_arr[node]

    vals = [0.0] * size
    for node in range(size):
        vals[tin[node]] = -p[node] if node < m else q[node - m]

    gamma = np.zeros((m, n))
    for node in order[1:]:
        par = parent[node]
        if node >= m:
            x = math.fsum(vals[tin[node]:tout[node] + 1])
        else:
            # row-side child: sum the complementary slices so the summed
            # set is still the column node's component
            x = math.fsum(vals[:tin[node]] + vals[tout[node] + 1:])
        if x < 0.0:
            if x < -1e-9:
                raise ConvergenceError(f"negative basic allocation {x}")
            x = 0.0
        elif x == 0.0:
            x = 0.0  # normalize -0.0 away
        r, col = (par, node - m) if node >= m else (node, par - m)
        gamma[r, col] = x
    return gamma


def transport_simplex(p, q, c) -> np.ndarray:
    """Minimum-cost coupling of supplies ``p`` onto demands ``q``.

    Returns a basic optimal solution: at most m + n - 1 strictly positive
    entries.  Entering variables use the most-negative-reduced-cost rule
    with lowest-index ties; after a stall of m + n degenerate pivots the
    rule switches to Bland's to guarantee termination.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m, n = p.shape[0], q.shape[0]
    c = _check_cost(c, m, n)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ParameterError("supplies and demands must be strictly positive")
    if abs(p.sum() - q.sum()) > _FEAS_TOL:
        raise ParameterError(
            f"infeasible marginals: sum(p)={p.sum()!r} != sum(q)={q.sum()!r}"
        )

    alloc = _initial_basis(p, q, c)
    size = m + n
    adj: list[set[int]] = [set() for _ in range(size)]
    for (i, j) in alloc:
        adj[i].add(m + j)
        adj[m + j].add(i)

    bland = False
    stalled = 0
    max_pivots = 200 * size + 1000
    for _ in range(max_pivots):
        u, v = _compute_duals(adj, c, m, n)
        reduced = c - u[:, None] - v[None, :]
        if bland:
            neg = reduced.ravel() < -_PRICE_TOL
            if not neg.any():
                break
            flat = int(np.argmax(neg))
        else:
            flat = int(np.argmin(reduced))
            if reduced.ravel()[flat] >= -_PRICE_TOL:
                break
        ei, ej = divmod(flat, n)

        path = _tree_path(adj, ei, m + ej, size)
        cells = []
        for t in range(len(path) - 1):
            a, b = path[t], path[t + 1]
            cell = (a, b - m) if a < m else (b, a - m)
            cells.append((cell, -1 if t % 2 == 0 else +1))
        minus = [cell for cell, sign in cells if sign < 0]
        theta = min(alloc[cell] for cell in minus)
        leaving = min(cell for cell in minus if alloc[cell] == theta)

        for cell, sign in cells:
            alloc[cell] += sign * theta
        alloc[(ei, ej)] = theta
        adj[ei].add(m + ej)
        adj[m + ej].add(ei)
        del alloc[leaving]
        adj[leaving[0]].discard(m + leaving[1])
        adj[m + leaving[1]].discard(leaving[0])

        if theta > 0:
            stalled = 0
        else:
            stalled += 1
            if stalled > size:
                bland = True
    else:
        raise ConvergenceError("transportation simplex exceeded its pivot budget")

    return _rebuild_from_basis(adj, p, q, m, n)


def solve_exact(instance: TransportInstance, c) -> TransportPlan:
    """Exact optimal transport plan for an instance and its cost matrix.

    The returned plan is a vertex of the transportation polytope, so it
    has at most n_sources + n_targets - 1 strictly positive entries and
    matches the marginals to well under 1e-9.
    """
    gamma = transport_simplex(instance.p, instance.q, _check_cost(c, instance.n_sources, instance.n_targets))
    return TransportPlan(gamma, instance.p, instance.q)


# ---------------------------------------------------------------------------
# entropic regularization: Sinkhorn matrix scaling


@dataclass(frozen=True)
class SinkhornConfig:
    """Settings for the scaling solver.

    ``reg`` is the regularization strength, interpreted against the cost
    matrix rescaled to unit maximum (which is what keeps the kernel clear
    of exp underflow); ``tol`` bounds both marginal L1 errors at exit.
    """

    reg: float = 0.01
    tol: float = 1e-9
    max_iter: int = 100_000

    def __post_init__(self):
        if self.reg <= 0:
            raise ParameterError("reg must be positive")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")


@dataclass(frozen=True)
class SinkhornResult:
    plan: TransportPlan
    n_iter: int
    marginal_error: float
    converged: bool


def solve_sinkhorn(instance: TransportInstance, c, cfg: SinkhornConfig | None = None) -> SinkhornResult:
    """Entropically regularized plan via alternating row/column scaling.

    Iterates u = p / (K v), v = q / (K' u) on the Gibbs kernel
    K = exp(-c / (reg * max(c))) until both marginal L1 errors drop below
    ``cfg.tol``.  The last operation is always the row scaling, so row
    sums match ``p`` to machine precision.  Exhausting ``max_iter``
    returns the best iterate flagged as non-converged; a kernel that
    degenerates to zero rows or columns raises ConvergenceError.
    """
    cfg = cfg or SinkhornConfig()
    c = _check_cost(c, instance.n_sources, instance.n_targets)
    p, q = instance.p, instance.q

    cmax = float(c.max())
    chat = c / cmax if cmax > 0 else c
    K = np.exp(-chat / cfg.reg)
    if np.any(K.sum(axis=1) == 0.0) or np.any(K.sum(axis=0) == 0.0):
        raise ConvergenceError(
            "scaling kernel underflowed to zero rows/columns; increase reg"
        )

    v = np.ones_like(q)
    u = np.ones_like(p)
    err = np.inf
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        Kv = K @ v
        u = p / Kv
        Ktu = K.T @ u
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(Ktu))):
            raise ConvergenceError(
                "scaling factors overflowed; increase reg"
            )
        col_err = float(np.abs(v * Ktu - q).sum())
        row_err = float(np.abs(u * Kv - p).sum())
        err = max(row_err, col_err)
        if err < cfg.tol:
            converged = True
            break
        v = q / Ktu

    gamma = u[:, None] * K * v[None, :]
    plan = TransportPlan(gamma, p, q)
    return SinkhornResult(plan, n_iter, err, converged)


def plan_to_assignments(plan: TransportPlan, threshold: float = 0.0) -> list[list[tuple[int, float]]]:
    """Per-source target assignments: every entry of the plan above ``threshold``.

    Entry ``(j, area)`` in row ``i`` of the result says source ``i`` feeds
    target ``j`` with sectional area ``gamma[i, j]``.  The mass dropped by
    thresholding is at most n_sources * n_targets * threshold.
    """
    if threshold < 0:
        raise ParameterError("threshold must be nonnegative")
    out: list[list[tuple[int, float]]] = []
    for row in plan.gamma:
        keep = np.flatnonzero(row > threshold)
        out.append([(int(j), float(row[j])) for j in keep])
    return out
