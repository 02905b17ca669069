"""Exact optimal transport via the transportation simplex.

The solver is deterministic: the initial basic feasible solution comes from
the matrix-minimum rule with stable (row-major) tie order, the entering
variable is the most negative reduced cost with ties broken by lowest
(row, col), and a permanent switch to Bland's rule after a run of degenerate
pivots guarantees termination. The kernel is plain array code so it can be
compiled with numba when available; the pure-Python fallback is identical.

Missing routes (+inf ground costs) are replaced by a finite big-M that any
finite-feasible plan undercuts; flow left on such a cell signals
infeasibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleTransportError, InvalidInputError

_MASS_TOL = 1e-12


@dataclass
class Distribution:
    """Probability masses on a set of vertex ids."""

    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64).ravel()
        self.mass = np.asarray(self.mass, dtype=np.float64).ravel()
        self.validate()

    def validate(self):
        if self.support.shape != self.mass.shape:
            raise InvalidInputError("support/mass length mismatch")
        if len(np.unique(self.support)) != len(self.support):
            raise InvalidInputError("support ids must be unique")
        if np.any(self.mass < 0):
            raise InvalidInputError("masses must be non-negative")
        if abs(self.mass.sum() - 1.0) > _MASS_TOL:
            raise InvalidInputError("masses must sum to 1 within 1e-12")

    @staticmethod
    def point_mass(vertex: int) -> "Distribution":
        return Distribution(support=np.array([vertex]), mass=np.array([1.0]))


# ---------------------------------------------------------------------------
# simplex kernel
# ---------------------------------------------------------------------------

def _transport_kernel(a, b, C, order, max_iter):
    """Solve min <C, X> s.t. X 1 = a, X^T 1 = b, X >= 0.

    a, b strictly positive with equal sums; C finite; `order` is a stable
    ascending argsort of C.ravel(). Returns (status, flow) with status 0 on
    optimality, 1 if the iteration cap was hit.

    Basis arcs form a spanning tree of the bipartite node set (rows 0..m-1,
    cols m..m+n-1). In the pivot cycle, arcs alternate signs -,+,-,... along
    each tree path walked up from the entering cell's endpoints; the two
    halves meet with consistent parity because bipartite row->col paths have
    odd length.
    """
    m, n = C.shape
    nodes = m + n
    nb_max = nodes - 1

    # --- initial BFS: matrix-minimum greedy ---
    sup = a.copy()
    dem = b.copy()
    arc_i = np.zeros(nb_max, np.int64)
    arc_j = np.zeros(nb_max, np.int64)
    arc_f = np.zeros(nb_max, np.float64)
    basic = np.zeros((m, n), np.uint8)
    nb = 0
    for t in range(m * n):
        cell = order[t]
        i = cell // n
        j = cell % n
        if sup[i] > 0.0 and dem[j] > 0.0:
            if sup[i] <= dem[j]:
                f = sup[i]
                dem[j] -= f
                sup[i] = 0.0
            else:
                f = dem[j]
                sup[i] -= f
                dem[j] = 0.0
            arc_i[nb] = i
            arc_j[nb] = j
            arc_f[nb] = f
            basic[i, j] = 1
            nb += 1
            if nb == nb_max:
                break

    # --- complete to a spanning tree with zero-flow arcs (union-find) ---
    if nb < nb_max:
        root = np.arange(nodes)
        for k in range(nb):
            x = arc_i[k]
            while root[x] != x:
                root[x] = root[root[x]]
                x = root[x]
            y = m + arc_j[k]
            while root[y] != y:
                root[y] = root[root[y]]
                y = root[y]
            if x != y:
                root[x] = y
        for t in range(m * n):
            cell = order[t]
            i = cell // n
            j = cell % n
            if basic[i, j] == 1:
                continue
            x = i
            while root[x] != x:
                root[x] = root[root[x]]
                x = root[x]
            y = m + j
            while root[y] != y:
                root[y] = root[root[y]]
                y = root[y]
            if x != y:
                root[x] = y
                arc_i[nb] = i
                arc_j[nb] = j
                arc_f[nb] = 0.0
                basic[i, j] = 1
                nb += 1
                if nb == nb_max:
                    break

    # --- scratch arrays reused across pivots ---
    parent = np.zeros(nodes, np.int64)
    parent_arc = np.zeros(nodes, np.int64)
    depth = np.zeros(nodes, np.int64)
    bfs = np.zeros(nodes, np.int64)
    seen = np.zeros(nodes, np.uint8)
    adj_off = np.zeros(nodes + 1, np.int64)
    adj_arc = np.zeros(2 * nb_max, np.int64)
    fill = np.zeros(nodes, np.int64)
    u = np.zeros(m, np.float64)
    v = np.zeros(n, np.float64)
    tmp_x = np.zeros(nodes, np.int64)
    tmp_y = np.zeros(nodes, np.int64)

    cmax = 0.0
    for i in range(m):
        for j in range(n):
            c = abs(C[i, j])
            if c > cmax:
                cmax = c
    tol = 1e-11 * (1.0 if cmax < 1.0 else cmax)

    use_bland = False
    stall = 0
    status = 1
    it = 0
    while it < max_iter:
        it += 1
        # rebuild adjacency + BFS tree from node 0
        for x in range(nodes + 1):
            adj_off[x] = 0
        for k in range(nb_max):
            adj_off[arc_i[k] + 1] += 1
            adj_off[m + arc_j[k] + 1] += 1
        for x in range(nodes):
            adj_off[x + 1] += adj_off[x]
            fill[x] = adj_off[x]
        for k in range(nb_max):
            x = arc_i[k]
            adj_arc[fill[x]] = k
            fill[x] += 1
            y = m + arc_j[k]
            adj_arc[fill[y]] = k
            fill[y] += 1
        for x in range(nodes):
            seen[x] = 0
        parent[0] = -1
        parent_arc[0] = -1
        depth[0] = 0
        bfs[0] = 0
        seen[0] = 1
        head = 0
        tail = 1
        while head < tail:
            x = bfs[head]
            head += 1
            for p in range(adj_off[x], adj_off[x + 1]):
                k = adj_arc[p]
                if x == arc_i[k]:
                    other = m + arc_j[k]
                else:
                    other = arc_i[k]
                if seen[other] == 0:
                    seen[other] = 1
                    parent[other] = x
                    parent_arc[other] = k
                    depth[other] = depth[x] + 1
                    bfs[tail] = other
                    tail += 1

        # duals along the BFS order
        u[0] = 0.0
        for q in range(1, nodes):
            x = bfs[q]
            k = parent_arc[x]
            if x < m:
                u[x] = C[arc_i[k], arc_j[k]] - v[arc_j[k]]
            else:
                v[x - m] = C[arc_i[k], arc_j[k]] - u[arc_i[k]]

        # entering variable
        best = -tol
        ei = -1
        ej = -1
        done = False
        for i in range(m):
            if done:
                break
            for j in range(n):
                if basic[i, j] == 1:
                    continue
                r = C[i, j] - u[i] - v[j]
                if r < best:
                    best = r
                    ei = i
                    ej = j
                    if use_bland:
                        done = True
                        break
        if ei < 0:
            status = 0
            break

        # cycle: tree path between row node ei and col node m+ej
        xs = ei
        ys = m + ej
        lx = 0
        ly = 0
        while depth[xs] > depth[ys]:
            tmp_x[lx] = parent_arc[xs]
            lx += 1
            xs = parent[xs]
        while depth[ys] > depth[xs]:
            tmp_y[ly] = parent_arc[ys]
            ly += 1
            ys = parent[ys]
        while xs != ys:
            tmp_x[lx] = parent_arc[xs]
            lx += 1
            xs = parent[xs]
            tmp_y[ly] = parent_arc[ys]
            ly += 1
            ys = parent[ys]

        # leaving arc: min flow over minus (even-index) arcs; ties -> lowest
        # (row, col)
        theta = np.inf
        leave = -1
        li = -1
        lj = -1
        for q in range(0, lx, 2):
            k = tmp_x[q]
            f = arc_f[k]
            ki = arc_i[k]
            kj = arc_j[k]
            if (leave < 0 or f < theta
                    or (f == theta and (ki < li or (ki == li and kj < lj)))):
                theta = f
                leave = k
                li = ki
                lj = kj
        for q in range(0, ly, 2):
            k = tmp_y[q]
            f = arc_f[k]
            ki = arc_i[k]
            kj = arc_j[k]
            if (leave < 0 or f < theta
                    or (f == theta and (ki < li or (ki == li and kj < lj)))):
                theta = f
                leave = k
                li = ki
                lj = kj

        # apply the flow change around the cycle
        for q in range(lx):
            k = tmp_x[q]
            if q % 2 == 0:
                arc_f[k] -= theta
            else:
                arc_f[k] += theta
        for q in range(ly):
            k = tmp_y[q]
            if q % 2 == 0:
                arc_f[k] -= theta
            else:
                arc_f[k] += theta

        basic[arc_i[leave], arc_j[leave]] = 0
        basic[ei, ej] = 1
        arc_i[leave] = ei
        arc_j[leave] = ej
        arc_f[leave] = theta

        if theta <= 1e-16:
            stall += 1
            if stall > 50 + nodes:
                use_bland = True
        else:
            stall = 0

    flow = np.zeros((m, n), np.float64)
    for k in range(nb_max):
        if arc_f[k] > 0.0:
            flow[arc_i[k], arc_j[k]] = arc_f[k]
    return status, flow


transport_kernel_py = _transport_kernel
try:  # pragma: no cover - exercised implicitly when numba is installed
    from numba import njit

    transport_kernel = njit(cache=True, nogil=True)(_transport_kernel)
except ImportError:  # pragma: no cover
    transport_kernel = _transport_kernel


def solve_transport(a: np.ndarray, b: np.ndarray, C: np.ndarray,
                    kernel=None) -> tuple[float, np.ndarray]:
    """Exact minimum transport cost and an optimal plan.

    a, b are non-negative marginals with equal total mass; C may contain +inf
    for forbidden routes. Raises InfeasibleTransportError if every feasible
    plan has infinite cost.
    """
    a = np.asarray(a, dtype=np.float64).copy()
    b = np.asarray(b, dtype=np.float64).copy()
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (len(a), len(b)):
        raise InvalidInputError("cost matrix shape mismatch")
    if np.any(a < 0) or np.any(b < 0):
        raise InvalidInputError("marginals must be non-negative")
    if np.any(np.isnan(C)) or np.any(C < 0):
        raise InvalidInputError("ground costs must be >= 0")
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > 1e-9 * max(sa, sb, 1.0):
        raise InvalidInputError("marginals must have equal total mass")
    if sa <= 0:
        raise InvalidInputError("total mass must be positive")

    rows = np.flatnonzero(a > 0.0)
    cols = np.flatnonzero(b > 0.0)
    ar, bc = a[rows].copy(), b[cols].copy()
    # absorb ulp-level imbalance so the greedy start closes exactly
    bc[np.argmax(bc)] += ar.sum() - bc.sum()
    Cr = np.ascontiguousarray(C[np.ix_(rows, cols)])

    inf_mask = ~np.isfinite(Cr)
    if inf_mask.any():
        finite_max = Cr[~inf_mask].max() if (~inf_mask).any() else 1.0
        big = 2.0 * (finite_max + 1.0) * (len(ar) + len(bc))
        Cr = np.where(inf_mask, big, Cr)

    order = np.argsort(Cr.ravel(), kind="stable")
    max_iter = 200 * (len(ar) + len(bc)) + 2000
    kern = kernel if kernel is not None else transport_kernel
    status, flow = kern(ar, bc, Cr, order, max_iter)
    if status != 0:
        raise RuntimeError("transportation simplex hit its iteration cap")
    if inf_mask.any() and flow[inf_mask].sum() > 1e-12 * sa:
        raise InfeasibleTransportError("no finite-cost feasible plan exists")

    plan = np.zeros_like(C, dtype=np.float64)
    plan[np.ix_(rows, cols)] = flow
    cost = float(np.sum(flow * np.where(inf_mask, 0.0, Cr)))
    return cost, plan


def wasserstein(mu: Distribution, mv: Distribution, ground: np.ndarray,
                return_plan: bool = False):
    """Exact optimal transport cost between two distributions.

    `ground[i, j]` is the cost from mu.support[i] to mv.support[j]; +inf is
    allowed as long as a finite-cost feasible plan exists.
    """
    mu.validate()
    mv.validate()
    ground = np.asarray(ground, dtype=np.float64)
    if ground.shape != (len(mu.support), len(mv.support)):
        raise InvalidInputError("ground cost shape mismatch")
    cost, plan = solve_transport(mu.mass, mv.mass, ground)
    if return_plan:
        return cost, plan
    return cost
