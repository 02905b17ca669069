"""Curvature engines.

Generic engine: Ollivier-Ricci curvature, its alpha-lazy variant and the
graph Ricci limit on arbitrary weighted digraphs (networkx graphs), with
neighbor masses proportional to incident edge weights and shortest-path
ground distances.

Neural engine: data-dependent curvature of neural-graph edges. Neighbor
masses come from activation magnitudes (min-max normalize -> reciprocal ->
exponential normalization), the evaluated edge's cost is divided by the
fraction of signal surviving the activation, and the Wasserstein ground
metric is the static layered metric with that single edge's cost overridden
(switchable to a fully static metric). Infinite edge cost short-circuits to
the closed-form limits: 1 for input/output-adjacent edges, 2 for hidden
edges. Reported values are scaled by 1/(1-alpha).

`CurvatureWorkspace` computes whole layer pairs at once: input/output
adjacent edges reduce to inner products against point masses, hidden edges
each solve one small exact transport problem on pruned supports.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidInputError
from .graph import CostMatrixStack, NeuralGraph, cost_matrices, layered_shortest_paths, min_plus
from .nn import ActivationTrace, ModelSpec, forward
from .ot import Distribution, solve_transport, wasserstein

MASS_EPS = 1e-9


@dataclass
class CurvatureValue:
    """A curvature result: `scaled` marks division by (1-alpha), `sentinel`
    marks the infinite-cost closed-form limit (1 or 2)."""

    value: float
    alpha: float
    scaled: bool
    sentinel: bool = False


# ---------------------------------------------------------------------------
# generic engine (arbitrary weighted graphs)
# ---------------------------------------------------------------------------

class GraphCurvature:
    """Curvature queries against one weighted graph (directed or symmetric).

    Ground distances are all-pairs shortest paths with edge weights as
    lengths; neighbor masses are proportional to incident edge weights.
    """

    def __init__(self, G):
        if not G.is_directed():
            G = G.to_directed()
        self.G = G
        self.nodes = list(G.nodes())
        self.index = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)
        rows, cols, vals = [], [], []
        for a, b, data in G.edges(data=True):
            w = float(data.get("weight", 1.0))
            if w <= 0 or not np.isfinite(w):
                raise InvalidInputError("graph weights must be positive finite")
            rows.append(self.index[a])
            cols.append(self.index[b])
            vals.append(w)
        adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        self.dist = dijkstra(adj, directed=True)

    def _mass(self, x, direction: str, alpha: float) -> Distribution:
        xi = self.index[x]
        if direction == "in":
            nbrs = [(self.index[p], self.G[p][x].get("weight", 1.0))
                    for p in self.G.predecessors(x)]
        else:
            nbrs = [(self.index[s], self.G[x][s].get("weight", 1.0))
                    for s in self.G.successors(x)]
        if not nbrs:
            if alpha < 1.0:
                raise InvalidInputError(
                    f"vertex {x!r} has an empty {direction}-neighborhood")
            return Distribution.point_mass(xi)
        ids = np.array([i for i, _ in nbrs], dtype=np.int64)
        ws = np.array([w for _, w in nbrs], dtype=np.float64)
        masses = (1.0 - alpha) * ws / ws.sum()
        return Distribution(support=np.concatenate(([xi], ids)),
                            mass=np.concatenate(([alpha], masses)))

    def alpha_orc(self, edge, alpha: float) -> CurvatureValue:
        """kappa_alpha(u, v) = 1 - W(m_u^alpha, m_v^alpha) / d(u, v)."""
        if not 0.0 <= alpha <= 1.0:
            raise InvalidInputError("alpha must lie in [0, 1]")
        u, v = edge
        if not self.G.has_edge(u, v):
            raise InvalidInputError(f"edge {edge!r} not in graph")
        mu = self._mass(u, "in", alpha)
        mv = self._mass(v, "out", alpha)
        ground = self.dist[np.ix_(mu.support, mv.support)]
        W = wasserstein(mu, mv, ground)
        d = self.dist[self.index[u], self.index[v]]
        return CurvatureValue(value=1.0 - W / d, alpha=alpha, scaled=False)

    def ricci_limit(self, edge, alpha_approx: float = 0.9) -> CurvatureValue:
        """Graph Ricci curvature, approximated by kappa_alpha/(1-alpha)."""
        if not 0.0 <= alpha_approx < 1.0:
            raise InvalidInputError("alpha_approx must lie in [0, 1)")
        base = self.alpha_orc(edge, alpha_approx)
        return CurvatureValue(value=base.value / (1.0 - alpha_approx),
                              alpha=alpha_approx, scaled=True)


def orc_generic(G, edge, alpha: float = 0.0) -> CurvatureValue:
    """One-shot alpha-ORC of a single edge (alpha = 0 is plain ORC)."""
    return GraphCurvature(G).alpha_orc(edge, alpha)


def ricci_limit_generic(G, edge, alpha_approx: float = 0.9) -> CurvatureValue:
    return GraphCurvature(G).ricci_limit(edge, alpha_approx)


# ---------------------------------------------------------------------------
# neural neighbor distributions and edge costs
# ---------------------------------------------------------------------------

def activation_masses(values: np.ndarray, eps: float = MASS_EPS) -> np.ndarray:
    """Neighbor masses from activation magnitudes: min-max normalize into
    [eps, 1], take reciprocals, then exp(-x^2) normalization. Equal inputs
    yield the uniform distribution."""
    v = np.abs(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise InvalidInputError("empty neighborhood")
    vmin, vmax = v.min(), v.max()
    if vmax == vmin:
        return np.full(v.size, 1.0 / v.size)
    t = (v - vmin) / (vmax - vmin)
    t = eps + (1.0 - eps) * t
    inv = 1.0 / t
    e = np.exp(-(inv * inv))
    return e / e.sum()


def neural_neighbor_distribution(graph: NeuralGraph, trace: ActivationTrace,
                                 layer: int, index: int, direction: str
                                 ) -> Distribution:
    """Def-style neighbor distribution of vertex (layer, index) over vertex
    ids. Input-layer 'in' and output-layer 'out' degenerate to a point mass."""
    L = graph.n_layer_pairs
    if direction not in ("in", "out"):
        raise InvalidInputError("direction must be 'in' or 'out'")
    if not 0 <= layer <= L:
        raise InvalidInputError("layer out of range")
    vid = graph.vertex_id(layer, index)
    if direction == "in":
        if layer == 0:
            return Distribution.point_mass(vid)
        nbrs = graph.pairs[layer - 1].in_neighbors(index)
        if nbrs.size == 0:
            raise InvalidInputError("vertex has no incoming edges")
        vals = trace.layer_activations(layer - 1)[nbrs]
        base = graph.vertex_offset(layer - 1)
    else:
        if layer == L:
            return Distribution.point_mass(vid)
        nbrs = graph.pairs[layer].out_neighbors(index)
        if nbrs.size == 0:
            raise InvalidInputError("vertex has no outgoing edges")
        vals = trace.layer_activations(layer + 1)[nbrs]
        base = graph.vertex_offset(layer + 1)
    return Distribution(support=base + nbrs, mass=activation_masses(vals))


def beta_fraction(x: float, activation: str) -> float:
    """Fraction of signal surviving the activation, sigma(x)/x.

    ReLU: 1 for x > 0 else 0 (an exactly-zero logit transmits nothing).
    Tanh: tanh(x)/x with the limit value 1 at x = 0.
    """
    if activation == "relu":
        return 1.0 if x > 0 else 0.0
    if x == 0.0:
        return 1.0
    return float(np.tanh(x) / x)


def neural_edge_cost(graph: NeuralGraph, edge, trace: ActivationTrace,
                     activation: str) -> float:
    """Graph weight divided by the surviving-signal fraction; +inf when the
    activation blocks the edge. Source beta is 1 for input-layer sources."""
    lp, i, j = edge
    w = graph.edge_cost(lp, i, j)
    if activation == "relu":
        b_src = 1.0 if lp == 0 else beta_fraction(trace.layer_logits(lp)[i], "relu")
        b_tgt = beta_fraction(trace.layer_logits(lp + 1)[j], "relu")
        b = min(b_src, b_tgt)
    else:
        b = beta_fraction(trace.layer_logits(lp + 1)[j], "tanh")
    return w / b if b > 0.0 else np.inf


# ---------------------------------------------------------------------------
# single-edge neural curvature (reference path)
# ---------------------------------------------------------------------------

def _blend(alpha: float, self_id: int, nbr: Distribution) -> Distribution:
    """alpha mass on the vertex itself, (1-alpha) spread per the neighbor
    distribution; a point mass at the vertex stays a point mass."""
    if nbr.support.size == 1 and nbr.support[0] == self_id:
        return Distribution.point_mass(self_id)
    return Distribution(
        support=np.concatenate(([self_id], nbr.support)),
        mass=np.concatenate(([alpha], (1.0 - alpha) * nbr.mass)))


def _edge_supports(graph: NeuralGraph, trace: ActivationTrace, edge,
                   alpha: float):
    """alpha-blended source/target distributions plus their in-layer indices."""
    lp, i, j = edge
    mu = _blend(alpha, graph.vertex_id(lp, i),
                neural_neighbor_distribution(graph, trace, lp, i, "in"))
    mv = _blend(alpha, graph.vertex_id(lp + 1, j),
                neural_neighbor_distribution(graph, trace, lp + 1, j, "out"))
    return mu, mv


def _curvature_at_cost(graph: NeuralGraph, stack: CostMatrixStack,
                       trace: ActivationTrace, edge, cost: float,
                       denominator: float, alpha: float,
                       ground_metric: str) -> float:
    """Scaled curvature of `edge` with its ground cost forced to `cost` and
    the curvature denominator forced to `denominator`."""
    lp, i, j = edge
    L = graph.n_layer_pairs
    mu, mv = _edge_supports(graph, trace, edge, alpha)
    override = ((lp, i, j), cost) if ground_metric == "static-override" else None

    def dists(k, l):
        if override is not None and k <= lp < l:
            return layered_shortest_paths(stack, k, l, override)
        return layered_shortest_paths(stack, k, l)

    off_prev = graph.vertex_offset(lp - 1) if lp > 0 else 0
    off_next = graph.vertex_offset(lp + 2) if lp + 1 < L else 0
    edge_ground = cost if ground_metric == "static-override" \
        else float(stack.mats[lp][i, j])

    n_u, n_v = mu.support.size, mv.support.size
    ground = np.empty((n_u, n_v))
    ground[0, 0] = edge_ground
    if n_v > 1:
        ids_out = mv.support[1:] - off_next
        ground[0, 1:] = dists(lp, lp + 2)[i, ids_out]
    if n_u > 1:
        ids_in = mu.support[1:] - off_prev
        ground[1:, 0] = dists(lp - 1, lp + 1)[ids_in, j]
        if n_v > 1:
            ground[1:, 1:] = dists(lp - 1, lp + 2)[np.ix_(ids_in, ids_out)]
    W = wasserstein(mu, mv, ground)
    return (1.0 - W / denominator) / (1.0 - alpha)


def neural_curvature(model: ModelSpec, graph: NeuralGraph,
                     stack: CostMatrixStack, x: np.ndarray, edge,
                     alpha: float = 0.9,
                     ground_metric: str = "static-override") -> CurvatureValue:
    """Scaled neural curvature of one edge for one example.

    Infinite neural cost returns the sentinel limit (1 for input/output
    adjacent edges, 2 for hidden edges) without further computation.
    """
    _check_alpha(alpha)
    _check_ground_metric(ground_metric)
    lp, i, j = edge
    L = graph.n_layer_pairs
    if not 0 <= lp < L:
        raise InvalidInputError("edge layer out of range")
    _, trace = forward(model, x)
    d_sigma = neural_edge_cost(graph, edge, trace, model.activation)
    if np.isinf(d_sigma):
        sval = 1.0 if (lp == 0 or lp == L - 1) else 2.0
        return CurvatureValue(value=sval, alpha=alpha, scaled=True,
                              sentinel=True)
    value = _curvature_at_cost(graph, stack, trace, edge, d_sigma, d_sigma,
                               alpha, ground_metric)
    return CurvatureValue(value=value, alpha=alpha, scaled=True)


def _check_alpha(alpha: float):
    if not 0.0 <= alpha < 1.0:
        raise InvalidInputError("alpha must lie in [0, 1); alpha = 1 is the "
                                "degenerate identity")


def _check_ground_metric(ground_metric: str):
    if ground_metric not in ("static-override", "static-pure"):
        raise InvalidInputError(
            "ground_metric must be 'static-override' or 'static-pure'")


# ---------------------------------------------------------------------------
# infinite-cost asymptotics
# ---------------------------------------------------------------------------

def prop1_asymptotics(graph: NeuralGraph, stack: CostMatrixStack, edge,
                      trace: ActivationTrace, cost_ladder,
                      alpha: float = 0.9) -> list[CurvatureValue]:
    """Curvature along a ladder of forced edge costs, converging to the
    sentinel. Each ladder entry must exceed every alternative-route distance
    (precondition error otherwise); in that regime the returned values equal
    the closed forms 1 - r/d and 2 - (r1 + r2)/d.
    """
    _check_alpha(alpha)
    lp, i, j = edge
    L = graph.n_layer_pairs
    ladder = [float(c) for c in cost_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise InvalidInputError("cost ladder must be strictly increasing")
    boundary = lp == 0 or lp == L - 1
    if not boundary and alpha < 0.5:
        raise InvalidInputError("hidden-edge asymptotics need alpha >= 0.5")
    mu, mv = _edge_supports(graph, trace, edge, alpha)
    if mu.support.size == 1 and mv.support.size == 1:
        raise InvalidInputError(
            "both endpoints are point masses (single-layer net); no "
            "alternative routes exist and the asymptotic regime is undefined")

    # alternative-route distances, the evaluated edge excluded (cost +inf)
    cut = ((lp, i, j), np.inf)
    threshold = 0.0
    g_out = g_in = None
    if mv.support.size > 1:
        ids_out = mv.support[1:] - graph.vertex_offset(lp + 2)
        g_out = layered_shortest_paths(stack, lp, lp + 2, cut)[i, ids_out]
    if mu.support.size > 1:
        ids_in = mu.support[1:] - graph.vertex_offset(lp - 1)
        g_in = layered_shortest_paths(stack, lp - 1, lp + 1, cut)[ids_in, j]
    for g in (g_out, g_in):
        if g is not None:
            if not np.all(np.isfinite(g)):
                raise InvalidInputError(
                    "no alternative route exists for some neighbor; the "
                    "asymptotic regime is undefined for this edge")
            threshold = max(threshold, float(g.max()))
    if g_out is not None and g_in is not None:
        cross = layered_shortest_paths(stack, lp - 1, lp + 2, cut)[
            np.ix_(ids_in, ids_out)]
        swap = g_in[:, None] + g_out[None, :] - cross
        threshold = max(threshold, float(swap.max()))
    if ladder[0] <= threshold:
        raise InvalidInputError(
            f"ladder entries must exceed the alternative-route threshold "
            f"{threshold:.6g}")

    out = []
    for d in ladder:
        value = _curvature_at_cost(graph, stack, trace, edge, d, d, alpha,
                                   "static-override")
        out.append(CurvatureValue(value=value, alpha=alpha, scaled=True))
    return out


def prop1_closed_forms(graph: NeuralGraph, stack: CostMatrixStack, edge,
                       trace: ActivationTrace, alpha: float = 0.9):
    """The residual transport costs of the infinite-cost expansion.

    Returns (r,) for input/output-adjacent edges (kappa(d) = 1 - r/d) and
    (r1, r2) for hidden edges (kappa(d) = 2 - (r1 + r2)/d), computed by
    point-mass transport with the evaluated edge cut.
    """
    lp, i, j = edge
    L = graph.n_layer_pairs
    mu, mv = _edge_supports(graph, trace, edge, alpha)
    cut = ((lp, i, j), np.inf)
    r_out = r_in = None
    if mv.support.size > 1:
        ids_out = mv.support[1:] - graph.vertex_offset(lp + 2)
        g = layered_shortest_paths(stack, lp, lp + 2, cut)[i, ids_out]
        masses = mv.mass[1:] / mv.mass[1:].sum()
        r_out = float(np.dot(masses, g))
    if mu.support.size > 1:
        ids_in = mu.support[1:] - graph.vertex_offset(lp - 1)
        g = layered_shortest_paths(stack, lp - 1, lp + 1, cut)[ids_in, j]
        masses = mu.mass[1:] / mu.mass[1:].sum()
        r_in = float(np.dot(masses, g))
    if lp == 0 or lp == L - 1:
        return (r_out if lp == 0 else r_in,)
    return (r_in, r_out)


# ---------------------------------------------------------------------------
# whole-model workspace
# ---------------------------------------------------------------------------

def _two_hop_tracked(A: np.ndarray, B: np.ndarray):
    """best/argmin/second of A[i, m] + B[m, j] over the middle vertex m."""
    ka, km = A.shape
    kb = B.shape[1]
    best = np.empty((ka, kb))
    arg = np.empty((ka, kb), dtype=np.int32)
    second = np.empty((ka, kb))
    block = max(1, int(4e6 // max(km * kb, 1)))
    cols = np.arange(kb)
    for s in range(0, ka, block):
        X = A[s:s + block, :, None] + B[None, :, :]
        a = np.argmin(X, axis=1)
        r = np.arange(X.shape[0])
        b = X[r[:, None], a, cols[None, :]]
        X[r[:, None], a, cols[None, :]] = np.inf
        best[s:s + block] = b
        arg[s:s + block] = a
        second[s:s + block] = X.min(axis=1)
    return best, arg, second


def _three_hop_tracked(A: np.ndarray, B: np.ndarray, C2: np.ndarray):
    """best/second of A[i,m] + B[m,mp] + C2[mp,j] over the middle edge
    (m, mp), plus the argmin pair."""
    t_best, t_arg, t_second = _two_hop_tracked(A, B)
    ka = A.shape[0]
    km2 = B.shape[1]
    kb = C2.shape[1]
    best = np.empty((ka, kb))
    arg_m = np.empty((ka, kb), dtype=np.int32)
    arg_mp = np.empty((ka, kb), dtype=np.int32)
    second = np.empty((ka, kb))
    block = max(1, int(4e6 // max(km2 * kb, 1)))
    cols = np.arange(kb)
    for s in range(0, ka, block):
        Y = t_best[s:s + block, :, None] + C2[None, :, :]
        amp = np.argmin(Y, axis=1)
        r = np.arange(Y.shape[0])
        yb = Y[r[:, None], amp, cols[None, :]]
        Y[r[:, None], amp, cols[None, :]] = np.inf
        ysec = Y.min(axis=1)
        same_mp = np.take_along_axis(t_second[s:s + block], amp, axis=1) \
            + C2[amp, cols[None, :]]
        best[s:s + block] = yb
        arg_mp[s:s + block] = amp
        arg_m[s:s + block] = np.take_along_axis(t_arg[s:s + block], amp, axis=1)
        second[s:s + block] = np.minimum(same_mp, ysec)
    return best, arg_m, arg_mp, second


class CurvatureWorkspace:
    """Precomputed static machinery for scanning a whole model's edges.

    mass_mode: 'activation' (data-dependent neighbor masses) or 'static'
    (masses proportional to graph weights). cost_mode: 'neural' (edge cost
    divided by the surviving-signal fraction, with sentinels) or 'static'.
    The full method is activation+neural; static+static is the data-free
    graph-Ricci baseline.
    """

    def __init__(self, model: ModelSpec, graph: NeuralGraph,
                 alpha: float = 0.9, mass_mode: str = "activation",
                 cost_mode: str = "neural",
                 ground_metric: str = "static-override", jobs: int = 1):
        _check_alpha(alpha)
        _check_ground_metric(ground_metric)
        if mass_mode not in ("activation", "static"):
            raise InvalidInputError("mass_mode must be activation|static")
        if cost_mode not in ("neural", "static"):
            raise InvalidInputError("cost_mode must be neural|static")
        self.model = model
        self.graph = graph
        self.alpha = alpha
        self.mass_mode = mass_mode
        self.cost_mode = cost_mode
        self.ground_metric = ground_metric
        self.jobs = max(1, int(jobs))
        self.stack = cost_matrices(graph)
        self.L = graph.n_layer_pairs
        # the override differs from the static metric only for tanh neural
        # costs (finite relu costs equal the static weight exactly)
        self.tracked_override = (cost_mode == "neural"
                                 and ground_metric == "static-override"
                                 and model.activation == "tanh")
        # relu + static masses: finite neural costs equal static weights, so
        # per-example values are the data-free static values behind the
        # activity mask; compute them once
        self.static_reuse = (cost_mode == "neural"
                             and mass_mode == "static"
                             and model.activation == "relu")
        self._dist: dict = {}
        self._two: dict = {}
        self._three: dict = {}
        self._static_vals: dict = {}
        self._static_lock = threading.Lock()

    @property
    def data_free(self) -> bool:
        return self.mass_mode == "static" and self.cost_mode == "static"

    # -- cached static structures -------------------------------------------

    def dist(self, k: int, l: int) -> np.ndarray:
        key = (k, l)
        if key not in self._dist:
            D = self.stack.mats[k]
            for p in range(k + 1, l):
                D = min_plus(D, self.stack.mats[p])
            self._dist[key] = D
        return self._dist[key]

    def two_tracked(self, k: int):
        """Tracked two-hop mins through layer k+1 (pairs k, k+1)."""
        if k not in self._two:
            self._two[k] = _two_hop_tracked(self.stack.mats[k],
                                            self.stack.mats[k + 1])
        return self._two[k]

    def three_tracked(self, k: int):
        """Tracked three-hop mins through layers k+1, k+2."""
        if k not in self._three:
            self._three[k] = _three_hop_tracked(self.stack.mats[k],
                                                self.stack.mats[k + 1],
                                                self.stack.mats[k + 2])
        return self._three[k]

    # -- per-example ingredients ---------------------------------------------

    def _neural_costs(self, lp: int, trace: ActivationTrace) -> np.ndarray:
        cost = self.graph.pairs[lp].cost
        if self.cost_mode == "static":
            return cost
        if self.model.activation == "relu":
            b_tgt = trace.layer_logits(lp + 1) > 0
            if lp == 0:
                mask = b_tgt[None, :]
            else:
                b_src = trace.layer_logits(lp) > 0
                mask = b_src[:, None] & b_tgt[None, :]
            return np.where(mask, cost, np.inf)
        lt = trace.layer_logits(lp + 1)
        safe = np.where(lt == 0.0, 1.0, lt)
        beta = np.where(lt == 0.0, 1.0, np.tanh(safe) / safe)
        return cost / beta[None, :]

    def _in_masses(self, lp: int, trace: ActivationTrace | None) -> np.ndarray:
        """(K_{lp-1}, K_lp) matrix; column u is u's in-neighbor masses."""
        pair = self.graph.pairs[lp - 1]
        k_prev, k = pair.cost.shape
        finite = np.isfinite(pair.cost)
        if self.mass_mode == "static":
            w = np.where(finite, pair.cost, 0.0)
            s = w.sum(axis=0)
            if np.any(s <= 0):
                raise InvalidInputError("vertex with empty in-neighborhood")
            return w / s
        vals = np.abs(trace.layer_activations(lp - 1))
        if pair.dense:
            col = activation_masses(vals)
            return np.repeat(col[:, None], k, axis=1)
        M = np.zeros((k_prev, k))
        for u in range(k):
            nbrs = pair.in_neighbors(u)
            if nbrs.size == 0:
                raise InvalidInputError("vertex with empty in-neighborhood")
            M[nbrs, u] = activation_masses(vals[nbrs])
        return M

    def _out_masses(self, lp: int, trace: ActivationTrace | None) -> np.ndarray:
        """(K_{lp+2}, K_{lp+1}) matrix; column v is v's out-neighbor masses."""
        pair = self.graph.pairs[lp + 1]
        k, k_next = pair.cost.shape
        finite = np.isfinite(pair.cost)
        if self.mass_mode == "static":
            w = np.where(finite, pair.cost, 0.0)
            s = w.sum(axis=1)
            if np.any(s <= 0):
                raise InvalidInputError("vertex with empty out-neighborhood")
            return (w / s[:, None]).T
        vals = np.abs(trace.layer_activations(lp + 2))
        if pair.dense:
            row = activation_masses(vals)
            return np.repeat(row[:, None], k, axis=1)
        M = np.zeros((k_next, k))
        for v in range(k):
            nbrs = pair.out_neighbors(v)
            if nbrs.size == 0:
                raise InvalidInputError("vertex with empty out-neighborhood")
            M[nbrs, v] = activation_masses(vals[nbrs])
        return M

    # -- scans ----------------------------------------------------------------

    def curvature_for_example(self, x: np.ndarray | None = None,
                              trace: ActivationTrace | None = None) -> list:
        """Scaled curvature for every edge: one (K_l, K_{l+1}) array per
        non-structural layer pair (None for structural pairs); np.nan marks
        absent edges."""
        if trace is None and not self.data_free:
            if x is None:
                raise InvalidInputError("an example is required unless both "
                                        "mass and cost modes are static")
            _, trace = forward(self.model, x)
        out = []
        for lp in range(self.L):
            if self.graph.pairs[lp].structural:
                out.append(None)
            else:
                out.append(self._pair_curvature(lp, trace))
        return out

    def curvature_static(self) -> list:
        """Data-free scan (valid only for static mass and cost modes)."""
        if not self.data_free:
            raise InvalidInputError("curvature_static needs static modes")
        return self.curvature_for_example(trace=None)

    def _static_pair_values(self, lp: int) -> np.ndarray:
        """Data-free curvature of the pair (static masses and costs)."""
        with self._static_lock:
            if lp not in self._static_vals:
                sibling = object.__new__(CurvatureWorkspace)
                sibling.__dict__.update(self.__dict__)
                sibling.cost_mode = "static"
                sibling.tracked_override = False
                sibling.static_reuse = False
                self._static_vals[lp] = sibling._pair_curvature(lp, None)
        return self._static_vals[lp]

    def _pair_curvature(self, lp: int, trace: ActivationTrace | None):
        alpha = self.alpha
        cost = self.graph.pairs[lp].cost
        present = np.isfinite(cost)
        dsig = self._neural_costs(lp, trace) if self.cost_mode == "neural" \
            else cost
        out = np.full(cost.shape, np.nan)
        sval = 1.0 if (lp == 0 or lp == self.L - 1) else 2.0
        out[present & ~np.isfinite(dsig)] = sval
        work = present & np.isfinite(dsig)
        if not work.any():
            return out

        if self.static_reuse:
            out[work] = self._static_pair_values(lp)[work]
            return out

        src_point = lp == 0
        tgt_point = lp == self.L - 1
        # ground cost of the evaluated edge itself: the override value under
        # static-override, the static weight under static-pure
        if self.cost_mode == "neural" and self.ground_metric == "static-override":
            g_uv = dsig
        else:
            g_uv = cost

        with np.errstate(invalid="ignore", divide="ignore"):
            if src_point and tgt_point:
                out[work] = ((1.0 - g_uv / dsig) / (1 - alpha))[work]
                return out
            if src_point:
                term = self._terms_to_out_neighbors(lp, trace, dsig, work)
                kappa = (1.0 - (alpha * g_uv + (1 - alpha) * term) / dsig) \
                    / (1 - alpha)
                out[work] = kappa[work]
                return out
            if tgt_point:
                term = self._terms_from_in_neighbors(lp, trace, dsig, work)
                kappa = (1.0 - (alpha * g_uv + (1 - alpha) * term) / dsig) \
                    / (1 - alpha)
                out[work] = kappa[work]
                return out

        self._hidden_pair(lp, trace, dsig, work, out)
        return out

    def _terms_to_out_neighbors(self, lp, trace, dsig, work):
        """E[u, v] = sum_j' outm[j', v] * d(u -> j') with the (u, v) edge
        overridden; used when the source is a point mass."""
        outm = self._out_masses(lp, trace)
        if not self.tracked_override:
            D = self.dist(lp, lp + 2)
            Dm = np.where(np.isfinite(D), D, 0.0)
            if np.mean(outm > 0) < 0.25:
                return (sp.csr_array(outm.T) @ Dm.T).T
            return Dm @ outm
        d1, darg, d2 = self.two_tracked(lp)
        C2 = self.stack.mats[lp + 1]
        term = np.zeros_like(dsig)
        for v in np.flatnonzero(work.any(axis=0)):
            excl = np.where(darg == v, d2, d1)
            alt = dsig[:, v][:, None] + C2[v][None, :]
            g = np.minimum(excl, alt)
            mass = outm[:, v]
            nz = mass > 0
            term[:, v] = g[:, nz] @ mass[nz]
        return term

    def _terms_from_in_neighbors(self, lp, trace, dsig, work):
        """E[u, v] = sum_i inm[i, u] * d(i -> v), mirrored."""
        inm = self._in_masses(lp, trace)
        if not self.tracked_override:
            D = self.dist(lp - 1, lp + 1)
            Dm = np.where(np.isfinite(D), D, 0.0)
            if np.mean(inm > 0) < 0.25:
                return sp.csr_array(inm.T) @ Dm
            return inm.T @ Dm
        d1, darg, d2 = self.two_tracked(lp - 1)
        A = self.stack.mats[lp - 1]
        term = np.zeros_like(dsig)
        for u in np.flatnonzero(work.any(axis=1)):
            excl = np.where(darg == u, d2, d1)
            alt = A[:, u][:, None] + dsig[u][None, :]
            g = np.minimum(excl, alt)
            mass = inm[:, u]
            nz = mass > 0
            term[u, :] = mass[nz] @ g[nz, :]
        return term

    def _hidden_pair(self, lp, trace, dsig, work, out):
        """Exact transport per active hidden edge on pruned supports."""
        alpha = self.alpha
        inm = self._in_masses(lp, trace)
        outm = self._out_masses(lp, trace)
        prev_pair = self.graph.pairs[lp - 1]
        next_pair = self.graph.pairs[lp + 1]
        static_edge = self.stack.mats[lp]
        if self.tracked_override:
            din1, dinarg, din2 = self.two_tracked(lp - 1)
            dout1, doutarg, dout2 = self.two_tracked(lp)
            dc1, dcm, dcmp, dc2 = self.three_tracked(lp - 1)
            A = self.stack.mats[lp - 1]
            C2 = self.stack.mats[lp + 1]
        else:
            Din = self.dist(lp - 1, lp + 1)
            Dout = self.dist(lp, lp + 2)
            Dcross = self.dist(lp - 1, lp + 2)

        # supports shared across vertices when the surrounding pairs are dense
        shared_in = prev_pair.dense
        shared_out = next_pair.dense
        if shared_in:
            s_in_all = np.flatnonzero(inm[:, 0] > 0)
            m_in_all = inm[s_in_all, 0]
        if shared_out:
            s_out_all = np.flatnonzero(outm[:, 0] > 0)
            m_out_all = outm[s_out_all, 0]

        override_ground = (self.cost_mode == "neural"
                           and self.ground_metric == "static-override")

        # dense surroundings without tracking share masses and the whole
        # ground block; per edge only row 0, column 0, and the corner change
        fast = (shared_in and shared_out and not self.tracked_override)
        if fast:
            from .ot import transport_kernel

            a_vec = np.concatenate(([alpha], (1 - alpha) * m_in_all))
            b_vec = np.concatenate(([alpha], (1 - alpha) * m_out_all))
            b_vec[np.argmax(b_vec)] += a_vec.sum() - b_vec.sum()
            block = Dcross[np.ix_(s_in_all, s_out_all)]
            dout_rows = Dout[:, s_out_all]
            din_cols = Din[np.ix_(s_in_all,
                                  np.arange(dsig.shape[1]))]
            max_iter = 200 * (len(a_vec) + len(b_vec)) + 2000

            def run_edges(us, vs):
                M = np.empty((len(a_vec), len(b_vec)))
                M[1:, 1:] = block
                for u, v in zip(us, vs):
                    d_uv = dsig[u, v]
                    M[0, 0] = d_uv if override_ground else static_edge[u, v]
                    M[0, 1:] = dout_rows[u]
                    M[1:, 0] = din_cols[:, v]
                    order = np.argsort(M.ravel(), kind="stable")
                    status, flow = transport_kernel(a_vec, b_vec, M, order,
                                                    max_iter)
                    if status != 0:
                        raise RuntimeError("transport solve did not converge")
                    W = float(np.sum(flow * M))
                    out[u, v] = (1.0 - W / d_uv) / (1.0 - alpha)

            us, vs = np.nonzero(work)
            if self.jobs <= 1 or len(us) < 64:
                run_edges(us, vs)
            else:
                from concurrent.futures import ThreadPoolExecutor

                chunks = np.array_split(np.arange(len(us)), self.jobs)
                with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                    futs = [pool.submit(run_edges, us[c], vs[c])
                            for c in chunks if len(c)]
                    for fut in futs:
                        fut.result()
            return

        def run_edges(us, vs):
            for u, v in zip(us, vs):
                if shared_in:
                    s_in, m_in = s_in_all, m_in_all
                else:
                    nbrs = prev_pair.in_neighbors(u)
                    mass = inm[nbrs, u]
                    keep = mass > 0
                    s_in, m_in = nbrs[keep], mass[keep]
                if shared_out:
                    s_out, m_out = s_out_all, m_out_all
                else:
                    nbrs = next_pair.out_neighbors(v)
                    mass = outm[nbrs, v]
                    keep = mass > 0
                    s_out, m_out = nbrs[keep], mass[keep]

                d_uv = dsig[u, v]
                c00 = d_uv if override_ground else static_edge[u, v]
                n_a, n_b = 1 + s_in.size, 1 + s_out.size
                M = np.empty((n_a, n_b))
                M[0, 0] = c00
                if self.tracked_override:
                    excl = np.where(doutarg[u, s_out] == v,
                                    dout2[u, s_out], dout1[u, s_out])
                    M[0, 1:] = np.minimum(excl, c00 + C2[v, s_out])
                    excl = np.where(dinarg[s_in, v] == u,
                                    din2[s_in, v], din1[s_in, v])
                    M[1:, 0] = np.minimum(excl, A[s_in, u] + c00)
                    bm = (dcm[np.ix_(s_in, s_out)] == u) \
                        & (dcmp[np.ix_(s_in, s_out)] == v)
                    excl = np.where(bm, dc2[np.ix_(s_in, s_out)],
                                    dc1[np.ix_(s_in, s_out)])
                    via = A[s_in, u][:, None] + c00 + C2[v, s_out][None, :]
                    M[1:, 1:] = np.minimum(excl, via)
                else:
                    M[0, 1:] = Dout[u, s_out]
                    M[1:, 0] = Din[s_in, v]
                    M[1:, 1:] = Dcross[np.ix_(s_in, s_out)]

                a = np.concatenate(([alpha], (1 - alpha) * m_in))
                b = np.concatenate(([alpha], (1 - alpha) * m_out))
                W, _ = solve_transport(a, b, M)
                out[u, v] = (1.0 - W / d_uv) / (1.0 - alpha)

        us, vs = np.nonzero(work)
        if self.jobs <= 1 or len(us) < 64:
            run_edges(us, vs)
        else:
            from concurrent.futures import ThreadPoolExecutor

            chunks = np.array_split(np.arange(len(us)), self.jobs)
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                futs = [pool.submit(run_edges, us[c], vs[c])
                        for c in chunks if len(c)]
                for fut in futs:
                    fut.result()
