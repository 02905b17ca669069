"""Layered weighted digraph induced by a model, plus min-plus shortest paths.

Each layer pair l -> l+1 is stored as a dense cost matrix (np.inf marks a
missing edge) together with a parameter-id matrix mapping every edge back to
the flat weight parameter that produced it (-1 for structural layers such as
pooling). Edge cost is 1/|W| with |W| clamped below at 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .nn import ModelSpec, unroll_conv, unroll_pool

WEIGHT_CLAMP = 1e-12


@dataclass
class LayerPair:
    """Edges between graph layers l and l+1."""

    cost: np.ndarray          # (K_l, K_{l+1}), np.inf where no edge
    pid: np.ndarray           # int64 global parameter id, -1 where none
    structural: bool = False
    _in_nbrs: list | None = field(default=None, repr=False)
    _out_nbrs: list | None = field(default=None, repr=False)

    @property
    def dense(self) -> bool:
        return bool(np.all(np.isfinite(self.cost)))

    def in_neighbors(self, j: int) -> np.ndarray:
        """Source indices of edges into target neuron j."""
        if self._in_nbrs is None:
            finite = np.isfinite(self.cost)
            self._in_nbrs = [np.flatnonzero(finite[:, c])
                             for c in range(self.cost.shape[1])]
        return self._in_nbrs[j]

    def out_neighbors(self, i: int) -> np.ndarray:
        """Target indices of edges out of source neuron i."""
        if self._out_nbrs is None:
            finite = np.isfinite(self.cost)
            self._out_nbrs = [np.flatnonzero(finite[r])
                              for r in range(self.cost.shape[0])]
        return self._out_nbrs[i]

    @property
    def n_edges(self) -> int:
        return int(np.isfinite(self.cost).sum())


@dataclass
class NeuralGraph:
    """One vertex per input dimension and per neuron; one edge per connection."""

    layer_sizes: list[int]
    pairs: list[LayerPair]
    n_params: int

    @property
    def n_vertices(self) -> int:
        return int(sum(self.layer_sizes))

    @property
    def n_layer_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_edges(self) -> int:
        return int(sum(p.n_edges for p in self.pairs))

    def vertex_offset(self, layer: int) -> int:
        return int(sum(self.layer_sizes[:layer]))

    def vertex_id(self, layer: int, index: int) -> int:
        return self.vertex_offset(layer) + int(index)

    def edge_cost(self, pair: int, i: int, j: int) -> float:
        c = float(self.pairs[pair].cost[i, j])
        if not np.isfinite(c):
            raise InvalidInputError(f"no edge ({i},{j}) in layer pair {pair}")
        return c

    def structural_layers(self) -> list[int]:
        return [k for k, p in enumerate(self.pairs) if p.structural]


def build_graph(model: ModelSpec) -> NeuralGraph:
    """Neural graph of a model: edge weight 1/|W|, |W| clamped at 1e-12."""
    model.validate()
    pairs = []
    offsets = model.param_offsets
    for li, layer in enumerate(model.layers):
        base = offsets[li]
        if layer.kind == "dense":
            w = np.abs(layer.weight.T)           # (in, out)
            cost = 1.0 / np.maximum(w, WEIGHT_CLAMP)
            k_in = layer.weight.shape[1]
            # weight[j, i] sits at flat index j*k_in + i
            jj, ii = np.meshgrid(np.arange(layer.weight.shape[0]),
                                 np.arange(k_in), indexing="xy")
            pid = (base + jj * k_in + ii).astype(np.int64)
            pairs.append(LayerPair(cost=cost, pid=pid, structural=False))
            continue
        if layer.kind == "conv2d":
            um = unroll_conv(layer)
        else:
            um = unroll_pool(layer)
        cost = np.full((um.in_size, um.out_size), np.inf)
        pid = np.full((um.in_size, um.out_size), -1, dtype=np.int64)
        cost[um.in_idx, um.out_idx] = 1.0 / np.maximum(
            np.abs(um.values), WEIGHT_CLAMP)
        if layer.kind == "conv2d":
            pid[um.in_idx, um.out_idx] = base + um.param_idx
        pairs.append(LayerPair(cost=cost, pid=pid,
                               structural=layer.kind == "avgpool2d"))
    return NeuralGraph(layer_sizes=model.layer_sizes, pairs=pairs,
                       n_params=model.n_weight_params)


@dataclass
class CostMatrixStack:
    """Per layer pair, the adjacency cost matrix (K_l x K_{l+1})."""

    mats: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.mats)


def cost_matrices(graph: NeuralGraph) -> CostMatrixStack:
    return CostMatrixStack(mats=[p.cost for p in graph.pairs])


def min_plus(D: np.ndarray, C: np.ndarray) -> np.ndarray:
    """(min,+) product: out[i, j] = min_m D[i, m] + C[m, j].

    Dense C uses blocked broadcasting; sparse C iterates its finite columns,
    which is much cheaper for unrolled convolutions.
    """
    n_i, n_m = D.shape
    n_j = C.shape[1]
    finite = np.isfinite(C)
    density = finite.mean() if C.size else 1.0
    out = np.full((n_i, n_j), np.inf)
    if density > 0.25:
        block = max(1, int(4e6 // max(n_m * n_j, 1)))
        for s in range(0, n_i, block):
            out[s:s + block] = np.min(
                D[s:s + block, :, None] + C[None, :, :], axis=1)
        return out
    for j in range(n_j):
        ms = np.flatnonzero(finite[:, j])
        if ms.size == 0:
            continue
        out[:, j] = np.min(D[:, ms] + C[ms, j][None, :], axis=1)
    return out


def layered_shortest_paths(stack: CostMatrixStack, k: int, l: int,
                           override: tuple | None = None) -> np.ndarray:
    """Minimum accumulated path cost between every neuron of layer k and every
    neuron of layer l (k < l), via the layer-by-layer (min,+) recursion.

    override, if given, is ((pair_index, i, j), cost): that single edge cost is
    substituted before the recursion runs. Entries are +inf when no path exists.
    """
    if not 0 <= k < l <= len(stack.mats):
        raise InvalidInputError(f"need 0 <= k < l <= {len(stack.mats)}, "
                                f"got k={k}, l={l}")
    mats = list(stack.mats)
    if override is not None:
        (pair, i, j), cost = override
        if not k <= pair < l:
            raise InvalidInputError("override edge outside the [k, l) range")
        base = mats[pair]
        if not np.isfinite(base[i, j]):
            raise InvalidInputError("override names a non-existent edge")
        if not (cost > 0):
            raise InvalidInputError("override cost must be positive")
        repl = base.copy()
        repl[i, j] = cost
        mats[pair] = repl
    D = mats[k].copy()
    for p in range(k + 1, l):
        D = min_plus(D, mats[p])
    return D


def dump_edges(graph: NeuralGraph, path) -> None:
    """Edge-list text dump: `layer src dst weight param_id` per line."""
    with open(path, "w") as fh:
        for k, pair in enumerate(graph.pairs):
            src, dst = np.nonzero(np.isfinite(pair.cost))
            for i, j in zip(src, dst):
                fh.write(f"{k} {i} {j} {pair.cost[i, j]:.17g} "
                         f"{pair.pid[i, j]}\n")
