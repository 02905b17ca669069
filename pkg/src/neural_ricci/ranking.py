"""Connection ranking: per-parameter curvature minima over a calibration set.

Every edge's curvature is minimized over all calibration examples; every
parameter then takes the minimum over the edges it induces (one edge for
dense weights, one per spatial position for convolution kernels). Ranking is
by curvature descending (least important first), ties broken by ascending
|weight| then ascending parameter id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature import CurvatureWorkspace
from .errors import InvalidInputError
from .graph import NeuralGraph
from .nn import ModelSpec

_NO_EXAMPLE = -1


@dataclass
class CurvatureTable:
    """Minimum curvature per trainable weight parameter, with provenance."""

    kappa: np.ndarray        # (P,) min curvature
    example_id: np.ndarray   # (P,) contributing example index (-1 if data-free)
    layer: np.ndarray        # (P,) layer-pair index of the parameter
    edge_flat: np.ndarray    # (P,) flat edge index within the pair
    meta: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return len(self.kappa)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("param_id,layer,kappa_min,example_id\n")
            for pid in range(self.n_params):
                fh.write(f"{pid},{self.layer[pid]},{self.kappa[pid]:.17g},"
                         f"{self.example_id[pid]}\n")

    @staticmethod
    def from_csv(path) -> "CurvatureTable":
        rows = Path(path).read_text().strip().splitlines()[1:]
        pids, layers, kappas, examples = [], [], [], []
        for row in rows:
            p, l, k, e = row.split(",")
            pids.append(int(p))
            layers.append(int(l))
            kappas.append(float(k))
            examples.append(int(e))
        order = np.argsort(pids)
        return CurvatureTable(
            kappa=np.asarray(kappas)[order],
            example_id=np.asarray(examples, dtype=np.int64)[order],
            layer=np.asarray(layers, dtype=np.int64)[order],
            edge_flat=np.full(len(rows), -1, dtype=np.int64))

    def save_meta(self, path) -> None:
        Path(path).write_text(json.dumps(self.meta, indent=1, sort_keys=True))


@dataclass
class RankedEdgeSet:
    """All trainable parameter ids sorted by curvature, highest first."""

    order: np.ndarray

    def __len__(self) -> int:
        return len(self.order)


def _rank_order(kappa: np.ndarray, abs_w: np.ndarray) -> np.ndarray:
    # lexsort: last key is primary -> curvature descending, then |w| asc,
    # then param id asc (stable sort supplies the id tiebreak)
    return np.lexsort((abs_w, -kappa))


def rank_parameters(model: ModelSpec, graph: NeuralGraph, calib: np.ndarray,
                    alpha: float = 0.9, mass_mode: str = "activation",
                    cost_mode: str = "neural",
                    ground_metric: str = "static-override", jobs: int = 1,
                    progress=None) -> tuple[CurvatureTable, RankedEdgeSet]:
    """Aggregate per-example edge curvature into one value per parameter.

    calib is an (N, input_dims) array of calibration examples (ignored, and
    allowed empty, when both modes are static). Evaluation over examples may
    run in `jobs` threads; the min-reduce is order-independent.
    """
    ws = CurvatureWorkspace(model, graph, alpha=alpha, mass_mode=mass_mode,
                            cost_mode=cost_mode, ground_metric=ground_metric,
                            jobs=jobs)
    data_free = ws.data_free
    calib = np.asarray(calib, dtype=np.float64)
    if not data_free and (calib.ndim != 2 or len(calib) == 0):
        raise InvalidInputError("calibration set must be non-empty")

    pairs = graph.pairs
    ranked_pairs = [lp for lp in range(graph.n_layer_pairs)
                    if not pairs[lp].structural]
    edge_min = {lp: np.where(np.isfinite(pairs[lp].cost), np.inf, np.nan)
                for lp in ranked_pairs}
    edge_arg = {lp: np.full(pairs[lp].cost.shape, _NO_EXAMPLE, dtype=np.int64)
                for lp in ranked_pairs}

    def reduce_example(idx, arrays):
        for lp in ranked_pairs:
            arr = arrays[lp]
            better = arr < edge_min[lp]
            edge_min[lp][better] = arr[better]
            edge_arg[lp][better] = idx

    if data_free:
        reduce_example(_NO_EXAMPLE, ws.curvature_static())
    else:
        # parallelism lives inside the workspace (edge-level); the example
        # loop stays sequential and the min-reduce is order-independent
        for idx in range(len(calib)):
            reduce_example(idx, ws.curvature_for_example(calib[idx]))
            if progress is not None:
                progress(idx + 1, len(calib))

    # parameter-level min over induced edges (row-major edge order per pair,
    # pairs in layer order, for deterministic provenance)
    P = graph.n_params
    kappa = np.full(P, np.inf)
    example_id = np.full(P, _NO_EXAMPLE, dtype=np.int64)
    layer = np.full(P, -1, dtype=np.int64)
    edge_flat = np.full(P, -1, dtype=np.int64)
    assigned = np.zeros(P, dtype=bool)
    for lp in ranked_pairs:
        pid = pairs[lp].pid
        valid = pid >= 0
        np.minimum.at(kappa, pid[valid], edge_min[lp][valid])
    for lp in ranked_pairs:
        pid = pairs[lp].pid
        valid = pid >= 0
        hit = valid & (edge_min[lp] == kappa[pid.clip(min=0)])
        pids_c = pid[hit]
        flat_c = np.flatnonzero(hit.ravel())
        uniq, first = np.unique(pids_c, return_index=True)
        sel = ~assigned[uniq]
        tgt = uniq[sel]
        src = first[sel]
        layer[tgt] = lp
        edge_flat[tgt] = flat_c[src]
        example_id[tgt] = edge_arg[lp].ravel()[flat_c[src]]
        assigned[tgt] = True
    if not assigned.all():
        raise InvalidInputError("some parameters induced no ranked edge")

    abs_w = np.abs(model.weights_flat())
    table = CurvatureTable(
        kappa=kappa, example_id=example_id, layer=layer, edge_flat=edge_flat,
        meta={
            "alpha": alpha,
            "mass_mode": mass_mode,
            "cost_mode": cost_mode,
            "ground_metric": ground_metric,
            "model_hash": model.model_hash(),
            "n_calibration_examples": 0 if data_free else int(len(calib)),
        })
    return table, RankedEdgeSet(order=_rank_order(kappa, abs_w))


def split_by_sign(table: CurvatureTable) -> tuple[np.ndarray, np.ndarray]:
    """Parameter ids with negative curvature vs the rest."""
    pids = np.arange(table.n_params)
    neg = table.kappa < 0
    return pids[neg], pids[~neg]


def dump_edge_curvatures(graph: NeuralGraph, arrays: list, example_id: int,
                         path, append: bool = False) -> None:
    """Optional per-edge dump: `param_id,layer,example_id,kappa,sentinel`."""
    mode = "a" if append else "w"
    with open(path, mode) as fh:
        if not append:
            fh.write("param_id,layer,example_id,kappa,sentinel\n")
        for lp, arr in enumerate(arrays):
            if arr is None:
                continue
            pair = graph.pairs[lp]
            sval = 1.0 if (lp == 0 or lp == graph.n_layer_pairs - 1) else 2.0
            us, vs = np.nonzero(np.isfinite(pair.cost))
            for i, j in zip(us, vs):
                k = arr[i, j]
                sent = int(k == sval)
                fh.write(f"{pair.pid[i, j]},{lp},{example_id},{k:.17g},{sent}\n")
