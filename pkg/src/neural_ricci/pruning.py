"""Edge-removal harness: baseline saliency scores, cumulative sparsity
sweeps, and the ablation protocols.

Removal works on trainable weight parameters only; biases stay in place. A
removal order is a permutation of the flat weight-parameter ids; a sweep
zeroes the first floor(f * P) of them at each fraction f (no retraining) and
measures accuracy on the full test set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .nn import ModelSpec, accuracy, grad_logit_sum, grad_loss
from .ranking import CurvatureTable, rank_parameters


@dataclass
class PruneMask:
    """Keep (True) / remove (False) flags per trainable weight parameter."""

    keep: np.ndarray

    def __post_init__(self):
        self.keep = np.asarray(self.keep, dtype=bool).ravel()

    @property
    def removed_fraction(self) -> float:
        return float(1.0 - self.keep.mean())


def apply_mask(model: ModelSpec, mask: PruneMask) -> ModelSpec:
    """Copy of the model with removed weights set to exactly 0."""
    if mask.keep.shape != (model.n_weight_params,):
        raise InvalidInputError("mask length must match weight parameters")
    return model.with_weights_flat(model.weights_flat() * mask.keep)


def zero_biases(model: ModelSpec) -> ModelSpec:
    out = model.copy()
    for layer in out.layers:
        if layer.bias is not None:
            layer.bias = np.zeros_like(layer.bias)
    return out


@dataclass
class ScoreSet:
    """Importance score per trainable weight parameter; removal order is
    ascending score (ties by parameter id)."""

    values: np.ndarray
    method: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("scores must be finite")

    def removal_order(self) -> np.ndarray:
        return np.lexsort((np.arange(len(self.values)), self.values))


def score_magnitude(model: ModelSpec) -> ScoreSet:
    """|w| per parameter; small magnitudes are removed first."""
    return ScoreSet(values=np.abs(model.weights_flat()), method="magnitude")


def score_snip(model: ModelSpec, X: np.ndarray, y: np.ndarray) -> ScoreSet:
    """Single-shot sensitivity |w * dL/dw| on a labeled batch."""
    if len(X) == 0:
        raise InvalidInputError("SNIP needs a non-empty batch")
    _, grads = grad_loss(model, X, y)
    parts = [g.ravel() for g in grads.weights if g is not None]
    flat_g = np.concatenate(parts)
    return ScoreSet(values=np.abs(model.weights_flat() * flat_g),
                    method="snip")


def _abs_model(model: ModelSpec) -> ModelSpec:
    out = model.copy()
    for layer in out.layers:
        if layer.weight is not None:
            layer.weight = np.abs(layer.weight)
            layer.bias = np.abs(layer.bias)
    return out


def score_synflow(model: ModelSpec, iterations: int = 100,
                  final_keep: float = 0.01) -> ScoreSet:
    """Data-free iterative saliency: an all-ones input through the
    absolute-value network, score |w * dR/dw| with R the summed outputs,
    re-scored under an exponential keep schedule down to `final_keep`.

    Returned values are removal ranks: ascending order reproduces the
    schedule's removal sequence, with survivors ordered by their last scores.
    """
    P = model.n_weight_params
    absm = _abs_model(model)
    ones = np.ones((1, model.input_dims))
    keep = np.ones(P, dtype=bool)
    rank = np.full(P, -1, dtype=np.int64)
    pos = 0
    last_scores = None
    for it in range(1, iterations + 1):
        target = int(np.ceil(P * final_keep ** (it / iterations)))
        masked = absm.with_weights_flat(absm.weights_flat() * keep)
        _, grads = grad_logit_sum(masked, ones)
        flat_g = np.concatenate([g.ravel() for g in grads.weights
                                 if g is not None])
        scores = np.abs(masked.weights_flat() * flat_g)
        last_scores = scores
        remaining = np.flatnonzero(keep)
        n_remove = len(remaining) - target
        if n_remove <= 0:
            continue
        order = remaining[np.lexsort((remaining, scores[remaining]))]
        out = order[:n_remove]
        rank[out] = pos + np.arange(n_remove)
        pos += n_remove
        keep[out] = False
    survivors = np.flatnonzero(keep)
    order = survivors[np.lexsort((survivors, last_scores[survivors]))]
    rank[order] = pos + np.arange(len(order))
    return ScoreSet(values=rank.astype(np.float64), method="synflow")


def synflow_layer_survivors(model: ModelSpec, iterations: int = 100,
                            final_keep: float = 0.01) -> np.ndarray:
    """Remaining parameters per layer after the full schedule."""
    scores = score_synflow(model, iterations, final_keep)
    P = model.n_weight_params
    n_keep = int(np.ceil(P * final_keep))
    kept = scores.removal_order()[P - n_keep:]
    offsets = model.param_offsets + [P]
    counts = []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        counts.append(int(np.sum((kept >= lo) & (kept < hi))))
    return np.array(counts)


# ---------------------------------------------------------------------------
# curvature-based orders
# ---------------------------------------------------------------------------

def curvature_orders(table: CurvatureTable, model: ModelSpec) -> dict:
    """positive-first (highest curvature removed first) and negative-first
    removal orders; ties by ascending |weight| then parameter id."""
    absw = np.abs(model.weights_flat())
    return {
        "positive-first": np.lexsort((absw, -table.kappa)),
        "negative-first": np.lexsort((absw, table.kappa)),
    }


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SparsityCurve:
    fractions: np.ndarray
    accuracies: np.ndarray
    method: str = ""
    order_desc: str = ""
    model_hash: str = ""

    def auc(self) -> float:
        return float(np.trapezoid(self.accuracies, self.fractions))

    def accuracy_at(self, fraction: float) -> float:
        idx = int(np.argmin(np.abs(self.fractions - fraction)))
        return float(self.accuracies[idx])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("fraction,accuracy,method,order\n")
            for f, a in zip(self.fractions, self.accuracies):
                fh.write(f"{f:.17g},{a:.17g},{self.method},{self.order_desc}\n")

    @staticmethod
    def from_csv(path) -> "SparsityCurve":
        rows = Path(path).read_text().strip().splitlines()[1:]
        fr, ac = [], []
        method = order = ""
        for row in rows:
            f, a, method, order = row.split(",")
            fr.append(float(f))
            ac.append(float(a))
        return SparsityCurve(fractions=np.asarray(fr),
                             accuracies=np.asarray(ac),
                             method=method, order_desc=order)


def default_fraction_grid() -> np.ndarray:
    """2% steps to 50%, then 5% steps to 100%."""
    grid = np.concatenate([np.arange(0, 50, 2), np.arange(50, 101, 5)])
    return grid / 100.0


def sweep(model: ModelSpec, order: np.ndarray, fractions,
          X_test: np.ndarray, y_test: np.ndarray, method: str = "",
          order_desc: str = "") -> SparsityCurve:
    """Cumulative removal along `order`, accuracy at each fraction.

    `order` must be a permutation of all weight-parameter ids; fractions are
    increasing in [0, 1] (fraction 0 is prepended when missing).
    """
    P = model.n_weight_params
    order = np.asarray(order)
    if order.shape != (P,) or not np.array_equal(np.sort(order), np.arange(P)):
        raise InvalidInputError("order must be a permutation of parameter ids")
    fr = np.asarray(list(fractions), dtype=np.float64)
    if fr.size == 0:
        raise InvalidInputError("fraction grid must be non-empty")
    if np.any(fr < 0) or np.any(fr > 1) or np.any(np.diff(fr) <= 0):
        raise InvalidInputError("fractions must be increasing within [0, 1]")
    if fr[0] != 0.0:
        fr = np.concatenate(([0.0], fr))
    base = model.weights_flat()
    accs = []
    for f in fr:
        n = int(np.floor(f * P))
        w = base.copy()
        w[order[:n]] = 0.0
        accs.append(accuracy(model.with_weights_flat(w), X_test, y_test))
    return SparsityCurve(fractions=fr, accuracies=np.asarray(accs),
                         method=method, order_desc=order_desc,
                         model_hash=model.model_hash())


# ---------------------------------------------------------------------------
# ablations
# ---------------------------------------------------------------------------

def _layer_restricted_sweep(model, pids, fractions, X, y, method, order_desc):
    """Sweep over one layer's parameters only (pids already in removal
    order; fractions are of that layer's parameter count)."""
    base = model.weights_flat()
    fr = np.asarray(list(fractions), dtype=np.float64)
    if fr[0] != 0.0:
        fr = np.concatenate(([0.0], fr))
    accs = []
    for f in fr:
        n = int(np.floor(f * len(pids)))
        w = base.copy()
        w[pids[:n]] = 0.0
        accs.append(accuracy(model.with_weights_flat(w), X, y))
    return SparsityCurve(fractions=fr, accuracies=np.asarray(accs),
                         method=method, order_desc=order_desc,
                         model_hash=model.model_hash())


def ablate_per_layer(model, graph, calib, X_test, y_test, alpha=0.9,
                     fractions=None, jobs=1) -> dict:
    """One curve per trainable layer for curvature (positive-first) and
    magnitude (ascending), pruning restricted to that layer."""
    fractions = default_fraction_grid() if fractions is None else fractions
    table, _ = rank_parameters(model, graph, calib, alpha=alpha, jobs=jobs)
    absw = np.abs(model.weights_flat())
    offsets = model.param_offsets + [model.n_weight_params]
    curves = {}
    li = 0
    for layer_idx, layer in enumerate(model.layers):
        if not layer.trainable or layer.n_weight_params == 0:
            continue
        lo, hi = offsets[layer_idx], offsets[layer_idx + 1]
        pids = np.arange(lo, hi)
        kap = table.kappa[pids]
        aw = absw[pids]
        pos_first = pids[np.lexsort((aw, -kap))]
        mag_asc = pids[np.lexsort((pids, aw))]
        curves[f"layer{li}-curvature"] = _layer_restricted_sweep(
            model, pos_first, fractions, X_test, y_test,
            "curvature", f"layer{li}-positive-first")
        curves[f"layer{li}-magnitude"] = _layer_restricted_sweep(
            model, mag_asc, fractions, X_test, y_test,
            "magnitude", f"layer{li}-ascending")
        li += 1
    return curves


MODULE_VARIANTS = {
    "baseline": ("static", "static"),
    "neighbor": ("activation", "static"),
    "edgecost": ("static", "neural"),
    "full": ("activation", "neural"),
}


def ablate_neural_modules(model, graph, calib, X_test, y_test, alpha=0.9,
                          fractions=None, jobs=1,
                          ground_metric="static-override") -> dict:
    """Curves for the static graph-Ricci baseline, each single modification
    (data-dependent neighbor masses, activation edge costs), and the full
    method; all removed positive-first."""
    fractions = default_fraction_grid() if fractions is None else fractions
    curves = {}
    for name, (mass_mode, cost_mode) in MODULE_VARIANTS.items():
        table, ranked = rank_parameters(
            model, graph, calib, alpha=alpha, mass_mode=mass_mode,
            cost_mode=cost_mode, ground_metric=ground_metric, jobs=jobs)
        curves[name] = sweep(model, ranked.order, fractions, X_test, y_test,
                             method=name, order_desc="positive-first")
    return curves


def ablate_calib_size(model, graph, calib_provider, X_test, y_test,
                      sizes=(1, 5, 10, 20, 50, 100), alpha=0.9,
                      fractions=None, jobs=1) -> dict:
    """Positive-first curves for increasing calibration-set sizes;
    `calib_provider(size)` returns the stratified example matrix."""
    fractions = default_fraction_grid() if fractions is None else fractions
    curves = {}
    for size in sizes:
        calib = calib_provider(size)
        _, ranked = rank_parameters(model, graph, calib, alpha=alpha,
                                    jobs=jobs)
        curves[f"calib{size}"] = sweep(
            model, ranked.order, fractions, X_test, y_test,
            method="curvature", order_desc=f"positive-first-calib{size}")
    return curves


def run_ablation(kind: str, **kwargs) -> dict:
    """Dispatch to one of the ablation protocols."""
    if kind == "per-layer":
        return ablate_per_layer(**kwargs)
    if kind == "neural-modules":
        return ablate_neural_modules(**kwargs)
    if kind == "calib-size":
        return ablate_calib_size(**kwargs)
    raise InvalidInputError(f"unknown ablation kind {kind!r}")
