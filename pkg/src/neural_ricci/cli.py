"""Command-line interface.

    neural-ricci {train, analyze, sweep, ablate, report} [--config FILE] [...]

Configuration is a single JSON file; command-line flags override it. Exit
codes: 0 success, 1 runtime failure, 2 usage/config error. Outputs are
deterministic for fixed seeds (no timestamps in any artifact).
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import DatasetHandle, load_dataset, select_calibration
from .errors import NeuralRicciError, UsageError
from .graph import build_graph
from .model_io import load_model, save_model
from .nn import ModelSpec, TrainConfig, accuracy, build_lenet, build_mlp, train_sgd
from .pruning import (
    SparsityCurve,
    ablate_calib_size,
    ablate_neural_modules,
    ablate_per_layer,
    curvature_orders,
    default_fraction_grid,
    score_magnitude,
    score_snip,
    score_synflow,
    sweep,
)
from .ranking import CurvatureTable, dump_edge_curvatures, rank_parameters, split_by_sign
from .svgplot import line_plot

DEFAULTS = {
    "dataset": {"name": "synthetic", "dir": "data", "val_size": None,
                "train_size": 14000, "test_size": 2000, "seed": 9},
    "model": {"arch": "mlp", "activation": "relu", "seed": 1},
    "train": {"scheme": "ce", "lr": 0.1, "epochs": 20, "batch_size": 64,
              "weight_decay": 1e-4, "subset": 8000, "seed": 1},
    "analysis": {"alpha": 0.9, "calib_size": 100, "calib_seed": 7,
                 "ground_metric": "static-override", "dump_edges": False,
                 "tag": ""},
    "sweep": {"methods": ["curvature", "magnitude", "snip", "synflow"],
              "order": "positive-first", "fractions": "default", "tag": ""},
    "ablate": {"kind": "neural-modules",
               "calib_sizes": [1, 5, 10, 20, 50, 100]},
    "output": "runs",
    "jobs": None,
}


def _deep_update(base: dict, upd: dict) -> dict:
    for key, val in upd.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        try:
            _deep_update(cfg, json.loads(path.read_text()))
        except ValueError as exc:
            raise UsageError(f"cannot parse config JSON: {exc}") from exc

    def set_if(path_keys, value):
        if value is None:
            return
        node = cfg
        for key in path_keys[:-1]:
            node = node[key]
        node[path_keys[-1]] = value

    set_if(("output",), getattr(args, "out", None))
    set_if(("jobs",), getattr(args, "jobs", None))
    set_if(("dataset", "name"), getattr(args, "dataset", None))
    set_if(("dataset", "dir"), getattr(args, "data_dir", None))
    set_if(("model", "arch"), getattr(args, "arch", None))
    set_if(("model", "activation"), getattr(args, "activation", None))
    set_if(("model", "seed"), getattr(args, "model_seed", None))
    set_if(("train", "scheme"), getattr(args, "scheme", None))
    set_if(("train", "weight_decay"), getattr(args, "wd", None))
    set_if(("train", "lr"), getattr(args, "lr", None))
    set_if(("train", "epochs"), getattr(args, "epochs", None))
    set_if(("train", "batch_size"), getattr(args, "batch_size", None))
    set_if(("train", "subset"), getattr(args, "subset", None))
    set_if(("train", "seed"), getattr(args, "seed", None))
    set_if(("analysis", "alpha"), getattr(args, "alpha", None))
    set_if(("analysis", "calib_size"), getattr(args, "calib_size", None))
    set_if(("analysis", "calib_seed"), getattr(args, "calib_seed", None))
    set_if(("analysis", "ground_metric"), getattr(args, "ground_metric", None))
    set_if(("analysis", "tag"), getattr(args, "tag", None))
    set_if(("sweep", "order"), getattr(args, "order", None))
    set_if(("sweep", "fractions"), getattr(args, "fractions", None))
    set_if(("sweep", "tag"), getattr(args, "tag", None))
    set_if(("ablate", "kind"), getattr(args, "kind", None))
    if getattr(args, "methods", None):
        cfg["sweep"]["methods"] = [m.strip() for m in args.methods.split(",")
                                   if m.strip()]
    if getattr(args, "dump_edges", False):
        cfg["analysis"]["dump_edges"] = True
    cfg["model_path"] = getattr(args, "model", None)
    cfg["table_path"] = getattr(args, "table", None)
    cfg["curve_paths"] = getattr(args, "curves", None)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict):
    alpha = cfg["analysis"]["alpha"]
    if not 0.0 < alpha < 1.0:
        raise UsageError("alpha must lie strictly inside (0, 1)")
    if cfg["analysis"]["calib_size"] < 1:
        raise UsageError("calibration size must be >= 1")
    if cfg["analysis"]["ground_metric"] not in ("static-override",
                                                "static-pure"):
        raise UsageError("ground-metric must be static-override|static-pure")
    if cfg["model"]["arch"] not in ("mlp", "lenet"):
        raise UsageError("arch must be mlp|lenet")
    if cfg["model"]["activation"] not in ("relu", "tanh"):
        raise UsageError("activation must be relu|tanh")
    if cfg["train"]["scheme"] not in ("ce", "wd"):
        raise UsageError("scheme must be ce|wd")


def _jobs(cfg) -> int:
    if cfg.get("jobs"):
        return int(cfg["jobs"])
    env = os.environ.get("NEURAL_RICCI_JOBS")
    return int(env) if env else 1


def _outdir(cfg) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_handle(cfg) -> DatasetHandle:
    d = cfg["dataset"]
    return load_dataset(d["name"], d["dir"], val_size=d["val_size"],
                        train_size=d["train_size"], test_size=d["test_size"],
                        seed=d["seed"])


def _default_model_path(cfg) -> Path:
    return _outdir(cfg) / "model.nrm"


def _load_model(cfg) -> ModelSpec:
    path = Path(cfg["model_path"] or _default_model_path(cfg))
    if not path.exists():
        raise NeuralRicciError(f"model file {path} does not exist; "
                               f"run `neural-ricci train` first")
    return load_model(path)


def _parse_fractions(spec) -> np.ndarray:
    if spec is None or spec == "default":
        return default_fraction_grid()
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
    else:
        vals = [float(v) for v in str(spec).split(",") if v.strip() != ""]
    if not vals:
        raise UsageError("empty fraction grid")
    return np.asarray(vals)


def _calibration(cfg, handle):
    X, ids = select_calibration(handle, cfg["analysis"]["calib_size"],
                                cfg["analysis"]["calib_seed"])
    y = handle.yval[ids]
    return X, y, ids


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_train(cfg) -> int:
    out = _outdir(cfg)
    handle = _load_handle(cfg)
    arch = cfg["model"]["arch"]
    act = cfg["model"]["activation"]
    if arch == "mlp":
        model = build_mlp((handle.input_dims, 128, 64, 10), activation=act,
                          seed=cfg["model"]["seed"])
    else:
        model = build_lenet(activation=act, seed=cfg["model"]["seed"],
                            in_shape=(1,) + tuple(handle.image_shape))
    tr = cfg["train"]
    wd = tr["weight_decay"] if tr["scheme"] == "wd" else 0.0
    n = min(tr["subset"], len(handle.Xtr)) if tr["subset"] else len(handle.Xtr)
    result = train_sgd(model, handle.Xtr[:n], handle.ytr[:n],
                       TrainConfig(lr=tr["lr"], epochs=tr["epochs"],
                                   batch_size=tr["batch_size"],
                                   weight_decay=wd, seed=tr["seed"]))
    test_acc = accuracy(result.model, handle.Xte, handle.yte)
    model_path = Path(cfg["model_path"] or _default_model_path(cfg))
    save_model(result.model, model_path)
    log_path = out / "training-log.csv"
    with open(log_path, "w") as fh:
        fh.write("epoch,train_loss\n")
        for i, loss in enumerate(result.epoch_losses):
            fh.write(f"{i},{loss:.17g}\n")
        fh.write(f"final_test_accuracy,{test_acc:.17g}\n")
    print(f"model: {model_path}")
    print(f"training log: {log_path}")
    print(f"final test accuracy: {test_acc:.4f}")
    return 0


def cmd_analyze(cfg) -> int:
    out = _outdir(cfg)
    handle = _load_handle(cfg)
    model = _load_model(cfg)
    if model.input_dims != handle.input_dims:
        raise NeuralRicciError("model and dataset input sizes disagree")
    graph = build_graph(model)
    X, _, ids = _calibration(cfg, handle)
    ana = cfg["analysis"]
    table, ranked = rank_parameters(
        model, graph, X, alpha=ana["alpha"],
        ground_metric=ana["ground_metric"], jobs=_jobs(cfg))
    table.meta.update({
        "dataset": handle.name,
        "calibration_size": int(len(X)),
        "calibration_seed": ana["calib_seed"],
        "calibration_indices": [int(i) for i in ids],
    })
    tag = f"-{ana['tag']}" if ana.get("tag") else ""
    csv_path = out / f"curvature{tag}.csv"
    meta_path = out / f"curvature{tag}-meta.json"
    table.to_csv(csv_path)
    table.save_meta(meta_path)
    neg, nonneg = split_by_sign(table)
    sentinels = np.sum((table.kappa == 1.0) | (table.kappa == 2.0))
    print(f"curvature table: {csv_path}")
    print(f"negative-curvature parameters: {len(neg)}")
    print(f"nonnegative-curvature parameters: {len(nonneg)}")
    print(f"sentinel fraction: {sentinels / table.n_params:.4f}")
    if ana["dump_edges"]:
        from .curvature import CurvatureWorkspace

        dump_path = out / f"curvature{tag}-edges.csv"
        ws = CurvatureWorkspace(model, graph, alpha=ana["alpha"],
                                ground_metric=ana["ground_metric"])
        for idx in range(len(X)):
            arrays = ws.curvature_for_example(X[idx])
            dump_edge_curvatures(graph, arrays, idx, dump_path,
                                 append=idx > 0)
        print(f"edge dump: {dump_path}")
    return 0


def _removal_order(method: str, order_name: str, cfg, model, handle):
    if method == "curvature":
        table_path = Path(cfg["table_path"] or
                          (_outdir(cfg) / "curvature.csv"))
        if not table_path.exists():
            raise NeuralRicciError(
                f"curvature table {table_path} does not exist; run "
                f"`neural-ricci analyze` first")
        table = CurvatureTable.from_csv(table_path)
        if table.n_params != model.n_weight_params:
            raise NeuralRicciError("curvature table does not match the model")
        orders = curvature_orders(table, model)
        if order_name not in orders:
            raise UsageError("order must be positive-first|negative-first")
        return orders[order_name], order_name
    if method == "magnitude":
        return score_magnitude(model).removal_order(), "score-ascending"
    if method == "snip":
        X, y, _ = _calibration(cfg, handle)
        return score_snip(model, X, y).removal_order(), "score-ascending"
    if method == "synflow":
        return score_synflow(model).removal_order(), "score-ascending"
    raise UsageError(f"unknown method {method!r}")


def cmd_sweep(cfg) -> int:
    out = _outdir(cfg)
    handle = _load_handle(cfg)
    model = _load_model(cfg)
    fractions = _parse_fractions(cfg["sweep"]["fractions"])
    tag = f"-{cfg['sweep']['tag']}" if cfg["sweep"].get("tag") else ""
    curves = []
    for method in cfg["sweep"]["methods"]:
        order, order_name = _removal_order(method, cfg["sweep"]["order"],
                                           cfg, model, handle)
        curve = sweep(model, order, fractions, handle.Xte, handle.yte,
                      method=method, order_desc=order_name)
        path = out / f"sweep-{method}-{order_name}{tag}.csv"
        curve.to_csv(path)
        curves.append((f"{method} ({order_name})", curve))
        print(f"{method}: {path} (accuracy at max fraction: "
              f"{curve.accuracies[-1]:.4f})")
    svg_path = out / f"sweep{tag}.svg"
    line_plot([(label, c.fractions, c.accuracies) for label, c in curves],
              title="Edge removal sweeps", xlabel="fraction removed",
              ylabel="test accuracy", path=svg_path)
    print(f"plot: {svg_path}")
    return 0


def cmd_ablate(cfg) -> int:
    out = _outdir(cfg)
    handle = _load_handle(cfg)
    model = _load_model(cfg)
    graph = build_graph(model)
    kind = cfg["ablate"]["kind"]
    if kind not in ("per-layer", "neural-modules", "calib-size"):
        raise UsageError(f"unknown ablation kind {kind!r}")
    ana = cfg["analysis"]
    fractions = _parse_fractions(cfg["sweep"]["fractions"])
    jobs = _jobs(cfg)
    X, _, _ = _calibration(cfg, handle)
    if kind == "per-layer":
        curves = ablate_per_layer(model, graph, X, handle.Xte, handle.yte,
                                  alpha=ana["alpha"], fractions=fractions,
                                  jobs=jobs)
    elif kind == "neural-modules":
        curves = ablate_neural_modules(model, graph, X, handle.Xte,
                                       handle.yte, alpha=ana["alpha"],
                                       fractions=fractions, jobs=jobs,
                                       ground_metric=ana["ground_metric"])
    else:
        sizes = cfg["ablate"]["calib_sizes"]
        provider = lambda n: select_calibration(handle, n,
                                                ana["calib_seed"])[0]
        curves = ablate_calib_size(model, graph, provider, handle.Xte,
                                   handle.yte, sizes=sizes,
                                   alpha=ana["alpha"], fractions=fractions,
                                   jobs=jobs)
    adir = out / f"ablate-{kind}"
    adir.mkdir(parents=True, exist_ok=True)
    manifest = {"kind": kind, "model_hash": model.model_hash(),
                "alpha": ana["alpha"], "curves": {}}
    for name in sorted(curves):
        path = adir / f"{name}.csv"
        curves[name].to_csv(path)
        manifest["curves"][name] = {
            "file": path.name,
            "auc": curves[name].auc(),
        }
        print(f"{name}: auc={curves[name].auc():.4f}")
    (adir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True))
    svg_path = adir / "ablation.svg"
    line_plot([(name, curves[name].fractions, curves[name].accuracies)
               for name in sorted(curves)],
              title=f"Ablation: {kind}", xlabel="fraction removed",
              ylabel="test accuracy", path=svg_path)
    print(f"report dir: {adir}")
    return 0


def cmd_report(cfg) -> int:
    paths = cfg.get("curve_paths") or []
    if not paths:
        raise UsageError("report needs --curves with at least one CSV")
    series = []
    print(f"{'curve':40s} {'acc@0':>8s} {'final':>8s} {'auc':>8s}")
    for p in paths:
        path = Path(p)
        if not path.exists():
            raise NeuralRicciError(f"curve file {path} does not exist")
        curve = SparsityCurve.from_csv(path)
        label = f"{curve.method} ({curve.order_desc})" if curve.method \
            else path.stem
        series.append((label, curve.fractions, curve.accuracies))
        print(f"{label:40s} {curve.accuracies[0]:8.4f} "
              f"{curve.accuracies[-1]:8.4f} {curve.auc():8.4f}")
    svg_path = Path(cfg["output"]) / "report.svg"
    Path(cfg["output"]).mkdir(parents=True, exist_ok=True)
    line_plot(series, title="Sparsity curves", xlabel="fraction removed",
              ylabel="test accuracy", path=svg_path)
    print(f"plot: {svg_path}")
    return 0


# ---------------------------------------------------------------------------
# parser & entry point
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory (default: runs)")
    p.add_argument("--dataset", choices=["synthetic", "mnist"])
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--jobs", type=int, help="worker threads "
                   "(default: NEURAL_RICCI_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neural-ricci",
        description="Curvature-based connection ranking for feedforward "
                    "networks, validated by pruning sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and persist it")
    _add_common(p)
    p.add_argument("--arch", choices=["mlp", "lenet"])
    p.add_argument("--activation", choices=["relu", "tanh"])
    p.add_argument("--scheme", choices=["ce", "wd"])
    p.add_argument("--wd", type=float, help="weight decay (scheme wd)")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--subset", type=int, help="training subset size")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--model-seed", dest="model_seed", type=int)
    p.add_argument("--model", help="model output path")

    p = sub.add_parser("analyze", help="rank connections by curvature")
    _add_common(p)
    p.add_argument("--model", help="model file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--calib-size", dest="calib_size", type=int)
    p.add_argument("--calib-seed", dest="calib_seed", type=int)
    p.add_argument("--ground-metric", dest="ground_metric",
                   choices=["static-override", "static-pure"])
    p.add_argument("--tag", help="suffix for output files")
    p.add_argument("--dump-edges", dest="dump_edges", action="store_true")

    p = sub.add_parser("sweep", help="edge-removal sweeps")
    _add_common(p)
    p.add_argument("--model", help="model file")
    p.add_argument("--methods",
                   help="comma list: curvature,magnitude,snip,synflow")
    p.add_argument("--order", choices=["positive-first", "negative-first"])
    p.add_argument("--table", help="curvature CSV (for method=curvature)")
    p.add_argument("--fractions", help="'default' or comma list")
    p.add_argument("--calib-size", dest="calib_size", type=int)
    p.add_argument("--calib-seed", dest="calib_seed", type=int)
    p.add_argument("--tag")

    p = sub.add_parser("ablate", help="ablation protocols")
    _add_common(p)
    p.add_argument("--model", help="model file")
    p.add_argument("--kind",
                   choices=["per-layer", "neural-modules", "calib-size"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--calib-size", dest="calib_size", type=int)
    p.add_argument("--calib-seed", dest="calib_seed", type=int)
    p.add_argument("--ground-metric", dest="ground_metric",
                   choices=["static-override", "static-pure"])
    p.add_argument("--fractions")

    p = sub.add_parser("report", help="summarize existing sweep CSVs")
    _add_common(p)
    p.add_argument("--curves", nargs="+", help="sparsity-curve CSV files")
    return parser


COMMANDS = {
    "train": cmd_train,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NeuralRicciError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
