import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from neural_ricci.cli import main
from neural_ricci.model_io import load_model
from neural_ricci.pruning import SparsityCurve
from neural_ricci.ranking import CurvatureTable
from neural_ricci.svgplot import line_plot


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A small end-to-end CLI run shared by the tests in this module."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "config.json"
    cfg.write_text(json.dumps({
        "dataset": {"name": "synthetic", "dir": str(root / "data"),
                    "train_size": 900, "test_size": 200, "val_size": 150,
                    "seed": 5},
        "train": {"epochs": 6, "subset": 750, "lr": 0.2, "seed": 1},
        "analysis": {"calib_size": 3, "calib_seed": 7},
        "output": str(root / "runs"),
        "jobs": 2,
    }))
    assert main(["train", "--config", str(cfg)]) == 0
    assert main(["analyze", "--config", str(cfg)]) == 0
    assert main(["sweep", "--config", str(cfg), "--methods",
                 "curvature,magnitude,snip,synflow",
                 "--fractions", "0.1,0.3,0.6,0.9"]) == 0
    return root, cfg


def out(workdir) -> Path:
    return workdir[0] / "runs"


class TestTrain:
    def test_artifacts(self, workdir):
        runs = out(workdir)
        assert (runs / "model.nrm").exists()
        log = (runs / "training-log.csv").read_text()
        assert log.startswith("epoch,train_loss")
        assert "final_test_accuracy," in log.splitlines()[-1]

    def test_model_loads(self, workdir):
        model = load_model(out(workdir) / "model.nrm")
        assert model.layer_sizes == [784, 128, 64, 10]

    def test_rerun_identical_checksum(self, workdir, tmp_path):
        import hashlib

        root, cfg = workdir
        other = tmp_path / "model2.nrm"
        assert main(["train", "--config", str(cfg), "--model",
                     str(other)]) == 0
        h1 = hashlib.sha256((out(workdir) / "model.nrm").read_bytes())
        h2 = hashlib.sha256(other.read_bytes())
        assert h1.hexdigest() == h2.hexdigest()

    def test_wd_scheme_shrinks_weights(self, workdir, tmp_path):
        root, cfg = workdir
        wd_model = tmp_path / "wd.nrm"
        assert main(["train", "--config", str(cfg), "--scheme", "wd",
                     "--wd", "0.01", "--model", str(wd_model)]) == 0
        ce = load_model(out(workdir) / "model.nrm")
        wd = load_model(wd_model)
        assert (np.abs(wd.weights_flat()).mean()
                < np.abs(ce.weights_flat()).mean())


class TestAnalyze:
    def test_table_covers_all_parameters(self, workdir):
        table = CurvatureTable.from_csv(out(workdir) / "curvature.csv")
        model = load_model(out(workdir) / "model.nrm")
        assert table.n_params == model.n_weight_params

    def test_metadata(self, workdir):
        meta = json.loads((out(workdir) / "curvature-meta.json").read_text())
        assert meta["alpha"] == 0.9
        assert meta["calibration_size"] == 3
        model = load_model(out(workdir) / "model.nrm")
        assert meta["model_hash"] == model.model_hash()

    def test_rerun_byte_identical(self, workdir):
        root, cfg = workdir
        before = (out(workdir) / "curvature.csv").read_bytes()
        assert main(["analyze", "--config", str(cfg)]) == 0
        assert (out(workdir) / "curvature.csv").read_bytes() == before

    def test_alpha_recorded_and_matches_direct_call(self, workdir):
        from neural_ricci.graph import build_graph
        from neural_ricci.ranking import rank_parameters
        from neural_ricci.data import load_dataset, select_calibration

        root, cfg = workdir
        assert main(["analyze", "--config", str(cfg), "--alpha", "0.8",
                     "--tag", "a08"]) == 0
        meta = json.loads((out(workdir) /
                           "curvature-a08-meta.json").read_text())
        assert meta["alpha"] == 0.8
        table = CurvatureTable.from_csv(out(workdir) / "curvature-a08.csv")
        model = load_model(out(workdir) / "model.nrm")
        handle = load_dataset("synthetic", root / "data", train_size=900,
                              test_size=200, val_size=150, seed=5)
        X, _ = select_calibration(handle, 3, seed=7)
        direct, _ = rank_parameters(model, build_graph(model), X, alpha=0.8)
        np.testing.assert_allclose(table.kappa, direct.kappa, atol=1e-12)

    def test_sentinel_fraction_positive_for_relu(self, workdir, capsys):
        root, cfg = workdir
        assert main(["analyze", "--config", str(cfg)]) == 0
        text = capsys.readouterr().out
        frac = float([l for l in text.splitlines()
                      if "sentinel fraction" in l][0].split(":")[1])
        assert frac > 0.0


class TestSweep:
    def test_four_curves_and_svg(self, workdir):
        runs = out(workdir)
        for method in ("curvature-positive-first", "magnitude-score-ascending",
                       "snip-score-ascending", "synflow-score-ascending"):
            assert (runs / f"sweep-{method}.csv").exists()
        svg = runs / "sweep.svg"
        assert svg.exists()
        tree = ET.parse(svg)  # valid XML
        polylines = [e for e in tree.iter()
                     if e.tag.endswith("polyline")]
        assert len(polylines) == 4

    def test_svg_points_match_csv(self, workdir):
        runs = out(workdir)
        curve = SparsityCurve.from_csv(
            runs / "sweep-curvature-positive-first.csv")
        tree = ET.parse(runs / "sweep.svg")
        polys = [e for e in tree.iter() if e.tag.endswith("polyline")]
        pts = polys[0].get("points").split()
        assert len(pts) == len(curve.fractions)

    def test_rerun_byte_identical(self, workdir):
        root, cfg = workdir
        path = out(workdir) / "sweep-curvature-positive-first.csv"
        before = path.read_bytes()
        assert main(["sweep", "--config", str(cfg), "--methods", "curvature",
                     "--fractions", "0.1,0.3,0.6,0.9"]) == 0
        assert path.read_bytes() == before

    def test_negative_first_order(self, workdir):
        root, cfg = workdir
        assert main(["sweep", "--config", str(cfg), "--methods", "curvature",
                     "--order", "negative-first",
                     "--fractions", "0.1,0.3"]) == 0
        assert (out(workdir) /
                "sweep-curvature-negative-first.csv").exists()

    def test_empty_fractions_usage_error(self, workdir):
        root, cfg = workdir
        assert main(["sweep", "--config", str(cfg), "--fractions", ""]) == 2

    def test_missing_table_is_runtime_error(self, workdir, tmp_path):
        root, cfg = workdir
        assert main(["sweep", "--config", str(cfg), "--methods", "curvature",
                     "--table", str(tmp_path / "nope.csv"),
                     "--fractions", "0.5"]) == 1


class TestReport:
    def test_report_svg(self, workdir):
        root, cfg = workdir
        runs = out(workdir)
        rc = main(["report", "--config", str(cfg), "--curves",
                   str(runs / "sweep-curvature-positive-first.csv"),
                   str(runs / "sweep-magnitude-score-ascending.csv")])
        assert rc == 0
        assert (runs / "report.svg").exists()
        ET.parse(runs / "report.svg")

    def test_report_needs_curves(self, workdir):
        root, cfg = workdir
        assert main(["report", "--config", str(cfg)]) == 2


class TestUsageErrors:
    def test_bad_alpha(self, workdir):
        root, cfg = workdir
        assert main(["analyze", "--config", str(cfg), "--alpha", "1.0"]) == 2

    def test_bad_config_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["train", "--config", str(bad)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 2

    def test_missing_model_runtime_error(self, tmp_path):
        assert main(["analyze", "--out", str(tmp_path), "--data-dir",
                     str(tmp_path / "d")]) == 1


def test_line_plot_valid_xml(tmp_path):
    p = tmp_path / "plot.svg"
    line_plot([("a & b", [0, 0.5, 1.0], [1.0, 0.8, 0.1]),
               ("c<d>", [0, 1.0], [0.9, 0.2])],
              title="curves <&>", xlabel="x", ylabel="y", path=p)
    tree = ET.parse(p)
    assert tree.getroot().tag.endswith("svg")
