import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from neural_ricci.data import load_dataset, select_calibration
from neural_ricci.graph import build_graph
from neural_ricci.nn import TrainConfig, accuracy, build_mlp, train_sgd
from neural_ricci.ranking import rank_parameters

from timing import timed


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="include slow desk-scale runs (LeNet training)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers",
                            "slow: desk-scale runs excluded by default")


# ---------------------------------------------------------------------------
# session-scoped desk-scale chain shared by harness and acceptance tests
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def digits_env(tmp_path_factory):
    """Synthetic digit dataset written and read through the IDX container;
    returns (handle, directory)."""
    root = tmp_path_factory.mktemp("digits")
    with timed("dataset"):
        handle = load_dataset("synthetic", root, train_size=14000,
                              test_size=2000, seed=9)
    return handle, root


@pytest.fixture(scope="session")
def digits(digits_env):
    return digits_env[0]


@pytest.fixture(scope="session")
def trained_mlp(digits):
    """The desk-scale MLP (784-128-64-10, ReLU, CE) trained to spec."""
    model = build_mlp((digits.input_dims, 128, 64, 10), activation="relu",
                      seed=1)
    with timed("train"):
        res = train_sgd(model, digits.Xtr[:8000], digits.ytr[:8000],
                        TrainConfig(lr=0.1, epochs=20, batch_size=64,
                                    weight_decay=0.0, seed=1))
    return res.model


@pytest.fixture(scope="session")
def trained_graph(trained_mlp):
    return build_graph(trained_mlp)


@pytest.fixture(scope="session")
def mlp_test_accuracy(trained_mlp, digits):
    return accuracy(trained_mlp, digits.Xte, digits.yte)


@pytest.fixture(scope="session")
def calib100(digits):
    X, ids = select_calibration(digits, 100, seed=7)
    return X, digits.yval[ids]


@pytest.fixture(scope="session")
def calib10(digits):
    X, ids = select_calibration(digits, 10, seed=7)
    return X, digits.yval[ids]


@pytest.fixture(scope="session")
def analysis100(trained_mlp, trained_graph, calib100):
    with timed("analyze100"):
        table, ranked = rank_parameters(trained_mlp, trained_graph,
                                        calib100[0], alpha=0.9, jobs=4)
    return table, ranked


@pytest.fixture(scope="session")
def analysis10(trained_mlp, trained_graph, calib10):
    with timed("analyze10"):
        table, ranked = rank_parameters(trained_mlp, trained_graph,
                                        calib10[0], alpha=0.9, jobs=4)
    return table, ranked


@pytest.fixture(scope="session")
def baseline_static(trained_mlp, trained_graph):
    with timed("baseline-static"):
        table, ranked = rank_parameters(trained_mlp, trained_graph,
                                        np.zeros((0, 784)), alpha=0.9,
                                        mass_mode="static",
                                        cost_mode="static", jobs=4)
    return table, ranked


# small shared toys ----------------------------------------------------------

@pytest.fixture()
def tiny_tanh():
    return build_mlp((3, 5, 4, 2), activation="tanh", seed=3)


@pytest.fixture()
def tiny_relu():
    return build_mlp((3, 5, 4, 2), activation="relu", seed=5)
