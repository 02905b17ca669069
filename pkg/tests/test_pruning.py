import numpy as np
import pytest

from neural_ricci.errors import InvalidInputError
from neural_ricci.graph import build_graph
from neural_ricci.nn import LayerSpec, ModelSpec, accuracy, build_mlp
from neural_ricci.pruning import (
    PruneMask,
    SparsityCurve,
    apply_mask,
    curvature_orders,
    default_fraction_grid,
    run_ablation,
    score_magnitude,
    score_snip,
    score_synflow,
    sweep,
    synflow_layer_survivors,
    zero_biases,
)
from neural_ricci.ranking import rank_parameters


@pytest.fixture()
def toy():
    m = build_mlp((4, 6, 3), activation="relu", seed=3)
    rng = np.random.default_rng(1)
    X = rng.random((40, 4))
    y = rng.integers(0, 3, size=40)
    return m, X, y


class TestMask:
    def test_apply_mask_zeroes_exactly(self, toy):
        m, X, y = toy
        keep = np.ones(m.n_weight_params, dtype=bool)
        keep[::3] = False
        masked = apply_mask(m, PruneMask(keep=keep))
        flat = masked.weights_flat()
        assert np.all(flat[~keep] == 0.0)
        np.testing.assert_array_equal(flat[keep], m.weights_flat()[keep])

    def test_masked_accuracy_equals_zeroed_copy(self, toy):
        m, X, y = toy
        keep = np.random.default_rng(0).random(m.n_weight_params) > 0.4
        masked = apply_mask(m, PruneMask(keep=keep))
        w = m.weights_flat()
        w[~keep] = 0.0
        zeroed = m.with_weights_flat(w)
        assert accuracy(masked, X, y) == accuracy(zeroed, X, y)

    def test_wrong_length_rejected(self, toy):
        m, _, _ = toy
        with pytest.raises(InvalidInputError):
            apply_mask(m, PruneMask(keep=np.ones(3, dtype=bool)))


class TestScorers:
    def test_magnitude_values(self):
        m = ModelSpec(layers=[LayerSpec(kind="dense",
                                        weight=np.array([[-3.0, 0.5]]),
                                        bias=np.zeros(1))],
                      activation="relu", input_dims=2, output_dims=1)
        s = score_magnitude(m)
        np.testing.assert_array_equal(s.values, [3.0, 0.5])

    def test_magnitude_negation_invariant(self, toy):
        m, _, _ = toy
        flipped = m.with_weights_flat(-m.weights_flat())
        o1 = score_magnitude(m).removal_order()
        o2 = score_magnitude(flipped).removal_order()
        assert np.array_equal(o1, o2)

    def test_snip_zero_weight_zero_score(self, toy):
        m, X, y = toy
        w = m.weights_flat()
        w[5] = 0.0
        m2 = m.with_weights_flat(w)
        s = score_snip(m2, X, y)
        assert s.values[5] == 0.0

    def test_snip_closed_form_two_params(self):
        # 1-layer, 2-class logistic on one example: dL/dW = (softmax-onehot) x
        W = np.array([[0.7, 0.0], [-0.2, 0.0]])
        m = ModelSpec(layers=[LayerSpec(kind="dense", weight=W,
                                        bias=np.zeros(2))],
                      activation="relu", input_dims=2, output_dims=2)
        x = np.array([[0.5, -1.0]])
        y = np.array([0])
        z = W @ x[0]
        p = np.exp(z - z.max())
        p /= p.sum()
        grad = np.outer(p - np.array([1.0, 0.0]), x[0])
        s = score_snip(m, x, y)
        np.testing.assert_allclose(s.values, np.abs(W * grad).ravel(),
                                   atol=1e-12)

    def test_snip_empty_batch(self, toy):
        m, _, _ = toy
        with pytest.raises(InvalidInputError):
            score_snip(m, np.zeros((0, 4)), np.zeros(0, dtype=int))

    def test_synflow_two_layer_chain_product_rule(self):
        # scalar chain w1, w2: both scores |w1*w2| -> tie broken by pid
        m = ModelSpec(layers=[
            LayerSpec(kind="dense", weight=np.array([[2.0]]), bias=np.zeros(1)),
            LayerSpec(kind="dense", weight=np.array([[-3.0]]), bias=np.zeros(1))],
            activation="relu", input_dims=1, output_dims=1)
        s = score_synflow(m, iterations=1, final_keep=1.0)
        # values are removal ranks; ties resolved by pid
        assert np.array_equal(s.removal_order(), [0, 1])

    def test_synflow_single_parameter(self):
        m = ModelSpec(layers=[LayerSpec(kind="dense",
                                        weight=np.array([[0.3]]),
                                        bias=np.zeros(1))],
                      activation="relu", input_dims=1, output_dims=1)
        s = score_synflow(m, iterations=5, final_keep=0.5)
        assert len(s.values) == 1

    def test_synflow_deterministic(self, toy):
        m, _, _ = toy
        o1 = score_synflow(m, iterations=10).removal_order()
        o2 = score_synflow(m, iterations=10).removal_order()
        assert np.array_equal(o1, o2)

    def test_scores_shape_congruent(self, toy):
        m, X, y = toy
        for s in (score_magnitude(m), score_snip(m, X, y),
                  score_synflow(m, iterations=5)):
            assert s.values.shape == (m.n_weight_params,)
            assert np.all(np.isfinite(s.values))


class TestSweep:
    def test_fraction_zero_is_unpruned(self, toy):
        m, X, y = toy
        order = score_magnitude(m).removal_order()
        curve = sweep(m, order, [0.0, 0.5], X, y)
        assert curve.accuracies[0] == accuracy(m, X, y)

    def test_fraction_zero_prepended(self, toy):
        m, X, y = toy
        order = score_magnitude(m).removal_order()
        curve = sweep(m, order, [0.5], X, y)
        assert curve.fractions[0] == 0.0

    def test_fraction_one_chance_level_bias_zeroed(self, toy):
        m, X, y = toy
        m0 = zero_biases(m)
        order = score_magnitude(m0).removal_order()
        curve = sweep(m0, order, [1.0], X, y)
        # all-zero network predicts a constant class
        assert curve.accuracies[-1] <= 1.5 / 3 + 1e-9

    def test_cumulative_consistency(self, toy):
        m, X, y = toy
        P = m.n_weight_params
        order = score_magnitude(m).removal_order()
        # removals at f2 are a superset of removals at f1
        f1, f2 = 0.3, 0.6
        set1 = set(order[:int(f1 * P)])
        set2 = set(order[:int(f2 * P)])
        assert set1 <= set2

    def test_non_permutation_rejected(self, toy):
        m, X, y = toy
        order = np.zeros(m.n_weight_params, dtype=int)
        with pytest.raises(InvalidInputError):
            sweep(m, order, [0.5], X, y)

    def test_bad_fractions_rejected(self, toy):
        m, X, y = toy
        order = score_magnitude(m).removal_order()
        with pytest.raises(InvalidInputError):
            sweep(m, order, [], X, y)
        with pytest.raises(InvalidInputError):
            sweep(m, order, [0.5, 0.2], X, y)
        with pytest.raises(InvalidInputError):
            sweep(m, order, [0.5, 1.2], X, y)

    def test_default_grid_shape(self):
        grid = default_fraction_grid()
        assert grid[0] == 0.0 and grid[-1] == pytest.approx(1.0)
        assert np.all(np.diff(grid) > 0)

    def test_csv_roundtrip(self, toy, tmp_path):
        m, X, y = toy
        order = score_magnitude(m).removal_order()
        curve = sweep(m, order, [0.2, 0.8], X, y, method="magnitude",
                      order_desc="score-ascending")
        p = tmp_path / "c.csv"
        curve.to_csv(p)
        again = SparsityCurve.from_csv(p)
        np.testing.assert_array_equal(curve.fractions, again.fractions)
        np.testing.assert_array_equal(curve.accuracies, again.accuracies)
        assert again.method == "magnitude"


class TestCurvatureOrders:
    def test_positive_first_descends(self, toy):
        m, X, _ = toy
        g = build_graph(m)
        table, ranked = rank_parameters(m, g, X[:3], alpha=0.9)
        orders = curvature_orders(table, m)
        k = table.kappa[orders["positive-first"]]
        assert np.all(np.diff(k) <= 1e-15)
        k = table.kappa[orders["negative-first"]]
        assert np.all(np.diff(k) >= -1e-15)
        assert np.array_equal(orders["positive-first"],
                              rank_parameters(m, g, X[:3], alpha=0.9)[1].order)


class TestAblations:
    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            run_ablation("bogus")

    def test_per_layer_single_layer_model_equals_full_sweep(self):
        m = build_mlp((4, 3), activation="relu", seed=2)
        g = build_graph(m)
        rng = np.random.default_rng(0)
        X = rng.random((20, 4))
        y = rng.integers(0, 3, size=20)
        curves = run_ablation("per-layer", model=m, graph=g, calib=X[:2],
                              X_test=X, y_test=y, fractions=[0.3, 0.6])
        assert set(curves) == {"layer0-curvature", "layer0-magnitude"}
        table, ranked = rank_parameters(m, g, X[:2], alpha=0.9)
        full = sweep(m, ranked.order, [0.3, 0.6], X, y)
        np.testing.assert_allclose(curves["layer0-curvature"].accuracies,
                                   full.accuracies, atol=1e-12)

    def test_neural_modules_names(self):
        m = build_mlp((3, 4, 2), activation="relu", seed=1)
        g = build_graph(m)
        rng = np.random.default_rng(0)
        X = rng.random((10, 3))
        y = rng.integers(0, 2, size=10)
        curves = run_ablation("neural-modules", model=m, graph=g,
                              calib=X[:2], X_test=X, y_test=y,
                              fractions=[0.5])
        assert set(curves) == {"baseline", "neighbor", "edgecost", "full"}
        for c in curves.values():
            assert c.fractions[0] == 0.0

    def test_calib_size_curves(self, digits):
        m = build_mlp((784, 6, 10), activation="relu", seed=0)
        g = build_graph(m)
        from neural_ricci.data import select_calibration

        provider = lambda n: select_calibration(digits, n, seed=7)[0]
        curves = run_ablation("calib-size", model=m, graph=g,
                              calib_provider=provider,
                              X_test=digits.Xte[:100], y_test=digits.yte[:100],
                              sizes=(1, 5), fractions=[0.5])
        assert set(curves) == {"calib1", "calib5"}


def test_synflow_layer_survivors_counts(toy):
    m = build_mlp((6, 5, 4, 3), activation="relu", seed=4)
    counts = synflow_layer_survivors(m, iterations=20, final_keep=0.2)
    assert counts.sum() == int(np.ceil(0.2 * m.n_weight_params))
    assert len(counts) == 3
