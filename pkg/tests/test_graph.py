import numpy as np
import pytest

from neural_ricci.errors import InvalidInputError
from neural_ricci.graph import (
    CostMatrixStack,
    build_graph,
    cost_matrices,
    dump_edges,
    layered_shortest_paths,
)
from neural_ricci.nn import LayerSpec, ModelSpec, build_lenet, build_mlp, unroll_conv

from oracles import dijkstra_layer_distances


def dense_model(mats, activation="relu"):
    layers = [LayerSpec(kind="dense", weight=W, bias=np.zeros(W.shape[0]))
              for W in mats]
    return ModelSpec(layers=layers, activation=activation,
                     input_dims=mats[0].shape[1],
                     output_dims=mats[-1].shape[0])


def random_stack(rng, sizes, density=1.0):
    """Random positive cost matrices with optional missing edges; every
    vertex keeps at least one in- and out-edge."""
    mats = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        C = rng.uniform(0.2, 5.0, size=(a, b))
        if density < 1.0:
            mask = rng.random((a, b)) < density
            mask[np.arange(a), rng.integers(0, b, size=a)] = True
            mask[rng.integers(0, a, size=b), np.arange(b)] = True
            C = np.where(mask, C, np.inf)
        mats.append(C)
    return CostMatrixStack(mats=mats)


class TestBuildGraph:
    def test_uniform_dense_weights(self):
        W = np.full((3, 2), 0.5)
        g = build_graph(dense_model([W]))
        assert g.n_edges == 6
        np.testing.assert_allclose(g.pairs[0].cost, 2.0)

    def test_zero_weight_clamped(self):
        W = np.array([[0.0, 1.0], [2.0, 4.0]])
        g = build_graph(dense_model([W]))
        assert g.pairs[0].cost[0, 0] == 1e12
        assert np.all(np.isfinite(g.pairs[0].cost))

    def test_edge_param_bijection_dense(self):
        m = build_mlp((4, 3, 2), seed=0)
        g = build_graph(m)
        pids = np.concatenate([p.pid.ravel() for p in g.pairs])
        assert sorted(pids) == list(range(m.n_weight_params))
        # pid points at the weight whose inverse magnitude is the cost
        flat = np.abs(m.weights_flat())
        for pair in g.pairs:
            src, dst = np.nonzero(np.isfinite(pair.cost))
            np.testing.assert_allclose(
                pair.cost[src, dst], 1.0 / flat[pair.pid[src, dst]])

    def test_vertex_count(self):
        m = build_mlp((5, 4, 3, 2), seed=1)
        g = build_graph(m)
        assert g.n_vertices == 5 + 4 + 3 + 2
        assert g.layer_sizes == [5, 4, 3, 2]

    def test_lenet_edge_count_matches_unroll(self):
        m = build_lenet(seed=0)
        g = build_graph(m)
        expected = 0
        for layer in m.layers:
            if layer.kind == "dense":
                expected += layer.weight.size
            elif layer.kind == "conv2d":
                expected += unroll_conv(layer).values.size
            else:
                _, oh, ow = layer.out_shape
                expected += layer.in_shape[0] * oh * ow * layer.pool ** 2
        assert g.n_edges == expected

    def test_conv_params_map_to_many_edges(self):
        m = build_lenet(seed=0)
        g = build_graph(m)
        conv_pair = g.pairs[0]
        pid = conv_pair.pid[np.isfinite(conv_pair.cost)]
        counts = np.bincount(pid)
        _, oh, ow = m.layers[0].out_shape
        assert np.all(counts == oh * ow)

    def test_structural_pooling(self):
        m = build_lenet(seed=0)
        g = build_graph(m)
        assert g.structural_layers() == [1, 3]
        pool_pair = g.pairs[1]
        assert np.all(pool_pair.pid[np.isfinite(pool_pair.cost)] == -1)
        # averaging coefficient 1/4 -> graph weight 4
        vals = pool_pair.cost[np.isfinite(pool_pair.cost)]
        np.testing.assert_allclose(vals, 4.0)

    def test_every_edge_has_one_parameter(self):
        m = build_mlp((4, 3, 2), seed=3)
        g = build_graph(m)
        for pair in g.pairs:
            finite = np.isfinite(pair.cost)
            assert np.all(pair.pid[finite] >= 0)
            assert np.all(pair.pid[~finite] == -1)


class TestCostMatrices:
    def test_dense_no_infs(self):
        g = build_graph(build_mlp((4, 3, 2), seed=0))
        stack = cost_matrices(g)
        for C in stack.mats:
            assert np.all(np.isfinite(C))

    def test_conv_row_sparsity(self):
        # interior output positions see kh*kw*c_in incoming edges
        rng = np.random.default_rng(0)
        layer = LayerSpec(kind="conv2d", weight=rng.normal(size=(2, 3, 3, 3)),
                          bias=np.zeros(2), stride=1, in_shape=(3, 7, 7))
        m = ModelSpec(layers=[layer], activation="relu", input_dims=147,
                      output_dims=layer.out_size)
        g = build_graph(m)
        C = g.pairs[0].cost
        in_degrees = np.isfinite(C).sum(axis=0)
        assert np.all(in_degrees == 3 * 3 * 3)

    def test_entries_equal_inverse_weight(self):
        W = np.array([[2.0, -0.25], [0.1, -8.0]])
        g = build_graph(dense_model([W]))
        np.testing.assert_array_equal(g.pairs[0].cost,
                                      1.0 / np.abs(W.T))


class TestLayeredShortestPaths:
    def test_two_unit_hops(self):
        stack = CostMatrixStack(mats=[np.ones((3, 4)), np.ones((4, 2))])
        D = layered_shortest_paths(stack, 0, 2)
        np.testing.assert_array_equal(D, np.full((3, 2), 2.0))

    def test_matches_dijkstra_random_sparse(self):
        rng = np.random.default_rng(42)
        for trial in range(25):
            sizes = rng.integers(2, 9, size=rng.integers(3, 6))
            stack = random_stack(rng, list(sizes), density=0.6)
            k = int(rng.integers(0, len(sizes) - 1))
            l = int(rng.integers(k + 1, len(sizes)))
            D = layered_shortest_paths(stack, k, l)
            ref = dijkstra_layer_distances(stack.mats, k, l)
            np.testing.assert_array_equal(D, ref)

    def test_override_cut_unique_route(self):
        stack = CostMatrixStack(mats=[np.array([[1.0, np.inf]]),
                                      np.array([[1.0], [np.inf]])])
        # only route 0 -> 0 -> 0; cutting the first edge disconnects
        D = layered_shortest_paths(stack, 0, 2, (((0, 0, 0)), np.inf))
        assert np.isinf(D[0, 0])

    def test_override_substitutes_cost(self):
        stack = CostMatrixStack(mats=[np.array([[1.0, 5.0]]),
                                      np.array([[10.0], [1.0]])])
        base = layered_shortest_paths(stack, 0, 2)
        assert base[0, 0] == 6.0
        D = layered_shortest_paths(stack, 0, 2, ((0, 0, 1), 100.0))
        assert D[0, 0] == 11.0
        # original stack untouched
        assert stack.mats[0][0, 1] == 5.0

    def test_monotone_in_single_edge_cost(self):
        rng = np.random.default_rng(7)
        stack = random_stack(rng, [4, 5, 3, 4], density=0.7)
        base = layered_shortest_paths(stack, 0, 3)
        for _ in range(20):
            p = int(rng.integers(0, 3))
            finite = np.argwhere(np.isfinite(stack.mats[p]))
            i, j = finite[rng.integers(0, len(finite))]
            raised = layered_shortest_paths(
                stack, 0, 3,
                ((p, int(i), int(j)),
                 float(stack.mats[p][i, j] * rng.uniform(1.0, 10.0))))
            assert np.all(raised >= base - 1e-12)

    def test_layer_locality(self):
        rng = np.random.default_rng(3)
        stack = random_stack(rng, [3, 4, 5, 4, 3])
        D = layered_shortest_paths(stack, 1, 3)
        # distort the pairs outside [1, 3): no effect
        mats = [m.copy() for m in stack.mats]
        mats[0] *= 100
        mats[3] *= 100
        D2 = layered_shortest_paths(CostMatrixStack(mats=mats), 1, 3)
        np.testing.assert_array_equal(D, D2)

    def test_adjacent_layers_equal_cost_matrix(self):
        rng = np.random.default_rng(1)
        stack = random_stack(rng, [3, 5, 2])
        np.testing.assert_array_equal(
            layered_shortest_paths(stack, 1, 2), stack.mats[1])

    def test_invalid_range(self):
        stack = CostMatrixStack(mats=[np.ones((2, 2))])
        with pytest.raises(InvalidInputError):
            layered_shortest_paths(stack, 1, 1)
        with pytest.raises(InvalidInputError):
            layered_shortest_paths(stack, 1, 0)

    def test_override_validation(self):
        stack = CostMatrixStack(mats=[np.array([[1.0, np.inf]]),
                                      np.ones((2, 1))])
        with pytest.raises(InvalidInputError):
            layered_shortest_paths(stack, 0, 2, ((0, 0, 1), 3.0))  # absent
        with pytest.raises(InvalidInputError):
            layered_shortest_paths(stack, 0, 2, ((0, 0, 0), 0.0))  # bad cost


def test_dump_edges(tmp_path):
    m = build_mlp((2, 3, 2), seed=0)
    g = build_graph(m)
    path = tmp_path / "edges.txt"
    dump_edges(g, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == g.n_edges
    layer, src, dst, weight, pid = lines[0].split()
    assert int(layer) == 0
    assert float(weight) > 0
