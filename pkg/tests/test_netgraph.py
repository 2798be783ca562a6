import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distlearn.netgraph import (
    AgentNetwork,
    ConnectivityError,
    gen_complete,
    gen_erdos_renyi,
    gen_linear,
    gen_scale_free,
    gen_small_world,
    graph_matrices,
    is_connected,
    load_edgelist,
    save_edgelist,
)


def _check_valid(net: AgentNetwork) -> None:
    a = net.adjacency
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    assert is_connected(net)


class TestGenerators:
    def test_complete_graph_degrees(self):
        net = gen_complete(6)
        assert np.all(net.degrees == 5)
        assert net.n_edges == 15

    def test_linear_chain_clamps_tail(self):
        net = gen_linear(5, 2)
        assert sorted(net.edges()) == [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]

    def test_linear_k1_is_path(self):
        net = gen_linear(4, 1)
        assert net.degrees.tolist() == [1, 2, 2, 1]

    def test_small_world_without_rewiring_is_ring_lattice(self):
        net = gen_small_world(10, 2, 0.0, seed=3)
        assert np.all(net.degrees == 4)

    def test_scale_free_edge_count(self):
        net = gen_scale_free(20, 2, seed=1)
        # (m+1)-clique plus m edges per later node
        assert net.n_edges == 3 + 2 * 17
        _check_valid(net)

    def test_er_invalid_probability(self):
        with pytest.raises(ValueError):
            gen_erdos_renyi(5, 0.0, seed=0)

    def test_er_hopeless_probability_raises(self):
        with pytest.raises(ConnectivityError):
            gen_erdos_renyi(60, 1e-4, seed=0)

    @given(n=st.integers(2, 25), p=st.floats(0.3, 1.0), seed=st.integers(0, 10_000))
    def test_er_valid_and_deterministic(self, n, p, seed):
        net = gen_erdos_renyi(n, p, seed)
        _check_valid(net)
        assert np.array_equal(net.adjacency, gen_erdos_renyi(n, p, seed).adjacency)

    @given(n=st.integers(7, 25), alpha=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
    def test_small_world_valid(self, n, alpha, seed):
        _check_valid(gen_small_world(n, 2, alpha, seed))

    @given(n=st.integers(4, 30), m=st.integers(1, 3), seed=st.integers(0, 10_000))
    def test_scale_free_valid(self, n, m, seed):
        _check_valid(gen_scale_free(n, m, seed))


class TestLaplacian:
    @given(n=st.integers(2, 20), p=st.floats(0.2, 1.0), seed=st.integers(0, 10_000))
    def test_rows_sum_to_zero_and_psd(self, n, p, seed):
        lap = graph_matrices(gen_erdos_renyi(n, p, seed)).laplacian.astype(float)
        assert np.allclose(lap.sum(axis=1), 0.0)
        assert np.linalg.eigvalsh(lap).min() >= -1e-9

    @given(adj_bits=st.lists(st.booleans(), min_size=15, max_size=15))
    def test_fiedler_value_positive_iff_connected(self, adj_bits):
        n = 6
        adj = np.zeros((n, n), dtype=np.int64)
        adj[np.triu_indices(n, 1)] = adj_bits
        adj = adj + adj.T
        lap = np.diag(adj.sum(axis=1)) - adj
        fiedler = np.linalg.eigvalsh(lap.astype(float))[1]
        assert (fiedler > 1e-9) == is_connected(adj)

    def test_normalized_laplacian_of_complete_graph(self):
        norm = graph_matrices(gen_complete(4)).normalized_laplacian
        expected = np.eye(4) - (np.ones((4, 4)) - np.eye(4)) / 3
        assert np.allclose(norm, expected)


class TestEdgeList:
    def test_round_trip(self, tmp_path):
        net = gen_erdos_renyi(9, 0.4, seed=5)
        path = tmp_path / "g.txt"
        save_edgelist(net, path)
        assert path.read_text().splitlines()[0] == "L 9"
        assert np.array_equal(load_edgelist(path).adjacency, net.adjacency)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\n")
        with pytest.raises(ValueError):
            load_edgelist(path)
