import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsync import (
    DisconnectedGraphError,
    ValidationError,
    WeightedDigraph,
    build_laplacian,
    check_connectivity,
    spectral_split,
)
from netsync.graph import zero_tolerance

from helpers import random_rooted_digraph, ring3


class TestWeightedDigraph:
    def test_negative_weight_names_entry(self):
        with pytest.raises(ValidationError, match=r"l\[0,1\]"):
            WeightedDigraph([[0, -1.0], [1, 0]])

    def test_collects_every_problem(self):
        with pytest.raises(ValidationError) as info:
            WeightedDigraph([[1.0, -1.0, 0], [0, 0, -2.0], [1, 0, 0]])
        assert len(info.value.problems) == 3

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            WeightedDigraph(np.zeros((2, 3)))

    def test_rejects_single_node(self):
        with pytest.raises(ValidationError):
            WeightedDigraph([[0.0]])

    def test_rejects_nan(self):
        with pytest.raises(ValidationError, match="finite"):
            WeightedDigraph([[0, np.nan], [1, 0]])

    def test_weights_are_read_only(self):
        g = WeightedDigraph([[0, 1.0], [1, 0]])
        with pytest.raises(ValueError):
            g.weights[0, 1] = 5.0

    def test_from_edges_accumulates(self):
        g = WeightedDigraph.from_edges(2, [(0, 1, 1.0), (0, 1, 0.5), (1, 0, 2.0)])
        np.testing.assert_array_equal(g.weights, [[0, 1.5], [2.0, 0]])

    def test_from_edges_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            WeightedDigraph.from_edges(2, [(0, 2, 1.0)])


class TestLaplacian:
    def test_two_node_example(self):
        L = build_laplacian(WeightedDigraph([[0, 3.0], [1.0, 0]]))
        np.testing.assert_array_equal(L, [[3, -3], [-1, 1]])

    def test_row_sums_vanish(self, rng):
        for _ in range(20):
            L = build_laplacian(random_rooted_digraph(rng, rng.integers(2, 10)))
            assert np.abs(L.sum(axis=1)).max() < 1e-12

    def test_zero_tolerance_scales_with_norm(self):
        assert zero_tolerance(np.eye(2) * 1e3) > zero_tolerance(np.eye(2))


class TestConnectivity:
    def test_ring_is_connected(self):
        assert check_connectivity(ring3())

    def test_two_components(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1.0
        assert not check_connectivity(WeightedDigraph(w))

    def test_broadcast_star_has_root(self):
        # every leaf listens to node 0
        w = np.zeros((4, 4))
        w[1:, 0] = 1.0
        assert check_connectivity(WeightedDigraph(w))

    def test_listening_star_has_no_root(self):
        # node 0 listens to three leaves that hear nobody
        w = np.zeros((4, 4))
        w[0, 1:] = 1.0
        assert not check_connectivity(WeightedDigraph(w))

    def test_random_rooted_graphs(self, rng):
        for _ in range(30):
            assert check_connectivity(random_rooted_digraph(rng, rng.integers(2, 12)))


class TestSpectralSplit:
    def test_two_node_example(self):
        sp = spectral_split(np.array([[3.0, -3.0], [-1.0, 1.0]]))
        np.testing.assert_allclose(sp.v_l, [0.25, 0.75], atol=1e-12)
        np.testing.assert_allclose(np.linalg.eigvals(sp.Lambda), [4.0], atol=1e-12)

    def test_symmetric_pair(self):
        sp = spectral_split(build_laplacian(WeightedDigraph([[0, 1.0], [1, 0]])))
        np.testing.assert_allclose(sp.v_l, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(sp.Lambda, [[2.0]], atol=1e-12)

    def test_unit_directed_ring(self):
        w = np.roll(np.eye(3), 1, axis=1)
        sp = spectral_split(build_laplacian(WeightedDigraph(w)))
        eig = np.sort_complex(np.linalg.eigvals(sp.Lambda))
        np.testing.assert_allclose(eig, [1.5 - np.sqrt(3) / 2 * 1j, 1.5 + np.sqrt(3) / 2 * 1j], atol=1e-12)
        np.testing.assert_allclose(sp.v_l, np.full(3, 1 / 3), atol=1e-12)

    def test_weighted_ring_left_vector(self):
        sp = spectral_split(build_laplacian(ring3()))
        np.testing.assert_allclose(sp.v_l, [0.5, 0.25, 0.25], atol=1e-12)

    def test_leaf_nodes_get_zero_weight(self):
        w = np.zeros((3, 3))
        w[1, 0] = w[2, 0] = 1.0
        sp = spectral_split(build_laplacian(WeightedDigraph(w)))
        np.testing.assert_allclose(sp.v_l, [1.0, 0.0, 0.0], atol=1e-12)
        assert sp.v_l.min() >= 0

    def test_disconnected_raises(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1.0
        with pytest.raises(DisconnectedGraphError):
            spectral_split(build_laplacian(WeightedDigraph(w)))

    def test_U_inverse(self, rng):
        sp = spectral_split(build_laplacian(random_rooted_digraph(rng, 7)))
        np.testing.assert_allclose(sp.U_inv() @ sp.U(), np.eye(7), atol=1e-10)

    def test_reconstruction(self, rng):
        L = build_laplacian(random_rooted_digraph(rng, 9))
        assert spectral_split(L).residuals(L)["reconstruction"] < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 12))
    def test_identities_hold(self, seed, N):
        rng = np.random.default_rng(seed)
        L = build_laplacian(random_rooted_digraph(rng, N))
        sp = spectral_split(L)
        res = sp.residuals(L)
        assert max(abs(v) for v in res.values()) < 1e-9
        assert np.all(np.linalg.eigvals(sp.Lambda).real > 0)
        assert sp.lambda2_real > 0

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 10))
    def test_left_vector_is_permutation_equivariant(self, seed, N):
        rng = np.random.default_rng(seed)
        g = random_rooted_digraph(rng, N)
        perm = rng.permutation(N)
        v = spectral_split(build_laplacian(g)).v_l
        vp = spectral_split(build_laplacian(g.permuted(perm))).v_l
        np.testing.assert_allclose(vp, v[perm], atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 10))
    def test_lambda_spectrum_is_nonzero_spectrum_of_L(self, seed, N):
        rng = np.random.default_rng(seed)
        L = build_laplacian(random_rooted_digraph(rng, N))
        eig_L = np.linalg.eigvals(L)
        eig_L = np.delete(eig_L, np.argmin(np.abs(eig_L)))
        eig_Lam = np.linalg.eigvals(spectral_split(L).Lambda)
        for lam in eig_Lam:
            assert np.min(np.abs(eig_L - lam)) < 1e-6 * (1 + abs(lam))


class TestSmallExamples:
    def test_symmetric_pair_laplacian(self):
        np.testing.assert_array_equal(build_laplacian(WeightedDigraph([[0, 1.0], [1, 0]])), [[1, -1], [-1, 1]])

    def test_empty_graph_laplacian(self):
        np.testing.assert_array_equal(build_laplacian(WeightedDigraph(np.zeros((3, 3)))), np.zeros((3, 3)))

    def test_directed_chain(self):
        w = np.zeros((3, 3))
        w[1, 0] = w[2, 1] = 1.0
        assert check_connectivity(WeightedDigraph(w))

    def test_complete_graph(self):
        assert check_connectivity(WeightedDigraph(np.ones((5, 5)) - np.eye(5)))
