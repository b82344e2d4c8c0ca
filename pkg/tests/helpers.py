"""Shared builders for the test suite."""
import numpy as np

from netsync import HopfParams, NetworkSystem, WeightedDigraph, hopf_field


def random_rooted_digraph(rng, N, density=0.3, wmax=3.0):
    """Random weights plus a random spanning tree, so a root always exists."""
    w = np.where(rng.random((N, N)) < density, rng.uniform(0.1, wmax, (N, N)), 0.0)
    order = rng.permutation(N)
    for k in range(1, N):
        i = order[k]
        j = order[rng.integers(0, k)]
        w[i, j] = rng.uniform(0.1, wmax)
    np.fill_diagonal(w, 0.0)
    return WeightedDigraph(w)


def ring3():
    """Directed 3-ring with unequal weights; left null vector (1/2, 1/4, 1/4)."""
    return WeightedDigraph.from_edges(3, [(0, 2, 1.0), (1, 0, 2.0), (2, 1, 2.0)])


def hopf_network(mus, graph, sigma):
    return NetworkSystem([hopf_field(HopfParams(*m)) for m in mus], graph, sigma)


PERIODIC_MUS = [(1.5, 1.2), (0.5, 0.6), (0.5, 1.0)]
