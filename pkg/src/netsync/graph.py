"""Weighted digraphs, their Laplacians and the real spectral split.

Conventions
-----------
``weights[i, j]`` is the weight with which node ``i`` listens to node ``j``,
so a directed edge ``j -> i`` exists iff ``weights[i, j] > 0``.  The Laplacian
has ``L[i, i] = sum_j weights[i, j]`` and ``L[i, j] = -weights[i, j]``.

The split ``L = U blockdiag(0, Lambda) U^{-1}`` uses ``U = [1_N, V]`` and
``U^{-1} = [v_l^T; V_dag]``.  ``V`` is an orthonormal basis of the invariant
subspace belonging to the nonzero eigenvalues, taken from an ordered real
Schur form.  Any basis satisfying the identities is valid; tests check the
identities, never particular matrices.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, DisconnectedGraphError, ValidationError

__all__ = [
    "WeightedDigraph",
    "SpectralSplit",
    "build_laplacian",
    "check_connectivity",
    "spectral_split",
    "zero_tolerance",
]


@dataclass(frozen=True)
class WeightedDigraph:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        problems = []
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError(f"weights must be a square matrix, got shape {w.shape}")
        if w.shape[0] < 2:
            problems.append(f"graph needs at least 2 nodes, got {w.shape[0]}")
        if not np.all(np.isfinite(w)):
            problems.append("weights must be finite")
        for i, j in zip(*np.nonzero(w < 0)):
            problems.append(f"negative weight l[{i},{j}] = {w[i, j]:g}")
        for i in np.nonzero(np.diag(w) != 0)[0]:
            problems.append(f"nonzero diagonal weight l[{i},{i}] = {w[i, i]:g}")
        if problems:
            raise ValidationError(problems)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedDigraph":
        """Build from ``(i, j, weight)`` triplets, 0-indexed; repeats accumulate."""
        w = np.zeros((n, n))
        problems = []
        for k, (i, j, weight) in enumerate(edges):
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                problems.append(f"edge {k}: index ({i},{j}) out of range for N={n}")
                continue
            w[i, j] += float(weight)
        if problems:
            raise ValidationError(problems)
        return cls(w)

    def permuted(self, perm) -> "WeightedDigraph":
        """Relabel nodes so that new node ``k`` is old node ``perm[k]``."""
        perm = np.asarray(perm)
        return WeightedDigraph(self.weights[np.ix_(perm, perm)])


def build_laplacian(g: WeightedDigraph) -> np.ndarray:
    w = g.weights
    L = -w.copy()
    L[np.diag_indices_from(L)] = w.sum(axis=1)
    return L


def zero_tolerance(L: np.ndarray) -> float:
    """Threshold below which an eigenvalue of ``L`` counts as zero."""
    return 1e-9 * (1.0 + np.linalg.norm(L, np.inf))


def _has_rooted_spanning_tree(w: np.ndarray) -> bool:
    n = w.shape[0]
    # out-neighbours of j: nodes i that listen to j
    out = [np.nonzero(w[:, j] > 0)[0] for j in range(n)]
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        queue = deque([root])
        while queue:
            j = queue.popleft()
            for i in out[j]:
                if not seen[i]:
                    seen[i] = True
                    queue.append(i)
        if seen.all():
            return True
    return False


def _zero_multiplicity(L: np.ndarray) -> int:
    eig = np.linalg.eigvals(L)
    return int(np.sum(np.abs(eig) < zero_tolerance(L)))


def check_connectivity(g: WeightedDigraph) -> bool:
    """True iff the digraph contains a rooted spanning tree.

    The combinatorial answer is cross-checked against the algebraic one
    (simple zero eigenvalue of the Laplacian).
    """
    combinatorial = _has_rooted_spanning_tree(g.weights)
    algebraic = _zero_multiplicity(build_laplacian(g)) == 1
    if combinatorial != algebraic:
        raise ConsistencyError(
            f"rooted-spanning-tree test says {combinatorial} but "
            f"zero-eigenvalue simplicity says {algebraic}"
        )
    return combinatorial


@dataclass(frozen=True)
class SpectralSplit:
    """Real decomposition ``L = [1 V] blockdiag(0, Lambda) [v_l^T; V_dag]``."""

    v_l: np.ndarray
    V: np.ndarray
    V_dag: np.ndarray
    Lambda: np.ndarray
    lambda2_real: float = field(init=False)

    def __post_init__(self):
        for name in ("v_l", "V", "V_dag", "Lambda"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(
            self, "lambda2_real", float(np.min(np.linalg.eigvals(self.Lambda).real))
        )

    @property
    def N(self) -> int:
        return self.v_l.shape[0]

    def U(self) -> np.ndarray:
        return np.column_stack([np.ones(self.N), self.V])

    def U_inv(self) -> np.ndarray:
        return np.vstack([self.v_l, self.V_dag])

    def residuals(self, L: np.ndarray | None = None) -> dict:
        """Max-abs residual of each identity the split must satisfy."""
        N = self.N
        ones = np.ones(N)
        res = {
            "vl_sum": abs(self.v_l @ ones - 1.0),
            "vl_min": float(min(self.v_l.min(), 0.0)),
            "vlT_V": float(np.abs(self.v_l @ self.V).max()),
            "Vdag_V": float(np.abs(self.V_dag @ self.V - np.eye(N - 1)).max()),
            "V_Vdag": float(
                np.abs(self.V @ self.V_dag - (np.eye(N) - np.outer(ones, self.v_l))).max()
            ),
            "Vdag_ones": float(np.abs(self.V_dag @ ones).max()),
        }
        if L is not None:
            core = np.zeros((N, N))
            core[1:, 1:] = self.Lambda
            res["reconstruction"] = float(np.abs(self.U() @ core @ self.U_inv() - L).max())
        return res


def spectral_split(L: np.ndarray) -> SpectralSplit:
    """Split ``L`` into its agreement direction and the complementary
    invariant subspace.

    Raises
    ------
    DisconnectedGraphError
        If the zero eigenvalue is not simple.
    """
    L = np.asarray(L, dtype=float)
    N = L.shape[0]
    tol = zero_tolerance(L)
    nzero = _zero_multiplicity(L)
    if nzero != 1:
        raise DisconnectedGraphError(
            f"zero eigenvalue has multiplicity {nzero} (tolerance {tol:.3g}); "
            "graph has no rooted spanning tree"
        )
    # nonzero eigenvalues first: their Schur vectors span an invariant subspace
    T, Q, sdim = scipy.linalg.schur(
        L, output="real", sort=lambda re, im: abs(complex(re, im)) >= tol
    )
    if sdim != N - 1:
        raise DisconnectedGraphError(f"Schur reordering selected {sdim} of {N - 1} nonzero eigenvalues")
    V = Q[:, : N - 1]
    q = Q[:, N - 1]
    # q is orthogonal to range(V), hence a left null vector of L
    v_l = q / q.sum()
    v_l = np.where((v_l < 0) & (v_l > -1e-12), 0.0, v_l)
    v_l = v_l / v_l.sum()
    V_dag = V.T - np.outer(V.T @ np.ones(N), v_l)
    Lambda = T[: N - 1, : N - 1]
    return SpectralSplit(v_l=v_l, V=V, V_dag=V_dag, Lambda=Lambda)
