"""Closed-loop network ``x' = F(x) - sigma (L kron I_n) x`` and its
two-time-scale coordinates.

Layouts
-------
Stacked state: node-major, node ``i`` occupies ``x[i*n:(i+1)*n]``.
Bar state: ``x_m`` (length ``n``) followed by ``e_v`` (length ``n(N-1)``),
whose blocks follow the column order of ``V``.

Kronecker products are never formed for field evaluations: with
``X = x.reshape(N, n)``, ``(M kron I_n) x`` is ``(M @ X).ravel()``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import (
    SpectralSplit,
    WeightedDigraph,
    build_laplacian,
    check_connectivity,
    spectral_split,
)
from .models import VectorField, stacked_evaluator

__all__ = [
    "NetworkSystem",
    "BarState",
    "full_field",
    "to_bar",
    "from_bar",
    "reduced_field",
    "reduced_jacobian",
    "coupling_residuals",
    "singular_form_rhs",
    "bar_field",
    "full_jacobian",
]

_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class NetworkSystem:
    nodes: tuple
    graph: WeightedDigraph
    sigma: float
    split: SpectralSplit = field(default=None, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        problems = []
        if len(nodes) != self.graph.N:
            problems.append(f"{len(nodes)} node models for a graph with N={self.graph.N}")
        dims = {f.dim for f in nodes}
        if len(dims) > 1:
            problems.append(f"node state dimensions differ: {sorted(dims)}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            problems.append(f"sigma must be positive, got {self.sigma}")
        if problems:
            raise ValidationError(problems)
        L = build_laplacian(self.graph)
        object.__setattr__(self, "laplacian", L)
        if self.split is None:
            if not check_connectivity(self.graph):
                raise ValidationError("graph has no rooted spanning tree")
            object.__setattr__(self, "split", spectral_split(L))
        bad = {k: v for k, v in self.split.residuals(L).items() if abs(v) > _IDENTITY_TOL}
        if bad:
            raise ValidationError([f"split identity {k} off by {v:.3g}" for k, v in bad.items()])
        object.__setattr__(self, "_F", stacked_evaluator(nodes))
        object.__setattr__(self, "_coupling_jac", -self.sigma * np.kron(L, np.eye(self.n)))

    @property
    def N(self) -> int:
        return self.graph.N

    @property
    def n(self) -> int:
        return self.nodes[0].dim

    @property
    def dim(self) -> int:
        return self.N * self.n

    @property
    def epsilon(self) -> float:
        return 1.0 / self.sigma

    def with_sigma(self, sigma: float) -> "NetworkSystem":
        """Same nodes and graph, new coupling; the cached split is reused."""
        return NetworkSystem(self.nodes, self.graph, sigma, split=self.split)

    def permuted(self, perm) -> "NetworkSystem":
        perm = list(perm)
        return NetworkSystem([self.nodes[p] for p in perm], self.graph.permuted(perm), self.sigma)

    def stack_F(self, x) -> np.ndarray:
        """Uncoupled drift ``F(x)``."""
        X = np.asarray(x, dtype=float).reshape(self.N, self.n)
        return self._F(X).ravel()

    def field(self) -> VectorField:
        """The closed-loop field as a VectorField, with analytic Jacobian."""
        shape, F, L, sigma = (self.N, self.n), self._F, self.laplacian, self.sigma

        def f(x):
            X = x.reshape(shape)
            return (F(X) - sigma * (L @ X)).ravel()

        return VectorField(self.dim, f, lambda x: full_jacobian(self, x), name="network")

    def reduced(self) -> VectorField:
        """Reduced-order field ``x_m -> sum_i v_l[i] f_i(x_m)``."""
        return VectorField(
            self.n, lambda xm: reduced_field(self, xm), lambda xm: reduced_jacobian(self, xm), name="reduced"
        )


@dataclass(frozen=True)
class BarState:
    x_m: np.ndarray
    e_v: np.ndarray
    epsilon: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x_m, self.e_v])

    @classmethod
    def from_vector(cls, sys: NetworkSystem, b) -> "BarState":
        b = np.asarray(b, dtype=float)
        _check_len(b, sys.dim, "bar state")
        return cls(b[: sys.n].copy(), b[sys.n :].copy(), sys.epsilon)


def _check_len(x, expected, what):
    if x.shape != (expected,):
        raise ValidationError(f"{what} has shape {x.shape}, expected ({expected},)")


def full_field(sys: NetworkSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _check_len(x, sys.dim, "state")
    X = x.reshape(sys.N, sys.n)
    return (sys._F(X) - sys.sigma * (sys.laplacian @ X)).ravel()


def full_jacobian(sys: NetworkSystem, x) -> np.ndarray:
    """Dense Jacobian ``blockdiag(df_i/dx_i) - sigma (L kron I_n)``."""
    x = np.asarray(x, dtype=float)
    _check_len(x, sys.dim, "state")
    n = sys.n
    J = sys._coupling_jac.copy()
    for i, f in enumerate(sys.nodes):
        J[i * n : (i + 1) * n, i * n : (i + 1) * n] += f.jacobian(x[i * n : (i + 1) * n])
    return J


def to_bar(sys: NetworkSystem, x) -> BarState:
    x = np.asarray(x, dtype=float)
    _check_len(x, sys.dim, "state")
    X = x.reshape(sys.N, sys.n)
    return BarState(sys.split.v_l @ X, (sys.split.V_dag @ X).ravel(), sys.epsilon)


def from_bar(sys: NetworkSystem, b: BarState) -> np.ndarray:
    x_m = np.asarray(b.x_m, dtype=float)
    e_v = np.asarray(b.e_v, dtype=float)
    _check_len(x_m, sys.n, "x_m")
    _check_len(e_v, sys.n * (sys.N - 1), "e_v")
    E = e_v.reshape(sys.N - 1, sys.n)
    return (x_m[None, :] + sys.split.V @ E).ravel()


def reduced_field(sys: NetworkSystem, x_m) -> np.ndarray:
    x_m = np.asarray(x_m, dtype=float)
    _check_len(x_m, sys.n, "x_m")
    X = np.broadcast_to(x_m, (sys.N, sys.n))
    return sys.split.v_l @ sys._F(X)


def reduced_jacobian(sys: NetworkSystem, x_m) -> np.ndarray:
    x_m = np.asarray(x_m, dtype=float)
    return sum(w * f.jacobian(x_m) for w, f in zip(sys.split.v_l, sys.nodes))


def coupling_residuals(sys: NetworkSystem, b: BarState):
    """Interconnection terms ``(G_m, G_e)`` of the bar-coordinate dynamics."""
    x = from_bar(sys, b)
    Fx = sys._F(x.reshape(sys.N, sys.n))
    Fsync = sys._F(np.broadcast_to(np.asarray(b.x_m, dtype=float), (sys.N, sys.n)))
    G_m = sys.split.v_l @ (Fx - Fsync)
    G_e = (sys.split.V_dag @ Fx).ravel()
    return G_m, G_e


def bar_field(sys: NetworkSystem, b: BarState):
    """``(x_m', e_v')`` written with ``sigma`` explicitly."""
    G_m, G_e = coupling_residuals(sys, b)
    E = np.asarray(b.e_v, dtype=float).reshape(sys.N - 1, sys.n)
    dx_m = reduced_field(sys, b.x_m) + G_m
    de_v = -sys.sigma * (sys.split.Lambda @ E).ravel() + G_e
    return dx_m, de_v


def singular_form_rhs(sys: NetworkSystem, b: BarState):
    """``(x_m', e_v')`` from the singularly perturbed form with ``eps = 1/sigma``.

    The fast equation reads ``eps e_v' = -(Lambda kron I) e_v + eps G_e``.
    """
    eps = b.epsilon
    if not eps > 0:
        raise ValidationError(f"epsilon must be positive, got {eps}")
    G_m, G_e = coupling_residuals(sys, b)
    E = np.asarray(b.e_v, dtype=float).reshape(sys.N - 1, sys.n)
    dx_m = reduced_field(sys, b.x_m) + G_m
    de_v = (-(sys.split.Lambda @ E).ravel() + eps * G_e) / eps
    return dx_m, de_v
