"""Node vector fields.

All states are real.  A complex oscillator state ``z = x + i y`` is stored as
the length-2 block ``(x, y)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "VectorField",
    "HopfParams",
    "ReducedHopfParams",
    "hopf_field",
    "polynomial_field",
    "linear_field",
    "reduced_hopf_params",
    "semipassivity_margin",
    "finite_difference_jacobian",
    "stacked_evaluator",
    "check_jacobian",
]


def finite_difference_jacobian(f, x):
    """Central differences with step ``1e-6 * (1 + |x_k|)`` per coordinate."""
    x = np.asarray(x, dtype=float)
    J = np.empty((len(f(x)), x.size))
    for k in range(x.size):
        h = 1e-6 * (1.0 + abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        J[:, k] = (f(xp) - f(xm)) / (2 * h)
    return J


class VectorField:
    """Autonomous vector field ``x' = f(x)`` on ``R^dim``.

    Parameters
    ----------
    dim
        State dimension.
    func
        ``x -> f(x)``, returning a length-``dim`` array.
    jac
        Optional analytic Jacobian ``x -> df/dx``.  Central finite differences
        are used when omitted.
    name
        Label used in reports and config echoes.
    """

    def __init__(self, dim: int, func: Callable, jac: Callable | None = None, name: str = "field"):
        self.dim = int(dim)
        self._func = func
        self._jac = jac
        self.name = name

    def __call__(self, x):
        return self._func(np.asarray(x, dtype=float))

    eval = __call__

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self._jac is not None:
            return self._jac(x)
        return finite_difference_jacobian(self._func, x)

    @property
    def has_analytic_jacobian(self) -> bool:
        return self._jac is not None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, name={self.name!r})"


@dataclass(frozen=True)
class HopfParams:
    mu_R: float
    mu_I: float

    def __post_init__(self):
        if not (np.isfinite(self.mu_R) and np.isfinite(self.mu_I)):
            raise ValidationError(f"Hopf parameters must be finite, got ({self.mu_R}, {self.mu_I})")

    @property
    def mu(self) -> complex:
        return complex(self.mu_R, self.mu_I)


@dataclass(frozen=True)
class ReducedHopfParams:
    mu_mR: float
    mu_mI: float

    @property
    def mu(self) -> complex:
        return complex(self.mu_mR, self.mu_mI)

    def as_params(self) -> HopfParams:
        return HopfParams(self.mu_mR, self.mu_mI)


class HopfField(VectorField):
    """Andronov-Hopf normal form ``z' = -|z|^2 z + mu z`` in real coordinates."""

    def __init__(self, params: HopfParams):
        self.params = params
        a, b = params.mu_R, params.mu_I

        def f(s):
            x, y = s
            r2 = x * x + y * y
            return np.array([(a - r2) * x - b * y, b * x + (a - r2) * y])

        def jac(s):
            x, y = s
            r2 = x * x + y * y
            return np.array(
                [
                    [a - r2 - 2 * x * x, -b - 2 * x * y],
                    [b - 2 * x * y, a - r2 - 2 * y * y],
                ]
            )

        super().__init__(2, f, jac, name="hopf")

    def __repr__(self):
        return f"HopfField(mu={self.params.mu})"


def hopf_field(p: HopfParams, nu: complex = 1.0) -> HopfField:
    if nu != 1:
        raise ValidationError(
            f"Hopf oscillators with nu != 1 are not supported (got nu={nu}); only nu = 1 is implemented"
        )
    return HopfField(p)


class PolynomialField(VectorField):
    """Polynomial field from monomial terms.

    ``terms`` is a list of ``(component, coefficient, exponents)``: the term
    ``coefficient * prod_k x_k**exponents[k]`` is added to output
    ``component``.  Constant terms are rejected because every node must have
    an equilibrium at the origin.
    """

    def __init__(self, dim: int, terms, name: str = "polynomial"):
        comps, coefs, exps = [], [], []
        problems = []
        for k, (comp, coef, ex) in enumerate(terms):
            ex = np.asarray(ex, dtype=int)
            if ex.shape != (dim,) or np.any(ex < 0):
                problems.append(f"term {k}: exponents must be {dim} non-negative integers, got {ex.tolist()}")
                continue
            if not 0 <= int(comp) < dim:
                problems.append(f"term {k}: component {comp} out of range for dim {dim}")
                continue
            if ex.sum() == 0 and coef != 0:
                problems.append(f"term {k}: constant term {coef:g} violates f(0) = 0")
                continue
            comps.append(int(comp))
            coefs.append(float(coef))
            exps.append(ex)
        if problems:
            raise ValidationError(problems)
        self.terms = list(zip(comps, coefs, [e.tolist() for e in exps]))
        comps = np.array(comps, dtype=int)
        coefs = np.array(coefs)
        exps = np.array(exps, dtype=int).reshape(-1, dim)

        def f(x):
            mono = np.prod(x[None, :] ** exps, axis=1)
            return np.bincount(comps, weights=coefs * mono, minlength=dim)

        def jac(x):
            J = np.zeros((dim, dim))
            for c, a, e in zip(comps, coefs, exps):
                for k in range(dim):
                    if e[k] == 0:
                        continue
                    d = e.copy()
                    d[k] -= 1
                    J[c, k] += a * e[k] * np.prod(x ** d)
            return J

        super().__init__(dim, f, jac, name=name)


def polynomial_field(dim: int, terms) -> PolynomialField:
    return PolynomialField(dim, terms)


def linear_field(A) -> PolynomialField:
    """``x' = A x`` as a polynomial field."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    eye = np.eye(n, dtype=int)
    terms = [(i, A[i, j], eye[j]) for i in range(n) for j in range(n) if A[i, j] != 0]
    field = PolynomialField(n, terms, name="linear")
    field.matrix = A
    return field


def reduced_hopf_params(v_l, ps: Sequence[HopfParams]) -> ReducedHopfParams:
    """Weighted average of the oscillator parameters with weights ``v_l``."""
    v_l = np.asarray(v_l, dtype=float)
    if v_l.shape != (len(ps),):
        raise ValidationError(f"v_l has length {v_l.size} but {len(ps)} parameter sets were given")
    return ReducedHopfParams(
        float(v_l @ np.array([p.mu_R for p in ps])),
        float(v_l @ np.array([p.mu_I for p in ps])),
    )


def semipassivity_margin(p: HopfParams, states, inputs, times=None, input_times=None):
    """Storage-function derivative ``-|z|^4 + mu_R |z|^2 + <z, u>`` pointwise.

    ``<z, u>`` is the real part of ``conj(z) u``, which is what the derivative
    of ``|z|^2 / 2`` picks up from the input.
    """
    z = np.atleast_2d(np.asarray(states, dtype=float))
    u = np.atleast_2d(np.asarray(inputs, dtype=float))
    if z.shape != u.shape or z.shape[-1] != 2:
        raise ValidationError(f"state samples {z.shape} and input samples {u.shape} must both be (T, 2)")
    if times is not None and input_times is not None:
        if not np.array_equal(np.asarray(times), np.asarray(input_times)):
            raise ValidationError("state and input time grids differ")
    r2 = np.sum(z * z, axis=1)
    return -r2 * r2 + p.mu_R * r2 + np.sum(z * u, axis=1)


def check_jacobian(field: VectorField, points) -> float:
    """Largest relative gap between the field's Jacobian and finite differences."""
    worst = 0.0
    for x in points:
        J = field.jacobian(x)
        Jfd = finite_difference_jacobian(field, x)
        worst = max(worst, float(np.abs(J - Jfd).max() / (1.0 + np.abs(Jfd).max())))
    return worst


def stacked_evaluator(nodes: Sequence[VectorField]):
    """Return ``X -> F(X)`` acting on an ``(N, n)`` array of node states.

    All-Hopf networks get a vectorised path; anything else loops over nodes.
    """
    if nodes and all(isinstance(f, HopfField) for f in nodes):
        a = np.array([f.params.mu_R for f in nodes])
        b = np.array([f.params.mu_I for f in nodes])

        def F(X):
            x = X[:, 0]
            y = X[:, 1]
            g = a - (x * x + y * y)
            out = np.empty_like(X)
            out[:, 0] = g * x - b * y
            out[:, 1] = b * x + g * y
            return out

        return F

    def F(X):
        return np.stack([f(X[i]) for i, f in enumerate(nodes)])

    return F
