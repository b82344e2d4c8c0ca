"""Deterministic explicit Runge-Kutta integration.

Two methods are available: classical fixed-step RK4 and adaptive
Dormand-Prince 5(4).  Every accepted step stores the state and its
derivative, which gives a cubic Hermite interpolant between steps.  Crossings
of a hyperplane are located by bisection on that interpolant and then
polished with exact one-step maps from the left end of the bracketing step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, ValidationError

__all__ = [
    "SolverConfig",
    "Trajectory",
    "CrossingEvent",
    "Section",
    "integrate",
    "integrate_with_section",
    "find_crossings",
    "monodromy",
    "hermite",
]

COMPLETED = "completed"
DIVERGED = "diverged"
STEP_LIMIT = "step-limit"

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings.

    ``h`` is the fixed step for ``rk4`` and an optional initial step for
    ``rk45``.  Trajectories whose norm exceeds ``divergence_bound`` are
    stopped and flagged.
    """

    method: str = "rk45"
    t_end: float = 10.0
    h: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-11
    max_steps: int = 2_000_000
    divergence_bound: float = 1e6
    t0: float = 0.0
    h_max: float | None = None

    def __post_init__(self):
        problems = []
        if self.method not in ("rk45", "rk4"):
            problems.append(f"unknown method {self.method!r}; expected 'rk4' or 'rk45'")
        if self.method == "rk4" and not (self.h is not None and self.h > 0):
            problems.append("rk4 needs a positive step h")
        if self.method == "rk45" and not (self.rtol > 0 and self.atol > 0):
            problems.append("rk45 needs positive rtol and atol")
        if self.h is not None and not self.h > 0:
            problems.append(f"h must be positive, got {self.h}")
        if not self.divergence_bound > 0:
            problems.append("divergence_bound must be positive")
        if not self.t_end > self.t0:
            problems.append(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        if self.max_steps < 1:
            problems.append("max_steps must be at least 1")
        if problems:
            raise ValidationError(problems)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def hermite(t0, t1, y0, y1, f0, f1, t):
    """Cubic Hermite interpolant on ``[t0, t1]`` evaluated at ``t``."""
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * h * f0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * h * f1
    )


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    status: str = COMPLETED
    method: str = "rk45"
    n_rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def __len__(self):
        return len(self.times)

    def interpolate(self, t) -> np.ndarray:
        """Hermite interpolation at one time or an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.min() < self.times[0] - 1e-12 or t.max() > self.times[-1] + 1e-12:
            raise ValidationError(f"interpolation outside [{self.times[0]}, {self.times[-1]}]")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        t0 = self.times[idx][:, None]
        t1 = self.times[idx + 1][:, None]
        out = hermite(
            t0, t1, self.states[idx], self.states[idx + 1], self.derivs[idx], self.derivs[idx + 1], t[:, None]
        )
        return out

    def window(self, t_from: float) -> "Trajectory":
        """Sub-trajectory of steps at or after ``t_from``."""
        k = int(np.searchsorted(self.times, t_from, side="left"))
        return Trajectory(self.times[k:], self.states[k:], self.derivs[k:], self.status, self.method)


@dataclass(frozen=True)
class Section:
    """Hyperplane ``<x - p0, normal> = 0`` with unit ``normal``."""

    p0: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        nrm = np.asarray(self.normal, dtype=float)
        if p0.shape != nrm.shape:
            raise ValidationError(f"section point {p0.shape} and normal {nrm.shape} differ in shape")
        if abs(np.linalg.norm(nrm) - 1.0) > 1e-12:
            raise ValidationError(f"section normal must have unit norm, got {np.linalg.norm(nrm)}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "normal", nrm)

    def __call__(self, x):
        return float(np.dot(np.asarray(x) - self.p0, self.normal))


@dataclass(frozen=True)
class CrossingEvent:
    t_cross: float
    state_cross: np.ndarray
    direction: int


def _dopri_step(f, t, y, h, k1):
    a = _A
    k2 = f(y + h * (a[1][0] * k1))
    k3 = f(y + h * (a[2][0] * k1 + a[2][1] * k2))
    k4 = f(y + h * (a[3][0] * k1 + a[3][1] * k2 + a[3][2] * k3))
    k5 = f(y + h * (a[4][0] * k1 + a[4][1] * k2 + a[4][2] * k3 + a[4][3] * k4))
    k6 = f(y + h * (a[5][0] * k1 + a[5][1] * k2 + a[5][2] * k3 + a[5][3] * k4 + a[5][4] * k5))
    y_new = y + h * (_B[0] * k1 + _B[2] * k3 + _B[3] * k4 + _B[4] * k5 + _B[5] * k6)
    k7 = f(y_new)
    err = h * (_E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6 + _E[6] * k7)
    # FSAL: k7 = f(y_new) starts the next step
    return y_new, err, k7


def _rk4_step(f, t, y, h, k1):
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _initial_step(f, y0, f0, rtol, atol, order=5):
    scale = atol + np.abs(y0) * rtol
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.max(np.abs(f(y1) - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def integrate(field: Callable, x0, cfg: SolverConfig) -> Trajectory:
    """Integrate ``x' = field(x)`` from ``cfg.t0`` to ``cfg.t_end``.

    Divergence (norm above ``cfg.divergence_bound`` or non-finite state) and
    running out of steps do not raise; the returned trajectory carries the
    status and stops at the abort time.
    """
    y = np.array(x0, dtype=float)
    f0 = np.asarray(field(y), dtype=float)
    if f0.shape != y.shape:
        raise ValidationError(f"field returns shape {f0.shape} for state of shape {y.shape}")
    t, T = float(cfg.t0), float(cfg.t_end)
    times, states, derivs = [t], [y], [f0]
    status = COMPLETED
    n_rejected = 0
    span = T - t
    eps_t = 1e-14 * max(1.0, abs(T))

    if cfg.method == "rk4":
        nsteps = max(1, int(math.ceil(span / cfg.h - 1e-9)))
        limited = nsteps > cfg.max_steps
        k1 = f0
        for i in range(1, min(nsteps, cfg.max_steps) + 1):
            t_new = T if i == nsteps else min(cfg.t0 + i * cfg.h, T)
            y = _rk4_step(field, t, y, t_new - t, k1)
            t = t_new
            k1 = np.asarray(field(y), dtype=float)
            times.append(t)
            states.append(y)
            derivs.append(k1)
            if not np.all(np.isfinite(y)) or np.linalg.norm(y) > cfg.divergence_bound:
                status = DIVERGED
                break
        else:
            if limited:
                status = STEP_LIMIT
        return Trajectory(np.array(times), np.array(states), np.array(derivs), status, "rk4")

    h = cfg.h if cfg.h is not None else _initial_step(field, y, f0, cfg.rtol, cfg.atol)
    h_max = cfg.h_max if cfg.h_max is not None else span
    h = min(h, h_max, span)
    k1 = f0
    steps = 0
    while T - t > eps_t:
        if steps >= cfg.max_steps:
            status = STEP_LIMIT
            break
        h = min(h, T - t)
        if h < 1e-14 * max(1.0, abs(t)):
            status = STEP_LIMIT
            break
        y_new, err, k_new = _dopri_step(field, t, y, h, k1)
        steps += 1
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if not np.isfinite(err_norm):
            h *= 0.2
            n_rejected += 1
            continue
        if err_norm <= 1.0:
            t = t + h if T - (t + h) > eps_t else T
            y, k1 = y_new, k_new
            times.append(t)
            states.append(y)
            derivs.append(k1)
            if not np.all(np.isfinite(y)) or np.linalg.norm(y) > cfg.divergence_bound:
                status = DIVERGED
                break
            fac = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        else:
            n_rejected += 1
            fac = max(0.2, 0.9 * err_norm ** -0.2)
        h = min(h * fac, h_max)
    return Trajectory(np.array(times), np.array(states), np.array(derivs), status, "rk45", n_rejected)


def _one_step(field, method, t, y, f0, tau):
    if tau == 0.0:
        return y
    if method == "rk4":
        return _rk4_step(field, t, y, tau, f0)
    return _dopri_step(field, t, y, tau, f0)[0]


def find_crossings(field: Callable, traj: Trajectory, section: Section, t_from: float | None = None):
    """Upward crossings (``g`` from negative to non-negative) of ``section``."""
    g = (traj.states - section.p0) @ section.normal
    lo = 0 if t_from is None else max(0, int(np.searchsorted(traj.times, t_from)) - 1)
    idx = np.nonzero((g[lo:-1] < 0) & (g[lo + 1 :] >= 0))[0] + lo
    events = []
    for i in idx:
        t0, t1 = traj.times[i], traj.times[i + 1]
        y0, y1 = traj.states[i], traj.states[i + 1]
        f0, f1 = traj.derivs[i], traj.derivs[i + 1]
        h = t1 - t0

        def g_herm(tau):
            return section(hermite(0.0, h, y0, y1, f0, f1, tau))

        a, b = 0.0, h
        for _ in range(60):
            mid = 0.5 * (a + b)
            if g_herm(mid) < 0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15 * max(1.0, h):
                break
        tau = 0.5 * (a + b)

        def g_exact(s):
            return section(_one_step(field, traj.method, t0, y0, f0, s))

        tau = _polish(g_exact, tau, h)
        state = _one_step(field, traj.method, t0, y0, f0, tau)
        direction = int(np.sign(np.dot(field(state), section.normal))) or 1
        events.append(CrossingEvent(float(t0 + tau), state, direction))
    return events


def _polish(g, tau, h):
    """Secant iterations on the exact one-step map, bracketed fallback."""
    x0, x1 = tau, min(h, tau + 1e-7 * h) if tau < h else tau - 1e-7 * h
    g0, g1 = g(x0), g(x1)
    for _ in range(8):
        if abs(g1) < 1e-14 or g1 == g0:
            break
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
        x0, g0 = x1, g1
        x1, g1 = x2, g(x2)
    if 0.0 <= x1 <= h and abs(g1) < 1e-11:
        return x1
    return brentq(g, 0.0, h, xtol=1e-15 * max(1.0, h), rtol=4 * np.finfo(float).eps)


def integrate_with_section(field: Callable, x0, cfg: SolverConfig, section: Section):
    traj = integrate(field, x0, cfg)
    return traj, find_crossings(field, traj, section)


def monodromy(field, x0, period: float | None = None, cfg: SolverConfig | None = None) -> np.ndarray:
    """Monodromy matrix ``X(period)`` of ``X' = A(t) X``, ``X(0) = I``.

    ``A(t)`` is the field Jacobian along the solution from ``x0``; state and
    variational equations are stepped together.  ``field`` must provide
    ``jacobian``.  ``x0`` may also be an orbit estimate with ``alpha`` and
    ``samples`` attributes, in which case ``period`` may be omitted.
    """
    if hasattr(x0, "alpha"):
        period = x0.alpha if period is None else period
        x0 = x0.samples[0]
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    if period is None or not period > 0:
        raise ValidationError(f"period must be positive, got {period}")
    cfg = cfg or SolverConfig()

    def aug(z):
        x = z[:d]
        X = z[d:].reshape(d, d)
        return np.concatenate([field(x), (field.jacobian(x) @ X).ravel()])

    z0 = np.concatenate([x0, np.eye(d).ravel()])
    traj = integrate(aug, z0, cfg.with_(method="rk45", t0=0.0, t_end=float(period), h=None))
    if not traj.completed:
        raise NumericalError(f"variational flow {traj.status} at t={traj.times[-1]:.6g}")
    return traj.final[d:].reshape(d, d)
