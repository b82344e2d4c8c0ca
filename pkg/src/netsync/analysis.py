"""Numerical checks of the network's asymptotic behaviour.

Periodic orbits are found by simulation: a transversal hyperplane is placed
at the largest-``|x_m|`` point of the post-transient trajectory, and the
orbit is accepted once the last few upward returns agree.  Stability of a
detected orbit comes from the eigenvalues of its monodromy matrix.
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import InvalidOrbitError, NetsyncError, NotPeriodicError, NumericalError, ValidationError
from .integrate import Section, SolverConfig, Trajectory, find_crossings, integrate, monodromy
from .models import HopfField, VectorField, reduced_hopf_params
from .network import NetworkSystem, reduced_jacobian, to_bar

log = logging.getLogger(__name__)

__all__ = [
    "PeriodicOrbitEstimate",
    "FloquetResult",
    "Classification",
    "TikhonovReport",
    "UltimateBoundReport",
    "SweepReport",
    "detect_limit_cycle",
    "floquet_classify",
    "linearize_origin",
    "slow_eigenvalue_check",
    "tikhonov_compare",
    "ultimate_bound",
    "classify",
    "sweep_sigma",
    "almost_global_check",
    "reference_orbit",
    "hausdorff_closed_curves",
    "nonincreasing",
    "sample_ball",
]

ORIGIN_TOL = 1e-6


@dataclass
class PeriodicOrbitEstimate:
    alpha: float
    times: np.ndarray
    samples: np.ndarray
    section: Section
    residual: float
    mean_radius: float
    crossing_times: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "residual": self.residual,
            "mean_radius": self.mean_radius,
            "section_p0": self.section.p0.tolist(),
            "section_normal": self.section.normal.tolist(),
        }


@dataclass
class FloquetResult:
    multipliers: np.ndarray
    trivial_index: int
    stable: bool
    margin: float

    @property
    def trivial(self) -> complex:
        return complex(self.multipliers[self.trivial_index])

    @property
    def nontrivial(self) -> np.ndarray:
        return np.delete(self.multipliers, self.trivial_index)

    def to_dict(self) -> dict:
        return {
            "multipliers": [[float(m.real), float(m.imag)] for m in self.multipliers],
            "trivial_index": self.trivial_index,
            "stable": self.stable,
            "margin": self.margin,
        }


@dataclass
class Classification:
    tag: str
    evidence: dict

    TAGS = ("origin-convergent", "periodic", "practical-neighborhood", "diverged")


@dataclass
class TikhonovReport:
    epsilons: list
    sup_errors_xm: list
    sup_errors_ev: list
    fitted_slope: float
    fitted_slope_ev: float
    T: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class UltimateBoundReport:
    r: float
    terminal_norms: list
    diverged: list
    seed: int
    radius: float
    horizon: float


@dataclass
class SweepReport:
    sigmas: list
    periods: list
    orbit_distances: list
    classifications: list
    ev_amplitudes: list
    floquet: list
    errors: list
    reference_period: float

    @property
    def period_errors(self) -> list:
        return [abs(p - self.reference_period) if p is not None else None for p in self.periods]

    def trends(self, rel: float = 0.1) -> dict:
        def clean(vals):
            return [v for v in vals if v is not None]

        return {
            "period_error_nonincreasing": nonincreasing(clean(self.period_errors), rel),
            "distance_nonincreasing": nonincreasing(clean(self.orbit_distances), rel),
            "ev_amplitude_decreasing": nonincreasing(clean(self.ev_amplitudes), 0.0, strict=True),
        }

    def rows(self) -> list:
        out = []
        for k, s in enumerate(self.sigmas):
            out.append(
                {
                    "sigma": s,
                    "classification": self.classifications[k],
                    "period": self.periods[k],
                    "period_error": self.period_errors[k],
                    "orbit_distance": self.orbit_distances[k],
                    "ev_amplitude": self.ev_amplitudes[k],
                    "error": self.errors[k],
                }
            )
        return out


def nonincreasing(values: Sequence[float], rel: float = 0.1, strict: bool = False) -> bool:
    """Trend test with a relative noise allowance per step."""
    v = list(values)
    if strict:
        return all(b < a for a, b in zip(v, v[1:]))
    return all(b <= a * (1.0 + rel) for a, b in zip(v, v[1:]))


def sample_ball(rng: np.random.Generator, dim: int, radius: float, count: int) -> np.ndarray:
    """Uniform samples from the closed ball of given radius in ``R^dim``."""
    d = rng.standard_normal((count, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / dim)
    return d * r[:, None]


def _as_field(system) -> VectorField:
    return system.field() if isinstance(system, NetworkSystem) else system


def _xm_projection(system) -> Callable:
    if isinstance(system, NetworkSystem):
        return lambda x: to_bar(system, x).x_m
    return lambda x: x


def detect_limit_cycle(
    field: VectorField,
    traj: Trajectory,
    projection: Callable | None = None,
    transient: float = 0.5,
    k: int = 8,
    tol: float = 1e-6,
    n_samples: int = 256,
    cfg: SolverConfig | None = None,
) -> PeriodicOrbitEstimate:
    """Estimate an attracting periodic orbit from a long trajectory.

    Parameters
    ----------
    field
        The field that generated ``traj``; used to refine crossings and to
        re-integrate one period.
    traj
        A completed trajectory.
    projection
        Maps a state to the coordinates whose norm anchors the section
        (``x_m`` for networks).  Identity by default.
    transient
        Fraction of the time span discarded before looking for returns.
    k
        Number of final returns that must agree to within ``tol``.

    Raises
    ------
    NotPeriodicError
        When the returns do not settle.
    """
    if not traj.completed:
        raise NotPeriodicError(f"trajectory status is {traj.status}")
    projection = projection or (lambda x: x)
    t_start = traj.times[0] + transient * (traj.times[-1] - traj.times[0])
    post = traj.window(t_start)
    if len(post) < 3:
        raise NotPeriodicError("post-transient window is empty")
    amp = np.array([np.linalg.norm(projection(x)) for x in post.states])
    i_anchor = int(np.argmax(amp))
    if amp[i_anchor] < 1e-8:
        raise NotPeriodicError("post-transient trajectory sits at the origin")
    p0 = post.states[i_anchor]
    flow = np.asarray(field(p0))
    speed = np.linalg.norm(flow)
    if speed < 1e-10 * (1.0 + np.linalg.norm(p0)):
        raise NotPeriodicError("flow vanishes at the section anchor (equilibrium)")
    section = Section(p0, flow / speed)
    events = find_crossings(field, traj, section, t_from=t_start)
    if len(events) < k + 1:
        raise NotPeriodicError(f"only {len(events)} section returns after the transient, need {k + 1}")
    last = events[-k:]
    pts = np.array([e.state_cross for e in last])
    residual = float(max(np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2)))
    if residual > tol:
        raise NotPeriodicError(f"last {k} returns spread by {residual:.3g} > {tol:g}")
    # returns collapsing onto a point away from the anchor mean a decaying motion
    scale = max(np.linalg.norm(p0), 1e-300)
    if np.linalg.norm(pts[-1] - p0) > 0.1 * scale:
        raise NotPeriodicError("section returns do not come back to the anchor")
    t_cross = np.array([e.t_cross for e in events[-(k + 1):]])
    alpha = float(np.mean(np.diff(t_cross)))

    cfg = cfg or SolverConfig()
    one = integrate(field, last[-1].state_cross, cfg.with_(method="rk45", t0=0.0, t_end=alpha, h=None))
    if not one.completed:
        raise NotPeriodicError(f"re-integration over one period {one.status}")
    times = np.linspace(0.0, alpha, n_samples, endpoint=False)
    samples = one.interpolate(times)
    mean_radius = float(np.mean([np.linalg.norm(projection(s)) for s in samples]))
    return PeriodicOrbitEstimate(alpha, times, samples, section, residual, mean_radius, t_cross)


def floquet_classify(
    field: VectorField,
    orbit: PeriodicOrbitEstimate,
    margin: float = 1e-3,
    cfg: SolverConfig | None = None,
) -> FloquetResult:
    """Characteristic multipliers of ``orbit`` and the orbital-stability verdict."""
    M = monodromy(field, orbit, cfg=cfg)
    mult = np.linalg.eigvals(M)
    idx = int(np.argmin(np.abs(mult - 1.0)))
    if abs(mult[idx] - 1.0) > 1e-2:
        raise InvalidOrbitError(
            f"no characteristic multiplier near 1 (closest {mult[idx]:.6g}); orbit estimate is not periodic"
        )
    others = np.delete(mult, idx)
    stable = bool(abs(mult[idx] - 1.0) <= 1e-3 and np.all(np.abs(others) < 1.0 - margin))
    return FloquetResult(mult, idx, stable, margin)


def _origin_parts(sys: NetworkSystem):
    n = sys.n
    A_o = scipy.linalg.block_diag(*[f.jacobian(np.zeros(n)) for f in sys.nodes])
    return A_o, np.kron(sys.laplacian, np.eye(n))


def linearize_origin(sys: NetworkSystem, sigma: float | None = None):
    """``A_sigma = blockdiag(df_i(0)) - sigma (L kron I_n)`` and its eigenvalues."""
    A_o, K = _origin_parts(sys)
    s = sys.sigma if sigma is None else sigma
    A = A_o - s * K
    return A, np.linalg.eigvals(A)


def slow_eigenvalue_check(sys: NetworkSystem, sigmas: Sequence[float]) -> list:
    """Compare the ``n`` smallest-modulus eigenvalues of ``A_sigma`` with the
    eigenvalues of the reduced Jacobian at the origin.

    Each row carries ``warning=True`` when the slow/fast gap is below 10x.
    """
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValidationError("sigmas must be increasing")
    n = sys.n
    target = np.linalg.eigvals(reduced_jacobian(sys, np.zeros(n)))
    rows = []
    for s in sigmas:
        _, eig = linearize_origin(sys, s)
        eig = eig[np.argsort(np.abs(eig), kind="stable")]
        slow = eig[:n]
        cost = np.abs(slow[:, None] - target[None, :])
        r, c = linear_sum_assignment(cost)
        distance = float(cost[r, c].max())
        nxt = abs(eig[n]) if len(eig) > n else np.inf
        gap = float(nxt / abs(slow[-1])) if abs(slow[-1]) > 0 else np.inf
        rows.append(
            {
                "sigma": float(s),
                "slow": slow,
                "target": target,
                "distance": distance,
                "gap_ratio": gap,
                "warning": bool(gap < 10.0),
            }
        )
    return rows


def tikhonov_compare(
    sys: NetworkSystem,
    x0,
    T: float,
    epsilons: Sequence[float],
    cfg: SolverConfig | None = None,
) -> TikhonovReport:
    """Finite-horizon distance between the full network and its two-time-scale
    approximation, for each ``eps = 1/sigma``.

    The slow approximation is the reduced system from ``x_m(0)``; the fast one
    is the boundary layer ``y' = -(Lambda kron I) y`` from ``e_v(0)``, read in
    stretched time ``t/eps``.  Errors are sup norms over the full trajectory's
    accepted steps, which resolve the initial layer.
    """
    cfg = (cfg or SolverConfig()).with_(t0=0.0, t_end=float(T))
    b0 = to_bar(sys, x0)
    red = integrate(sys.reduced(), b0.x_m, cfg)
    if not red.completed:
        raise NumericalError(f"reduced leg {red.status}")
    M = np.kron(sys.split.Lambda, np.eye(sys.n))
    sup_xm, sup_ev = [], []
    for eps in epsilons:
        s = sys.with_sigma(1.0 / eps)
        full = integrate(s.field(), x0, cfg)
        if not full.completed:
            raise NumericalError(f"full leg at eps={eps} {full.status}")
        xm_red = red.interpolate(full.times)
        err_xm = 0.0
        err_ev = 0.0
        for t, x, xr in zip(full.times, full.states, xm_red):
            b = to_bar(s, x)
            err_xm = max(err_xm, float(np.linalg.norm(b.x_m - xr)))
            y = scipy.linalg.expm(-M * (t / eps)) @ b0.e_v
            err_ev = max(err_ev, float(np.linalg.norm(b.e_v - y)))
        sup_xm.append(err_xm)
        sup_ev.append(err_ev)
    le = np.log(np.asarray(epsilons, dtype=float))
    slope = float(np.polyfit(le, np.log(np.maximum(sup_xm, 1e-300)), 1)[0])
    slope_ev = float(np.polyfit(le, np.log(np.maximum(sup_ev, 1e-300)), 1)[0])
    return TikhonovReport(list(map(float, epsilons)), sup_xm, sup_ev, slope, slope_ev, float(T))


def ultimate_bound(
    sys: NetworkSystem,
    ic_radius: float,
    count: int,
    horizon: float,
    seed: int = 0,
    cfg: SolverConfig | None = None,
    tail: float = 0.2,
) -> UltimateBoundReport:
    """Largest norm reached over the final ``tail`` fraction of the horizon,
    maximised over ``count`` seeded initial conditions in a ball."""
    rng = np.random.default_rng(seed)
    ics = sample_ball(rng, sys.dim, ic_radius, count)
    cfg = (cfg or SolverConfig()).with_(t0=0.0, t_end=float(horizon))
    field = sys.field()
    norms, diverged = [], []
    for k, x0 in enumerate(ics):
        tr = integrate(field, x0, cfg)
        if not tr.completed:
            log.warning("run %d %s at t=%g; excluded from the bound", k, tr.status, tr.times[-1])
            diverged.append(k)
            norms.append(None)
            continue
        tail_part = tr.window(horizon * (1.0 - tail))
        norms.append(float(np.linalg.norm(tail_part.states, axis=1).max()))
    finite = [v for v in norms if v is not None]
    r = max(finite) if finite else float("nan")
    return UltimateBoundReport(r, norms, diverged, seed, ic_radius, horizon)


def classify(
    system,
    x0,
    cfg: SolverConfig | None = None,
    detect_kw: dict | None = None,
    margin: float = 1e-3,
) -> Classification:
    """Tag the long-run behaviour of one trajectory.

    ``system`` is a NetworkSystem or a plain VectorField.  The tag is
    ``origin-convergent`` when the terminal norm is below 1e-6, ``periodic``
    when an orbit is detected and Floquet-stable, ``diverged`` when the
    integration aborted, and ``practical-neighborhood`` otherwise.
    """
    cfg = cfg or SolverConfig(t_end=200.0)
    field = _as_field(system)
    tr = integrate(field, x0, cfg)
    final_norm = float(np.linalg.norm(tr.final))
    if not tr.completed:
        return Classification("diverged", {"status": tr.status, "t_abort": float(tr.times[-1]), "final_norm": final_norm})
    if final_norm < ORIGIN_TOL:
        return Classification("origin-convergent", {"final_norm": final_norm})
    tail = tr.window(tr.times[0] + 0.8 * (tr.times[-1] - tr.times[0]))
    bound = float(np.linalg.norm(tail.states, axis=1).max())
    try:
        orbit = detect_limit_cycle(field, tr, _xm_projection(system), cfg=cfg, **(detect_kw or {}))
        fl = floquet_classify(field, orbit, margin=margin, cfg=cfg)
    except (NotPeriodicError, InvalidOrbitError) as exc:
        return Classification(
            "practical-neighborhood", {"final_norm": final_norm, "terminal_bound": bound, "reason": str(exc)}
        )
    evidence = {"orbit": orbit, "floquet": fl, "final_norm": final_norm, "terminal_bound": bound}
    if fl.stable:
        return Classification("periodic", evidence)
    evidence["reason"] = "detected orbit is not Floquet-stable"
    return Classification("practical-neighborhood", evidence)


def reference_orbit(sys: NetworkSystem, cfg: SolverConfig | None = None, n_samples: int = 256):
    """Points of the reduced system's limit cycle ``gamma_o``, plus its period.

    All-Hopf networks use the analytic circle of radius ``sqrt(mu_mR)``;
    other reduced systems are simulated and their orbit detected.
    """
    if all(isinstance(f, HopfField) for f in sys.nodes):
        p = reduced_hopf_params(sys.split.v_l, [f.params for f in sys.nodes])
        if p.mu_mR <= 0:
            raise NotPeriodicError(f"reduced Hopf system has mu_mR = {p.mu_mR:g} <= 0; no limit cycle")
        th = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
        r = np.sqrt(p.mu_mR)
        return np.column_stack([r * np.cos(th), r * np.sin(th)]), 2 * np.pi / abs(p.mu_mI)
    cfg = cfg or SolverConfig(t_end=200.0)
    red = sys.reduced()
    x0 = np.full(sys.n, 0.5)
    tr = integrate(red, x0, cfg)
    orbit = detect_limit_cycle(red, tr, cfg=cfg, n_samples=n_samples)
    return orbit.samples, orbit.alpha


def _point_polyline_dist(P, Q):
    """Distance from each row of ``P`` to the closed polyline through ``Q``."""
    A = Q
    B = np.roll(Q, -1, axis=0)
    AB = B - A
    den = np.maximum(np.sum(AB * AB, axis=1), 1e-300)
    AP = P[:, None, :] - A[None, :, :]
    s = np.clip(np.sum(AP * AB[None], axis=2) / den[None], 0.0, 1.0)
    proj = A[None] + s[..., None] * AB[None]
    return np.min(np.linalg.norm(P[:, None, :] - proj, axis=2), axis=1)


def hausdorff_closed_curves(P, Q) -> float:
    """Hausdorff distance between two closed curves given as point samples.

    Each point is measured against the other curve's polyline, so sampling
    density does not bias the result.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    return float(max(_point_polyline_dist(P, Q).max(), _point_polyline_dist(Q, P).max()))


def _sweep_point(sys, x0, cfg, gamma_bar, detect_kw, margin):
    c = classify(sys, x0, cfg, detect_kw, margin)
    out = {"tag": c.tag, "period": None, "distance": None, "ev_amp": None, "floquet": None, "error": None}
    if c.tag == "periodic":
        orbit = c.evidence["orbit"]
        bars = np.array([to_bar(sys, s).vector() for s in orbit.samples])
        out["period"] = orbit.alpha
        out["distance"] = hausdorff_closed_curves(bars, gamma_bar)
        out["ev_amp"] = float(np.linalg.norm(bars[:, sys.n :], axis=1).max())
        out["floquet"] = c.evidence["floquet"]
    elif "reason" in c.evidence:
        out["error"] = c.evidence["reason"]
    return out


def sweep_sigma(
    template: NetworkSystem,
    sigmas: Sequence[float],
    x0,
    cfg: SolverConfig | None = None,
    detect_kw: dict | None = None,
    margin: float = 1e-3,
    workers: int = 1,
) -> SweepReport:
    """Classify the network at each coupling strength and measure how the
    detected orbit approaches ``{x_m in gamma_o, e_v = 0}``.

    Per-point failures are recorded in the row; the sweep continues.
    """
    sigmas = [float(s) for s in sigmas]
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValidationError("sigmas must be increasing")
    cfg = cfg or SolverConfig(t_end=200.0)
    try:
        gamma, alpha_o = reference_orbit(template, cfg)
        gamma_bar = np.hstack([gamma, np.zeros((len(gamma), template.dim - template.n))])
    except NetsyncError as exc:
        log.info("no reference orbit: %s", exc)
        gamma_bar, alpha_o = None, float("nan")

    def run(s):
        sys = template.with_sigma(s)
        try:
            if gamma_bar is None:
                c = classify(sys, x0, cfg, detect_kw, margin)
                return {"tag": c.tag, "period": None, "distance": None, "ev_amp": None, "floquet": None,
                        "error": c.evidence.get("reason")}
            return _sweep_point(sys, x0, cfg, gamma_bar, detect_kw, margin)
        except NetsyncError as exc:
            return {"tag": "error", "period": None, "distance": None, "ev_amp": None, "floquet": None,
                    "error": str(exc)}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, sigmas))
    else:
        results = [run(s) for s in sigmas]
    return SweepReport(
        sigmas=sigmas,
        periods=[r["period"] for r in results],
        orbit_distances=[r["distance"] for r in results],
        classifications=[r["tag"] for r in results],
        ev_amplitudes=[r["ev_amp"] for r in results],
        floquet=[r["floquet"] for r in results],
        errors=[r["error"] for r in results],
        reference_period=alpha_o,
    )


def almost_global_check(
    sys: NetworkSystem,
    orbit: PeriodicOrbitEstimate,
    count: int = 64,
    radius: float = 5.0,
    seed: int = 0,
    horizon: float = 40.0,
    conv_tol: float = 1e-3,
    exception_tol: float = 1e-3,
    cfg: SolverConfig | None = None,
) -> dict:
    """Seeded random initial conditions must end on ``orbit``.

    A run whose state passes within ``exception_tol`` of the origin (the
    unstable equilibrium) is recorded as an exception instead of a failure.
    """
    rng = np.random.default_rng(seed)
    ics = sample_ball(rng, sys.dim, radius, count)
    cfg = (cfg or SolverConfig()).with_(t0=0.0, t_end=float(horizon))
    field = sys.field()
    converged, failed, exceptions, distances = [], [], [], []
    for k, x0 in enumerate(ics):
        tr = integrate(field, x0, cfg)
        d = float(_point_polyline_dist(tr.final[None, :], orbit.samples)[0]) if tr.completed else float("inf")
        distances.append(d)
        near_eq = float(np.linalg.norm(tr.states, axis=1).min()) < exception_tol
        if d <= conv_tol:
            converged.append(k)
        elif near_eq:
            exceptions.append(k)
        else:
            failed.append(k)
    return {
        "count": count,
        "converged": converged,
        "exceptions": exceptions,
        "failed": failed,
        "max_distance": max(distances),
        "seed": seed,
    }
