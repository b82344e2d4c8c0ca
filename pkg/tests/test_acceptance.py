"""Acceptance criteria 1-10.

Each criterion is a function returning ``(passed, summary)``.  Under pytest
every criterion is one test and its PASS/FAIL line is echoed to the
terminal; ``python tests/test_acceptance.py`` runs them all and prints the
same lines.
"""
import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netsync import SolverConfig, build_laplacian, from_bar, integrate, spectral_split, to_bar  # noqa: E402
from netsync import analysis as an  # noqa: E402
from netsync.config import load_config  # noqa: E402
from netsync.network import bar_field, full_field  # noqa: E402
from netsync.scenarios import config_path  # noqa: E402

from helpers import hopf_network, random_rooted_digraph  # noqa: E402

SEED = 2024


@functools.lru_cache(maxsize=None)
def _config(name):
    return load_config(config_path(name))


def _detect_kw(cfg):
    a = cfg.analysis
    return {k: cast(a[k]) for k, cast in (("transient", float), ("k", int), ("tol", float)) if k in a}


@functools.lru_cache(maxsize=None)
def _sweep():
    cfg = _config("sweep_convergence")
    return an.sweep_sigma(cfg.system(), [10.0, 20.0, 40.0, 80.0], cfg.ics[0], cfg.solver, _detect_kw(cfg))


@functools.lru_cache(maxsize=None)
def _reduced_orbit():
    cfg = _config("prop2_periodic")
    sys_ = cfg.system()
    red = sys_.reduced()
    tr = integrate(red, to_bar(sys_, cfg.ics[0]).x_m, cfg.solver)
    orbit = an.detect_limit_cycle(red, tr, cfg=cfg.solver, **_detect_kw(cfg))
    return red, orbit, cfg


def criterion_01():
    """Spectral identities on 200 random rooted digraphs, N <= 12."""
    rng = np.random.default_rng(SEED)
    worst, min_re = 0.0, np.inf
    for _ in range(200):
        L = build_laplacian(random_rooted_digraph(rng, int(rng.integers(2, 13))))
        sp = spectral_split(L)
        res = sp.residuals(L)
        worst = max(worst, *(abs(res[k]) for k in ("vlT_V", "Vdag_V", "V_Vdag", "vl_sum")))
        min_re = min(min_re, np.linalg.eigvals(sp.Lambda).real.min())
    return worst <= 1e-9 and min_re > 0, f"max identity residual {worst:.2e}, min Re eig(Lambda) {min_re:.3g}"


def criterion_02():
    """Two-node unit-weight network with mu = +1, -1: eigenvalues -s -/+ sqrt(s^2 + 1)."""
    cfg = _config("expmu_unstable")
    err, positive = 0.0, True
    for s in (1.0, 10.0, 100.0):
        eig = an.linearize_origin(cfg.system(s))[1]
        r = np.sqrt(s * s + 1)
        expected = np.repeat([-s - r, -s + r], 2)
        if s in (1.0, 10.0):
            err = max(err, float(np.abs(np.sort(eig.real) - expected).max() + np.abs(eig.imag).max()))
        positive &= int(np.sum(np.unique(np.round(eig.real, 9)) > 0)) == 1
    return err <= 1e-9 and positive, f"max eigenvalue error {err:.2e}, one distinct positive eigenvalue: {positive}"


def criterion_03():
    """Roots of lambda^2 + 2 s lambda + (3 + 4i) from the dense eigensolve."""
    cfg = _config("example_exp_stable")
    err = 0.0
    for s in (2.0, 5.0):
        eig = an.linearize_origin(cfg.system(s))[1]
        roots = np.roots([1.0, 2 * s, 3 + 4j])
        err = max(err, max(float(np.min(np.abs(eig - r))) for r in roots))
    re5 = np.roots([1.0, 10.0, 3 + 4j]).real
    return err <= 1e-9 and bool(np.all(re5 < 0)), f"max root error {err:.2e}, real parts at s=5 {np.round(re5, 4)}"


def criterion_04():
    """mu_mR = -0.5, s = 20: 16 ICs in a radius-5 ball reach |x| < 1e-6 by T = 200."""
    cfg = _config("prop2_gas")
    sys_ = cfg.system()
    assert cfg.ics.shape[0] == 16 and cfg.solver.t_end == 200.0
    field = sys_.field()
    norms = []
    for x0 in cfg.ics:
        tr = integrate(field, x0, cfg.solver)
        norms.append(np.linalg.norm(tr.final) if tr.completed else np.inf)
    return max(norms) < 1e-6, f"max terminal norm {max(norms):.2e} over {len(norms)} runs"


def criterion_05():
    """Reduced orbit 2pi and radius 1 to 0.1%; full network at s = 50 to 2%."""
    red, orbit, cfg = _reduced_orbit()
    c = an.classify(cfg.system(), cfg.ics[0], cfg.solver, _detect_kw(cfg))
    if c.tag != "periodic":
        return False, f"full network classified {c.tag}"
    full = c.evidence["orbit"]
    e = [orbit.alpha / (2 * np.pi) - 1, orbit.mean_radius - 1, full.alpha / (2 * np.pi) - 1, full.mean_radius - 1]
    ok = abs(e[0]) <= 1e-3 and abs(e[1]) <= 1e-3 and abs(e[2]) <= 0.02 and abs(e[3]) <= 0.02
    return ok, ("reduced period/radius rel. error {:.1e}/{:.1e}; full period/radius rel. error {:.2%}/{:.2%}"
                .format(*e))


def criterion_06():
    """Sigma sweep 10..80: period error and orbit distance non-increasing, e_v amplitude decreasing."""
    rep = _sweep()
    trends = rep.trends(0.1)
    ok = all(t == "periodic" for t in rep.classifications) and all(trends.values())
    pe = ", ".join(f"{v:.2e}" for v in rep.period_errors if v is not None)
    hd = ", ".join(f"{v:.2e}" for v in rep.orbit_distances if v is not None)
    return ok, f"period errors [{pe}], distances [{hd}], trends {trends}"


def criterion_07():
    """Reduced multipliers {1, e^(-4 pi)}; full orbits have one multiplier at 1, rest below 0.9."""
    red, orbit, cfg = _reduced_orbit()
    fl = an.floquet_classify(red, orbit, cfg=cfg.solver)
    small = abs(fl.nontrivial[0])
    ok = abs(fl.trivial - 1) <= 1e-3 and abs(small / np.exp(-4 * np.pi) - 1) <= 0.05
    worst = 0.0
    for f in _sweep().floquet:
        if f is None:
            return False, "a sweep point has no detected orbit"
        ok &= int(np.sum(np.abs(f.multipliers - 1) <= 1e-3)) == 1 and bool(np.all(np.abs(f.nontrivial) < 0.9))
        worst = max(worst, float(np.max(np.abs(f.nontrivial))))
    return ok, (f"reduced |1 - m1| {abs(fl.trivial - 1):.1e}, m2 / e^(-4pi) = {small / np.exp(-4 * np.pi):.4f}; "
                f"largest non-trivial full multiplier {worst:.2e}")


def criterion_08():
    """Tikhonov: log-log slope of sup error vs eps in [0.8, 1.2]."""
    cfg = _config("tikhonov_scaling")
    rep = an.tikhonov_compare(cfg.system(), cfg.ics[0], 10.0, [0.1, 0.05, 0.025, 0.0125], cfg.solver)
    return 0.8 <= rep.fitted_slope <= 1.2, f"slope x_m {rep.fitted_slope:.3f} (e_v {rep.fitted_slope_ev:.3f})"


def criterion_09():
    """mu_mR = 0: ultimate bound shrinks from s = 10 to s = 100, origin unstable, runs bounded."""
    cfg = _config("expmu_unstable")
    reps = {s: an.ultimate_bound(cfg.system(s), 2.0, 4, h, seed=SEED, cfg=cfg.solver) for s, h in ((10.0, 200.0), (100.0, 600.0))}
    positive = all(an.linearize_origin(cfg.system(s))[1].real.max() > 0 for s in reps)
    bounded = all(not r.diverged for r in reps.values())
    ok = reps[100.0].r < reps[10.0].r and positive and bounded
    return ok, f"r(10) = {reps[10.0].r:.4f}, r(100) = {reps[100.0].r:.4f}, positive eigenvalue {positive}, bounded {bounded}"


def criterion_10():
    """RK4 order 4 +/- 0.2; bar round trip 1e-12; bar dynamics consistency 1e-9."""
    hs = 0.1 / 2 ** np.arange(5)
    errs = [abs(integrate(lambda x: -x, np.array([1.0]), SolverConfig(method="rk4", h=h, t_end=1.0)).final[0] - np.exp(-1))
            for h in hs]
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    rng = np.random.default_rng(SEED)
    trip, cons = 0.0, 0.0
    for _ in range(100):
        N = int(rng.integers(2, 9))
        sys_ = hopf_network(rng.uniform(-1, 1, (N, 2)), random_rooted_digraph(rng, N), rng.uniform(1, 100))
        x = rng.standard_normal(sys_.dim)
        b = to_bar(sys_, x)
        trip = max(trip, float(np.abs(from_bar(sys_, b) - x).max()))
        dx = full_field(sys_, x).reshape(N, 2)
        dxm, dev = bar_field(sys_, b)
        cons = max(cons, float(np.abs(dxm - sys_.split.v_l @ dx).max()),
                   float(np.abs(dev - (sys_.split.V_dag @ dx).ravel()).max()))
    ok = abs(order - 4) <= 0.2 and trip <= 1e-12 and cons <= 1e-9
    return ok, f"RK4 order {order:.3f}, round trip {trip:.1e}, bar consistency {cons:.1e}"


CRITERIA = [criterion_01, criterion_02, criterion_03, criterion_04, criterion_05,
            criterion_06, criterion_07, criterion_08, criterion_09, criterion_10]


def _line(k, ok, summary):
    return f"CRITERION {k:2d} {'PASS' if ok else 'FAIL'}: {summary}"


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(text):
        print(text)
        if tr is not None:
            tr.write_line("")
            tr.write_line(text)

    return emit


@pytest.mark.parametrize("k", range(1, 11), ids=[f.__name__ for f in CRITERIA])
def test_criterion(k, report):
    ok, summary = CRITERIA[k - 1]()
    report(_line(k, ok, summary))
    assert ok, summary


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, 1):
        ok, summary = fn()
        results.append(ok)
        print(_line(k, ok, summary), flush=True)
    sys.exit(0 if all(results) else 1)
