"""Canned, seeded experiments with pass/fail verdicts.

Each scenario reads its committed YAML config from ``scenario_configs/`` and
derives its verdict only from the ``thresholds`` block of that file.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ExperimentConfig, load_config
from .errors import ValidationError
from .integrate import integrate
from .io import write_csv, write_json, write_trajectory_csv
from .models import reduced_hopf_params
from .network import to_bar
from .svg import line_plot

log = logging.getLogger(__name__)

__all__ = ["ScenarioResult", "run_scenario", "SCENARIOS", "config_path"]


@dataclass
class ScenarioResult:
    name: str
    verdict: str
    metrics: dict
    checks: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "verdict": self.verdict,
            "metrics": self.metrics,
            "checks": self.checks,
            "artifacts": [str(a) for a in self.artifacts],
        }


def config_path(name: str) -> Path:
    return Path(str(resources.files("netsync") / "scenario_configs" / f"{name}.yaml"))


def _detect_kw(cfg: ExperimentConfig) -> dict:
    a = cfg.analysis
    kw = {}
    if "transient" in a:
        kw["transient"] = float(a["transient"])
    if "k" in a:
        kw["k"] = int(a["k"])
    if "tol" in a:
        kw["tol"] = float(a["tol"])
    return kw


def _hopf_mu_m(sys):
    return reduced_hopf_params(sys.split.v_l, [f.params for f in sys.nodes])


def _prop2_gas(cfg, out):
    sys = cfg.system()
    th = cfg.thresholds
    mu = _hopf_mu_m(sys)
    field_ = sys.field()
    norms, statuses = [], []
    for x0 in cfg.ics:
        tr = integrate(field_, x0, cfg.solver)
        statuses.append(tr.status)
        norms.append(float(np.linalg.norm(tr.final)))
    metrics = {
        "mu_mR": mu.mu_mR,
        "mu_mI": mu.mu_mI,
        "runs": len(norms),
        "max_terminal_norm": max(norms),
        "all_completed": all(s == "completed" for s in statuses),
    }
    checks = {
        "mu_mR_matches": abs(mu.mu_mR - float(th["expected_mu_mR"])) < 1e-12,
        "all_completed": metrics["all_completed"],
        "terminal_norm": metrics["max_terminal_norm"] < float(th["terminal_norm"]),
    }
    arts = []
    if out:
        arts.append(write_csv(out / "terminal_norms.csv", ["run", "terminal_norm", "status"],
                              [(k, v, s) for k, (v, s) in enumerate(zip(norms, statuses))], cfg.seed))
    return metrics, checks, arts


def _prop2_periodic(cfg, out):
    sys = cfg.system()
    th = cfg.thresholds
    mu = _hopf_mu_m(sys)
    alpha_o = 2 * np.pi / abs(mu.mu_mI)
    r_o = np.sqrt(mu.mu_mR)
    dkw = _detect_kw(cfg)
    margin = float(cfg.analysis.get("margin", 1e-3))

    red = sys.reduced()
    x0 = cfg.ics[0]
    tr_red = integrate(red, to_bar(sys, x0).x_m, cfg.solver)
    orb_red = an.detect_limit_cycle(red, tr_red, cfg=cfg.solver, **dkw)
    fl_red = an.floquet_classify(red, orb_red, margin=margin, cfg=cfg.solver)

    c = an.classify(sys, x0, cfg.solver, dkw, margin)
    metrics = {
        "mu_mR": mu.mu_mR,
        "mu_mI": mu.mu_mI,
        "reduced_period": orb_red.alpha,
        "reduced_radius": orb_red.mean_radius,
        "reduced_multipliers": fl_red.multipliers,
        "classification": c.tag,
    }
    checks = {
        "reduced_period": abs(orb_red.alpha / alpha_o - 1) <= float(th["reduced_period_rel"]),
        "reduced_radius": abs(orb_red.mean_radius / r_o - 1) <= float(th["reduced_radius_rel"]),
        "periodic": c.tag == "periodic",
    }
    arts = []
    if c.tag == "periodic":
        orbit, fl = c.evidence["orbit"], c.evidence["floquet"]
        metrics.update(period=orbit.alpha, x_m_mean_radius=orbit.mean_radius, multipliers=fl.multipliers,
                       floquet_stable=fl.stable)
        checks["period"] = abs(orbit.alpha / alpha_o - 1) <= float(th["period_rel"])
        checks["radius"] = abs(orbit.mean_radius / r_o - 1) <= float(th["radius_rel"])
        if th.get("require_floquet_stable", True):
            checks["floquet_stable"] = fl.stable
        ag = cfg.analysis.get("almost_global")
        if ag and th.get("require_almost_global", True):
            res = an.almost_global_check(
                sys, orbit, count=int(ag["count"]), radius=float(ag["radius"]), seed=cfg.seed,
                horizon=float(ag["horizon"]), conv_tol=float(ag["conv_tol"]),
                exception_tol=float(ag["exception_tol"]), cfg=cfg.solver,
            )
            metrics["almost_global"] = {k: res[k] for k in ("count", "converged", "exceptions", "failed", "max_distance")}
            metrics["almost_global"]["converged"] = len(res["converged"])
            checks["almost_global"] = not res["failed"]
        if out:
            bars = np.array([to_bar(sys, s).x_m for s in orbit.samples])
            arts.append(write_trajectory_csv(out / "orbit.csv", orbit.times, orbit.samples, seed=cfg.seed))
            th_ = np.linspace(0, 2 * np.pi, 256)
            arts.append(line_plot(
                out / "phase_xm.svg",
                [(bars[:, 0], bars[:, 1], f"x_m, sigma={sys.sigma:g}"),
                 (r_o * np.cos(th_), r_o * np.sin(th_), "reduced cycle")],
                title="x_m phase portrait", xlabel="Re x_m", ylabel="Im x_m",
            ))
    return metrics, checks, arts


def _expmu_unstable(cfg, out):
    th = cfg.thresholds
    rows, eig_err, positive = [], 0.0, True
    for s in cfg.sigmas:
        sys = cfg.system(s)
        _, eig = an.linearize_origin(sys)
        expected = np.array([-s - np.sqrt(s * s + 1), -s + np.sqrt(s * s + 1)])
        # real form doubles each eigenvalue
        got = np.sort(eig.real)
        err = float(np.abs(got - np.repeat(np.sort(expected), 2)).max() + np.abs(eig.imag).max())
        eig_err = max(eig_err, err)
        positive &= bool(eig.real.max() > 0)
        rows.append((s, *expected, err))
    sys = cfg.system(float(cfg.analysis.get("run_sigma", cfg.sigmas[0])))
    tr = integrate(sys.field(), cfg.ics[0], cfg.solver)
    norms = np.linalg.norm(tr.states, axis=1)
    metrics = {
        "eigenvalue_error": eig_err,
        "positive_eigenvalue": positive,
        "max_norm": float(norms.max()),
        "final_norm": float(norms[-1]),
        "status": tr.status,
    }
    checks = {
        "eigenvalues": eig_err <= float(th["eigenvalue_tol"]),
        "positive_eigenvalue": positive,
        "escapes_origin": metrics["final_norm"] > float(th["escape_norm"]),
        "bounded": tr.completed and metrics["max_norm"] < float(th["bound"]),
    }
    arts = []
    if out:
        arts.append(write_csv(out / "eigenvalues.csv", ["sigma", "lambda_1", "lambda_2", "max_error"], rows, cfg.seed))
        arts.append(write_trajectory_csv(out / "trajectory.csv", tr.times, tr.states, seed=cfg.seed))
    return metrics, checks, arts


def _example_exp_stable(cfg, out):
    th = cfg.thresholds
    rows, err_max = [], 0.0
    re_last = None
    for s in cfg.sigmas:
        sys = cfg.system(s)
        _, eig = an.linearize_origin(sys)
        roots = np.roots([1.0, 2 * s, 3 + 4j])
        err = float(max(np.min(np.abs(eig - r)) for r in roots))
        err_max = max(err_max, err)
        re_last = roots.real
        rows.append((s, roots[0].real, roots[0].imag, roots[1].real, roots[1].imag, err))
    sys = cfg.system(float(cfg.analysis.get("run_sigma", cfg.sigmas[-1])))
    tr = integrate(sys.field(), cfg.ics[0], cfg.solver)
    metrics = {
        "eigenvalue_error": err_max,
        "root_real_parts_last_sigma": re_last,
        "final_norm": float(np.linalg.norm(tr.final)),
    }
    checks = {
        "eigenvalues": err_max <= float(th["eigenvalue_tol"]),
        "negative_real_parts": bool(np.all(re_last < 0)),
        "perturbation_decays": tr.completed and metrics["final_norm"] < float(th["terminal_norm"]),
    }
    arts = []
    if out:
        arts.append(write_csv(out / "roots.csv", ["sigma", "re1", "im1", "re2", "im2", "max_error"], rows, cfg.seed))
    return metrics, checks, arts


def _prop3_local(cfg, out):
    th = cfg.thresholds
    sys0 = cfg.system()
    mu = _hopf_mu_m(sys0)
    rows, cl1 = [], True
    for s in cfg.sigmas:
        _, eig = an.linearize_origin(sys0, s)
        slow = eig[np.argmin(np.abs(eig))]
        cl1 &= bool(slow.real < 0)
        rows.append((s, slow.real, slow.imag, eig.real.max()))
    run_sigma = float(cfg.analysis.get("run_sigma", cfg.sigmas[-1]))
    sys = cfg.system(run_sigma)
    _, eig = an.linearize_origin(sys)
    abscissa = float(eig.real.max())
    fit_from = float(cfg.analysis.get("fit_from", 0.5 * cfg.solver.t_end))
    rates = []
    for x0 in cfg.ics:
        tr = integrate(sys.field(), x0, cfg.solver)
        w = tr.window(fit_from)
        rates.append(float(np.polyfit(w.times, np.log(np.linalg.norm(w.states, axis=1)), 1)[0]))
    metrics = {
        "mu_mR": mu.mu_mR,
        "spectral_abscissa": abscissa,
        "fitted_rates": rates,
        "assumption_holds_on_grid": cl1,
    }
    checks = {
        "mu_mR_zero": abs(mu.mu_mR) < 1e-12,
        "slow_eigenvalue_stable": cl1,
        "exponential_decay": all(r < 0 and abs(r / abscissa - 1) <= float(th["rate_rel"]) for r in rates),
    }
    arts = []
    if out:
        arts.append(write_csv(out / "slow_eigenvalues.csv", ["sigma", "re_slow", "im_slow", "abscissa"], rows, cfg.seed))
    return metrics, checks, arts


def _tikhonov_scaling(cfg, out):
    th = cfg.thresholds
    a = cfg.analysis
    rep = an.tikhonov_compare(cfg.system(), cfg.ics[0], float(a["T"]), [float(e) for e in a["epsilons"]], cfg.solver)
    metrics = rep.to_dict()
    checks = {"slope": float(th["slope_min"]) <= rep.fitted_slope <= float(th["slope_max"])}
    arts = []
    if out:
        arts.append(write_csv(out / "tikhonov.csv", ["epsilon", "sup_error_xm", "sup_error_ev"],
                              zip(rep.epsilons, rep.sup_errors_xm, rep.sup_errors_ev), cfg.seed))
        arts.append(line_plot(out / "tikhonov.svg",
                              [(np.log10(rep.epsilons), rep.sup_errors_xm, "x_m"),
                               (np.log10(rep.epsilons), rep.sup_errors_ev, "e_v")],
                              title="Tikhonov errors", xlabel="log10 epsilon", ylabel="sup error",
                              logy=True, markers=True))
    return metrics, checks, arts


def _sweep_convergence(cfg, out):
    th = cfg.thresholds
    rep = an.sweep_sigma(cfg.system(), cfg.sigmas, cfg.ics[0], cfg.solver, _detect_kw(cfg),
                         float(cfg.analysis.get("margin", 1e-3)))
    trends = rep.trends(float(th["trend_rel"]))
    fl_ok = all(
        f is not None
        and abs(f.trivial - 1) <= float(th["trivial_tol"])
        and np.all(np.abs(f.nontrivial) < float(th["fast_modulus"]))
        for f in rep.floquet
    )
    metrics = {"rows": rep.rows(), "trends": trends,
               "multiplier_moduli": [None if f is None else np.abs(f.multipliers) for f in rep.floquet]}
    checks = {
        "all_periodic": all(t == "periodic" for t in rep.classifications),
        **trends,
        "floquet": fl_ok,
    }
    arts = write_sweep_artifacts(rep, out, cfg.seed) if out else []
    return metrics, checks, arts


def write_sweep_artifacts(rep: an.SweepReport, out: Path, seed: int) -> list:
    rows = rep.rows()
    cols = ["sigma", "classification", "period", "period_error", "orbit_distance", "ev_amplitude", "error"]
    arts = [write_csv(out / "sweep.csv", cols, ([r[c] for c in cols] for r in rows), seed)]
    ok = [r for r in rows if r["period"] is not None]
    if ok:
        s = [r["sigma"] for r in ok]
        arts.append(line_plot(out / "period_vs_sigma.svg", [(s, [r["period"] for r in ok], "period"),
                                                           (s, [rep.reference_period] * len(s), "reduced period")],
                              title="period vs sigma", xlabel="sigma", ylabel="period", markers=True))
        arts.append(line_plot(out / "distance_vs_sigma.svg", [(s, [r["orbit_distance"] for r in ok], "Hausdorff"),
                                                             (s, [r["ev_amplitude"] for r in ok], "max |e_v|")],
                              title="distance to reduced orbit", xlabel="sigma", ylabel="distance",
                              logy=True, markers=True))
    return arts


SCENARIOS = {
    "prop2_gas": _prop2_gas,
    "prop2_periodic": _prop2_periodic,
    "expmu_unstable": _expmu_unstable,
    "example_exp_stable": _example_exp_stable,
    "prop3_local": _prop3_local,
    "tikhonov_scaling": _tikhonov_scaling,
    "sweep_convergence": _sweep_convergence,
}


def run_scenario(name: str, seed: int | None = None, out=None) -> ScenarioResult:
    """Run a registered scenario; ``seed`` overrides the config's seed."""
    if name not in SCENARIOS:
        raise ValidationError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    cfg = load_config(config_path(name), seed=seed)
    out = Path(out) if out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    metrics, checks, arts = SCENARIOS[name](cfg, out)
    checks = {k: bool(v) for k, v in checks.items()}
    verdict = "pass" if all(checks.values()) else "fail"
    result = ScenarioResult(name, verdict, metrics, checks, list(arts), cfg.seed)
    if out is not None:
        path = out / f"{name}.json"
        result.artifacts.append(path)
        write_json(path, result.to_dict())
    return result
