"""Command-line interface.

Exit codes: 0 success (or scenario pass), 1 scenario fail, 2 validation
error, 3 numerical failure, 4 analysis inconclusive.  On any nonzero exit
other than a scenario fail, a JSON object ``{"error", "message",
"problems"}`` is written to standard error.

Output files, all prefixed by a ``# seed=S`` line (CSV) or a ``seed`` key
(JSON):

decompose  split.csv (blocks v_l, V, V_dag, Lambda), residuals.json
simulate   trajectory.csv (t, x_0..), trajectory_bar.csv (t, xm_0.., ev_0..)
reduced    reduced.csv (t, xm_0..), reduced.json
sweep      sweep.json, sweep.csv, period_vs_sigma.svg, distance_vs_sigma.svg
floquet    orbit.csv (t, x_0..), floquet.json
scenario   <name>.json plus scenario-specific CSV/SVG files
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import load_config
from .errors import (
    ConsistencyError,
    DisconnectedGraphError,
    InvalidOrbitError,
    NetsyncError,
    NotPeriodicError,
    NumericalError,
    ValidationError,
)
from .integrate import integrate
from .io import write_json, write_split_csv, write_trajectory_csv
from .models import HopfField, reduced_hopf_params
from .network import to_bar
from .scenarios import SCENARIOS, run_scenario, write_sweep_artifacts

log = logging.getLogger("netsync")

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


def _emit(args, text):
    if not args.quiet:
        print(text)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    return load_config(args.config, seed=args.seed, sigma=args.sigma)


def _check_completed(tr, what="integration"):
    if not tr.completed:
        raise NumericalError(f"{what} {tr.status} at t={tr.times[-1]:g}")


def cmd_decompose(args) -> int:
    cfg = _load(args)
    sys_ = cfg.system()
    out = _out(args)
    res = sys_.split.residuals(sys_.laplacian)
    write_split_csv(out / "split.csv", sys_.split, cfg.seed)
    write_json(out / "residuals.json", {"residuals": res, "eig_Lambda": np.linalg.eigvals(sys_.split.Lambda)}, cfg.seed)
    _emit(args, "v_l = " + np.array2string(sys_.split.v_l, precision=12))
    _emit(args, "max residual = %.3e" % max(res.values()))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    sys_ = cfg.system()
    out = _out(args)
    field = sys_.field()
    n, N = sys_.n, sys_.N
    bar_names = [f"xm_{k}" for k in range(n)] + [f"ev_{k}" for k in range(n * (N - 1))]
    for k, x0 in enumerate(cfg.ics):
        tr = integrate(field, x0, cfg.solver)
        suffix = "" if len(cfg.ics) == 1 else f"_{k}"
        write_trajectory_csv(out / f"trajectory{suffix}.csv", tr.times, tr.states, seed=cfg.seed)
        bars = np.array([to_bar(sys_, s).vector() for s in tr.states])
        write_trajectory_csv(out / f"trajectory_bar{suffix}.csv", tr.times, bars, seed=cfg.seed, names=bar_names)
        _emit(args, f"run {k}: {tr.status}, {len(tr.times)} points, |x(T)| = {np.linalg.norm(tr.final):.6g}")
        _check_completed(tr, f"run {k}")
    return EXIT_OK


def cmd_reduced(args) -> int:
    cfg = _load(args)
    sys_ = cfg.system()
    out = _out(args)
    xm0 = to_bar(sys_, cfg.ics[0]).x_m
    tr = integrate(sys_.reduced(), xm0, cfg.solver)
    write_trajectory_csv(out / "reduced.csv", tr.times, tr.states, prefix="xm", seed=cfg.seed)
    report = {"status": tr.status, "x_m0": xm0, "x_m_final": tr.final, "v_l": sys_.split.v_l}
    if all(isinstance(f, HopfField) for f in sys_.nodes):
        mu = reduced_hopf_params(sys_.split.v_l, [f.params for f in sys_.nodes])
        report["mu_m"] = {"mu_mR": mu.mu_mR, "mu_mI": mu.mu_mI}
        _emit(args, f"mu_m = {mu.mu_mR:.12g} {mu.mu_mI:+.12g}i")
    write_json(out / "reduced.json", report, cfg.seed)
    _check_completed(tr, "reduced integration")
    return EXIT_OK


def _detect_kw(cfg):
    a = cfg.analysis
    return {k: cast(a[k]) for k, cast in (("transient", float), ("k", int), ("tol", float)) if k in a}


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out(args)
    rep = an.sweep_sigma(
        cfg.system(), cfg.sigmas, cfg.ics[0], cfg.solver, _detect_kw(cfg),
        float(cfg.analysis.get("margin", 1e-3)), workers=args.workers,
    )
    trends = rep.trends(float(cfg.thresholds.get("trend_rel", cfg.analysis.get("trend_rel", 0.1))))
    write_json(out / "sweep.json", {"reference_period": rep.reference_period, "rows": rep.rows(), "trends": trends,
                                    "floquet": rep.floquet}, cfg.seed)
    write_sweep_artifacts(rep, out, cfg.seed)
    for r in rep.rows():
        _emit(args, f"sigma={r['sigma']:g}: {r['classification']}, period={r['period']}, distance={r['orbit_distance']}")
    return EXIT_OK


def cmd_floquet(args) -> int:
    cfg = _load(args)
    sys_ = cfg.system()
    out = _out(args)
    c = an.classify(sys_, cfg.ics[0], cfg.solver, _detect_kw(cfg), float(cfg.analysis.get("margin", 1e-3)))
    if c.tag == "diverged":
        raise NumericalError(f"integration {c.evidence['status']} at t={c.evidence['t_abort']:g}")
    if "orbit" not in c.evidence:
        reason = c.evidence.get("reason")
        raise NotPeriodicError(f"no periodic orbit found (classification {c.tag})" + (f": {reason}" if reason else ""))
    orbit, fl = c.evidence["orbit"], c.evidence["floquet"]
    write_trajectory_csv(out / "orbit.csv", orbit.times, orbit.samples, seed=cfg.seed)
    write_json(out / "floquet.json", {"classification": c.tag, "orbit": orbit, "floquet": fl}, cfg.seed)
    _emit(args, f"period = {orbit.alpha:.10g}, stable = {fl.stable}")
    _emit(args, "multipliers: " + ", ".join(f"{abs(m):.6g}" for m in fl.multipliers))
    return EXIT_OK


def cmd_scenario(args) -> int:
    out = Path(args.out) if args.out else None
    res = run_scenario(args.name, seed=args.seed, out=out)
    _emit(args, json.dumps({"name": res.name, "verdict": res.verdict, "checks": res.checks}))
    return EXIT_OK if res.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--quiet", action="store_true", help="suppress console summaries")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = argparse.ArgumentParser(prog="netsync", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, help_ in (
        ("decompose", cmd_decompose, "Laplacian spectral split and identity residuals"),
        ("simulate", cmd_simulate, "integrate the network; stacked and bar trajectories"),
        ("reduced", cmd_reduced, "integrate the reduced-order system"),
        ("sweep", cmd_sweep, "coupling-strength sweep with orbit and trend reports"),
        ("floquet", cmd_floquet, "detect a periodic orbit and its Floquet multipliers"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--sigma", type=float, default=None, help="override the coupling strength")
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=1, help="threads for sigma points")
        sp.set_defaults(func=func)

    sc = sub.add_parser("scenario", help="canned experiments")
    sc_sub = sc.add_subparsers(dest="action", required=True)
    run = sc_sub.add_parser("run", parents=[common], help="run one scenario")
    run.add_argument("name", choices=sorted(SCENARIOS))
    run.set_defaults(func=cmd_scenario)
    ls = sc_sub.add_parser("list", help="list scenario names")
    ls.set_defaults(func=lambda a: print("\n".join(sorted(SCENARIOS))) or EXIT_OK, quiet=False)
    return p


def _fail(code, exc) -> int:
    problems = getattr(exc, "problems", [str(exc)])
    payload = {"error": type(exc).__name__, "message": str(exc), "problems": problems, "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValidationError, DisconnectedGraphError) as exc:
        return _fail(EXIT_VALIDATION, exc)
    except (NumericalError, ConsistencyError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except (NotPeriodicError, InvalidOrbitError) as exc:
        return _fail(EXIT_INCONCLUSIVE, exc)
    except NetsyncError as exc:
        return _fail(EXIT_NUMERICAL, exc)


if __name__ == "__main__":
    sys.exit(main())
