"""Batch front-end: parse config, run scenarios, emit tables and oracle reports.

Outputs (all under --out):
  results.csv       scenario rows: scenario,T,T_L,gamma,n_paths,n_steps,seed,
                    mean,ci_mean,var,ci_var,roer
  moments.csv       closed-form vs Monte Carlo moments for the stock and the intensity
  bond_check.csv    affine bond price vs Monte Carlo survival discounting
  paths.csv         optional per-path dump (--dump-paths K)
  summary.json      every oracle check with pass/fail (no timestamps)
  run_metadata.json timing and environment details (kept separate so CSV/JSON
                    bodies are byte-identical across reruns)

Exit codes: 0 success, 1 oracle failure beyond tolerance, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bond import riccati_residual, survival_factor
from .bsurface import Estimator, SurfaceGrid
from .kernels import Measure, PathGrid, sample_jcir_terminal, simulate_joint_path, simulate_stock_path
from .moments import lambda_moments, stock_moments
from .params import (
    InvalidParams,
    MarketParams,
    MortalityParams,
    Scenario,
    ScenarioSpec,
    load_config,
    with_overrides,
)
from .portfolio import ansatz_consistency_check, simulate_terminal_wealth, write_wealth_dump
from .strategy import prepare_scenario

_SCENARIO_CHOICES = [s.value for s in Scenario] + ["tables"]


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.10g}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="longmv",
        description="Mean-variance equilibrium portfolios with a longevity bond: scenario runner.",
    )
    p.add_argument("--config", type=Path, help="flat key=value parameter file")
    p.add_argument("--scenario", choices=_SCENARIO_CHOICES, default="baseline",
                   help="scenario to run, or 'tables' for the full table set")
    p.add_argument("--paths", type=int, help="Monte Carlo paths per run")
    p.add_argument("--steps", type=int, help="time steps per run")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--horizon", type=float, help="insurance horizon T in years")
    p.add_argument("--bond-maturity", type=float, help="bond maturity T_L in years")
    p.add_argument("--gamma", type=float, help="risk aversion")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--cache", type=Path, help="surface cache directory (reused across runs)")
    p.add_argument("--dump-paths", type=int, default=0, metavar="K",
                   help="dump the first K joint paths to paths.csv")
    p.add_argument("--estimator", choices=[e.value for e in Estimator],
                   default=Estimator.DIRECT_PSTAR.value, help="surface estimator")
    p.add_argument("--surface-nt", type=int, help="surface time nodes")
    p.add_argument("--surface-nlambda", type=int, help="surface intensity nodes")
    p.add_argument("--surface-inner", type=int, help="surface inner paths per row")
    p.add_argument("--surface-substeps", type=int, help="surface substeps per row interval")
    p.add_argument("--verbose", action="store_true", help="progress lines on stderr")
    return p


def _surface_grid(args) -> SurfaceGrid:
    base = SurfaceGrid()
    return SurfaceGrid(
        n_t=args.surface_nt or base.n_t,
        n_lambda=args.surface_nlambda or base.n_lambda,
        lambda_max=base.lambda_max,
        n_inner=args.surface_inner or base.n_inner,
        substeps=args.surface_substeps or base.substeps,
    )


def _scenario_list(name: str, spec: ScenarioSpec) -> list[ScenarioSpec]:
    """Expand a scenario name into concrete run specs."""
    if name != "tables":
        sc = Scenario(name)
        if sc is Scenario.LONG_BOND and spec.T_L <= spec.T:
            spec = replace(spec, T_L=15.0)
        return [replace(spec, scenario=sc)]
    runs = []
    for T in (10.0, 15.0, 25.0):
        runs.append(replace(spec, scenario=Scenario.BASELINE, T=T, T_L=T,
                            n_steps=int(round(spec.n_steps * T / spec.T))))
    for sc in (Scenario.NO_LONGEVITY, Scenario.JUMP_BLIND, Scenario.BROWNIAN_ONLY,
               Scenario.NORMAL_JUMPS):
        runs.append(replace(spec, scenario=sc))
    for T_L in (15.0, 25.0):
        runs.append(replace(spec, scenario=Scenario.LONG_BOND, T_L=T_L))
    return runs


def _moment_checks(m: MarketParams, q: MortalityParams, spec: ScenarioSpec, rows: list) -> list[dict]:
    """Closed-form vs Monte Carlo moments for S_T and lambda_T at the run scale."""
    checks = []
    grid = PathGrid(0.0, spec.T, spec.n_steps)
    n = spec.n_paths

    sm = stock_moments(m, spec.T)
    s_res = simulate_stock_path(m, grid, spec.seed, n)
    s_t = s_res.terminal
    ci_mean = 1.96 * s_t.std(ddof=1) / np.sqrt(n)
    c4 = ((s_t - s_t.mean()) ** 4).mean()
    ci_var = 1.96 * np.sqrt(max(c4 - s_t.var(ddof=1) ** 2, 0.0) / n)
    ok = abs(s_t.mean() - sm.mean) <= ci_mean and abs(s_t.var(ddof=1) - sm.variance) <= ci_var
    rows.append(("stock", spec.T, sm.mean, sm.variance, s_t.mean(), s_t.var(ddof=1), ci_mean, ci_var, ok))
    checks.append({"name": "stock_moments_mc", "pass": bool(ok),
                   "analytic": [sm.mean, sm.variance],
                   "mc": [float(s_t.mean()), float(s_t.var(ddof=1))]})

    lm_pair = lambda_moments(q, spec.T)
    lam_t, _ = sample_jcir_terminal(q, Measure.P, grid, spec.seed + 1, n)
    ci_mean = 1.96 * lam_t.std(ddof=1) / np.sqrt(n)
    c4 = ((lam_t - lam_t.mean()) ** 4).mean()
    ci_var = 1.96 * np.sqrt(max(c4 - lam_t.var(ddof=1) ** 2, 0.0) / n)
    ok = (abs(lam_t.mean() - lm_pair.mean) <= ci_mean
          and abs(lam_t.var(ddof=1) - lm_pair.variance) <= ci_var)
    rows.append(("lambda", spec.T, lm_pair.mean, lm_pair.variance, lam_t.mean(),
                 lam_t.var(ddof=1), ci_mean, ci_var, ok))
    checks.append({"name": "lambda_moments_mc", "pass": bool(ok),
                   "analytic": [lm_pair.mean, lm_pair.variance],
                   "mc": [float(lam_t.mean()), float(lam_t.var(ddof=1))]})
    return checks


def _bond_check(m: MarketParams, q: MortalityParams, spec: ScenarioSpec, rows: list) -> dict:
    grid = PathGrid(0.0, spec.T_L, max(1, int(round(250 * spec.T_L))))
    _, int_lam = sample_jcir_terminal(q, Measure.Q, grid, spec.seed + 2, spec.n_paths)
    surv = np.exp(-int_lam)
    mc = float(np.exp(-m.r * spec.T_L) * surv.mean())
    affine = float(np.exp(-m.r * spec.T_L) * survival_factor(0.0, spec.T_L, q.lambda0, q))
    rel = abs(mc / affine - 1.0)
    # 0.5% at oracle scale; widened for small smoke runs where noise dominates
    se_rel = float(surv.std(ddof=1) / np.sqrt(surv.size) / surv.mean())
    tol = max(5e-3, 3.0 * se_rel)
    resid = float(np.max(np.abs(riccati_residual(np.linspace(0, spec.T_L, 101), spec.T_L, q))))
    ok = rel <= tol and resid < 1e-8
    rows.append((0.0, spec.T_L, q.lambda0, affine, mc, rel, tol, ok))
    return {"name": "bond_price_mc", "pass": bool(ok), "affine": affine, "mc": mc,
            "rel_err": rel, "tol": tol, "riccati_residual": resid}


def _martingale_checks(m, q, spec: ScenarioSpec) -> list[dict]:
    grid = PathGrid(0.0, spec.T, spec.n_steps)
    from .bond import bond_price

    res_q = simulate_joint_path(m, q, spec.T_L, grid, spec.seed + 3, spec.n_paths,
                                measure=Measure.Q, with_stock=False)
    disc_y = np.exp(-m.r * spec.T) * res_q.y_terminal
    y0 = bond_price(0.0, spec.T_L, q.lambda0, q, m.r)
    se = disc_y.std(ddof=1) / np.sqrt(disc_y.size)
    ok_y = abs(disc_y.mean() - y0) <= 1.96 * se
    res_p = simulate_joint_path(m, q, spec.T_L, grid, spec.seed + 4, spec.n_paths,
                                measure=Measure.P, with_stock=False)
    phi = res_p.phi_terminal
    se_p = phi.std(ddof=1) / np.sqrt(phi.size)
    ok_phi = abs(phi.mean() - 1.0) <= 1.96 * se_p
    return [
        {"name": "discounted_bond_value_martingale", "pass": bool(ok_y),
         "mc": float(disc_y.mean()), "target": y0, "se": float(se)},
        {"name": "density_factor_martingale", "pass": bool(ok_phi),
         "mc": float(phi.mean()), "target": 1.0, "se": float(se_p)},
    ]


def run(args) -> int:
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    t_start = time.time()

    def log(msg: str):
        if args.verbose:
            print(msg, file=sys.stderr)

    if args.config is not None:
        m, q, spec = load_config(args.config)
    else:
        m, q, spec = MarketParams(), MortalityParams(), ScenarioSpec()
    spec = with_overrides(
        spec,
        n_paths=args.paths,
        n_steps=args.steps,
        seed=args.seed,
        T=args.horizon,
        T_L=args.bond_maturity,
        gamma=args.gamma,
    )
    if args.horizon is not None and args.bond_maturity is None and spec.T_L < spec.T:
        spec = replace(spec, T_L=spec.T)
    from .params import validate_params

    validate_params(m, q, spec)

    grid = _surface_grid(args)
    estimator = Estimator(args.estimator)
    checks: list[dict] = []
    timings: dict = {}

    # oracle checks at the run scale
    log(f"oracle checks at {spec.n_paths} paths ...")
    t0 = time.time()
    moment_rows: list = []
    checks += _moment_checks(m, q, spec, moment_rows)
    with open(out_dir / "moments.csv", "w") as fh:
        fh.write("quantity,t,analytic_mean,analytic_variance,mc_mean,mc_variance,"
                 "ci_mean,ci_variance,within_ci\n")
        for r in moment_rows:
            cells = [r[0]] + [_fmt(v) for v in r[1:-1]] + [str(r[-1]).lower()]
            fh.write(",".join(cells) + "\n")
    timings["moments_s"] = round(time.time() - t0, 2)

    t0 = time.time()
    bond_rows: list = []
    checks.append(_bond_check(m, q, spec, bond_rows))
    with open(out_dir / "bond_check.csv", "w") as fh:
        fh.write("t,T_L,lambda0,affine,mc,rel_err,tol,within_tol\n")
        for r in bond_rows:
            fh.write(",".join(str(v).lower() if isinstance(v, bool) else _fmt(v) for v in r) + "\n")
    timings["bond_s"] = round(time.time() - t0, 2)

    t0 = time.time()
    checks += _martingale_checks(m, q, spec)
    timings["martingales_s"] = round(time.time() - t0, 2)

    # scenario runs
    runs = _scenario_list(args.scenario, spec)
    results_path = out_dir / "results.csv"
    with open(results_path, "w") as fh:
        fh.write("scenario,T,T_L,gamma,n_paths,n_steps,seed,mean,ci_mean,var,ci_var,roer\n")
    scenario_summaries = []
    for run_spec in runs:
        t0 = time.time()
        log(f"scenario {run_spec.scenario.value} T={run_spec.T:g} T_L={run_spec.T_L:g} ...")
        # hold the surface's inner time step roughly horizon-invariant
        run_grid = replace(grid, substeps=int(np.ceil(grid.substeps * run_spec.T / 10.0)))
        art = prepare_scenario(m, q, run_spec, grid=run_grid, estimator=estimator,
                               cache_dir=args.cache, surface_seed=run_spec.seed)
        dump_k = args.dump_paths if run_spec is runs[0] else 0
        res = simulate_terminal_wealth(art, run_spec, dump_paths=dump_k)
        s = res.summary
        with open(results_path, "a") as fh:
            fh.write(
                f"{run_spec.scenario.value},{_fmt(run_spec.T)},{_fmt(run_spec.T_L)},"
                f"{_fmt(run_spec.gamma)},{run_spec.n_paths},{run_spec.n_steps},{run_spec.seed},"
                f"{_fmt(s.mean_pt)},{_fmt(s.ci_mean_halfwidth)},{_fmt(s.var_pt)},"
                f"{_fmt(s.ci_var_halfwidth)},{_fmt(s.roer)}\n"
            )
        entry = {
            "scenario": run_spec.scenario.value, "T": run_spec.T, "T_L": run_spec.T_L,
            "mean": s.mean_pt, "var": s.var_pt, "roer": s.roer,
            "ci_mean": s.ci_mean_halfwidth, "wide_ci": bool(s.ci_mean_halfwidth > 0.01 * max(s.mean_pt, 1e-12)),
        }
        if res.dump is not None:
            write_wealth_dump(out_dir / "paths.csv", res.dump)
        if run_spec.scenario is Scenario.BASELINE:
            rep = ansatz_consistency_check(art, run_spec)
            checks.append({
                "name": f"ansatz_consistency_T{run_spec.T:g}", "pass": bool(rep.passed),
                "predicted": rep.predicted, "mc": rep.mc_mean, "tol": rep.tolerance,
            })
            surf = art.surface
            checks.append({
                "name": f"terminal_row_zero_T{run_spec.T:g}",
                "pass": bool(np.all(surf.b[-1] == 0.0)),
            })
        scenario_summaries.append(entry)
        timings[f"run_{run_spec.scenario.value}_T{run_spec.T:g}_TL{run_spec.T_L:g}_s"] = round(
            time.time() - t0, 2
        )

    all_pass = all(c["pass"] for c in checks)
    summary = {
        "version": __version__,
        "scenario_request": args.scenario,
        "spec": {"T": spec.T, "T_L": spec.T_L, "gamma": spec.gamma, "p0": spec.p0,
                 "n_paths": spec.n_paths, "n_steps": spec.n_steps, "seed": spec.seed},
        "checks": checks,
        "all_checks_pass": all_pass,
        "scenarios": scenario_summaries,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    timings["total_s"] = round(time.time() - t_start, 2)
    (out_dir / "run_metadata.json").write_text(
        json.dumps({"finished_unix": time.time(), "timings": timings}, indent=2) + "\n"
    )
    return 0 if all_pass else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return run(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InvalidParams as e:
        print(f"invalid parameters: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
