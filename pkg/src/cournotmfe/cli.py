"""Command-line front end.

Reads a parameter file (JSON object or flat key/value lines), runs solves,
sweeps or simulations, and writes plot-ready CSV/JSON artifacts.  No
plotting here by design.

Exit codes: 0 success, 1 input error, 2 numerical non-convergence,
3 divergent-moment condition.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .equilibrium import solve_equilibrium
from .errors import (
    ConfigError,
    DivergentMomentError,
    FixedPointError,
    HeavyTailError,
    InvalidParamsError,
    ThresholdSolveError,
)
from .metrics import concentration, elasticities, table1_rows, v_star
from .params import ModelParams, load_params, validate
from .simulate import SimConfig, corridor_stats, simulate
from .thresholds import value_functions

_SWEEP_QUANTITIES = (
    "a1", "a2", "Q1", "Q2", "eta1", "eta2", "theta2",
    "P_corridor", "chi_inf", "variance", "ratio", "gini_H",
)


def _round12(x) -> float:
    return float(format(float(x), ".12g"))


def _fmt(x) -> str:
    if isinstance(x, float) or isinstance(x, np.floating):
        return format(float(x), ".12g")
    return str(x)


def _write_json(path: Path, obj: dict) -> None:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(u) for k, u in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(u) for u in v]
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, (float, np.floating)):
            return _round12(v)
        if isinstance(v, (int, np.integer)):
            return int(v)
        return v

    path.write_text(json.dumps(clean(obj), indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load(args) -> ModelParams:
    params = load_params(args.config)
    report = validate(params)
    for w in report.warnings:
        print(f"warning: {w.name}: {w.message}", file=sys.stderr)
    if not report.usable:
        raise ConfigError(str(report))
    return params


def _equilibrium_summary(params, eq) -> dict:
    return {
        "params": params.to_dict(),
        "Q_star": list(eq.Q_star),
        "a_star": list(eq.a_star),
        "eta_star": list(eq.eta_star),
        "theta2": eq.theta2,
        "residual": eq.residual,
        "bracket_width": eq.bracket_width,
        "iterations": eq.iterations,
        "Q_bounds": [list(eq.bounds.Q_low), list(eq.bounds.Q_high)],
        "threshold_low_regime": eq.thresholds.low_regime,
        "threshold_residual": eq.thresholds.residual,
        "threshold_solver": eq.thresholds.method,
    }


def cmd_solve(args) -> int:
    params = _load(args)
    eq = solve_equilibrium(params)
    out = Path(args.out)
    _write_json(out / "equilibrium.json", _equilibrium_summary(params, eq))
    rows = []
    for t in eq.trace:
        L = t.get("L", ("", ""))
        U = t.get("U", ("", ""))
        Q = t.get("Q", ("", ""))
        rows.append((t["iter"], L[0], L[1], U[0], U[1],
                     t.get("width", ""), Q[0], Q[1], t.get("residual", "")))
    _write_csv(
        out / "equilibrium_trace.csv",
        ("iter", "L1", "L2", "U1", "U2", "width", "Q1", "Q2", "residual"),
        rows,
    )
    vf = value_functions(params, eq.eta_star, eq.thresholds)
    lo = min(eq.a_star) * 0.5
    hi = max(eq.a_star) * 50.0
    xs = np.geomspace(lo, hi, 400)
    _write_csv(
        out / "value_functions.csv",
        ("x", "v1", "v2", "V1", "V2"),
        zip(xs, vf.v(xs, 1), vf.v(xs, 2), vf.V(xs, 1), vf.V(xs, 2)),
    )
    print(f"solved: Q*=({eq.Q_star[0]:.6g}, {eq.Q_star[1]:.6g}) "
          f"a*=({eq.a_star[0]:.6g}, {eq.a_star[1]:.6g}) residual={eq.residual:.2e}")
    return 0


def cmd_simulate(args) -> int:
    params = _load(args)
    eq = solve_equilibrium(params)
    cfg = SimConfig(
        barriers=eq.a_star, horizon=args.horizon, dt=args.dt,
        n_paths=args.paths, seed=args.seed, burn_in=args.burn_in,
        scheme=args.scheme, store_paths=args.store_paths,
        record_stride=args.record_stride,
    )
    stats = simulate(params, cfg)
    out = Path(args.out)
    payload = stats.to_dict()
    payload["ks_marginal"] = stats.ks_marginal(eq.law)
    p_an, chi_an = corridor_stats(eq.law)
    payload["corridor_prob_analytic"] = p_an
    payload["corridor_share_analytic"] = chi_an
    payload["cond_mean1_analytic"] = eq.law.conditional_mean(1)
    payload["cond_mean2_analytic"] = eq.law.conditional_mean(2)
    _write_json(out / "sim_stats.json", payload)
    if stats.trajectories is not None:
        tr = stats.trajectories
        rows = []
        for j in range(tr["X"].shape[0]):
            for k in range(tr["t"].size):
                rows.append((j, tr["t"][k], tr["X"][j, k], tr["regime"][j, k], tr["I"][j, k]))
        _write_csv(out / "trajectories.csv",
                   ("path", "t", "X", "regime", "I_cumulative"), rows)
    print(f"simulated {cfg.n_paths} paths to t={cfg.horizon:g}: "
          f"KS={payload['ks_marginal']:.4f} "
          f"cond means=({stats.cond_means[0]:.4g}, {stats.cond_means[1]:.4g})")
    return 0


def _sweep_point(task):
    """Solve one sweep grid point; returns (value, {quantity: result}, status)."""
    base_dict, name, value = task
    params = ModelParams(**base_dict)
    try:
        if name == "inv_p1":
            params = params.replace(p1=1.0 / value)
        elif name == "inv_p2":
            params = params.replace(p2=1.0 / value)
        else:
            params = params.replace(**{name: value})
        eq = solve_equilibrium(params)
        res = {
            "a1": eq.a_star[0], "a2": eq.a_star[1],
            "Q1": eq.Q_star[0], "Q2": eq.Q_star[1],
            "eta1": eq.eta_star[0], "eta2": eq.eta_star[1],
            "theta2": eq.theta2,
        }
        res["P_corridor"], res["chi_inf"] = corridor_stats(eq.law)
        rep = concentration(params, eq, curve_points=0)
        res["variance"] = rep.variance
        res["ratio"] = rep.ratio
        res["gini_H"] = rep.gini_H
        return value, res, "ok"
    except (InvalidParamsError, ThresholdSolveError, FixedPointError) as exc:
        return value, {}, f"non_convergent:{type(exc).__name__}"
    except (HeavyTailError, DivergentMomentError) as exc:
        return value, {}, f"divergent:{type(exc).__name__}"


def cmd_sweep(args) -> int:
    params = _load(args)
    if args.param is None or args.start is None or args.stop is None:
        raise ConfigError("sweep requires --param, --from and --to")
    valid = set(params.to_dict()) | {"inv_p1", "inv_p2"}
    if args.param not in valid:
        raise ConfigError(f"unknown sweep parameter {args.param!r}")
    grid = np.linspace(args.start, args.stop, args.points)
    tasks = [(params.to_dict(), args.param, float(v)) for v in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    rows = []
    n_fail = 0
    for value, res, status in results:
        n_fail += status != "ok"
        for q in _SWEEP_QUANTITIES:
            rows.append((args.param, value, q, res.get(q, ""), status))
    out = Path(args.out)
    _write_csv(out / "sweep.csv",
               ("parameter", "value", "quantity", "result", "status"), rows)
    print(f"sweep {args.param}: {len(grid)} points, {n_fail} failed")
    return 0


def cmd_elasticities(args) -> int:
    params = _load(args)
    try:
        rep = elasticities(params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    _write_json(
        out / "elasticities.json",
        {
            "v_star": rep.v_star_base,
            "chi_sigma1": rep.chi_sigma1,
            "chi_p1": rep.chi_p1,
            "chi_varphi1": rep.chi_varphi1,
            "rel_step": rep.rel_step,
            "richardson_ok": rep.richardson_ok,
            "coarse": rep.coarse,
        },
    )
    _write_csv(
        out / "elasticities.csv",
        ("chi_sigma1", "chi_p1", "chi_varphi1", "v_star"),
        [(rep.chi_sigma1, rep.chi_p1, rep.chi_varphi1, rep.v_star_base)],
    )
    print(f"chi_sigma1={rep.chi_sigma1:.4f} chi_p1={rep.chi_p1:.2e} "
          f"chi_varphi1={rep.chi_varphi1:.4f}")
    return 0


def cmd_table1(args) -> int:
    rows = table1_rows()
    out = Path(args.out)
    _write_csv(
        out / "table1.csv",
        ("sigma2", "varphi2", "chi_sigma1", "chi_varphi1", "chi_p1", "v_star"),
        [
            (r["sigma2"], r["varphi2"], r["chi_sigma1"], r["chi_varphi1"],
             r["chi_p1"], r["v_star"])
            for r in rows
        ],
    )
    print(f"wrote {len(rows)} elasticity rows")
    return 0


def cmd_dist(args) -> int:
    params = _load(args)
    eq = solve_equilibrium(params)
    law = eq.law
    x_hi = law.quantile(0.9999)
    xs = np.geomspace(0.8 * min(eq.a_star), x_hi, 500)
    tab = law.dist_table(xs)
    _write_csv(
        Path(args.out) / "dist.csv",
        ("x", "cdf1", "cdf2", "pdf1", "pdf2"),
        zip(tab["x"], tab["cdf1"], tab["cdf2"], tab["pdf1"], tab["pdf2"]),
    )
    print(f"distribution table written (theta2={eq.theta2:.4f})")
    return 0


def cmd_gini(args) -> int:
    params = _load(args)
    eq = solve_equilibrium(params)
    rep = concentration(params, eq)
    out = Path(args.out)
    _write_csv(out / "gini_curve.csv", ("q", "Qbar"),
               zip(rep.gini_q, rep.gini_curve))
    _write_json(
        out / "gini.json",
        {
            "gini_H": rep.gini_H,
            "mean": rep.mean,
            "variance": rep.variance if not rep.variance_divergent else None,
            "ratio": rep.ratio if not rep.variance_divergent else None,
            "variance_divergent": rep.variance_divergent,
        },
    )
    print(f"gini_H={rep.gini_H:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cournotmfe",
        description="Stationary mean-field equilibrium of a regime-switching "
        "irreversible-investment Cournot industry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="parameter file (JSON or flat key/value lines)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="equilibrium + value-function tables")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo at the equilibrium barriers")
    common(p)
    p.add_argument("--horizon", type=float, default=500.0)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--burn-in", type=float, default=0.2, dest="burn_in")
    p.add_argument("--scheme", choices=("projection", "bridge"), default="projection")
    p.add_argument("--store-paths", type=int, default=1, dest="store_paths")
    p.add_argument("--record-stride", type=int, default=50, dest="record_stride")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="re-solve along a one-parameter grid")
    common(p)
    p.add_argument("--param", help="config key, or inv_p1 / inv_p2")
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("elasticities", help="value elasticities at a symmetric point")
    common(p)
    p.set_defaults(func=cmd_elasticities)

    p = sub.add_parser("table1", help="elasticity grid at the standard base points")
    common(p, config_required=False)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("dist", help="stationary CDF/PDF table")
    common(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("gini", help="concentration indices and capacity-share curve")
    common(p)
    p.set_defaults(func=cmd_gini)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except (ConfigError, FileNotFoundError, InvalidParamsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ThresholdSolveError, FixedPointError) as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 2
    except (HeavyTailError, DivergentMomentError) as exc:
        print(f"error: divergent moment: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
