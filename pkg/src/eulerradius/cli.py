"""Command line experiments.

Every subcommand writes plot-ready CSV files and a ``manifest.json`` (config
echo, library versions, empirical constants) into ``--out``. Settings come
from defaults, then ``--config file.json``, then the environment variable
``EULERRADIUS_WORKERS`` (worker count only), then explicit flags.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import random
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import flows, gevrey, multiindex, neumann, probes, radius
from .fields import load_field, random_field, save_field, slab_shape

WORKERS_ENV = "EULERRADIUS_WORKERS"


# -- output helpers -----------------------------------------------------------


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return str(v)


def write_csv(path: Path, header, rows) -> int:
    """Rows are dicts keyed by column or sequences in column order."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            vals = [r[h] for h in header] if isinstance(r, dict) else r
            w.writerow([_fmt(v) for v in vals])
            n += 1
    return n


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return {"exact": _fmt(v), "float": float(v)}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Path):
        return str(v)
    return v


def write_manifest(out: Path, command: str, config: dict, constants: dict, outputs: list[str], status: str, notes=None) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(config.items()) if k not in ("func", "config")},
        "versions": {
            "eulerradius": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "empirical_constants": constants,
        "outputs": sorted(outputs),
        "status": status,
        "partial": status != "ok",
        "notes": notes or [],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _alpha(text: str) -> multiindex.MultiIndex:
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("alpha must look like a1,a2,a3")
    return multiindex.MultiIndex.of(parts)


def _t_grid(text: str) -> np.ndarray:
    try:
        start, step, stop = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("t-grid must look like start:step:stop") from exc
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def _orders(text: str):
    return tuple(int(x) for x in text.split(","))


# -- verify-lemmas ------------------------------------------------------------


def cmd_verify_lemmas(args, out: Path) -> tuple[dict, list[str], list[str]]:
    header = ("lemma_id", "parameters", "lhs", "rhs", "ratio", "pass")
    rows = []
    constants = {}

    viol = multiindex.verify_choose_lemma(args.max_order, workers=args.workers)
    worst = Fraction(0)
    for a, b, r, bound in multiindex.choose_lemma_rows(args.max_order):
        q = r / bound
        worst = max(worst, q)
        rows.append(("choose", f"alpha={tuple(a)};beta={tuple(b)}", r, bound, float(q), r <= bound))
    constants["choose_max_ratio"] = worst
    constants["choose_violations"] = len(viol)

    aux = multiindex.binom_product_violations(args.aux_limit)
    rows.append(("choose-aux", f"n,m<={args.aux_limit}", len(aux), 0, 0.0, not aux))

    rng = random.Random(args.seed)
    for m in range(args.product_max_m + 1):
        for j in range(m + 1):
            for trial in range(args.product_trials):
                x = multiindex.random_coefficient_map(j, rng)
                y = multiindex.random_coefficient_map(m - j, rng)
                lhs, rhs = multiindex.product_identity_sides(m, j, x, y)
                ratio = 1.0 if lhs == rhs else (float(Fraction(lhs, rhs)) if rhs else math.inf)
                rows.append(("product", f"m={m};j={j};trial={trial}", lhs, rhs, ratio, lhs == rhs))

    table = multiindex.star_sum_table(args.star_range)
    small = min(args.star_range, 50)
    for variant in multiindex.STAR_VARIANTS:
        for n in range(args.star_range + 1):
            sup_n = multiindex.star_sup_at(n, variant, table)
            if sup_n is None:
                continue
            (b1, b2, m), r = sup_n
            rows.append((f"star-{variant}", f"n={n};beta=({b1},{b2});m={m}", r, 1, float(r), True))
        full = multiindex.star_sup(args.star_range, variant, table)
        low = multiindex.star_sup(small, variant, table)
        same = full.sup == low.sup
        rows.append((f"star-sup-{variant}", f"range={args.star_range};small={small};argmax={full.argmax}", full.sup, low.sup, float(full.sup), same))
        constants[f"star_sup_{variant}"] = full.sup
        constants[f"star_sup_attained_within_{small}_{variant}"] = same

    for n in range(1, args.stirling_max + 1):
        sb = multiindex.stirling_bounds(n, log=True)
        rows.append(("stirling", f"n={n};log_lower={sb.lower!r}", sb.value, sb.upper, math.exp(sb.value - sb.upper), sb.holds()))

    write_csv(out / "certificates.csv", header, rows)
    bad = [r for r in rows if not r[5]]
    write_csv(out / "violations.csv", header, bad)
    constants["violations"] = len(bad)
    problems = [f"{len(bad)} certificate rows failed"] if bad else []
    return constants, ["certificates.csv", "violations.csv"], problems


# -- solve-neumann ------------------------------------------------------------


def _neumann_source(args):
    if args.source:
        v = load_field(args.source)
    else:
        v = random_field(slab_shape(args.n), 1, "slab", args.depth, (1,), band=args.band, tau=args.envelope, seed=args.seed)
    return v


def cmd_solve_neumann(args, out: Path):
    v = _neumann_source(args)
    sol = neumann.solve(v)
    p = sol.pressure
    save_field(out / "pressure.fld", p)
    constants = {"h2_constant": sol.h2_constant}
    problems = []
    if args.alpha is not None:
        alphas = [args.alpha]
    else:
        alphas = [a for m in range(1, args.max_order + 1) for a in multiindex.multi_indices(m)]
    if args.probe == "recursion":
        header = ("alpha", "rel_error", "pass")
        rows = []
        for a in alphas:
            if a.a3 < 1:
                continue
            err = neumann.relative_error(neumann.d3_recursion(p, v, a), neumann.direct_d3(p, a))
            rows.append((tuple(a), err, err < args.tol))
        constants["recursion_max_rel_error"] = max((r[1] for r in rows), default=0.0)
    elif args.probe == "estimate":
        header = ("alpha", "which", "lhs", "rhs_sum", "ratio")
        rows = []
        per_order = {}
        for a in alphas:
            for which, need in (("d3", 1), ("d1", 2), ("d2", 2)):
                if a.a3 < need:
                    continue
                e = neumann.estimate_probe_53(p, v, a, which)
                rows.append((tuple(a), which, e.lhs, e.rhs_sum, e.ratio))
                per_order[a.order] = max(per_order.get(a.order, 0.0), e.ratio)
        constants["estimate_max_ratio_by_order"] = per_order
    else:
        header = ("alpha_t", "ratio1", "ratio2", "pass")
        rows = []
        seen = set()
        for a in alphas:
            at = (a.a1, a.a2)
            if at in seen:
                continue
            seen.add(at)
            r1, r2 = neumann.remark52_probe(p, v, at)
            ok = not (r1 > 0.5 + 1e-12 or r2 > 0.5 + 1e-12)
            rows.append((at, r1, r2, ok))
        constants["remark52_max_ratio"] = max((max(r[1], r[2]) for r in rows if not math.isnan(r[1])), default=0.0)
    if "pass" in header:
        bad = sum(1 for r in rows if not r[-1])
        if bad:
            problems.append(f"{bad} {args.probe} rows failed")
    write_csv(out / f"neumann_{args.probe}.csv", header, rows)
    return constants, [f"neumann_{args.probe}.csv", "pressure.fld"], problems


# -- flows and radius tracking ------------------------------------------------

DIAG_HEADER = ("t", "grad_sup", "Hr", "X_norm", "tau_measured")


def _safe_fit(u) -> float:
    try:
        return gevrey.fit_radius(u)
    except ValueError:
        return math.nan


def _track(diag: dict, args, tau0: float, u0_X: float, out: Path):
    params = radius.RadiusParams(C=args.C, s=args.s, r=args.r, tau0=tau0, u0_Hr=float(diag["Hr"][0]), u0_X=u0_X)
    traj = radius.build_trajectory(diag["t"], diag["grad_sup"], diag["Hr"], params, diag.get("tau_measured"))
    traj = radius.track(traj, params)
    traj.write_csv(out / "trajectory.csv")
    tm, tl = traj.tau_measured, traj.tau_lower
    ok = np.isnan(tm) | (tm >= tl)
    constants = {
        "C0": radius.C0_constant(params, traj.t[-1] - traj.t[0]),
        "tau0": tau0,
        "u0_Hr": params.u0_Hr,
        "u0_X": u0_X,
        "min_tau_measured_over_lower": float(np.nanmin(tm / tl)) if np.any(~np.isnan(tm)) else math.nan,
        "cond2_max_abs_residual_tau_ode": float(np.nanmax(np.abs(traj.cond2_residual))) if len(traj) >= 3 else math.nan,
        "samples_tau_ode_below_lower": int(np.sum(traj.tau_ode < tl)),
    }
    problems = [] if np.all(ok) else [f"tau_measured < tau_lower at {int(np.sum(~ok))} samples"]
    return constants, problems


def cmd_run_euler(args, out: Path):
    init = args.init
    if init == "taylor-green":
        state = flows.taylor_green(args.n)
    elif init.startswith("random-analytic"):
        seed = int(init.split(":", 1)[1]) if ":" in init else 0
        state = flows.random_analytic(args.n, seed=seed, tau0=args.envelope)
    else:
        raise SystemExit(f"unknown --init {init!r}")
    u0 = state.velocity()
    fit0 = _safe_fit(u0)
    tau_x = min(1.0, fit0) if math.isfinite(fit0) else 1.0
    rows = []
    energies = []
    outputs = ["diagnostics.csv"]
    snapdir = out / "snapshots"
    if args.snapshots:
        snapdir.mkdir(exist_ok=True)
    for k, st in enumerate(flows.run_euler(state, args.t_final, args.snap_every, dt=args.dt, cfl=args.cfl)):
        u = st.velocity()
        table = gevrey.seminorm_table(u, args.m_max, args.s)
        rows.append(
            {
                "t": st.time,
                "grad_sup": flows.grad_sup_norm(st),
                "Hr": gevrey.sobolev_norm(u, args.r),
                "X_norm": gevrey.x_norm(table, tau_x).x_norm,
                "tau_measured": _safe_fit(u),
                "energy": flows.energy(st),
                "enstrophy": flows.enstrophy(st),
            }
        )
        if args.snapshots:
            save_field(snapdir / f"u_{k:04d}.fld", u)
            outputs.append(f"snapshots/u_{k:04d}.fld")
    header = DIAG_HEADER + ("energy", "enstrophy")
    write_csv(out / "diagnostics.csv", header, rows)
    E = np.array([r["energy"] for r in rows])
    Z = np.array([r["enstrophy"] for r in rows])
    span = max(args.t_final, 1e-300)
    constants = {
        "tau_X": tau_x,
        "energy_drift_per_unit_time": float(np.max(np.abs(E / E[0] - 1)) / span) if E[0] else 0.0,
        "enstrophy_drift_per_unit_time": float(np.max(np.abs(Z / Z[0] - 1)) / span) if Z[0] else 0.0,
    }
    problems = []
    if args.track_radius:
        diag = {k: np.array([r[k] for r in rows]) for k in DIAG_HEADER}
        c, p = _track(diag, args, tau_x, rows[0]["X_norm"], out)
        constants.update(c)
        problems += p
        outputs.append("trajectory.csv")
    return constants, outputs, problems


def cmd_run_shear(args, out: Path):
    flow = flows.ShearFlow(amplitude=args.amplitude)
    ts = args.t_grid
    tau0 = min(1.0, flows.shear_radius_exact(flow, ts[0], args.M0))
    rows = []
    outputs = ["diagnostics.csv"]
    if args.snapshots:
        (out / "snapshots").mkdir(exist_ok=True)
    for k, t in enumerate(ts):
        u = flows.shear_snapshot(flow, float(t))
        table = gevrey.seminorm_table(u, args.m_max, args.s)
        rows.append(
            {
                "t": float(t),
                "grad_sup": flows.grad_sup_norm(flow, float(t)),
                "Hr": gevrey.sobolev_norm(u, args.r),
                "X_norm": gevrey.x_norm(table, tau0).x_norm,
                "tau_measured": _safe_fit(u),
                "tau_exact": flows.shear_radius_exact(flow, float(t), args.M0),
            }
        )
        if args.snapshots:
            save_field(out / "snapshots" / f"u_{k:04d}.fld", u)
            outputs.append(f"snapshots/u_{k:04d}.fld")
    write_csv(out / "diagnostics.csv", DIAG_HEADER + ("tau_exact",), rows)
    constants = {"tau0": tau0}
    problems = []
    if args.track_radius:
        diag = {k: np.array([r[k] for r in rows]) for k in DIAG_HEADER}
        c, p = _track(diag, args, tau0, rows[0]["X_norm"], out)
        constants.update(c)
        problems += p
        outputs.append("trajectory.csv")
    return constants, outputs, problems


def cmd_track_radius(args, out: Path):
    diag = radius.read_samples(args.traj)
    for col in ("t", "grad_sup", "Hr"):
        if col not in diag:
            raise SystemExit(f"{args.traj}: missing column {col!r}")
    u0_X = args.u0_X if args.u0_X is not None else float(diag.get("X_norm", [0.0])[0])
    if math.isnan(u0_X):
        u0_X = 0.0
    constants, problems = _track(diag, args, args.tau0, u0_X, out)
    return constants, ["trajectory.csv"], problems


# -- probe-bounds -------------------------------------------------------------


def cmd_probe_bounds(args, out: Path):
    orders = args.orders or (args.m_max,)
    header = ("field", "which", "m_max", "tau", "s", "lhs", "group1", "group2", "y_norm", "implied_constant", "tail_ratio", "converged")
    rows = []
    want = ("commutator", "pressure") if args.which == "both" else (args.which,)
    if args.field:
        f = load_field(args.field)
        sets = {w: [(Path(args.field).name, f)] for w in want}
    else:
        sets = {}
        for w in want:
            fam = probes.probe_family(args.n, args.count, args.band, args.envelope, slab=(w == "pressure"), seed=args.seed)
            sets[w] = [(f"{w}-{i}", f) for i, f in enumerate(fam)]
    constants = {}
    for w in want:
        for name, f in sets[w]:
            fn = probes.commutator_probe if w == "commutator" else probes.pressure_probe
            reps = fn(f, args.tau, args.s, orders=orders)
            vals = [r.implied_constant for r in reps]
            for r in reps:
                rows.append({"field": name, **r.as_row()})
            constants[f"{name}:{w}"] = {str(r.m_max): r.implied_constant for r in reps}
            if len(vals) > 1 and min(vals) > 0:
                constants[f"{name}:{w}:variation"] = (max(vals) - min(vals)) / min(vals)
    write_csv(out / "probes.csv", header, rows)
    return constants, ["probes.csv"], []


# -- parser -------------------------------------------------------------------


def _add_radius_opts(p):
    p.add_argument("--C", type=float, default=1.0, help="constant in G(t) and the radius ODE")
    p.add_argument("--s", type=float, default=1.0, help="Gevrey index")
    p.add_argument("--r", type=float, default=5.0, help="Sobolev index (> 4.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eulerradius", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--config", type=Path, help="JSON file of option defaults")
    common.add_argument("--workers", type=int, default=1, help=f"worker processes (env {WORKERS_ENV} overrides the default)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("verify-lemmas", parents=[common], help="exhaustive multi-index lemma certificates")
    p.add_argument("--max-order", type=int, default=12)
    p.add_argument("--star-range", type=int, default=50)
    p.add_argument("--product-max-m", type=int, default=8)
    p.add_argument("--product-trials", type=int, default=100)
    p.add_argument("--aux-limit", type=int, default=50)
    p.add_argument("--stirling-max", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("solve-neumann", parents=[common], help="Neumann solve plus derivative probes")
    p.add_argument("--source", help="source field snapshot (default: seeded random slab source)")
    p.add_argument("--probe", choices=("recursion", "estimate", "remark52"), default="recursion")
    p.add_argument("--alpha", type=_alpha, help="single multi-index a1,a2,a3 (default: all up to --max-order)")
    p.add_argument("--max-order", type=int, default=8)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--band", type=int, default=3)
    p.add_argument("--envelope", type=float, default=0.5)
    p.add_argument("--depth", type=float, default=neumann.DEFAULT_DEPTH)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_solve_neumann)

    p = sub.add_parser("run-euler", parents=[common], help="2D periodic Euler run with diagnostics")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--t-final", type=float, default=2.0)
    p.add_argument("--snap-every", type=float, default=0.1)
    p.add_argument("--init", default="taylor-green", help="taylor-green or random-analytic:SEED")
    p.add_argument("--envelope", type=float, default=0.5, help="tau0 of the random-analytic envelope")
    p.add_argument("--dt", type=float, default=None, help="maximum time step (default from CFL)")
    p.add_argument("--cfl", type=float, default=flows.CFL)
    p.add_argument("--m-max", type=int, default=gevrey.DEFAULT_M_MAX)
    p.add_argument("--snapshots", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--track-radius", action="store_true")
    _add_radius_opts(p)
    p.set_defaults(func=cmd_run_euler)

    p = sub.add_parser("run-shear", parents=[common], help="exact shear flow on a time grid")
    p.add_argument("--t-grid", type=_t_grid, default=_t_grid("0:0.5:50"))
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--M0", type=float, default=math.e)
    p.add_argument("--m-max", type=int, default=gevrey.DEFAULT_M_MAX)
    p.add_argument("--snapshots", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--track-radius", action="store_true")
    _add_radius_opts(p)
    p.set_defaults(func=cmd_run_shear)

    p = sub.add_parser("track-radius", parents=[common], help="radius bookkeeping on a diagnostics CSV")
    p.add_argument("--traj", required=True, help="CSV with t, grad_sup, Hr[, X_norm, tau_measured]")
    p.add_argument("--tau0", type=float, default=1.0)
    p.add_argument("--u0-X", dest="u0_X", type=float, default=None)
    _add_radius_opts(p)
    p.set_defaults(func=cmd_track_radius)

    p = sub.add_parser("probe-bounds", parents=[common], help="commutator and pressure estimate probes")
    p.add_argument("--field", help="velocity snapshot (default: seeded family)")
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--m-max", type=int, default=15)
    p.add_argument("--orders", type=_orders, default=None, help="comma list of truncation orders")
    p.add_argument("--which", choices=("commutator", "pressure", "both"), default="both")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--band", type=int, default=3)
    p.add_argument("--envelope", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_probe_bounds)
    return parser


def _config_defaults(path: Path, command: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit(f"{path}: config must be a JSON object")
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    flat.update(cfg.get(command, {}))
    return {k.replace("-", "_"): v for k, v in flat.items()}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in _config_defaults(args.config, args.command).items():
            if k not in known:
                parser.error(f"config key {k!r} is not an option of {args.command}")
            act = known[k]
            if act.type is not None and isinstance(v, str):
                v = act.type(v)
            defaults[k] = v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    env = os.environ.get(WORKERS_ENV)
    if env and "--workers" not in (argv if argv is not None else sys.argv[1:]):
        args.workers = int(env)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    config = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(args).items()}
    try:
        constants, outputs, problems = args.func(args, out)
    except (ValueError, FloatingPointError, flows.ResolutionError) as exc:
        write_manifest(out, args.command, config, {}, [], "error", [str(exc)])
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status = "ok" if not problems else "violation"
    write_manifest(out, args.command, config, constants, outputs, status, problems)
    for msg in problems:
        print(f"violation: {msg}", file=sys.stderr)
    return 0 if not problems else 1


if __name__ == "__main__":
    sys.exit(main())
