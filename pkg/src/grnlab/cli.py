"""Command-line entry point: reproducible experiments with file outputs.

Subcommands: transform, evolve, pdmp, equilibrium, verify, converge.
Scalar settings come from an optional JSON config (per-command sections) and
can be overridden by flags; every run writes a metadata record (config hash,
package version, model hash) next to its outputs.  Exit codes: 0 ok,
1 verification failure, 2 usage/config errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, equilibrium, evolve, pdmp
from .errors import ConfigError, GrnlabError
from .grid import GridDensity, l1_norm, mass, write_density_csv, DualGridFunction, cell_centers
from .model import (
    CanonicalModel,
    canonicalize,
    load_raw_model,
    save_canonical_model,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2


def _sha256_of(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _model_hash(model: CanonicalModel) -> str:
    return _sha256_of(model.to_dict())


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _setting(args, config: dict, section: str, key: str, default=None, required=False):
    value = getattr(args, key, None)
    if value is None:
        value = config.get(section, {}).get(key, config.get(key, default))
    if value is None and required:
        raise ConfigError(f"missing required setting {section}.{key}")
    return value


def _resolve_model(args, config: dict) -> tuple[CanonicalModel, dict]:
    path = _setting(args, config, "run", "model", required=True)
    try:
        raw = load_raw_model(path)
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    model = canonicalize(raw)
    return model, {"model_file": str(path), "model_hash": _model_hash(model)}


def _out_dir(args, config: dict) -> Path:
    out = Path(_setting(args, config, "run", "out", required=True))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, name: str, command: str, config_used: dict, extra: dict) -> None:
    meta = {
        "command": command,
        "version": __version__,
        "config": config_used,
        "config_hash": _sha256_of(config_used),
    }
    meta.update(extra)
    with open(out / name, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def _snapshot_name(t: float) -> str:
    return f"snapshot_t{t:g}.csv".replace("-", "m")


# -- commands ----------------------------------------------------------------


def cmd_transform(args, config: dict) -> int:
    in_path = _setting(args, config, "run", "model", required=True)
    out_path = _setting(args, config, "transform", "out", required=True)
    raw = load_raw_model(in_path)
    model = canonicalize(raw)
    save_canonical_model(out_path, model)
    print(f"wrote canonical model to {out_path} (hash {_model_hash(model)[:12]})")
    return EXIT_OK


def cmd_evolve(args, config: dict) -> int:
    model, model_meta = _resolve_model(args, config)
    out = _out_dir(args, config)
    n = int(_setting(args, config, "evolve", "n", 256))
    dt = float(_setting(args, config, "evolve", "dt", 1e-3))
    horizon = float(_setting(args, config, "evolve", "horizon", 1.0))
    snapshots = _setting(args, config, "evolve", "snapshots", None)
    if snapshots is None:
        snapshots = [horizon]
    snapshots = [float(t) for t in snapshots]

    u0 = GridDensity(np.ones(n), np.zeros(n))
    cfg = evolve.SplittingConfig(dt=dt, order=2)
    result = evolve.evolve(model, cfg, u0, horizon, snapshots)
    m0 = mass(u0)
    drift_rows = []
    for t, u in result:
        write_density_csv(out / _snapshot_name(t), u)
        drift_rows.append((t, mass(u), abs(mass(u) - m0) / abs(m0)))
    with open(out / "mass_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mass", "relative_drift"])
        for row in drift_rows:
            writer.writerow([repr(float(v)) for v in row])
    used = {"n": n, "dt": dt, "horizon": horizon, "snapshots": snapshots}
    _write_meta(
        out,
        "evolve_meta.json",
        "evolve",
        used,
        {**model_meta, "max_relative_drift": max(r[2] for r in drift_rows)},
    )
    print(f"wrote {len(result)} snapshots to {out}")
    return EXIT_OK


def cmd_pdmp(args, config: dict) -> int:
    model, model_meta = _resolve_model(args, config)
    out = _out_dir(args, config)
    N = int(_setting(args, config, "pdmp", "particles", 100_000))
    T = float(_setting(args, config, "pdmp", "horizon", 1.0))
    seed = int(_setting(args, config, "pdmp", "seed", 12345))
    n = int(_setting(args, config, "pdmp", "n", 64))
    init_mode = int(_setting(args, config, "pdmp", "init_mode", 1))

    init = pdmp.InitSpec(kind="uniform", mode=init_mode)
    ens = pdmp.simulate(model, init, N, T, seed)
    hist = pdmp.density_estimate(ens, n)

    with open(out / "ensemble.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["particle_id", "x", "mode"])
        for pid, (x, m) in enumerate(zip(ens.positions, ens.modes)):
            writer.writerow([pid, repr(float(x)), int(m)])
    write_density_csv(out / "histogram.csv", hist)

    eq = equilibrium.stationary_density(model, n)
    tv = 0.5 * l1_norm(
        GridDensity(hist.comp1 - eq.w.comp1, hist.comp2 - eq.w.comp2)
    )
    used = {"particles": N, "horizon": T, "seed": seed, "n": n, "init_mode": init_mode}
    _write_meta(
        out,
        "pdmp_meta.json",
        "pdmp",
        used,
        {
            **model_meta,
            "seed": seed,
            "generator_id": ens.generator_id,
            "N": N,
            "T": T,
            "tv_distance_to_equilibrium": tv,
        },
    )
    print(f"simulated {N} particles to T={T}; TV distance to equilibrium {tv:.4f}")
    return EXIT_OK


def cmd_equilibrium(args, config: dict) -> int:
    model, model_meta = _resolve_model(args, config)
    out = _out_dir(args, config)
    n = int(_setting(args, config, "equilibrium", "n", 256))
    eq = equilibrium.stationary_density(model, n)
    write_density_csv(out / "equilibrium.csv", eq.w)
    used = {"n": n}
    _write_meta(
        out,
        "equilibrium_meta.json",
        "equilibrium",
        used,
        {
            **model_meta,
            "method": eq.method,
            "normalizing_constant": eq.normalizing_constant,
            "flux_residual": equilibrium.flux_residual(model, eq),
            "mass": mass(eq.w),
        },
    )
    print(f"wrote equilibrium ({eq.method}) to {out}")
    return EXIT_OK


def cmd_converge(args, config: dict) -> int:
    model, model_meta = _resolve_model(args, config)
    out = _out_dir(args, config)
    n = int(_setting(args, config, "analysis", "n", 128))
    dt = float(_setting(args, config, "analysis", "dt", 5e-3))
    times = _setting(args, config, "analysis", "times", [2.0, 4.0, 6.0, 8.0])
    report = analysis.norm_convergence(model, [float(t) for t in times], n, dt)
    with open(out / "convergence_report.json", "w") as fh:
        doc = report.to_dict()
        doc["meta"] = {**model_meta, "version": __version__}
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    with open(out / "convergence_plot.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm_estimate"])
        for t, e in zip(report.times, report.norm_estimates):
            writer.writerow([repr(float(t)), repr(float(e))])
    used = {"n": n, "dt": dt, "times": [float(t) for t in times]}
    _write_meta(out, "converge_meta.json", "converge", used, model_meta)
    print(
        f"norm estimates {['%.3e' % e for e in report.norm_estimates]}, "
        f"fitted rate {report.fitted_rate:.4f} (R^2 {report.fit_r_squared:.4f})"
    )
    return EXIT_OK


def _g_battery(n: int) -> list[tuple[str, DualGridFunction]]:
    """Nonnegative test functions: constant one, single-cell indicators, ramp."""
    battery = [("ones", DualGridFunction.ones(n))]
    lo = np.zeros(n)
    ind = np.zeros(n)
    ind[0] = 1.0
    battery.append(("indicator_c1_first", DualGridFunction(ind.copy(), lo.copy())))
    ind2 = np.zeros(n)
    ind2[n // 2] = 1.0
    battery.append(("indicator_c2_mid", DualGridFunction(lo.copy(), ind2)))
    x = cell_centers(n)
    battery.append(("ramp", DualGridFunction(x.copy(), x.copy())))
    return battery


def cmd_verify(args, config: dict) -> int:
    model, model_meta = _resolve_model(args, config)
    out = _out_dir(args, config)
    n = int(_setting(args, config, "analysis", "n", 128))
    dt = float(_setting(args, config, "analysis", "dt", 5e-3))
    times = [float(t) for t in _setting(args, config, "analysis", "times", [2.0, 4.0, 6.0, 8.0])]
    lambdas = _setting(args, config, "analysis", "lambdas", None)
    if lambdas is None:
        lambdas = analysis.default_lambda_grid(model)
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise ConfigError("analysis.lambdas must be a non-empty list")
    t_partial = float(_setting(args, config, "analysis", "t_partial", 0.5))
    trials = int(_setting(args, config, "analysis", "trials", 5))
    quad_dt = float(_setting(args, config, "analysis", "resolvent_dt", 5e-3))

    checks: list[dict] = []

    params = analysis.choose_parameters(model)
    checks.append(
        {
            "name": "parameter_construction",
            "passed": params.feasible(model),
            "eps": params.eps,
            "gamma": params.gamma,
            "lambda0": params.lam0,
        }
    )

    quad = evolve.LaplaceQuadConfig(dt=quad_dt)
    c_values = {}
    positivity_ok = True
    for lam in lambdas:
        Rm = evolve.assemble_resolvent(model, lam, n, quad)
        for gname, g in _g_battery(n):
            c, ok = analysis.dual_positivity_check(model, lam, g, n=n, resolvent=Rm)
            c_values[f"lambda={lam:g}/{gname}"] = c
            positivity_ok &= ok
    checks.append(
        {
            "name": "dual_positivity",
            "passed": bool(positivity_ok),
            "lambdas": lambdas,
            "c_values": c_values,
        }
    )

    passed_partial, margin = analysis.partial_integral_check(
        model, params.eps, t_partial, trials=trials
    )
    checks.append(
        {
            "name": "partial_integral",
            "passed": bool(passed_partial),
            "t": t_partial,
            "margin": margin,
        }
    )

    report = analysis.norm_convergence(model, times, n, dt)
    tail = np.array(report.norm_estimates[len(report.norm_estimates) // 2 :])
    non_increasing = bool(np.all(np.diff(tail) <= 1e-10))
    conv_ok = non_increasing and report.fit_r_squared >= 0.99
    checks.append(
        {
            "name": "norm_convergence",
            "passed": conv_ok,
            "times": report.times,
            "norm_estimates": report.norm_estimates,
            "fitted_rate": report.fitted_rate,
            "fit_r_squared": report.fit_r_squared,
        }
    )

    all_passed = all(c["passed"] for c in checks)
    doc = {
        "passed": all_passed,
        "checks": checks,
        "meta": {
            **model_meta,
            "version": __version__,
            "n": n,
            "dt": dt,
            "lambdas": lambdas,
            "times": times,
        },
    }
    with open(out / "verify_report.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    used = {"n": n, "dt": dt, "times": times, "lambdas": lambdas, "t_partial": t_partial}
    _write_meta(out, "verify_meta.json", "verify", used, model_meta)

    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    if not all_passed:
        failing = ", ".join(c["name"] for c in checks if not c["passed"])
        print(f"verification FAILED: {failing}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grnlab",
        description="Two-state hybrid transport model laboratory",
    )
    parser.add_argument("--config", help="JSON config with per-command sections")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", help="model JSON file")
        p.add_argument("--out", help="output directory (or file for transform)")
        p.set_defaults(fn=fn)
        return p

    add("transform", cmd_transform, "canonicalize a model file onto [0, 1]")
    p_ev = add("evolve", cmd_evolve, "run the splitting solver, dump snapshots")
    p_ev.add_argument("--n", type=int)
    p_ev.add_argument("--dt", type=float)
    p_ev.add_argument("--horizon", type=float)
    p_pd = add("pdmp", cmd_pdmp, "simulate the particle process")
    p_pd.add_argument("--particles", type=int)
    p_pd.add_argument("--horizon", type=float)
    p_pd.add_argument("--seed", type=int)
    p_pd.add_argument("--n", type=int)
    p_pd.add_argument("--init-mode", dest="init_mode", type=int)
    p_eq = add("equilibrium", cmd_equilibrium, "compute the stationary density")
    p_eq.add_argument("--n", type=int)
    p_cv = add("converge", cmd_converge, "measure operator-norm convergence")
    p_cv.add_argument("--n", type=int)
    p_cv.add_argument("--dt", type=float)
    p_vf = add("verify", cmd_verify, "run the full hypothesis/conclusion suite")
    p_vf.add_argument("--n", type=int)
    p_vf.add_argument("--dt", type=float)
    p_vf.add_argument("--t-partial", dest="t_partial", type=float)
    p_vf.add_argument("--trials", type=int)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.fn(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GrnlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
