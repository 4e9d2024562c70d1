"""Command-line front end: generate instances, solve single problems, run
multi-trial benchmarks, and sweep parameter grids.

Config precedence: command-line flags > JSON config file > built-in defaults.
Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .admm import AdmmConfig, Problem, SolverAbort, solve
from .experiments import (MethodSpec, NanoporeConfig, SyntheticCsConfig,
                          aggregate, default_method_params, gen_cs_instance,
                          gen_nanopore_instance_full, metric_f1, metric_nmse,
                          metric_snr, run_trials, summary_csv, summary_json,
                          sweep_csv, trials_csv)
from .linops import DenseMap, FirstDifferenceMap, IdentityMap
from .penalties import PenaltySpec
from .prox import AbsoluteError, ShiftedIDiv, SquaredError


class ConfigError(ValueError):
    pass


# keys accepted from a JSON config file; anything else is rejected
CONFIG_KEYS = {
    "experiment", "seed", "out", "trials", "jobs", "methods", "method",
    "lam", "alpha", "epsilon", "gamma", "w0", "nu2",
    "max_iter", "rho", "stop_tol", "cg_tol", "cg_max_iter", "bisect_tol",
    "init", "instance", "grid", "values", "n", "j", "input_snr_db",
    "sigma_thermal", "alpha_shot", "tau_cap", "baseline_pa",
    "method_params",
}

PENALTY_KEYS = ("lam", "alpha", "epsilon", "gamma", "w0")
ADMM_KEYS = ("max_iter", "rho", "stop_tol", "cg_tol", "cg_max_iter",
             "bisect_tol", "init")


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--experiment", choices=["cs", "nanopore"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default $LOPBSR_OUTDIR or .)")
    p.add_argument("--lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--w0", type=float)
    p.add_argument("--nu2", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--stop-tol", dest="stop_tol", type=float)
    p.add_argument("--cg-tol", dest="cg_tol", type=float)
    p.add_argument("--cg-max-iter", dest="cg_max_iter", type=int)
    p.add_argument("--bisect-tol", dest="bisect_tol", type=float)
    p.add_argument("--init", choices=["zeros", "randn"])
    p.add_argument("--n", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--input-snr-db", dest="input_snr_db", type=float)
    p.add_argument("--sigma-thermal", dest="sigma_thermal", type=float)
    p.add_argument("--alpha-shot", dest="alpha_shot", type=float)
    p.add_argument("--tau-cap", dest="tau_cap", type=float)
    p.add_argument("--baseline-pa", dest="baseline_pa", type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lopbsr",
        description="Block-sparse recovery with latent optimal partitioning")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance file")
    _add_common(p)

    p = sub.add_parser("solve", help="solve one instance with one method")
    _add_common(p)
    p.add_argument("--instance", help="instance .npz (else generated)")
    p.add_argument("--method", help="method token, e.g. lop or adalop.sid")

    p = sub.add_parser("bench", help="multi-trial benchmark over methods")
    _add_common(p)
    p.add_argument("--methods", help="comma list of method tokens")
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("sweep", help="benchmark over a parameter grid")
    _add_common(p)
    p.add_argument("--methods", help="comma list of method tokens")
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--grid", choices=["lam", "j", "input_snr_db"])
    p.add_argument("--values", help="comma list of grid values")

    return parser


def load_config(args):
    """Merge defaults < JSON file < explicit flags into one dict."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in CONFIG_KEYS - {"method_params"}:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("experiment", "cs")
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", os.environ.get("LOPBSR_OUTDIR", "."))
    cfg.setdefault("trials", 10)
    cfg.setdefault("jobs", 1)
    return cfg


def parse_method_token(token):
    parts = token.strip().split(".")
    kind = parts[0]
    fidelity = parts[1] if len(parts) > 1 else None
    if kind not in ("l1", "lop", "loglop", "adalop"):
        raise ConfigError(f"unknown method kind {kind!r}")
    if fidelity is not None and fidelity not in ("l2", "sid", "l1abs"):
        raise ConfigError(f"unknown fidelity {fidelity!r}")
    return kind, fidelity


def build_method(token, cfg):
    """Resolve one method token against experiment defaults plus overrides."""
    kind, fidelity = parse_method_token(token)
    params = default_method_params(cfg["experiment"], token)
    per_method = cfg.get("method_params", {}).get(token, {})
    unknown = set(per_method) - set(PENALTY_KEYS) - set(ADMM_KEYS) - {"nu2"}
    if unknown:
        raise ConfigError(f"unknown method_params keys for {token!r}: "
                          f"{sorted(unknown)}")
    for source in (cfg, per_method):
        for key in PENALTY_KEYS + ADMM_KEYS + ("nu2",):
            if key in source and source[key] is not None:
                params[key] = source[key]
    if fidelity is None:
        fidelity = params.get("fidelity", "l2")

    pen_kwargs = {"kind": kind, "lam": params.get("lam", 1.0),
                  "alpha": params.get("alpha", 0.0)}
    if kind == "loglop":
        pen_kwargs["epsilon"] = params.get("epsilon", 1.0)
    if kind == "adalop":
        pen_kwargs["gamma"] = params.get("gamma", 10.0)
        if params.get("w0") is not None:
            pen_kwargs["w0"] = params["w0"]
    try:
        penalty = PenaltySpec(**pen_kwargs)
        admm_kwargs = {k: params[k] for k in ADMM_KEYS if k in params}
        admm_cfg = AdmmConfig(**admm_kwargs)
        admm_cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return MethodSpec(name=token, penalty=penalty, fidelity=fidelity,
                      nu2=params.get("nu2"), admm=admm_cfg)


def experiment_config(cfg):
    try:
        if cfg["experiment"] == "cs":
            kwargs = {k: cfg[k] for k in ("n", "j", "input_snr_db", "seed")
                      if k in cfg}
            return SyntheticCsConfig(**kwargs)
        kwargs = {k: cfg[k] for k in ("n", "sigma_thermal", "alpha_shot",
                                      "tau_cap", "baseline_pa", "seed")
                  if k in cfg}
        return NanoporeConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _outdir(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out, cfg, extra=None):
    manifest = {"version": __version__, "backend": backend_name(),
                "config": {k: v for k, v in sorted(cfg.items())}}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def cmd_generate(cfg):
    out = _outdir(cfg)
    ecfg = experiment_config(cfg)
    path = out / f"instance_{cfg['experiment']}_{cfg['seed']}.npz"
    if cfg["experiment"] == "cs":
        a_map, x0, y = gen_cs_instance(ecfg)
        np.savez(path, kind="cs", A=a_map.matrix, x0=x0, y=y,
                 params=json.dumps(asdict(ecfg)))
    else:
        x0, y, clipped = gen_nanopore_instance_full(ecfg)
        np.savez(path, kind="nanopore", x0=x0, y=y, clipped=clipped,
                 params=json.dumps(asdict(ecfg)))
    write_manifest(out, cfg, {"instance": path.name})
    print(path)
    return 0


def _load_instance(path):
    with np.load(path, allow_pickle=False) as data:
        kind = str(data["kind"])
        inst = {"kind": kind, "x0": data["x0"], "y": data["y"]}
        if "A" in data:
            inst["A"] = data["A"]
    return inst


def cmd_solve(cfg):
    out = _outdir(cfg)
    token = cfg.get("method", "lop")
    method = build_method(token, cfg)

    if cfg.get("instance"):
        inst = _load_instance(cfg["instance"])
        kind = inst["kind"]
    else:
        ecfg = experiment_config(cfg)
        kind = cfg["experiment"]
        if kind == "cs":
            a_map, x0, y = gen_cs_instance(ecfg)
            inst = {"kind": kind, "A": a_map.matrix, "x0": x0, "y": y}
        else:
            x0, y, _ = gen_nanopore_instance_full(ecfg)
            inst = {"kind": kind, "x0": x0, "y": y}

    x0, y = inst["x0"], inst["y"]
    n = x0.size
    if kind == "cs":
        a_map = DenseMap(inst["A"])
        l_map = IdentityMap(n)
    else:
        a_map = IdentityMap(n)
        l_map = FirstDifferenceMap(n)

    if method.fidelity == "l2":
        fidelity = SquaredError(y)
    elif method.fidelity == "l1abs":
        fidelity = AbsoluteError(y)
    else:
        nu2 = method.nu2 if method.nu2 is not None else \
            cfg.get("sigma_thermal", 5.0) ** 2
        fidelity = ShiftedIDiv(y, nu2)

    admm_cfg = method.admm
    if admm_cfg.init == "randn":
        admm_cfg = replace(admm_cfg, init_seed=cfg["seed"])
    problem = Problem(A=a_map, L=l_map, fidelity=fidelity,
                      penalty=method.penalty)
    write_manifest(out, cfg, {"method": token})

    def write_trace(result_or_none, lag, res):
        lines = ["iter,lagrangian,primal_residual"]
        for i, (a, b) in enumerate(zip(lag, res), start=1):
            lines.append(f"{i},{a!r},{b!r}")
        (out / "trace.csv").write_text("\n".join(lines) + "\n")

    try:
        result = solve(problem, admm_cfg)
    except SolverAbort as exc:
        write_trace(None, [], [])
        (out / "report.json").write_text(json.dumps(
            {"method": token, "error": str(exc), "iteration": exc.iteration},
            indent=2, sort_keys=True) + "\n")
        print(f"solver aborted: {exc}", file=sys.stderr)
        return 1

    np.savez(out / "solution.npz", x_hat=result.x_hat,
             sigma_hat=result.sigma_hat)
    write_trace(result, result.lagrangian_trace, result.primal_residuals)
    report = {
        "method": token,
        "experiment": kind,
        "seed": cfg["seed"],
        "snr_db": metric_snr(result.x_hat, x0),
        "f1": metric_f1(result.x_hat, x0),
        "nmse": metric_nmse(result.x_hat, x0),
        "iterations": result.iterations,
        "converged": bool(result.converged),
    }
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return 0


def _default_methods(experiment):
    if experiment == "cs":
        return ["l1", "lop", "loglop", "adalop"]
    return ["lop.l2", "lop.sid", "loglop.sid", "adalop.sid"]


def cmd_bench(cfg):
    out = _outdir(cfg)
    tokens = cfg.get("methods") or _default_methods(cfg["experiment"])
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t]
    methods = [build_method(t, cfg) for t in tokens]
    ecfg = experiment_config(cfg)
    reports = run_trials(ecfg, methods, cfg["trials"], jobs=cfg["jobs"])
    (out / "trials.csv").write_text(trials_csv(reports))
    summary = aggregate(reports)
    (out / "summary.csv").write_text(summary_csv(summary))
    (out / "summary.json").write_text(summary_json(summary))
    write_manifest(out, cfg, {"methods": tokens})
    print(summary_csv(summary), end="")
    return 0


def cmd_sweep(cfg):
    out = _outdir(cfg)
    grid = cfg.get("grid")
    if grid is None:
        raise ConfigError("sweep requires --grid")
    values = cfg.get("values")
    if values is None:
        raise ConfigError("sweep requires --values")
    if isinstance(values, str):
        values = [float(v) for v in values.split(",") if v]
    tokens = cfg.get("methods") or _default_methods(cfg["experiment"])
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t]

    rows = []
    for val in values:
        point_cfg = dict(cfg)
        if grid == "lam":
            point_cfg["lam"] = val
        elif grid == "j":
            point_cfg["j"] = int(val)
        else:
            point_cfg["input_snr_db"] = val
        methods = [build_method(t, point_cfg) for t in tokens]
        ecfg = experiment_config(point_cfg)
        reports = run_trials(ecfg, methods, cfg["trials"], jobs=cfg["jobs"])
        for name, stats in aggregate(reports).items():
            row = dict(stats)
            row["method"] = name
            row[grid] = val
            rows.append(row)

    (out / "sweep.csv").write_text(sweep_csv(rows, grid))
    (out / "sweep.json").write_text(json.dumps(rows, indent=2,
                                               sort_keys=True) + "\n")
    write_manifest(out, cfg, {"methods": tokens, "grid": grid,
                              "values": values})
    print(sweep_csv(rows, grid), end="")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        cfg["command"] = args.command
        handler = {"generate": cmd_generate, "solve": cmd_solve,
                   "bench": cmd_bench, "sweep": cmd_sweep}[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverAbort as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
