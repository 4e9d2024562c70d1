"""Signal generators, noise models, metrics, and the multi-trial harness.

Two desk-scale experiments: compressive sensing of a block-sparse signal
under Gaussian noise, and denoising of piecewise-constant sensor currents
under mixed Poisson-Gaussian noise.  Generators are pure functions of their
config (including the seed).
"""

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .admm import AdmmConfig, Problem, SolverAbort, solve
from .linops import DenseMap, FirstDifferenceMap, IdentityMap
from .penalties import PenaltySpec
from .prox import AbsoluteError, ShiftedIDiv, SquaredError

SNR_CAP_DB = 300.0

DEFAULT_CS_BLOCKS = (
    (20, 25, (20.0, 80.0)),
    (80, 30, (20.0, 80.0)),
    (140, 20, (20.0, 80.0)),
    (200, 25, (20.0, 80.0)),
)


@dataclass
class SyntheticCsConfig:
    n: int = 250
    j: int = 200
    blocks: tuple = DEFAULT_CS_BLOCKS
    input_snr_db: float = 40.0
    seed: int = 0

    def __post_init__(self):
        last_end = -1
        for start, length, amp in self.blocks:
            if start <= last_end:
                raise ValueError("blocks must be ordered and non-overlapping")
            if start < 0 or start + length > self.n or length < 1:
                raise ValueError("block outside the signal range")
            if not (0.0 < amp[0] <= amp[1]):
                raise ValueError("amplitude range must satisfy 0 < lo <= hi")
            last_end = start + length - 1


@dataclass
class NanoporeConfig:
    n: int = 1024
    baseline_pa: float = 150.0
    depth_range: tuple = (30.0, 100.0)
    dwell_shape: float = 2.0
    dwell_scale: float = 20.0
    bessel_order: int = 4
    tau_cap: float = 4.0
    alpha_shot: float = 20.0
    sigma_thermal: float = 5.0
    max_events: int | None = None
    seed: int = 0

    def __post_init__(self):
        positive = (self.n, self.baseline_pa, self.dwell_shape,
                    self.dwell_scale, self.bessel_order, self.tau_cap,
                    self.alpha_shot, self.sigma_thermal)
        if any(p <= 0 for p in positive):
            raise ValueError("all nanopore parameters must be positive")
        lo, hi = self.depth_range
        if not (0.0 < lo <= hi < self.baseline_pa):
            raise ValueError("depths must lie strictly below the baseline")


@dataclass
class TrialReport:
    method: str
    trial: int
    seed: int
    snr_db: float
    f1: float
    nmse: float
    iterations: int
    wall_time_s: float
    converged: bool = True
    error: str = ""
    lagrangian_trace: np.ndarray | None = None


def _block_profile(rng, length, amp):
    """Piecewise-linear ramp with a randomized interior peak."""
    lo, hi = amp
    span = hi - lo
    a_start = lo + 0.4 * span * rng.random()
    a_end = lo + 0.4 * span * rng.random()
    a_peak = lo + span * (0.6 + 0.4 * rng.random())
    if length == 1:
        return np.array([a_peak])
    if length == 2:
        return np.array([a_start, a_peak])
    pos = int(rng.integers(1, length - 1))
    up = np.linspace(a_start, a_peak, pos + 1)
    down = np.linspace(a_peak, a_end, length - pos)
    return np.concatenate([up, down[1:]])


def gen_cs_instance(cfg):
    """Sensing matrix with iid standard-normal entries, block-sparse ground
    truth, and noise scaled to the requested input SNR (in expectation)."""
    rng = np.random.default_rng(cfg.seed)
    a_mat = rng.standard_normal((cfg.j, cfg.n))
    x0 = np.zeros(cfg.n)
    for start, length, amp in cfg.blocks:
        x0[start:start + length] = _block_profile(rng, length, amp)
    clean = a_mat @ x0
    if np.isinf(cfg.input_snr_db):
        y = clean
    else:
        scale = np.linalg.norm(clean) / (10.0 ** (cfg.input_snr_db / 20.0)
                                         * np.sqrt(cfg.j))
        y = clean + scale * rng.standard_normal(cfg.j)
    return DenseMap(a_mat), x0, y


def _lowpass_cascade(x, tau_cap, order):
    """Causal cascade of identical one-pole lowpass stages; each stage is
    initialized at its first input sample to avoid a startup ramp."""
    a = np.exp(-1.0 / tau_cap)
    out = x
    for _ in range(order):
        out, _ = lfilter([1.0 - a], [1.0, -a], out, zi=[a * out[0]])
    return out


def gen_nanopore_instance_full(cfg):
    """Blockade trace plus mixed Poisson-Gaussian observation.

    Returns (x0, y, clipped) where clipped flags observations that had to be
    floored to stay positive.
    """
    rng = np.random.default_rng(cfg.seed)
    raw = np.full(cfg.n, cfg.baseline_pa)
    t = 0.0
    events = 0
    while cfg.max_events is None or events < cfg.max_events:
        t += rng.gamma(cfg.dwell_shape, cfg.dwell_scale)
        if t >= cfg.n - 1:
            break
        depth = rng.uniform(*cfg.depth_range)
        dwell = rng.gamma(cfg.dwell_shape, cfg.dwell_scale)
        start = int(round(t))
        end = min(cfg.n, int(round(t + dwell)) + 1)
        raw[start:end] = cfg.baseline_pa - depth
        t += dwell
        events += 1

    x0 = _lowpass_cascade(raw, cfg.tau_cap, cfg.bessel_order)
    counts = rng.poisson(x0 / cfg.alpha_shot)
    y = cfg.alpha_shot * counts + cfg.sigma_thermal * rng.standard_normal(cfg.n)
    clipped = bool(np.any(y <= 0.0))
    y = np.maximum(y, 1e-3)
    return x0, y, clipped


def gen_nanopore_instance(cfg):
    x0, y, _ = gen_nanopore_instance_full(cfg)
    return x0, y


def metric_snr(x_hat, x0):
    """20*log10(||x0|| / ||x_hat - x0||), capped at the +/-300 dB sentinel."""
    err = float(np.linalg.norm(np.asarray(x_hat) - np.asarray(x0)))
    ref = float(np.linalg.norm(x0))
    if err == 0.0:
        return SNR_CAP_DB
    if ref == 0.0:
        return -SNR_CAP_DB
    return float(np.clip(20.0 * np.log10(ref / err), -SNR_CAP_DB, SNR_CAP_DB))


def metric_f1(x_hat, x0, threshold=1e-3):
    """F1 of the predicted support {n : |x_hat| > threshold*max|x_hat|}
    against the exact support of x0."""
    x_hat = np.asarray(x_hat)
    pred = np.abs(x_hat) > threshold * np.max(np.abs(x_hat), initial=0.0)
    true = np.asarray(x0) != 0.0
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    if tp == 0:
        return 1.0 if (fp == 0 and fn == 0) else 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def metric_nmse(x_hat, x0):
    """||x_hat - x0||^2 / ||x0||^2."""
    x0 = np.asarray(x0, dtype=np.float64)
    d = np.asarray(x_hat, dtype=np.float64) - x0
    return float((d @ d) / (x0 @ x0))


@dataclass
class MethodSpec:
    """One benchmark entry: penalty + data fidelity + solver settings."""

    name: str
    penalty: PenaltySpec
    fidelity: str = "l2"  # "l2" | "sid" | "l1abs"
    nu2: float | None = None
    admm: AdmmConfig = field(default_factory=AdmmConfig)


def _make_fidelity(method, y, cfg):
    if method.fidelity == "l2":
        return SquaredError(y)
    if method.fidelity == "l1abs":
        return AbsoluteError(y)
    if method.fidelity == "sid":
        nu2 = method.nu2
        if nu2 is None:
            if not isinstance(cfg, NanoporeConfig):
                raise ValueError("sid fidelity needs nu2 outside nanopore runs")
            nu2 = cfg.sigma_thermal ** 2
        return ShiftedIDiv(y, nu2)
    raise ValueError(f"unknown fidelity {method.fidelity!r}")


def _trial_seeds(master_seed, trial):
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial,))
    inst, init = ss.generate_state(2)
    return int(inst), int(init)


def instance_for_trial(cfg, trial):
    """Instance shared by every method of one trial (seeded off the master)."""
    inst_seed, init_seed = _trial_seeds(cfg.seed, trial)
    icfg = replace(cfg, seed=inst_seed)
    if isinstance(cfg, SyntheticCsConfig):
        a_map, x0, y = gen_cs_instance(icfg)
        return {"A": a_map, "x0": x0, "y": y, "init_seed": init_seed}
    x0, y, clipped = gen_nanopore_instance_full(icfg)
    return {"x0": x0, "y": y, "clipped": clipped, "init_seed": init_seed}


def _run_trial(cfg, methods, trial, keep_trace=False):
    inst = instance_for_trial(cfg, trial)
    y = inst["y"]
    x0 = inst["x0"]
    n = x0.size
    reports = []
    for method in methods:
        if isinstance(cfg, SyntheticCsConfig):
            a_map = inst["A"]
            l_map = IdentityMap(n)
        else:
            a_map = IdentityMap(n)
            l_map = FirstDifferenceMap(n)
        fidelity = _make_fidelity(method, y, cfg)
        problem = Problem(A=a_map, L=l_map, fidelity=fidelity,
                          penalty=method.penalty)
        admm_cfg = method.admm
        if admm_cfg.init == "randn":
            admm_cfg = replace(admm_cfg, init_seed=inst["init_seed"])
        t0 = time.perf_counter()
        try:
            result = solve(problem, admm_cfg)
        except SolverAbort as exc:
            reports.append(TrialReport(
                method=method.name, trial=trial, seed=inst["init_seed"],
                snr_db=float("nan"), f1=float("nan"), nmse=float("nan"),
                iterations=exc.iteration,
                wall_time_s=time.perf_counter() - t0,
                converged=False, error=str(exc)))
            continue
        x_hat = result.x_hat
        if isinstance(cfg, SyntheticCsConfig):
            f1 = metric_f1(x_hat, x0)
        else:
            # block sparsity lives in the gradient domain here
            g0 = np.diff(x0)
            g0 = np.where(np.abs(g0) > 1e-3 * np.max(np.abs(g0)), g0, 0.0)
            f1 = metric_f1(np.diff(x_hat), g0)
        reports.append(TrialReport(
            method=method.name, trial=trial, seed=inst["init_seed"],
            snr_db=metric_snr(x_hat, x0), f1=f1,
            nmse=metric_nmse(x_hat, x0), iterations=result.iterations,
            wall_time_s=result.wall_time_s, converged=result.converged,
            lagrangian_trace=result.lagrangian_trace if keep_trace else None))
    return reports


def run_trials(cfg, methods, trials, jobs=1, keep_trace=False):
    """Run every method on `trials` independently seeded instances.

    Each trial's instance is derived from (cfg.seed, trial index) and fed to
    all methods; trials are independent and may run in parallel.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if jobs <= 1:
        nested = [_run_trial(cfg, methods, t, keep_trace)
                  for t in range(trials)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(_run_trial, [cfg] * trials,
                                   [methods] * trials, range(trials),
                                   [keep_trace] * trials))
    return [rep for group in nested for rep in group]


CSV_COLUMNS = ("method", "trial", "seed", "snr_db", "f1", "nmse", "iters",
               "wall_time_s")


def trials_csv(reports):
    """Per-trial CSV with the fixed column set (includes wall time)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([r.method, r.trial, r.seed, repr(r.snr_db),
                         repr(r.f1), repr(r.nmse), r.iterations,
                         repr(r.wall_time_s)])
    return buf.getvalue()


def aggregate(reports):
    """Per-method mean/median/std of the metrics; failed trials are counted
    but excluded from the statistics."""
    out = {}
    order = []
    for r in reports:
        if r.method not in out:
            order.append(r.method)
            out[r.method] = {"trials": 0, "failures": 0, "_rows": []}
        rec = out[r.method]
        rec["trials"] += 1
        if r.error or not np.isfinite(r.snr_db):
            rec["failures"] += 1
        else:
            rec["_rows"].append((r.snr_db, r.f1, r.nmse))
    summary = {}
    for name in order:
        rec = out[name]
        rows = np.asarray(rec["_rows"]) if rec["_rows"] else np.zeros((0, 3))
        stats = {}
        for i, metric in enumerate(("snr_db", "f1", "nmse")):
            col = rows[:, i] if rows.size else np.array([np.nan])
            stats[f"{metric}_mean"] = float(np.mean(col))
            stats[f"{metric}_median"] = float(np.median(col))
            stats[f"{metric}_std"] = float(np.std(col))
        stats["trials"] = rec["trials"]
        stats["failures"] = rec["failures"]
        summary[name] = stats
    return summary


def summary_csv(summary):
    """Aggregate CSV (no timing columns, so reruns are byte-identical)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    metrics = ("snr_db_mean", "snr_db_median", "snr_db_std", "f1_mean",
               "f1_median", "f1_std", "nmse_mean", "nmse_median", "nmse_std")
    writer.writerow(["method"] + list(metrics) + ["trials", "failures"])
    for name, stats in summary.items():
        row = [name]
        row += [repr(stats[m]) for m in metrics]
        row += [stats["trials"], stats["failures"]]
        writer.writerow(row)
    return buf.getvalue()


def summary_json(summary):
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


# Benchmark defaults.  CS follows the reference protocol (lam=1, alpha=40,
# random-normal inits); nanopore values were tuned on held-out seeds, see
# tune_nanopore.py in benchmarks/.
_CS_ADMM = {"init": "randn", "max_iter": 1500, "rho": 1.01,
            "stop_tol": 1e-6}
_NANO_ADMM = {"init": "zeros", "max_iter": 1500, "rho": 1.01,
              "stop_tol": 1e-6}

CS_METHOD_DEFAULTS = {
    "l1": {"lam": 1.0},
    "lop": {"lam": 1.0, "alpha": 40.0},
    "loglop": {"lam": 1.0, "alpha": 40.0, "epsilon": 1.0},
    "adalop": {"lam": 1.0, "alpha": 40.0, "gamma": 10.0},
}

NANOPORE_METHOD_DEFAULTS = {
    "l1": {"lam": 20.0},
    "lop": {"lam": 20.0, "alpha": 50.0},
    "loglop": {"lam": 20.0, "alpha": 50.0, "epsilon": 1.0},
    "adalop": {"lam": 20.0, "alpha": 50.0, "gamma": 10.0},
    "lop.sid": {"lam": 0.2, "alpha": 50.0},
    "loglop.sid": {"lam": 0.2, "alpha": 50.0, "epsilon": 1.0},
    "adalop.sid": {"lam": 0.2, "alpha": 50.0, "gamma": 10.0},
}


def default_method_params(experiment, token):
    """Calibrated per-method defaults for the named experiment."""
    kind = token.split(".")[0]
    if experiment == "cs":
        table, admm, fidelity = CS_METHOD_DEFAULTS, _CS_ADMM, "l2"
    elif experiment == "nanopore":
        table, admm, fidelity = NANOPORE_METHOD_DEFAULTS, _NANO_ADMM, "l2"
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    params = dict(admm)
    params["fidelity"] = fidelity
    params.update(table.get(token, table.get(kind, {})))
    return params


def sweep_csv(rows, grid_name):
    """One aggregate row per (method, grid value); no timing columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    metrics = ("snr_db_mean", "snr_db_median", "snr_db_std", "f1_mean",
               "f1_median", "f1_std", "nmse_mean", "nmse_median", "nmse_std")
    writer.writerow(["method", grid_name] + list(metrics)
                    + ["trials", "failures"])
    for row in rows:
        out = [row["method"], repr(row[grid_name])]
        out += [repr(row[m]) for m in metrics]
        out += [row["trials"], row["failures"]]
        writer.writerow(out)
    return buf.getvalue()
