"""Variational penalty surfaces, scalar penalties, and their closed-form
asymptotic values.

Extended-real convention: the variational surfaces return +inf outside their
domain, and products follow the rule 0*inf = 0 so that zero weights switch a
coordinate off entirely.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

KINDS = ("l1", "lop", "loglop", "adalop")


def var_l2(x, tau):
    """l2 variational surface: |x|^2/(2 tau) + tau/2 for tau > 0, 0 at the
    origin, +inf otherwise.  Its minimum over tau is |x|, attained at tau=|x|."""
    x = np.asarray(x, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    x, tau = np.broadcast_arrays(x, tau)
    out = np.full(x.shape, np.inf)
    pos = tau > 0.0
    with np.errstate(divide="ignore", over="ignore"):
        out[pos] = x[pos] ** 2 / (2.0 * tau[pos]) + 0.5 * tau[pos]
    out[(tau == 0.0) & (x == 0.0)] = 0.0
    if out.ndim == 0:
        return float(out)
    return out


def var_log(x, tau, epsilon):
    """Logarithmic variational surface, finite only for tau >= 1; its minimum
    over tau is log(|x|/epsilon + 1), attained at tau = (|x|/epsilon + 1)^2."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    x = np.asarray(x, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    x, tau = np.broadcast_arrays(x, tau)
    out = np.full(x.shape, np.inf)
    ok = tau >= 1.0
    z = (np.abs(x[ok]) / epsilon + 1.0) ** 2
    out[ok] = z / (2.0 * tau[ok]) + 0.5 * np.log(tau[ok]) - 0.5
    if out.ndim == 0:
        return float(out)
    return out


def mcp(x, gamma, w):
    """Minimax concave penalty: w|x| - x^2/(2 gamma) below the kink at
    |x| = gamma*w, constant gamma*w^2/2 above it."""
    if np.any(np.asarray(gamma) <= 0.0) or np.any(np.asarray(w) <= 0.0):
        raise ValueError("gamma and w must be > 0")
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    val = np.where(a <= gamma * w, w * a - a * a / (2.0 * gamma),
                   0.5 * gamma * np.asarray(w) ** 2)
    if val.ndim == 0:
        return float(val)
    return val


def _mcp_profile(z, gamma, w):
    """MCP profile on the extended half-line: handles z = +inf (saturates)."""
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    z, w = np.broadcast_arrays(z, w)
    out = np.empty(z.shape)
    inner = z <= gamma * w
    zi = z[inner]
    out[inner] = w[inner] * zi - zi * zi / (2.0 * gamma)
    out[~inner] = 0.5 * gamma * w[~inner] ** 2
    return out


def var_mcp(x, tau, gamma, w):
    """MCP-composed variational surface: the MCP profile applied to the l2
    surface.  Bounded above by gamma*w^2/2; min over tau is mcp(x, gamma, w)."""
    phi = np.asarray(var_l2(x, tau), dtype=np.float64)
    out = _mcp_profile(phi, gamma, w)
    if out.ndim == 0:
        return float(out)
    return out


def log_sum(x, epsilon):
    """Sum of log(|x_n|/epsilon + 1)."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(np.log(np.abs(x) / epsilon + 1.0)))


def emcp_optimal_weight(phi_val, gamma, w):
    """Optimal adaptive weight max(0, w - phi_val/gamma); +inf surface values
    map to weight 0 under the 0*inf = 0 rule."""
    if gamma <= 0.0:
        raise ValueError("gamma must be > 0")
    phi_val = np.asarray(phi_val, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.where(np.isinf(phi_val), 0.0,
                   np.maximum(0.0, w - phi_val / gamma))
    if out.ndim == 0:
        return float(out)
    return out


def weighted_surface_sum(omega, phi_vals):
    """sum(omega_n * phi_n) under the 0*inf = 0 rule."""
    omega = np.asarray(omega, dtype=np.float64)
    phi_vals = np.asarray(phi_vals, dtype=np.float64)
    active = omega > 0.0
    if np.any(np.isinf(phi_vals[active])):
        return np.inf
    return float(np.sum(omega[active] * phi_vals[active]))


def block_penalty_theta(xblock, epsilon):
    """Logarithmic block penalty: |B| * log sqrt(mean((|x_n|/eps + 1)^2))."""
    xblock = np.asarray(xblock, dtype=np.float64)
    if xblock.size == 0:
        raise ValueError("block must be nonempty")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be > 0")
    m = xblock.size
    return 0.5 * m * float(np.log(np.mean((np.abs(xblock) / epsilon + 1.0) ** 2)))


@dataclass
class PenaltySpec:
    """Which regularizer to use, with its parameters.

    kind       one of "l1", "lop", "loglop", "adalop"
    lam        overall strength; for adalop it only seeds w0 = lam * ones
    alpha      partition-granularity budget (ignored for l1)
    epsilon    log curvature (loglop only)
    gamma      concavity parameter > 1 (adalop only)
    w0         initial adaptive weights (adalop only; defaults to lam * ones)
    """

    kind: str
    lam: float = 1.0
    alpha: float = 0.0
    epsilon: float | None = None
    gamma: float | None = None
    w0: np.ndarray | float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.kind == "loglop":
            if self.epsilon is None or self.epsilon <= 0.0:
                raise ValueError("loglop requires epsilon > 0")
        elif self.epsilon is not None:
            raise ValueError(f"epsilon is not a parameter of {self.kind}")
        if self.kind == "adalop":
            if self.gamma is None or self.gamma <= 1.0:
                raise ValueError("adalop requires gamma > 1")
            if self.w0 is not None and np.any(np.asarray(self.w0) < 0.0):
                raise ValueError("w0 must be nonnegative")
        else:
            if self.gamma is not None or self.w0 is not None:
                raise ValueError(f"gamma/w0 are not parameters of {self.kind}")

    def weights(self, k):
        """Initial adaptive weights broadcast to length k (adalop)."""
        if self.w0 is None:
            return np.full(k, self.lam)
        w = np.asarray(self.w0, dtype=np.float64)
        if w.ndim == 0:
            return np.full(k, float(w))
        if w.shape != (k,):
            raise ValueError(f"w0 has shape {w.shape}, expected ({k},)")
        return w.copy()


def _adalop_shared_scale_value(x, gamma, w, tol=1e-12, max_iter=100000):
    """Value of the coarsest-partition adaptive penalty by alternating the
    closed-form weight and shared-scale steps until the value stalls."""
    x = np.asarray(x, dtype=np.float64)
    omega = w.copy()
    prev = np.inf
    val = np.inf
    for _ in range(max_iter):
        l1w = float(omega.sum())
        if l1w > 0.0:
            tau = float(np.sqrt(np.sum(omega * x * x)) / np.sqrt(l1w))
        else:
            tau = 0.0
        phi = np.asarray(var_l2(x, tau), dtype=np.float64)
        omega = np.asarray(emcp_optimal_weight(phi, gamma, w), dtype=np.float64)
        val = weighted_surface_sum(omega, phi) + 0.5 * gamma * float(
            np.sum((omega - w) ** 2))
        if prev - val < tol:
            break
        prev = val
    return val


def penalty_closed_form(x, spec, regime):
    """Closed-form penalty value in the limiting partition regimes.

    regime "alpha_inf" (finest partitions): loglop -> log-sum; adalop ->
    per-element MCP sum.  regime "alpha_zero" (one global block): loglop ->
    N*log sqrt(mean((|x_n|/eps + 1)^2)); adalop -> alternating minimization
    of the shared-scale weighted objective.
    """
    x = np.asarray(x, dtype=np.float64)
    if regime not in ("alpha_zero", "alpha_inf"):
        raise ValueError(f"unknown regime {regime!r}")
    if spec.kind == "loglop":
        if regime == "alpha_inf":
            return log_sum(x, spec.epsilon)
        return block_penalty_theta(x, spec.epsilon)
    if spec.kind == "adalop":
        w = spec.weights(x.size)
        if regime == "alpha_inf":
            active = w > 0.0
            out = 0.0
            if active.any():
                out = float(np.sum(mcp(x[active], spec.gamma, w[active])))
            return out
        return _adalop_shared_scale_value(x, spec.gamma, w)
    raise ValueError(f"no closed form for kind {spec.kind!r}")


@dataclass
class GridConfig:
    points_per_dim: int = 13
    refine: bool = True
    max_total: int = 2_000_000


def _surface_sum(x, sigma, spec):
    """Total variational surface value at latent vector sigma (sigma may be a
    stack with the last axis indexing coordinates)."""
    if spec.kind == "loglop":
        return np.sum(var_log(x, sigma, spec.epsilon), axis=-1)
    if spec.kind == "lop":
        return np.sum(var_l2(x, sigma), axis=-1)
    if spec.kind == "adalop":
        w = spec.weights(np.asarray(x).shape[-1])
        return np.sum(var_mcp(x, sigma, spec.gamma, w), axis=-1)
    raise ValueError(f"kind {spec.kind!r} has no latent-partition form")


def _candidate_grid(x, spec, points):
    x = np.asarray(x, dtype=np.float64)
    if spec.kind == "loglop":
        peaks = (np.abs(x) / spec.epsilon + 1.0) ** 2
        hi = max(2.0 * float(peaks.max()), 4.0)
        grid = np.geomspace(1.0, hi, points)
        grid = np.unique(np.concatenate([grid, peaks, [1.0]]))
    else:
        scale = float(np.abs(x).max())
        if spec.kind == "adalop":
            wmax = float(np.max(spec.weights(x.size)))
            scale = max(scale, spec.gamma * wmax)
        hi = max(2.0 * scale, 1.0)
        grid = np.geomspace(hi * 1e-4, hi, points - 1)
        grid = np.unique(np.concatenate([grid, np.abs(x), [0.0]]))
    return grid


def _refine(x, spec, sigma0, alpha):
    """Polish a lattice minimizer with SLSQP; the TV budget is linearized via
    per-difference slack variables."""
    n = sigma0.size
    lb = 1.0 if spec.kind == "loglop" else 1e-9

    def objective(z):
        sig = np.maximum(z[:n], lb)
        return float(_surface_sum(x, sig, spec))

    if n == 1:
        res = minimize(objective, sigma0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14})
        return float(res.fun), np.maximum(res.x, lb)

    z0 = np.concatenate([sigma0, np.abs(np.diff(sigma0))])

    def obj_full(z):
        return objective(z)

    cons = [
        {"type": "ineq",
         "fun": lambda z: z[n:] - (z[1:n] - z[:n - 1])},
        {"type": "ineq",
         "fun": lambda z: z[n:] + (z[1:n] - z[:n - 1])},
        {"type": "ineq", "fun": lambda z: alpha - np.sum(z[n:])},
    ]
    bounds = [(lb, None)] * n + [(0.0, None)] * (n - 1)
    res = minimize(obj_full, z0, method="SLSQP", bounds=bounds,
                   constraints=cons, options={"maxiter": 200, "ftol": 1e-14})
    sig = np.maximum(res.x[:n], lb)
    tv = float(np.sum(np.abs(np.diff(sig))))
    if tv <= alpha + 1e-8:
        return float(_surface_sum(x, sig, spec)), sig
    return np.inf, sig


def penalty_bruteforce(x, spec, grid=None):
    """Test oracle: evaluate the latent-partition penalty at finite alpha by
    dense lattice search over sigma plus local refinement.

    Only meaningful for small vectors; refuses len(x) > 6.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size > 6:
        raise ValueError("brute-force evaluation is limited to len(x) <= 6")
    if x.size == 0:
        return 0.0
    if grid is None:
        grid = GridConfig()
    if spec.kind not in ("lop", "loglop", "adalop"):
        raise ValueError(f"kind {spec.kind!r} has no latent-partition form")

    g = _candidate_grid(x, spec, grid.points_per_dim)
    while g.size**x.size > grid.max_total:
        g = g[::2]
    axes = np.meshgrid(*([g] * x.size), indexing="ij")
    sigma = np.stack([a.ravel() for a in axes], axis=-1)
    if x.size > 1:
        tv = np.sum(np.abs(np.diff(sigma, axis=-1)), axis=-1)
        sigma = sigma[tv <= spec.alpha + 1e-12]
    vals = _surface_sum(x, sigma, spec)
    idx = int(np.argmin(vals))
    best_val = float(vals[idx])
    best_sigma = sigma[idx]

    if grid.refine:
        ref_val, _ = _refine(x, spec, best_sigma.astype(float), spec.alpha)
        best_val = min(best_val, ref_val)
    return best_val
