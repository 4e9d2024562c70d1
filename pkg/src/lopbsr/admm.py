"""ADMM solvers for the latent-partition penalties.

One loop skeleton serves four penalty kinds: the nonconvex logarithmic and
adaptively weighted variants, the convex latent-partition baseline (fixed
weights, no weight updates), and a plain l1 baseline that drops the partition
machinery entirely.  Update order follows the penalty kind exactly; penalty
parameters mu are scaled by rho at the end of every sweep.
"""

import time
from dataclasses import dataclass

import numpy as np

from .linops import solve_cg, solve_tridiag_sigma
from .penalties import (PenaltySpec, emcp_optimal_weight, var_l2, var_log,
                        weighted_surface_sum)
from .prox import bisect_xi_vec, prox_elastic_net, prox_fidelity, \
    prox_perspective_vec, project_l1_ball


class SolverAbort(RuntimeError):
    """Raised when a non-finite value appears in the iterate state."""

    def __init__(self, iteration, detail):
        super().__init__(f"solver aborted at iteration {iteration}: {detail}")
        self.iteration = iteration


@dataclass
class Problem:
    A: object
    L: object
    fidelity: object
    penalty: PenaltySpec

    def dims(self):
        n = self.A.cols
        if self.L.cols != n:
            raise ValueError("A and L must share their domain dimension")
        j = self.A.rows
        if self.fidelity.y.shape != (j,):
            raise ValueError("observation length must match A rows")
        k = self.L.rows
        if k < 1:
            raise ValueError("L must have at least one row")
        return n, j, k


@dataclass
class AdmmConfig:
    max_iter: int = 2000
    rho: float = 1.01
    mu_init: tuple = (1.0, 1.0, 1.0, None)  # mu4=None resolves per kind
    cg_tol: float = 1e-8
    cg_max_iter: int = 500
    bisect_tol: float = 1e-10
    stop_tol: float = 1e-6
    init: str = "zeros"  # "zeros" | "randn"
    init_seed: int | None = None

    def validate(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rho < 1.0:
            raise ValueError("rho must be >= 1")
        for name in ("cg_tol", "bisect_tol", "stop_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.init not in ("zeros", "randn"):
            raise ValueError("init must be 'zeros' or 'randn'")
        mu1, mu2, mu3, mu4 = self.mu_init
        if min(mu1, mu2, mu3) <= 0.0:
            raise ValueError("mu1..mu3 must be > 0")
        if mu4 is not None and mu4 <= 0.0:
            raise ValueError("mu4 must be > 0 when given")


@dataclass
class AdmmState:
    x: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    omega: np.ndarray
    w: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    r4: np.ndarray
    mu1: float
    mu2: float
    mu3: float
    mu4: float
    iter: int = 0
    cg_total_iters: int = 0
    cg_stagnations: int = 0


@dataclass
class SolveResult:
    x_hat: np.ndarray
    sigma_hat: np.ndarray
    lagrangian_trace: np.ndarray
    primal_residuals: np.ndarray
    iterations: int
    converged: bool
    cg_total_iters: int = 0
    wall_time_s: float = 0.0


def resolve_mu4(config, penalty):
    """Kind rule for the scale-coupling penalty parameter."""
    mu4 = config.mu_init[3]
    if penalty.kind == "loglop":
        floor = penalty.lam / 54.0
        if mu4 is None:
            mu4 = floor + 1e-3
        elif mu4 <= floor:
            raise ValueError(
                f"loglop requires mu4 > lam/54 = {floor:.6g}, got {mu4}")
    elif penalty.kind in ("lop", "adalop"):
        if mu4 is None:
            mu4 = config.mu_init[1]
        elif mu4 != config.mu_init[1]:
            raise ValueError(f"{penalty.kind} requires mu4 == mu2")
    else:
        mu4 = 1.0 if mu4 is None else mu4
    return float(mu4)


def init_state(problem, config):
    n, j, k = problem.dims()
    pen = problem.penalty
    mu1, mu2, mu3, _ = config.mu_init
    mu4 = resolve_mu4(config, pen)

    tau_floor = 1.0 if pen.kind == "loglop" else 0.0
    if config.init == "zeros":
        x = np.zeros(n)
        sigma = np.full(k, tau_floor)
    else:
        rng = np.random.default_rng(config.init_seed)
        x = rng.standard_normal(n)
        sigma = tau_floor + np.abs(rng.standard_normal(k))
    u = problem.A.apply(x)
    v = problem.L.apply(x)
    xi = sigma.copy()
    eta = sigma[1:] - sigma[:-1]

    if pen.kind == "adalop":
        w = pen.weights(k)
    else:
        w = np.full(k, pen.lam)
    omega = w.copy()

    return AdmmState(
        x=x, sigma=sigma, u=u, v=v, eta=eta, xi=xi, omega=omega, w=w,
        r1=np.zeros(j), r2=np.zeros(k), r3=np.zeros(max(k - 1, 0)),
        r4=np.zeros(k), mu1=float(mu1), mu2=float(mu2), mu3=float(mu3),
        mu4=mu4)


def step_x(state, problem, config):
    """Solve (mu1*A^T A + mu2*L^T L) x = A^T(mu1*u + r1) + L^T(mu2*v + r2)
    by warm-started CG on the normal-operator closure."""
    A, L = problem.A, problem.L
    rhs = A.adjoint_apply(state.mu1 * state.u + state.r1) \
        + L.adjoint_apply(state.mu2 * state.v + state.r2)

    def normal(z):
        return state.mu1 * A.gram_apply(z) + state.mu2 * L.gram_apply(z)

    x, info = solve_cg(normal, rhs, x0=state.x, tol=config.cg_tol,
                       max_iter=config.cg_max_iter)
    state.x = x
    state.cg_total_iters += info.iterations
    if info.stagnated:
        state.cg_stagnations += 1
    return x


def step_u(state, problem, ax):
    state.u = prox_fidelity(problem.fidelity, 1.0 / state.mu1,
                            ax - state.r1 / state.mu1)
    return state.u


def step_sigma(state):
    """sigma solves (mu3*D^T D + mu4*I) sigma = D^T(mu3*eta + r3)
    + mu4*xi + r4."""
    k = state.sigma.size
    rhs = np.zeros(k)
    t = state.mu3 * state.eta + state.r3
    rhs[1:] += t
    rhs[:-1] -= t
    rhs += state.mu4 * state.xi + state.r4
    state.sigma = solve_tridiag_sigma(state.mu3, state.mu4, rhs)
    return state.sigma


def step_eta(state, dsig, alpha):
    state.eta = project_l1_ball(dsig - state.r3 / state.mu3, alpha)
    return state.eta


def step_v_logop(state, lx, lam, epsilon):
    arg = lx - state.r2 / state.mu2
    if lam == 0.0:
        state.v = arg
        return state.v
    scale = lam / (state.mu2 * state.xi * epsilon)
    state.v = prox_elastic_net(arg, scale, scale / (2.0 * epsilon))
    return state.v


def step_xi_logop(state, lam, epsilon, tol):
    b = state.sigma - state.r4 / state.mu4
    if lam == 0.0:
        state.xi = np.maximum(1.0, b)
        return state.xi
    a = (np.abs(state.v) / epsilon + 1.0) ** 2
    state.xi = bisect_xi_vec(a, b, lam, state.mu4, tol)
    return state.xi


def step_v_xi_joint(state, lx, weights):
    """Joint (v, xi) update through the weighted perspective prox; requires
    mu4 == mu2."""
    v_arg = lx - state.r2 / state.mu2
    xi_arg = state.sigma - state.r4 / state.mu4
    state.v, state.xi = prox_perspective_vec(weights / state.mu2, v_arg,
                                             xi_arg)
    return state.v, state.xi


def step_v_l1(state, lx, lam):
    state.v = prox_elastic_net(lx - state.r2 / state.mu2, lam / state.mu2, 0.0)
    return state.v


def step_omega_w(state, gamma):
    phi = var_l2(state.v, state.xi)
    state.omega = np.asarray(emcp_optimal_weight(phi, gamma, state.w),
                             dtype=np.float64)
    state.w = state.omega.copy()
    return state.omega, state.w


def step_duals(state, ax, lx, dsig=None):
    state.r1 = state.r1 + state.mu1 * (state.u - ax)
    state.r2 = state.r2 + state.mu2 * (state.v - lx)
    if dsig is not None:
        state.r3 = state.r3 + state.mu3 * (state.eta - dsig)
        state.r4 = state.r4 + state.mu4 * (state.xi - state.sigma)


def primal_residual(state, ax, lx, dsig=None):
    """Max infinity-norm of the constraint residuals."""
    res = max(
        float(np.max(np.abs(state.u - ax), initial=0.0)),
        float(np.max(np.abs(state.v - lx), initial=0.0)),
    )
    if dsig is not None:
        res = max(
            res,
            float(np.max(np.abs(state.eta - dsig), initial=0.0)),
            float(np.max(np.abs(state.xi - state.sigma), initial=0.0)),
        )
    return res


def augmented_lagrangian(state, problem):
    """Recompute the augmented Lagrangian from the state alone.

    Kept independent of the step functions so tests and traces certify the
    solver rather than echo it.
    """
    pen = problem.penalty
    ax = problem.A.apply(state.x)
    lx = problem.L.apply(state.x)
    du = state.u - ax
    dv = state.v - lx
    val = problem.fidelity.value(state.u)
    val += float(state.r1 @ du) + 0.5 * state.mu1 * float(du @ du)
    val += float(state.r2 @ dv) + 0.5 * state.mu2 * float(dv @ dv)

    if pen.kind == "l1":
        return val + pen.lam * float(np.sum(np.abs(state.v)))

    if pen.kind == "loglop":
        surf = np.asarray(var_log(state.v, state.xi, pen.epsilon))
        val += weighted_surface_sum(np.full(surf.shape, pen.lam), surf)
    elif pen.kind == "lop":
        surf = np.asarray(var_l2(state.v, state.xi))
        val += weighted_surface_sum(np.full(surf.shape, pen.lam), surf)
    else:  # adalop
        surf = np.asarray(var_l2(state.v, state.xi))
        val += weighted_surface_sum(state.omega, surf)
        val += 0.5 * pen.gamma * float(np.sum((state.omega - state.w) ** 2))

    dsig = state.sigma[1:] - state.sigma[:-1]
    de = state.eta - dsig
    dx = state.xi - state.sigma
    val += float(state.r3 @ de) + 0.5 * state.mu3 * float(de @ de)
    val += float(state.r4 @ dx) + 0.5 * state.mu4 * float(dx @ dx)
    if float(np.sum(np.abs(state.eta))) > pen.alpha * (1.0 + 1e-9) + 1e-12:
        return np.inf
    return val


def _check_finite(state, iteration):
    for name in ("x", "sigma", "u", "v", "eta", "xi", "omega", "w",
                 "r1", "r2", "r3", "r4"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise SolverAbort(iteration, f"non-finite values in {name}")


def solve(problem, config=None):
    """Run the ADMM loop for the problem's penalty kind.

    Terminates when the max primal residual drops below stop_tol or after
    max_iter sweeps; returns the iterates plus the Lagrangian and residual
    traces.
    """
    if config is None:
        config = AdmmConfig()
    config.validate()
    pen = problem.penalty
    problem.dims()
    state = init_state(problem, config)
    t0 = time.perf_counter()

    lag_trace = []
    res_trace = []
    converged = False
    uses_partition = pen.kind in ("lop", "loglop", "adalop")
    sweeps = 0

    for k in range(config.max_iter):
        if pen.kind == "adalop":
            step_omega_w(state, pen.gamma)

        step_x(state, problem, config)
        ax = problem.A.apply(state.x)
        lx = problem.L.apply(state.x)
        step_u(state, problem, ax)

        dsig = None
        if pen.kind == "loglop":
            step_v_logop(state, lx, pen.lam, pen.epsilon)
        if uses_partition:
            step_sigma(state)
            dsig = state.sigma[1:] - state.sigma[:-1]
            step_eta(state, dsig, pen.alpha)
        if pen.kind == "loglop":
            step_xi_logop(state, pen.lam, pen.epsilon, config.bisect_tol)
        elif pen.kind in ("lop", "adalop"):
            step_v_xi_joint(state, lx, state.omega)
        elif pen.kind == "l1":
            step_v_l1(state, lx, pen.lam)

        step_duals(state, ax, lx, dsig)
        state.iter = sweeps = k + 1

        _check_finite(state, k + 1)
        lag_trace.append(augmented_lagrangian(state, problem))
        res = primal_residual(state, ax, lx, dsig)
        res_trace.append(res)
        if res <= config.stop_tol:
            converged = True
            break

        if config.rho != 1.0:
            state.mu1 *= config.rho
            state.mu2 *= config.rho
            state.mu3 *= config.rho
            state.mu4 *= config.rho

    return SolveResult(
        x_hat=state.x.copy(),
        sigma_hat=state.sigma.copy(),
        lagrangian_trace=np.asarray(lag_trace),
        primal_residuals=np.asarray(res_trace),
        iterations=sweeps,
        converged=converged,
        cg_total_iters=state.cg_total_iters,
        wall_time_s=time.perf_counter() - t0,
    )
