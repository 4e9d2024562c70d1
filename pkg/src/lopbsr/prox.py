"""Proximal-operator catalog used by the ADMM sub-steps.

All operations are pure functions.  The vector variants (``*_vec``) are the
hot paths and run on the selected kernel backend; the scalar forms wrap them.
"""

import numpy as np

from ._backend import kernels


class SquaredError:
    """f(u) = 0.5*||y - u||^2."""

    kind = "l2"

    def __init__(self, y):
        self.y = np.asarray(y, dtype=np.float64)

    def value(self, u):
        return 0.5 * float(np.sum((self.y - u) ** 2))

    def prox(self, beta, u):
        return (beta * self.y + u) / (beta + 1.0)


class AbsoluteError:
    """f(u) = ||y - u||_1."""

    kind = "l1abs"

    def __init__(self, y):
        self.y = np.asarray(y, dtype=np.float64)

    def value(self, u):
        return float(np.sum(np.abs(self.y - u)))

    def prox(self, beta, u):
        d = self.y - u
        return u + beta * d / np.maximum(np.abs(d), beta)


class ShiftedIDiv:
    """f(u) = sum(u + nu2 - y*log(u + nu2)) on {u : u + nu2 > 0}, y > 0.

    Models mixed Poisson-Gaussian observations; nu2 is the additive-noise
    variance acting as the domain shift.
    """

    kind = "sid"

    def __init__(self, y, nu2):
        y = np.asarray(y, dtype=np.float64)
        if np.any(y <= 0.0):
            raise ValueError("ShiftedIDiv requires every y_j > 0")
        if nu2 <= 0.0:
            raise ValueError("nu2 must be > 0")
        self.y = y
        self.nu2 = float(nu2)

    def value(self, u):
        t = u + self.nu2
        if np.any(t <= 0.0):
            return np.inf
        return float(np.sum(t - self.y * np.log(t)))

    def prox(self, beta, u):
        # positive root of t^2 + (beta - nu2 - u)*t - beta*y = 0, then t - nu2
        c = beta - self.nu2 - u
        t = 0.5 * (-c + np.sqrt(c * c + 4.0 * beta * self.y))
        return t - self.nu2


def prox_fidelity(f, beta, u):
    """argmin_x f(x) + (1/(2*beta))*||x - u||^2 for the supported fidelities."""
    if beta <= 0.0:
        raise ValueError("beta must be > 0")
    u = np.asarray(u, dtype=np.float64)
    if u.shape != f.y.shape:
        raise ValueError(f"u has shape {u.shape}, expected {f.y.shape}")
    return f.prox(float(beta), u)


def project_l1_ball(z, alpha):
    """Euclidean projection onto the l1 ball of radius alpha.

    Returns z unchanged when already inside; otherwise soft-thresholds at the
    unique level that lands exactly on the sphere (pivot search, expected
    linear time).
    """
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.size == 0:
        return z.copy()
    return kernels.l1ball_project(z, float(alpha))


def prox_elastic_net(v, l1, l2):
    """Element-wise prox of l1*||.||_1 + l2*||.||_2^2 (soft threshold + shrink).

    l1 and l2 may be scalars or arrays broadcasting against v.
    """
    l1 = np.asarray(l1, dtype=np.float64)
    l2 = np.asarray(l2, dtype=np.float64)
    if np.any(l1 < 0.0) or np.any(l2 < 0.0):
        raise ValueError("elastic-net parameters must be >= 0")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - l1, 0.0) / (1.0 + 2.0 * l2)


def prox_perspective_vec(omega, v, xi):
    """Vectorized joint prox of omega_n * phi at (v_n, xi_n)."""
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(v))
            and np.all(np.isfinite(xi))):
        raise ValueError("non-finite input to perspective prox")
    if np.any(omega < 0.0):
        raise ValueError("omega must be >= 0")
    return kernels.perspective_prox(omega, v, xi)


def prox_perspective(omega, v, xi):
    """Scalar joint prox of omega*phi; returns the pair (x, tau)."""
    v_out, xi_out = prox_perspective_vec(
        np.array([omega]), np.array([v]), np.array([xi]))
    return float(v_out[0]), float(xi_out[0])


def bisect_xi_vec(a, b, lam, mu4, tol=1e-10):
    """Vectorized constrained scale update: per element, the minimizer over
    xi >= 1 of (lam/(2 xi))*a + (lam/2)*log(xi) + (mu4/2)*(xi - b)^2."""
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if mu4 <= lam / 54.0:
        raise ValueError("mu4 must exceed lam/54 for a unique minimizer")
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if np.any(a < 1.0):
        raise ValueError("a must be >= 1")
    return kernels.xi_bisect(a, b, float(lam), float(mu4), float(tol))


def bisect_xi(a, b, lam, mu4, tol=1e-10):
    """Scalar form of bisect_xi_vec."""
    return float(bisect_xi_vec(np.array([a]), np.array([b]), lam, mu4, tol)[0])
