"""Pure-numpy implementations of the solver's hot per-element kernels.

Selected at import time when the compiled extension is unavailable (or when
LOPBSR_BACKEND=python).  Every function has a signature-identical twin in
``_kernels.pyx``; ``tests/test_backends.py`` checks they agree.
"""

import numpy as np
from scipy.linalg import solveh_banded

NAME = "python"


def tridiag_solve(mu3, mu4, rhs):
    """Solve (mu3*D^T D + mu4*I) s = rhs, D the first-order difference map.

    The system is symmetric positive definite and tridiagonal: diagonal
    mu4+mu3 at both ends (mu4+2*mu3 inside), off-diagonals -mu3.
    """
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    k = rhs.shape[0]
    if k == 1:
        return rhs / mu4
    ab = np.zeros((2, k))
    ab[0, 1:] = -mu3
    ab[1, :] = mu4 + 2.0 * mu3
    ab[1, 0] = mu4 + mu3
    ab[1, -1] = mu4 + mu3
    return solveh_banded(ab, rhs, lower=False)


def l1ball_project(z, alpha):
    """Euclidean projection of z onto {t : ||t||_1 <= alpha}.

    Expected-linear-time pivot search for the soft threshold (no full sort);
    pivots are chosen deterministically so results are reproducible.
    """
    z = np.asarray(z, dtype=np.float64)
    mag = np.abs(z)
    if mag.sum() <= alpha:
        return z.copy()
    if alpha == 0.0:
        return np.zeros_like(z)

    cand = mag
    acc_sum = 0.0
    acc_cnt = 0
    while cand.size:
        pivot = cand[cand.size // 2]
        ge = cand >= pivot
        block_sum = cand[ge].sum()
        block_cnt = int(ge.sum())
        if acc_sum + block_sum - (acc_cnt + block_cnt) * pivot < alpha:
            # everything >= pivot is above the final threshold
            acc_sum += block_sum
            acc_cnt += block_cnt
            cand = cand[~ge]
        else:
            # pivot (and anything below) is inactive
            cand = cand[cand > pivot]
    theta = (acc_sum - alpha) / acc_cnt
    return np.sign(z) * np.maximum(mag - theta, 0.0)


def xi_bisect(a, b, lam, mu4, tol):
    """Per-element minimizer over xi >= 1 of
    lam*a/(2 xi) + (lam/2) log xi + (mu4/2)(xi - b)^2.

    Strictly convex for mu4 > lam/54 and a >= 1; the root of the derivative
    (lam/(2 xi^2))(xi - a) + mu4 (xi - b) is bracketed by
    [max(1, min(a, b)), max(a, b)].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lo = np.maximum(1.0, np.minimum(a, b))
    hi = np.maximum(a, b)

    def slope(t):
        return 0.5 * lam * (t - a) / (t * t) + mu4 * (t - b)

    # nonnegative slope at the lower end means the constrained min sits there
    hi = np.where(slope(lo) >= 0.0, lo, hi)
    for _ in range(200):
        if (hi - lo).max() <= tol:
            break
        mid = 0.5 * (lo + hi)
        pos = slope(mid) > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


def _cubic_positive_root(p, q):
    """Unique positive root of s^3 + p*s + q = 0 given q < 0 (vectorized).

    Uses the stable trigonometric/hyperbolic branches of Cardano's formula
    plus one Newton polish step.
    """
    s = np.empty_like(p)

    pos = p > 0.0
    if pos.any():
        pp, qq = p[pos], q[pos]
        arg = 1.5 * qq / pp * np.sqrt(3.0 / pp)
        s[pos] = -2.0 * np.sqrt(pp / 3.0) * np.sinh(np.arcsinh(arg) / 3.0)

    zero = p == 0.0
    if zero.any():
        s[zero] = np.cbrt(-q[zero])

    neg = p < 0.0
    if neg.any():
        pp, qq = p[neg], q[neg]
        m = np.sqrt(-pp / 3.0)
        arg = 1.5 * qq / pp * np.sqrt(-3.0 / pp)
        one_root = 27.0 * qq * qq + 4.0 * pp**3 >= 0.0
        out = np.empty_like(pp)
        if one_root.any():
            out[one_root] = 2.0 * m[one_root] * np.cosh(
                np.arccosh(np.maximum(arg[one_root], 1.0)) / 3.0)
        if (~one_root).any():
            # three real roots; the largest is the single positive one
            out[~one_root] = 2.0 * m[~one_root] * np.cos(
                np.arccos(np.clip(arg[~one_root], -1.0, 1.0)) / 3.0)
        s[neg] = out

    curv = 3.0 * s * s + p
    safe = np.abs(curv) > 1e-8
    resid = s * (s * s + p) + q
    return np.where(safe, s - resid / np.where(safe, curv, 1.0), s)


def perspective_prox(omega, v, xi):
    """Joint prox of omega*phi at (v, xi), phi the l2-variational surface
    |x|^2/(2 tau) + tau/2 (tau > 0; 0 at the origin; +inf elsewhere).

    Case boundaries resolve to the zero-producing branch; omega = 0 passes v
    through and clamps xi to >= 0.
    """
    omega = np.asarray(omega, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    v_out = np.empty_like(v)
    xi_out = np.empty_like(xi)

    off = omega <= 0.0
    if off.any():
        v_out[off] = v[off]
        xi_out[off] = np.maximum(xi[off], 0.0)

    on = ~off
    dead = on & (2.0 * omega * xi + v * v <= omega * omega)
    v_out[dead] = 0.0
    xi_out[dead] = 0.0

    axis = on & ~dead & (v == 0.0)
    if axis.any():
        v_out[axis] = 0.0
        xi_out[axis] = xi[axis] - 0.5 * omega[axis]

    gen = on & ~dead & (v != 0.0)
    if gen.any():
        om, vv, xx = omega[gen], v[gen], xi[gen]
        s = _cubic_positive_root(2.0 * xx / om + 1.0, -2.0 * np.abs(vv) / om)
        v_out[gen] = vv - s * om * np.sign(vv)
        xi_out[gen] = xx + 0.5 * (s * s - 1.0) * om
    return v_out, xi_out
