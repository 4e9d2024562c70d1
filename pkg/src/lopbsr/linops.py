"""Linear operators and the two structured solvers the ADMM updates need.

Operators are immutable after construction and safe to share across threads;
the solvers are reentrant.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels


class LinearMap:
    """Abstract linear operator with explicit dimensions and adjoint."""

    rows: int
    cols: int

    def apply(self, z):
        raise NotImplementedError

    def adjoint_apply(self, y):
        raise NotImplementedError

    def gram_apply(self, z):
        """Apply the normal operator A^T A. Subclasses may specialize."""
        return self.adjoint_apply(self.apply(z))

    def _check_apply(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.cols,):
            raise ValueError(
                f"operand has shape {z.shape}, expected ({self.cols},)")
        return z

    def _check_adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.rows,):
            raise ValueError(
                f"adjoint operand has shape {y.shape}, expected ({self.rows},)")
        return y


class DenseMap(LinearMap):
    """Dense matrix operator; caches its Gram matrix on first use."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        self.matrix = matrix
        self.rows, self.cols = matrix.shape
        self._gram = None

    def apply(self, z):
        return self.matrix @ self._check_apply(z)

    def adjoint_apply(self, y):
        return self.matrix.T @ self._check_adjoint(y)

    def gram_apply(self, z):
        if self._gram is None:
            self._gram = self.matrix.T @ self.matrix
        return self._gram @ self._check_apply(z)


class FirstDifferenceMap(LinearMap):
    """Forward difference: (Dz)_k = z_{k+1} - z_k, mapping R^K -> R^{K-1}."""

    def __init__(self, cols):
        if cols < 1:
            raise ValueError("cols must be >= 1")
        self.cols = cols
        self.rows = cols - 1

    def apply(self, z):
        z = self._check_apply(z)
        return z[1:] - z[:-1]

    def adjoint_apply(self, y):
        y = self._check_adjoint(y)
        out = np.zeros(self.cols)
        out[1:] += y
        out[:-1] -= y
        return out

    def gram_apply(self, z):
        z = self._check_apply(z)
        out = np.zeros(self.cols)
        d = z[1:] - z[:-1]
        out[1:] += d
        out[:-1] -= d
        return out


class IdentityMap(LinearMap):
    def __init__(self, n):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.rows = self.cols = n

    def apply(self, z):
        return self._check_apply(z).copy()

    def adjoint_apply(self, y):
        return self._check_adjoint(y).copy()

    def gram_apply(self, z):
        return self._check_apply(z).copy()


class ScaledMap(LinearMap):
    """scale * inner, sharing the inner operator."""

    def __init__(self, scale, inner):
        self.scale = float(scale)
        self.inner = inner
        self.rows = inner.rows
        self.cols = inner.cols

    def apply(self, z):
        return self.scale * self.inner.apply(z)

    def adjoint_apply(self, y):
        return self.scale * self.inner.adjoint_apply(y)

    def gram_apply(self, z):
        return (self.scale * self.scale) * self.inner.gram_apply(z)


def apply(op, z):
    """Functional form of op.apply with shape validation."""
    return op.apply(z)


@dataclass
class CgInfo:
    converged: bool
    stagnated: bool
    iterations: int
    relative_residual: float


def solve_cg(apply_normal, rhs, x0=None, tol=1e-8, max_iter=500):
    """Conjugate gradient for a symmetric PSD operator given as a callable.

    Returns (x, CgInfo).  Stops when ||apply_normal(x) - rhs|| <= tol*||rhs||;
    otherwise returns the minimum-residual iterate seen.  A nonpositive
    curvature direction sets the stagnation flag instead of raising, so
    degenerate systems (e.g. an all-zero operator) degrade gracefully.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs contains non-finite values")
    if tol <= 0:
        raise ValueError("tol must be > 0")

    b_norm = np.linalg.norm(rhs)
    if b_norm == 0.0:
        return np.zeros_like(rhs), CgInfo(True, False, 0, 0.0)

    x = np.zeros_like(rhs) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = rhs - apply_normal(x)
    res = np.linalg.norm(r)
    best_x, best_res = x.copy(), res
    if res <= tol * b_norm:
        return x, CgInfo(True, False, 0, res / b_norm)

    p = r.copy()
    rs = float(r @ r)
    for k in range(1, max_iter + 1):
        ap = apply_normal(p)
        curv = float(p @ ap)
        if not np.isfinite(curv) or curv <= 0.0:
            return best_x, CgInfo(False, True, k - 1, best_res / b_norm)
        step = rs / curv
        x += step * p
        r -= step * ap
        res = np.linalg.norm(r)
        if res < best_res:
            best_res = res
            best_x = x.copy()
        if res <= tol * b_norm:
            return x, CgInfo(True, False, k, res / b_norm)
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return best_x, CgInfo(False, False, max_iter, best_res / b_norm)


def solve_tridiag_sigma(mu3, mu4, rhs):
    """Direct solve of (mu3*D^T D + mu4*I) sigma = rhs (Thomas algorithm)."""
    if mu3 < 0:
        raise ValueError("mu3 must be >= 0")
    if mu4 <= 0:
        raise ValueError("mu4 must be > 0")
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    if rhs.ndim != 1 or rhs.shape[0] < 1:
        raise ValueError("rhs must be a vector of length >= 1")
    return kernels.tridiag_solve(float(mu3), float(mu4), rhs)
