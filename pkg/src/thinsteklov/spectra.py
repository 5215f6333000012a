"""Dense symmetric linear algebra: Cholesky, eigendecomposition, boundary reduction.

Factorization and eigensolves are delegated to LAPACK through SciPy; this
module adds the error contracts and the trace-space compression of the
resolvent used by the thin-domain solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import ConvergenceFailure, NotPositiveDefinite

SQRT_FLOOR = 1e-14


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor ``L`` with ``A = L L^T``."""

    lower: np.ndarray

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def solve(self, rhs) -> np.ndarray:
        """Solve ``A x = rhs`` for one or many right-hand sides (columns)."""
        return sla.cho_solve((self.lower, True), rhs, check_finite=False)

    def solve_lower(self, rhs) -> np.ndarray:
        """``L^{-1} rhs``."""
        return sla.solve_triangular(self.lower, rhs, lower=True, check_finite=False)

    def solve_upper(self, rhs) -> np.ndarray:
        """``L^{-T} rhs``."""
        return sla.solve_triangular(self.lower, rhs, lower=True, trans="T", check_finite=False)


def cholesky(A) -> CholeskyFactor:
    """Cholesky factorization of a symmetric positive definite matrix.

    Raises
    ------
    NotPositiveDefinite
        With the zero-based index of the failing pivot.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("cholesky needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite(0, "matrix has non-finite entries")
    c, info = lapack.dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    c.setflags(write=False)
    return CholeskyFactor(c)


def sym_eigen(A):
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    try:
        vals, vecs = sla.eigh(A, check_finite=True)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    except ValueError as exc:
        raise ConvergenceFailure(f"eigensolver rejected input: {exc}") from exc
    return vals, vecs


def sym_sqrt(W) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues below ``1e-14 * max`` are floored to zero.
    """
    vals, vecs = sym_eigen(W)
    top = max(float(np.max(vals)), 0.0)
    vals = np.where(vals > SQRT_FLOOR * top, vals, 0.0)
    R = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (R + R.T)


@dataclass(frozen=True)
class ReducedBoundaryOperator:
    """Compression of the shifted resolvent onto the boundary trace space.

    ``S = W^{1/2} T A^{-1} T^T W^{1/2}`` where ``A = K0 + b Mb``, ``T`` maps
    coefficients to trace coefficients and ``W`` is the trace mass. ``lift``
    is ``A^{-1} T^T W^{1/2}``: a vector ``y`` with ``S y = mu y`` lifts to the
    eigenfunction coefficients ``lift @ y``.
    """

    S: np.ndarray
    sqrt_W: np.ndarray
    lift: np.ndarray

    @property
    def size(self) -> int:
        return self.S.shape[0]


def boundary_reduce(factor: CholeskyFactor, basis, Mb) -> ReducedBoundaryOperator:
    """Reduce the pencil ``(K0 + b Mb, Mb)`` to a small symmetric matrix.

    Parameters
    ----------
    factor : CholeskyFactor
        Factor of ``K0 + b Mb``.
    basis : TensorBasis
        Supplies the trace map and its right inverse.
    Mb : ndarray
        Boundary mass on the full coefficient space.

    Notes
    -----
    The nonzero eigenvalues of ``S`` are ``1 / (theta + b)`` where ``theta``
    runs over the finite eigenvalues of ``K0 u = theta Mb u``.
    """
    T = basis.trace_operator()
    R = basis.trace_right_inverse()
    W = R.T @ (Mb @ R)
    W = 0.5 * (W + W.T)
    sqrt_W = sym_sqrt(W)
    rhs = T.T @ sqrt_W
    lift = factor.solve(rhs)
    S = sqrt_W @ (T @ lift)
    S = 0.5 * (S + S.T)
    for arr in (S, sqrt_W, lift):
        arr.setflags(write=False)
    return ReducedBoundaryOperator(S, sqrt_W, lift)
