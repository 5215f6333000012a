"""Periodic fourth-order limit eigenproblem on the boundary curve.

Discretizes

    (g u'')'' - 2 (kappa^2 g u')' + b * f_m * u = lambda_shifted * f_m * u

with periodic conditions on ``(0, L)`` by Galerkin projection onto the real
trigonometric polynomials of degree ``M``. ``g`` is a thickness profile
(identically 1 by default) and ``f_m`` is the mass factor: 2 for the uniform
strip, where the limit problem reads ``u'''' - 2 (kappa^2 u')' = 2 lambda u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import ArclengthCurve, ThicknessProfile, eval_kappa
from .errors import ConfigError, SingularOperator
from .fourier import trig_basis
from .spectra import cholesky, sym_eigen

CLUSTER_RTOL = 1e-7


@dataclass(frozen=True)
class LimitOperator:
    """Galerkin matrices of the limit problem in the trigonometric basis.

    ``K4`` is the bending pairing ``int g u'' v''``, ``K2`` the curvature pairing
    ``int 2 kappa^2 g u' v'`` and ``mass`` the weighted pairing
    ``mass_factor * int u v``.
    """

    curve: ArclengthCurve
    M: int
    K4: np.ndarray
    K2: np.ndarray
    mass: np.ndarray
    mass_factor: float
    profile: ThicknessProfile | None = None

    @property
    def size(self) -> int:
        return 2 * self.M + 1

    @property
    def stiffness(self) -> np.ndarray:
        return self.K4 + self.K2

    def evaluate(self, coeffs, s=None) -> np.ndarray:
        """Values of coefficient vector(s) at ``s`` (default: the curve grid)."""
        s = self.curve.grid if s is None else s
        return trig_basis(self.M, s, self.curve.perimeter) @ coeffs


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    groups: tuple

    def __len__(self):
        return self.eigenvalues.size


def cluster_indices(values, rtol: float = CLUSTER_RTOL) -> tuple:
    """Group consecutive ascending values closer than ``rtol * (1 + |v|)``."""
    values = np.asarray(values)
    groups, current = [], [0] if values.size else []
    for i in range(1, values.size):
        if values[i] - values[i - 1] < rtol * (1.0 + abs(values[i])):
            current.append(i)
        else:
            groups.append(tuple(current))
            current = [i]
    if current:
        groups.append(tuple(current))
    return tuple(groups)


def assemble_limit(
    curve: ArclengthCurve,
    M: int,
    g: ThicknessProfile | None = None,
    mass_factor: float | None = None,
) -> LimitOperator:
    """Assemble the limit operator with ``2 M + 1`` trigonometric modes.

    ``mass_factor`` defaults to 2 for the uniform strip and to 1 when a
    thickness profile is given.
    """
    if int(M) != M or M < 4:
        raise ConfigError(f"M must be an integer >= 4, got {M}")
    M = int(M)
    if mass_factor is None:
        mass_factor = 2.0 if g is None else 1.0
    if not mass_factor > 0:
        raise ConfigError("mass_factor must be positive")

    L = curve.perimeter
    nq = 4 * (2 * M + 1)
    s = np.arange(nq) * (L / nq)
    w = L / nq
    kappa = eval_kappa(curve, s)
    if g is None:
        gs = np.ones(nq)
    else:
        g.check_positive(curve)
        gs = g(s, L)

    phi = trig_basis(M, s, L)
    d1 = trig_basis(M, s, L, 1)
    d2 = trig_basis(M, s, L, 2)
    K4 = d2.T @ ((w * gs)[:, None] * d2)
    K2 = d1.T @ ((2.0 * w * gs * kappa**2)[:, None] * d1)
    mass = mass_factor * (phi.T @ (w * phi))
    K4, K2, mass = (0.5 * (A + A.T) for A in (K4, K2, mass))
    for A in (K4, K2, mass):
        A.setflags(write=False)
    return LimitOperator(curve, M, K4, K2, mass, float(mass_factor), g)


def _resolvent_eigen(op: LimitOperator, shift: float):
    """Eigenpairs of ``(K4 + K2) u = lam mass u`` through the shifted resolvent.

    With ``mass = R R^T`` the matrix ``R^T (K + shift mass)^{-1} R`` has
    eigenvalues ``1 / (lam + shift)``. Working with the bounded resolvent keeps
    the absolute error of the small eigenvalues at rounding level, whereas a
    direct solve would carry an error proportional to the largest one.
    """
    mchol = cholesky(op.mass)
    R = mchol.lower
    A = cholesky(op.stiffness + shift * op.mass)
    C = R.T @ A.solve(R)
    nu, Y = sym_eigen(0.5 * (C + C.T))
    nu, Y = nu[::-1], Y[:, ::-1]
    lam = 1.0 / nu - shift
    return lam, mchol.solve_upper(Y)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def limit_spectrum(op: LimitOperator, k_max: int, b: float = 0.0) -> Spectrum:
    """Smallest ``k_max`` eigenvalues of the (optionally shifted) limit problem.

    With ``b > 0`` the problem is ``(K4 + K2 + b mass) u = lam mass u``, solved
    through its own resolvent; its eigenvalues are those of the unshifted
    problem plus ``b``. The unshifted problem uses an internal shift of 1/2.
    """
    if k_max < 1 or k_max > op.size:
        raise ConfigError(f"k_max must lie in [1, {op.size}], got {k_max}")
    if b < 0:
        raise ConfigError("shift b must be nonnegative")
    shift = b if b > 0 else 0.5
    vals, vecs = _resolvent_eigen(op, shift)
    vals = vals[:k_max] + b
    vecs = _fix_signs(vecs[:, :k_max])
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return Spectrum(vals, vecs, cluster_indices(vals))


def _load_coeffs(op: LimitOperator, f) -> np.ndarray:
    """Coefficients of ``mass_factor * int f phi_i ds``."""
    L = op.curve.perimeter
    if callable(f):
        nq = 4 * op.size
        s = np.arange(nq) * (L / nq)
        fs = np.asarray(f(s), dtype=float)
    else:
        fs = np.asarray(f, dtype=float)
        s = op.curve.grid
        if fs.shape != s.shape:
            raise ConfigError("load samples must lie on the curve grid")
    w = L / s.size
    return op.mass_factor * w * (trig_basis(op.M, s, L).T @ fs)


def limit_resolve_coeffs(op: LimitOperator, f, b: float) -> np.ndarray:
    """Galerkin coefficients of the solution of the shifted resolvent problem."""
    if not b > 0:
        raise SingularOperator(f"resolvent needs b > 0, got {b}")
    A = op.stiffness + b * op.mass
    return cholesky(A).solve(_load_coeffs(op, f))


def limit_resolve(op: LimitOperator, f, b: float) -> np.ndarray:
    """Apply the discrete limit resolvent to ``f``.

    Solves ``(K4 + K2 + b mass) u = mass_factor * int f phi`` and returns ``u`` on
    ``op.curve.grid``. ``f`` is either an array of samples on the curve grid or a
    callable of arclength.
    """
    return op.evaluate(limit_resolve_coeffs(op, f, b))

