"""Thin-domain spectra and epsilon sweeps against the one-dimensional limit.

For a strip of width ``eps`` the rescaled eigenvalues ``theta_k = lambda_{eps,k} / eps``
are obtained from the boundary-reduced resolvent: an eigenvalue ``m`` of the
reduced operator corresponds to ``theta = 1 / m - b``. As ``eps -> 0`` these
approach the eigenvalues of the periodic limit problem.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from .curve import ArclengthCurve, ThicknessProfile, max_epsilon
from .errors import ConfigError, InsufficientModes, MultiplicityMismatch
from .fermiform import (
    TensorBasis,
    ThinProblemSpec,
    assemble_thin_form,
    build_basis,
    trace_coefficients,
)
from .fourier import trig_gram
from .limit1d import Spectrum, assemble_limit, cluster_indices, limit_spectrum
from .spectra import boundary_reduce, cholesky, sym_eigen

DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025)
RATE_FLOOR = 1e-10
CSV_HEADER = ("epsilon", "k", "theta", "lambda_limit", "abs_error", "rate", "gap", "flatness")


@dataclass(frozen=True)
class ThinSpectrum:
    """All eigenpairs of one discretized thin problem, ascending in ``theta``.

    ``vectors`` columns are coefficient vectors normalized to unit boundary
    mass, with the largest ``t = 0`` trace coefficient positive.
    """

    theta_all: np.ndarray
    vectors: np.ndarray
    k_max: int
    spec: ThinProblemSpec
    basis: TensorBasis

    @property
    def theta(self) -> np.ndarray:
        return self.theta_all[: self.k_max + 1]


def thin_spectrum(spec: ThinProblemSpec, basis: TensorBasis, k_max: int) -> ThinSpectrum:
    """Rescaled eigenvalues ``theta_0 <= ... <= theta_{k_max}`` of the thin problem."""
    m = 2 * basis.n_s
    if k_max < 0 or k_max + 1 > m:
        raise InsufficientModes(f"k_max = {k_max} needs more than the {m} trace modes")
    forms = assemble_thin_form(spec, basis)
    factor = cholesky(forms.shifted)
    red = boundary_reduce(factor, basis, forms.Mb)
    mu, Y = sym_eigen(red.S)
    mu, Y = mu[::-1], Y[:, ::-1]
    with np.errstate(divide="ignore"):
        theta = np.where(mu > 0, 1.0 / mu - spec.b, np.inf)
    X = red.lift @ Y
    norms = np.sqrt(np.einsum("ij,ij->j", X, forms.Mb @ X))
    X = X / norms
    c0 = trace_coefficients(basis, X)[0]
    idx = np.argmax(np.abs(c0), axis=0)
    signs = np.sign(c0[idx, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    X = X * signs
    theta.setflags(write=False)
    X.setflags(write=False)
    return ThinSpectrum(theta, X, int(k_max), spec, basis)


def fit_rate(epsilons, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(eps)``."""
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    if eps.size < 2 or np.any(err <= 0) or np.any(eps <= 0):
        return math.nan
    slope, _ = np.polyfit(np.log(eps), np.log(err), 1)
    return float(slope)


def _common_coeffs(coeffs, M_from: int, M_to: int) -> np.ndarray:
    out = np.zeros((2 * M_to + 1,) + coeffs.shape[1:])
    out[: 2 * M_from + 1] = coeffs
    return out


def eigenfunction_gap(thin_vectors, limit_vectors, basis: TensorBasis, curve: ArclengthCurve) -> float:
    """Largest principal-angle sine between thin traces and a limit eigenspace.

    Parameters
    ----------
    thin_vectors : ndarray, shape (n, c)
        Thin eigenvector coefficients for one eigenvalue cluster.
    limit_vectors : ndarray, shape (2 M + 1, c)
        Limit eigenvector coefficients for the matching cluster.

    The ``t = 0`` traces and the limit functions are compared in ``L2(0, L)``.
    """
    thin_vectors = np.atleast_2d(np.asarray(thin_vectors, dtype=float).T).T
    limit_vectors = np.atleast_2d(np.asarray(limit_vectors, dtype=float).T).T
    if thin_vectors.shape[1] != limit_vectors.shape[1]:
        raise MultiplicityMismatch(
            f"cluster sizes differ: {thin_vectors.shape[1]} thin vs {limit_vectors.shape[1]} limit"
        )
    M_lim = (limit_vectors.shape[0] - 1) // 2
    M = max(basis.M_s, M_lim)
    A = _common_coeffs(trace_coefficients(basis, thin_vectors)[0], basis.M_s, M)
    B = _common_coeffs(limit_vectors, M_lim, M)
    w = np.sqrt(trig_gram(M, curve.perimeter))[:, None]
    angles = subspace_angles(w * A, w * B)
    return float(np.sin(np.max(angles)))


def trace_flatness(basis: TensorBasis, vector, curve: ArclengthCurve, epsilon: float) -> float:
    """``|| d_t u(., 0) / eps ||`` in ``L2(0, L)``."""
    d0 = trace_coefficients(basis, vector)[2]
    gram = trig_gram(basis.M_s, curve.perimeter)
    return float(np.sqrt(np.sum(gram * d0 * d0))) / epsilon


def zero_mode_deviation(result: ThinSpectrum) -> float:
    """Relative deviation of the lowest eigenfunction's ``t = 0`` trace from a constant."""
    c0 = trace_coefficients(result.basis, result.vectors[:, 0])[0]
    return float(np.linalg.norm(c0[1:]) / abs(c0[0]))


@dataclass
class SweepReport:
    """Results of an epsilon sweep; rows index epsilon, columns index ``k``."""

    epsilons: np.ndarray
    theta: np.ndarray
    limit_lambdas: np.ndarray
    errors: np.ndarray
    rates: np.ndarray
    eigenfunction_gaps: np.ndarray
    trace_flatness: np.ndarray
    config: dict = field(default_factory=dict)

    _ARRAYS = (
        "epsilons",
        "theta",
        "limit_lambdas",
        "errors",
        "rates",
        "eigenfunction_gaps",
        "trace_flatness",
    )

    @property
    def k_max(self) -> int:
        return self.theta.shape[1] - 1

    def to_dict(self) -> dict:
        out = {name: _nan_to_none(getattr(self, name).tolist()) for name in self._ARRAYS}
        out["config"] = self.config
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SweepReport":
        arrays = {
            name: np.array(_none_to_nan(data[name]), dtype=float) for name in cls._ARRAYS
        }
        return cls(**arrays, config=data.get("config", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SweepReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, eps in enumerate(self.epsilons):
            for k in range(self.theta.shape[1]):
                writer.writerow(
                    [
                        _fmt(eps),
                        k,
                        _fmt(self.theta[i, k]),
                        _fmt(self.limit_lambdas[k]),
                        _fmt(self.errors[i, k]),
                        _fmt(self.rates[k]),
                        _fmt(self.eigenfunction_gaps[i, k]),
                        _fmt(self.trace_flatness[i, k]),
                    ]
                )
        return buf.getvalue()

    def equals(self, other: "SweepReport") -> bool:
        same = all(
            np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
            for n in self._ARRAYS
        )
        return same and self.config == other.config


def _fmt(x) -> str:
    x = float(x)
    return "" if not math.isfinite(x) else repr(x)


def _nan_to_none(obj):
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return None if isinstance(obj, float) and not math.isfinite(obj) else obj


def _none_to_nan(obj):
    if isinstance(obj, list):
        return [_none_to_nan(v) for v in obj]
    return math.nan if obj is None else obj


def default_epsilons(curve: ArclengthCurve) -> list:
    """Default grid scaled so its largest entry is ``0.4 * max_epsilon``."""
    scale = max_epsilon(curve) / 0.5
    return [float(f"{e * scale:.12g}") for e in DEFAULT_EPSILONS]


def run_sweep(
    curve: ArclengthCurve,
    epsilons,
    mu: float = 1.0,
    b: float = 1.0,
    M_s: int = 24,
    N_t: int = 8,
    k_max: int = 4,
    M: int = 48,
    g: ThicknessProfile | None = None,
    mass_factor: float | None = None,
    threads: int = 1,
) -> SweepReport:
    """Solve the thin problem for each ``eps`` and compare with the limit.

    Rates are fitted over the three smallest ``eps``; a ``k`` whose error drops
    below ``1e-10`` anywhere in that window gets no rate. Gaps are computed per
    limit eigenvalue cluster and reported for each ``k`` in the cluster.
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise ConfigError("a sweep needs at least three epsilons")
    if np.any(np.diff(eps) >= 0):
        raise ConfigError("epsilons must be strictly decreasing")
    basis = build_basis(M_s, N_t)
    if k_max < 0 or k_max + 1 > 2 * basis.n_s:
        raise InsufficientModes(f"k_max = {k_max} exceeds the trace dimension")
    specs = [ThinProblemSpec(curve, float(e), mu, b, g) for e in eps]

    op = assemble_limit(curve, M, g=g, mass_factor=mass_factor if g is not None else None)
    lim = limit_spectrum(op, op.size)
    clusters = [c for c in lim.groups if c[0] <= k_max]
    top = clusters[-1][-1] + 1
    if top > 2 * basis.n_s:
        raise InsufficientModes("eigenvalue cluster extends beyond the trace dimension")

    def solve(spec):
        return thin_spectrum(spec, basis, top - 1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, specs))
    else:
        results = [solve(s) for s in specs]

    ncol = k_max + 1
    theta = np.array([r.theta_all[:ncol] for r in results])
    lam = np.array(lim.eigenvalues[:ncol])
    errors = np.abs(theta - lam[None, :])
    rates = np.full(ncol, math.nan)
    tail = slice(eps.size - 3, eps.size)
    for k in range(ncol):
        window = errors[tail, k]
        if np.all(window >= RATE_FLOOR):
            rates[k] = fit_rate(eps[tail], window)

    gaps = np.zeros((eps.size, ncol))
    flat = np.zeros((eps.size, ncol))
    for i, r in enumerate(results):
        for cl in clusters:
            cols = list(cl)
            gap = eigenfunction_gap(r.vectors[:, cols], lim.eigenvectors[:, cols], basis, curve)
            for k in cols:
                if k < ncol:
                    gaps[i, k] = gap
        for k in range(ncol):
            flat[i, k] = trace_flatness(basis, r.vectors[:, k], curve, eps[i])

    config = {
        "curve": curve.spec.to_dict(),
        "resolution": curve.resolution,
        "mu": mu,
        "b": b,
        "M_s": M_s,
        "N_t": N_t,
        "M": M,
        "k_max": k_max,
        "mass_factor": op.mass_factor,
        "thickness": None if g is None else g.to_dict(),
    }
    return SweepReport(eps, theta, lam, errors, rates, gaps, flat, config)

