"""Closed planar curves in arclength form.

A :class:`CurveSpec` describes a smooth closed curve through a trigonometric
parameterization ``gamma(tau)``, ``tau in [0, 2 pi)``. :func:`build_arclength_curve`
turns it into an :class:`ArclengthCurve` holding the perimeter and the curvature
``kappa(s)`` on a uniform arclength grid. Curvature is positive for a
counterclockwise circle (outward normal convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DegenerateCurve, NotClosed, ProfileNotPositive
from .fourier import TrigSeries

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CurveSpec:
    """Trigonometric description of a closed curve.

    ``x(tau) = sum_k xc[k] cos(k tau) + xs[k] sin(k tau)`` and likewise for y.
    Use :meth:`circle`, :meth:`ellipse` or :meth:`fourier` to build one.
    """

    kind: str
    params: dict
    xc: np.ndarray = field(repr=False)
    xs: np.ndarray = field(repr=False)
    yc: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)

    @classmethod
    def circle(cls, radius: float) -> "CurveSpec":
        if not radius > 0:
            raise ConfigError(f"circle radius must be positive, got {radius}")
        r = float(radius)
        return cls("circle", {"radius": r}, *_coeffs([0, r], [0, 0], [0, 0], [0, r]))

    @classmethod
    def ellipse(cls, semi_axis_a: float, semi_axis_b: float) -> "CurveSpec":
        if not (semi_axis_a > 0 and semi_axis_b > 0):
            raise ConfigError("ellipse semi-axes must be positive")
        a, b = float(semi_axis_a), float(semi_axis_b)
        return cls(
            "ellipse",
            {"semi_axis_a": a, "semi_axis_b": b},
            *_coeffs([0, a], [0, 0], [0, 0], [0, b]),
        )

    @classmethod
    def fourier(cls, x_cos, x_sin, y_cos, y_sin) -> "CurveSpec":
        """Curve from coefficient arrays indexed by harmonic number (0, 1, 2, ...)."""
        arrays = _coeffs(x_cos, x_sin, y_cos, y_sin)
        if not any(np.any(a[1:] != 0) for a in arrays):
            raise ConfigError("fourier curve has no nonconstant harmonic")
        params = {
            "x_cos": arrays[0].tolist(),
            "x_sin": arrays[1].tolist(),
            "y_cos": arrays[2].tolist(),
            "y_sin": arrays[3].tolist(),
        }
        return cls("fourier", params, *arrays)

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSpec":
        """Parse the ``curve`` object of a JSON run configuration."""
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("curve must be an object with a 'kind' field")
        kind = data["kind"]
        allowed = {
            "circle": {"radius"},
            "ellipse": {"semi_axis_a", "semi_axis_b"},
            "fourier": {"x_cos", "x_sin", "y_cos", "y_sin"},
        }
        if kind not in allowed:
            raise ConfigError(f"unknown curve kind {kind!r}")
        keys = set(data) - {"kind"}
        if keys != allowed[kind]:
            extra, missing = keys - allowed[kind], allowed[kind] - keys
            raise ConfigError(
                f"curve {kind!r}: unexpected keys {sorted(extra)}, missing {sorted(missing)}"
            )
        args = {k: data[k] for k in allowed[kind]}
        try:
            return getattr(cls, kind)(**args)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"curve {kind!r}: {exc}") from exc

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def point(self, tau, order: int = 0) -> np.ndarray:
        """Derivative of ``gamma`` of the given order at ``tau``; shape ``(2, q)``."""
        tau = np.asarray(tau, dtype=float)
        k = np.arange(self.xc.size, dtype=float)
        arg = np.multiply.outer(tau, k)
        c, s = np.cos(arg), np.sin(arg)
        p = order % 4
        # d^p/dtau^p of cos(k tau), sin(k tau)
        dc, ds = [(c, s), (-s, c), (-c, -s), (s, -c)][p]
        kp = k**order
        x = dc @ (self.xc * kp) + ds @ (self.xs * kp)
        y = dc @ (self.yc * kp) + ds @ (self.ys * kp)
        return np.stack([x, y])

    def reversed(self) -> "CurveSpec":
        """Same curve traversed with ``tau -> -tau``."""
        return CurveSpec(self.kind, self.params, self.xc, -self.xs, self.yc, -self.ys)


def _coeffs(*arrays):
    arrs = [np.atleast_1d(np.asarray(a, dtype=float)) for a in arrays]
    if any(a.ndim != 1 for a in arrs):
        raise ConfigError("fourier coefficients must be flat arrays")
    if any(not np.all(np.isfinite(a)) for a in arrs):
        raise ConfigError("fourier coefficients must be finite")
    n = max(a.size for a in arrs)
    return [np.pad(a, (0, n - a.size)) for a in arrs]


@dataclass(frozen=True)
class ArclengthCurve:
    """A closed curve sampled uniformly in arclength.

    Attributes
    ----------
    perimeter : float
        Curve length ``L``.
    grid : ndarray
        Uniform samples ``s_i = i L / N`` in ``[0, L)``.
    kappa, kappa_prime : ndarray
        Curvature and its arclength derivative at ``grid``.
    spectral_kappa : TrigSeries
        Interpolating trigonometric series of the curvature, used for
        evaluation off the grid.
    tau : ndarray
        Original parameter values of the grid points.
    spec : CurveSpec
        The (positively oriented) input description.
    """

    perimeter: float
    grid: np.ndarray
    kappa: np.ndarray
    kappa_prime: np.ndarray
    spectral_kappa: TrigSeries
    tau: np.ndarray
    spec: CurveSpec

    @property
    def resolution(self) -> int:
        return self.grid.size

    def eval_kappa(self, s):
        return eval_kappa(self, s)

    def eval_kappa_prime(self, s):
        return eval_kappa_prime(self, s)

    def points(self) -> np.ndarray:
        """Cartesian grid points, shape ``(2, N)``."""
        return self.spec.point(self.tau)


def _curvature_tau(spec: CurveSpec, tau):
    d1, d2, d3 = (spec.point(tau, k) for k in (1, 2, 3))
    speed = np.hypot(d1[0], d1[1])
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    dcross = d1[0] * d3[1] - d1[1] * d3[0]
    # degenerate speed is reported by the caller
    with np.errstate(divide="ignore", invalid="ignore"):
        dspeed = (d1[0] * d2[0] + d1[1] * d2[1]) / speed
        kappa = cross / speed**3
        dkappa = dcross / speed**3 - 3.0 * cross * dspeed / speed**4
    return speed, kappa, dkappa


def _arclength_series(speed_samples: np.ndarray):
    """Spectral antiderivative of the speed on a uniform tau grid.

    Returns a callable ``s(tau)`` with ``s(0) = 0`` and the perimeter.
    """
    n = speed_samples.size
    c = np.fft.rfft(speed_samples) / n
    mean = c[0].real
    a = 2.0 * c.real[1:]
    b = -2.0 * c.imag[1:]
    if n % 2 == 0:
        a[-1] = c[-1].real
        b[-1] = 0.0
    mag = np.hypot(a, b)
    keep = np.nonzero(mag > 1e-17 * abs(mean))[0]
    top = keep[-1] + 1 if keep.size else 0
    a, b = a[:top], b[:top]
    k = np.arange(1, top + 1, dtype=float)

    def s_of_tau(tau):
        tau = np.asarray(tau, dtype=float)
        arg = np.multiply.outer(tau, k)
        return mean * tau + (np.sin(arg) @ (a / k)) - ((np.cos(arg) - 1.0) @ (b / k))

    return s_of_tau, TWO_PI * mean


def build_arclength_curve(spec: CurveSpec, resolution: int = 512) -> ArclengthCurve:
    """Resample a curve on a uniform arclength grid of ``resolution`` points.

    The cumulative arclength is inverted with a monotone cubic interpolant on an
    8x oversampled parameter grid and then polished by Newton steps against the
    spectral antiderivative of the speed, so grid points are placed to rounding
    accuracy.
    """
    if int(resolution) != resolution or resolution < 64:
        raise ConfigError(f"resolution must be an integer >= 64, got {resolution}")
    resolution = int(resolution)

    n_fine = 8 * resolution
    tau_f = np.arange(n_fine) * (TWO_PI / n_fine)
    ends = spec.point(np.array([0.0, TWO_PI]))
    if np.max(np.abs(ends[:, 0] - ends[:, 1])) > 1e-12:
        raise NotClosed("curve endpoints do not match")

    speed_f, kappa_f, _ = _curvature_tau(spec, tau_f)
    if np.min(speed_f) < 1e-10:
        raise DegenerateCurve(f"|gamma'| = {np.min(speed_f):.3e} < 1e-10 at some sample")

    winding = np.mean(kappa_f * speed_f) * TWO_PI
    if winding < 0:
        spec = spec.reversed()
        speed_f, kappa_f, _ = _curvature_tau(spec, tau_f)

    s_of_tau, perimeter = _arclength_series(speed_f)

    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed_f + np.roll(speed_f, -1)))])
    cum *= TWO_PI / n_fine
    cum *= perimeter / cum[-1]
    inverse = PchipInterpolator(cum, np.append(tau_f, TWO_PI))

    grid = np.arange(resolution) * (perimeter / resolution)
    tau = inverse(grid)
    for _ in range(8):
        speed = np.hypot(*spec.point(tau, 1))
        step = (s_of_tau(tau) - grid) / speed
        tau = tau - step
        if np.max(np.abs(step)) < 1e-15:
            break

    speed, kappa, dkappa = _curvature_tau(spec, tau)
    kappa_prime = dkappa / speed
    series = TrigSeries.from_samples(kappa, perimeter)
    for arr in (grid, kappa, kappa_prime, tau):
        arr.setflags(write=False)
    return ArclengthCurve(perimeter, grid, kappa, kappa_prime, series, tau, spec)


def eval_kappa(curve: ArclengthCurve, s):
    """Curvature at arclength ``s`` (any real value; evaluation is periodic)."""
    return _maybe_scalar(curve.spectral_kappa(s), s)


def eval_kappa_prime(curve: ArclengthCurve, s):
    return _maybe_scalar(curve.spectral_kappa(s, order=1), s)


def _maybe_scalar(val, s):
    return float(val) if np.ndim(s) == 0 else val


def max_epsilon(curve: ArclengthCurve) -> float:
    """Largest thickness keeping ``1 - eps t kappa >= 1/2`` on the reference strip.

    This is a local, conservative bound: it does not detect global
    self-overlap of the offset curve for strongly non-convex shapes.
    """
    return 0.5 / max(float(np.max(curve.kappa)), 1.0 / curve.perimeter)


def gauss_bonnet_residual(curve: ArclengthCurve) -> float:
    """``|int kappa ds - 2 pi|`` by the trapezoidal rule."""
    total = np.sum(curve.kappa) * (curve.perimeter / curve.resolution)
    return abs(total - TWO_PI)


@dataclass(frozen=True)
class ThicknessProfile:
    """Smooth positive periodic profile ``g(s)`` as a trigonometric polynomial.

    ``g(s) = c[0] + sum_m c[m] cos(2 pi m s / L) + d[m] sin(2 pi m s / L)``.
    """

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __init__(self, cos_coeffs, sin_coeffs=()):
        c = np.atleast_1d(np.asarray(cos_coeffs, dtype=float))
        d = np.atleast_1d(np.asarray(sin_coeffs, dtype=float))
        n = max(c.size, d.size, 1)
        c, d = np.pad(c, (0, n - c.size)), np.pad(d, (0, n - d.size))
        d[0] = 0.0
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", d)

    @classmethod
    def from_samples(cls, curve: ArclengthCurve, samples) -> "ThicknessProfile":
        """Profile interpolating samples given on ``curve.grid``."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape != curve.grid.shape:
            raise ConfigError("profile samples must match the curve grid")
        series = TrigSeries.from_samples(samples, curve.perimeter)
        return cls(series.cos_coeffs, series.sin_coeffs)

    def series(self, perimeter: float) -> TrigSeries:
        return TrigSeries(perimeter, self.cos_coeffs, self.sin_coeffs)

    def __call__(self, s, perimeter: float, order: int = 0):
        return self.series(perimeter)(s, order)

    def check_positive(self, curve: ArclengthCurve, samples: int = 4096) -> float:
        """Minimum of ``g`` on a fine grid; raises if it is not positive."""
        s = np.arange(samples) * (curve.perimeter / samples)
        gmin = float(np.min(self(s, curve.perimeter)))
        if gmin <= 0:
            raise ProfileNotPositive(f"thickness profile has min {gmin:.3e} <= 0")
        return gmin

    def to_dict(self) -> dict:
        return {"cos": self.cos_coeffs.tolist(), "sin": self.sin_coeffs.tolist()}
