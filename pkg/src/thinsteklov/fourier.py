"""Real trigonometric bases and series on a periodic interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def trig_basis(M: int, s, period: float, order: int = 0) -> np.ndarray:
    """Evaluate the real trigonometric basis or one of its derivatives.

    Columns are ordered ``[1, cos(w s), sin(w s), cos(2 w s), sin(2 w s), ...]``
    with ``w = 2 pi / period``, giving ``2 M + 1`` columns.

    Parameters
    ----------
    M : int
        Highest mode number.
    s : array_like
        Evaluation points, shape ``(q,)``.
    period : float
        Length of the periodic interval.
    order : int
        Derivative order.

    Returns
    -------
    ndarray of shape ``(q, 2 M + 1)``
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros((s.size, 2 * M + 1))
    if order == 0:
        out[:, 0] = 1.0
    w = 2.0 * np.pi / period
    for m in range(1, M + 1):
        k = m * w
        arg = k * s
        c, sn = np.cos(arg), np.sin(arg)
        # d^p/ds^p of (cos, sin) cycles through (c, s), (-s, c), (-c, -s), (s, -c)
        p = order % 4
        if p == 0:
            dc, ds = c, sn
        elif p == 1:
            dc, ds = -sn, c
        elif p == 2:
            dc, ds = -c, -sn
        else:
            dc, ds = sn, -c
        scale = k**order
        out[:, 2 * m - 1] = scale * dc
        out[:, 2 * m] = scale * ds
    return out


def trig_gram(M: int, period: float) -> np.ndarray:
    """Diagonal of the L2 Gram matrix of :func:`trig_basis`."""
    d = np.full(2 * M + 1, period / 2.0)
    d[0] = period
    return d


@dataclass(frozen=True)
class TrigSeries:
    """Real trigonometric series ``a0 + sum a_k cos(k w s) + b_k sin(k w s)``.

    ``cos_coeffs[0]`` holds ``a0``; ``sin_coeffs[0]`` is unused and zero.
    """

    period: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.cos_coeffs, dtype=float))
        b = np.atleast_1d(np.asarray(self.sin_coeffs, dtype=float))
        if a.shape != b.shape:
            raise ValueError("cosine and sine coefficient arrays differ in length")
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @classmethod
    def from_samples(cls, samples, period: float) -> "TrigSeries":
        """Interpolating series through uniform samples on ``[0, period)``."""
        x = np.asarray(samples, dtype=float)
        n = x.size
        c = np.fft.rfft(x) / n
        a = 2.0 * c.real
        b = -2.0 * c.imag
        a[0] = c[0].real
        b[0] = 0.0
        if n % 2 == 0:
            # Nyquist term enters once, as a cosine
            a[-1] = c[-1].real
            b[-1] = 0.0
        return cls(float(period), a, b)

    @property
    def n_modes(self) -> int:
        return self.cos_coeffs.size - 1

    def __call__(self, s, order: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        # argument reduction keeps evaluation exactly periodic
        r = np.mod(s, self.period)
        k = np.arange(self.cos_coeffs.size) * (2.0 * np.pi / self.period)
        arg = np.multiply.outer(r, k)
        c, sn = np.cos(arg), np.sin(arg)
        p = order % 4
        a, b = self.cos_coeffs * k**order, self.sin_coeffs * k**order
        if order > 0:
            a = a.copy()
            b = b.copy()
            a[0] = 0.0
        if p == 0:
            val = c @ a + sn @ b
        elif p == 1:
            val = -sn @ a + c @ b
        elif p == 2:
            val = -c @ a - sn @ b
        else:
            val = sn @ a - c @ b
        return val

    def derivative(self, s) -> np.ndarray:
        return self(s, order=1)
