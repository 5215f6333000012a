"""Biharmonic Steklov forms on the reference strip in Fermi coordinates.

The thin domain ``omega_eps`` (width ``eps`` inside the curve) is pulled back to
``Sigma = (0, L) x (0, 1)`` by ``x(s, t) = gamma(s) - eps t nu(s)``. After
dividing the weak form by ``eps`` the shifted eigenproblem reads

    K0 u + b Mb u = (lambda / eps + b) Mb u

where ``K0`` collects the Hessian energy (weighted by the Jacobian
``rho = 1 - eps t kappa``) and the ``mu / eps^3`` normal-derivative penalties,
and ``Mb`` is the mass of the two boundary traces.

Discretization is Fourier (in ``s``) times C1 cubic Hermite (in ``t``). In the
``t`` factor the value degree of freedom at node 0 carries the constant
function, and value degrees of freedom at nodes ``j >= 1`` carry the standard
Hermite value shapes, i.e. they store ``u(t_j) - u(0)``. Derivatives of the
constant are then exactly zero in floating point, which keeps the ``eps^-4``
weighted terms from polluting the nearly constant-in-``t`` modes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .curve import ArclengthCurve, ThicknessProfile, eval_kappa, eval_kappa_prime, max_epsilon
from .errors import ConfigError, InadmissibleThickness, JacobianDegenerate
from .fourier import trig_basis

VALUE, DERIVATIVE = 0, 1
GAUSS_POINTS = 6
# 4 n_s points leave ~1e-8 relative quadrature error on eccentric curves
S_OVERSAMPLE = 6
RHO_MIN = 1e-6


@dataclass(frozen=True)
class ThinProblemSpec:
    """One shifted thin-domain problem: curve, thickness, penalty and shift.

    With ``enforce_admissible`` (the default) the thickness must satisfy
    ``eps * max(g) <= max_epsilon(curve)``.
    """

    curve: ArclengthCurve
    epsilon: float
    mu: float = 1.0
    b: float = 1.0
    g: ThicknessProfile | None = None
    enforce_admissible: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InadmissibleThickness(f"epsilon must be positive, got {self.epsilon}")
        if not self.mu >= 0:
            raise ConfigError(f"mu must be nonnegative, got {self.mu}")
        if not self.b > 0:
            raise ConfigError(f"b must be positive, got {self.b}")
        gmax = 1.0
        if self.g is not None:
            self.g.check_positive(self.curve)
            s = np.linspace(0.0, self.curve.perimeter, 4096, endpoint=False)
            gmax = float(np.max(self.g(s, self.curve.perimeter)))
        if self.enforce_admissible:
            emax = max_epsilon(self.curve)
            if self.epsilon * gmax > emax * (1 + 1e-12):
                raise InadmissibleThickness(
                    f"epsilon = {self.epsilon} exceeds max_epsilon = {emax:.6g}"
                    + (f" (scaled by max g = {gmax:.6g})" if self.g is not None else "")
                )


@dataclass(frozen=True)
class TensorBasis:
    """Fourier x Hermite tensor basis on the reference strip.

    Flat index of ``(mode, node, kind)`` is ``mode * n_t + 2 * node + kind``
    where ``mode`` indexes the trigonometric basis of
    :func:`~thinsteklov.fourier.trig_basis` and ``kind`` is 0 (value) or 1
    (``t``-derivative).
    """

    M_s: int
    N_t: int

    def __post_init__(self):
        if int(self.M_s) != self.M_s or self.M_s < 4:
            raise ConfigError(f"M_s must be an integer >= 4, got {self.M_s}")
        if int(self.N_t) != self.N_t or self.N_t < 2:
            raise ConfigError(f"N_t must be an integer >= 2, got {self.N_t}")

    @property
    def n_s(self) -> int:
        return 2 * self.M_s + 1

    @property
    def n_t(self) -> int:
        return 2 * (self.N_t + 1)

    @property
    def n(self) -> int:
        return self.n_s * self.n_t

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N_t + 1)

    def index(self, mode: int, node: int, kind: int) -> int:
        if not (0 <= mode < self.n_s and 0 <= node <= self.N_t and kind in (0, 1)):
            raise IndexError((mode, node, kind))
        return mode * self.n_t + 2 * node + kind

    def triple(self, flat: int) -> tuple:
        if not 0 <= flat < self.n:
            raise IndexError(flat)
        mode, j = divmod(flat, self.n_t)
        return mode, j // 2, j % 2

    def _indices(self, node: int, kind: int) -> np.ndarray:
        return np.arange(self.n_s) * self.n_t + 2 * node + kind

    @property
    def trace_indices(self) -> tuple:
        """Value degrees of freedom at ``t = 0`` and ``t = 1``."""
        return self._indices(0, VALUE), self._indices(self.N_t, VALUE)

    @property
    def normal_derivative_indices(self) -> tuple:
        """Derivative degrees of freedom at ``t = 0`` and ``t = 1``."""
        return self._indices(0, DERIVATIVE), self._indices(self.N_t, DERIVATIVE)

    def trace_operator(self) -> np.ndarray:
        """Map coefficients to the trace coefficients ``[u(., 0); u(., 1)]``.

        Because node 0 carries the constant, ``u(., 1)`` is the sum of the
        node-0 and node-``N_t`` value coefficients.
        """
        i0, i1 = self.trace_indices
        T = np.zeros((2 * self.n_s, self.n))
        r = np.arange(self.n_s)
        T[r, i0] = 1.0
        T[self.n_s + r, i0] = 1.0
        T[self.n_s + r, i1] = 1.0
        return T

    def trace_right_inverse(self) -> np.ndarray:
        """Matrix ``R`` with ``trace_operator() @ R = I``."""
        i0, i1 = self.trace_indices
        R = np.zeros((self.n, 2 * self.n_s))
        r = np.arange(self.n_s)
        R[i0, r] = 1.0
        R[i1, r] = -1.0
        R[i1, self.n_s + r] = 1.0
        return R

    def t_basis(self, t, order: int = 0) -> np.ndarray:
        """``order``-th ``t``-derivative of the ``n_t`` Hermite functions at ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        h = 1.0 / self.N_t
        e = np.clip(np.floor(t / h).astype(int), 0, self.N_t - 1)
        xi = t / h - e
        out = np.zeros((t.size, self.n_t))
        H = _hermite(xi, order, h)
        rows = np.arange(t.size)
        # H columns: value left, slope left, value right, slope right
        out[rows, 2 * e + 1] = H[1]
        out[rows, 2 * (e + 1) + 1] = H[3]
        right = 2 * (e + 1)
        out[rows, right] = H[2]
        left_val = 2 * e
        interior = e > 0
        out[rows[interior], left_val[interior]] = H[0][interior]
        if order == 0:
            out[:, 0] = 1.0
        return out

    def s_basis(self, s, period: float, order: int = 0) -> np.ndarray:
        return trig_basis(self.M_s, s, period, order)


def _hermite(xi, order, h):
    """Cubic Hermite shapes on ``[0, 1]`` mapped to an element of size ``h``.

    The right value shape is formed as ``1 - left`` (or its exact negative for
    derivatives) so that value shapes sum to one without rounding.
    """
    if order == 0:
        h0 = 1.0 - xi * xi * (3.0 - 2.0 * xi)
        return h0, h * xi * (1.0 - xi) ** 2, 1.0 - h0, h * xi * xi * (xi - 1.0)
    if order == 1:
        d0 = 6.0 * xi * (xi - 1.0) / h
        return d0, 1.0 - xi * (4.0 - 3.0 * xi), -d0, xi * (3.0 * xi - 2.0)
    if order == 2:
        d0 = (12.0 * xi - 6.0) / (h * h)
        return d0, (6.0 * xi - 4.0) / h, -d0, (6.0 * xi - 2.0) / h
    raise ValueError("Hermite derivatives above order 2 are not needed")


@dataclass(frozen=True)
class AssembledForms:
    K0: np.ndarray
    Mb: np.ndarray
    basis: TensorBasis
    spec: ThinProblemSpec
    metadata: dict

    @property
    def shifted(self) -> np.ndarray:
        """``K0 + b Mb``."""
        return self.K0 + self.spec.b * self.Mb


def build_basis(M_s: int, N_t: int) -> TensorBasis:
    return TensorBasis(int(M_s), int(N_t))


class _Quadrature:
    """Tensor quadrature on the strip plus the basis tables evaluated on it."""

    def __init__(self, basis: TensorBasis, L: float, s_oversample: int, t_points: int):
        qs = s_oversample * basis.n_s
        self.s = np.arange(qs) * (L / qs)
        self.ws = L / qs
        x, w = np.polynomial.legendre.leggauss(t_points)
        h = 1.0 / basis.N_t
        left = np.arange(basis.N_t) * h
        self.t = (left[:, None] + 0.5 * h * (x + 1.0)[None, :]).ravel()
        self.wt = np.tile(0.5 * h * w, basis.N_t)
        self.phi = [basis.s_basis(self.s, L, p) for p in range(3)]
        self.psi = [basis.t_basis(self.t, r) for r in range(3)]
        self.psi_end = {
            end: [basis.t_basis(np.array([float(end)]), r) for r in range(2)] for end in (0, 1)
        }


# derivative label -> (order in s, order in t)
_ORDERS = {"0": (0, 0), "s": (1, 0), "t": (0, 1), "ss": (2, 0), "st": (1, 1), "tt": (0, 2)}


def _contract(phi_a, phi_b, psi_a, psi_b, coef):
    """``sum_q coef[q] (phi_a psi_a)_I (phi_b psi_b)_J`` for tensor indices I, J.

    ``coef`` has shape ``(Qs, Qt)`` and already includes quadrature weights.
    """
    n_s, n_t = phi_a.shape[1], psi_a.shape[1]
    tt = (psi_a[:, :, None] * psi_b[:, None, :]).reshape(psi_a.shape[0], n_t * n_t)
    G = coef @ tt
    A = (phi_a[:, :, None] * phi_b[:, None, :]).reshape(phi_a.shape[0], n_s * n_s)
    K = (A.T @ G).reshape(n_s, n_s, n_t, n_t)
    return K.transpose(0, 2, 1, 3).reshape(n_s * n_t, n_s * n_t)


def _term(quad, a, b, coef):
    pa, ra = _ORDERS[a]
    pb, rb = _ORDERS[b]
    X = _contract(quad.phi[pa], quad.phi[pb], quad.psi[ra], quad.psi[rb], coef)
    return X if a == b else X + X.T


def _edge_term(quad, end, a, b, coef_s):
    pa, ra = _ORDERS[a]
    pb, rb = _ORDERS[b]
    psi = quad.psi_end[end]
    X = _contract(quad.phi[pa], quad.phi[pb], psi[ra], psi[rb], coef_s[:, None])
    return X if a == b else X + X.T


def _check_jacobian(rho_min: float, spec: ThinProblemSpec):
    if not rho_min > RHO_MIN:
        raise JacobianDegenerate(
            f"min(1 - eps t kappa) = {rho_min:.3e} on the strip for eps = {spec.epsilon}"
        )


def _symmetrize(A):
    A = 0.5 * (A + A.T)
    A.setflags(write=False)
    return A


def assemble_thin_form(
    spec: ThinProblemSpec,
    basis: TensorBasis,
    s_oversample: int = S_OVERSAMPLE,
    t_points: int = GAUSS_POINTS,
) -> AssembledForms:
    """Assemble ``K0`` and ``Mb`` term by term from the Fermi-coordinate expansion.

    For a variable thickness profile the map is no longer orthogonal and the
    assembly is delegated to :func:`assemble_mapped_form`.
    """
    if spec.g is not None:
        return assemble_mapped_form(spec, basis, s_oversample, t_points)

    L = spec.curve.perimeter
    eps, mu = spec.epsilon, spec.mu
    quad = _Quadrature(basis, L, s_oversample, t_points)
    k = eval_kappa(spec.curve, quad.s)[:, None]
    dk = eval_kappa_prime(spec.curve, quad.s)[:, None]
    t = quad.t[None, :]
    rho = 1.0 - eps * t * k
    _check_jacobian(min(float(np.min(rho)), float(np.min(1.0 - eps * k))), spec)

    # quadrature weight times the area factor rho of the pulled-back measure
    w = quad.ws * quad.wt[None, :] * rho
    terms = [
        ("ss", "ss", rho**-4),
        ("st", "st", 2.0 / (eps**2 * rho**2)),
        ("tt", "tt", np.full_like(rho, eps**-4)),
        ("s", "ss", eps * t * dk / rho**5),
        ("ss", "t", -k / (eps * rho**3)),
        ("s", "st", 2.0 * k / (eps * rho**3)),
        ("s", "t", -t * k * dk / rho**4),
        ("s", "s", (2.0 * k**2 * rho**2 + (eps * t * dk) ** 2) / rho**6),
        ("t", "t", k**2 / (eps**2 * rho**2)),
    ]
    K0 = np.zeros((basis.n, basis.n))
    for a, b, c in terms:
        K0 += _term(quad, a, b, w * c)

    inner = 1.0 - eps * k[:, 0]
    if mu > 0:
        pen = mu / eps**3 * quad.ws
        K0 += _edge_term(quad, 0, "t", "t", np.full(quad.s.size, pen))
        K0 += _edge_term(quad, 1, "t", "t", pen * inner)
    Mb = _edge_term(quad, 0, "0", "0", np.full(quad.s.size, quad.ws))
    Mb += _edge_term(quad, 1, "0", "0", quad.ws * inner)

    meta = _metadata(spec, basis, quad, "expansion")
    return AssembledForms(_symmetrize(K0), _symmetrize(Mb), basis, spec, meta)


def _metadata(spec, basis, quad, method):
    return {
        "method": method,
        "epsilon": spec.epsilon,
        "mu": spec.mu,
        "b": spec.b,
        "M_s": basis.M_s,
        "N_t": basis.N_t,
        "s_points": int(quad.s.size),
        "t_points": int(quad.t.size),
    }


def _map_geometry(spec: ThinProblemSpec, s, t):
    """Frame components of the map derivatives at a grid of ``(s, t)``.

    Components are taken in the local orthonormal frame ``(T(s), nu(s))`` of
    the curve, with ``T' = -kappa nu`` and ``nu' = kappa T``.
    """
    L = spec.curve.perimeter
    eps = spec.epsilon
    k = eval_kappa(spec.curve, s)[:, None]
    dk = eval_kappa_prime(spec.curve, s)[:, None]
    if spec.g is None:
        g, dg, ddg = (np.zeros_like(k) for _ in range(3))
        g += 1.0
    else:
        g, dg, ddg = (spec.g(s, L, order)[:, None] for order in range(3))
    t = np.asarray(t, dtype=float)[None, :]
    a = 1.0 - eps * t * g * k
    shape = np.broadcast(a, t).shape
    x_s = np.stack(np.broadcast_arrays(a, -eps * t * dg), axis=-1)
    x_t = np.stack(np.broadcast_arrays(np.zeros(shape), -eps * g), axis=-1)
    x_ss = np.stack(
        np.broadcast_arrays(
            -eps * t * (2.0 * dg * k + g * dk), -(1.0 - eps * t * g * k) * k - eps * t * ddg
        ),
        axis=-1,
    )
    x_st = np.stack(np.broadcast_arrays(-eps * g * k, -eps * dg), axis=-1)
    J = np.stack([x_s, x_t], axis=-1)  # J[..., component, (s, t)]
    return J, x_ss, x_st, np.broadcast_to(g, shape), a


def _grad_hess(J, x_ss, x_st):
    """Linear maps from ``(f_s, f_t, f_ss, f_st, f_tt)`` to frame gradient and Hessian.

    Returns ``grad[d]`` of shape ``(..., 2)`` and ``hess[d]`` of shape
    ``(..., 2, 2)`` for each derivative label ``d``.
    """
    Jinv = np.linalg.inv(J)
    JinvT = np.swapaxes(Jinv, -1, -2)
    grads, hesses = {}, {}
    X = np.zeros(J.shape[:-2] + (2, 2, 2))  # X[..., k, i, j] = d_i d_j x_k
    X[..., :, 0, 0] = x_ss
    X[..., :, 0, 1] = x_st
    X[..., :, 1, 0] = x_st
    for label in ("s", "t", "ss", "st", "tt"):
        v = np.zeros(J.shape[:-2] + (2,))
        D = np.zeros(J.shape[:-2] + (2, 2))
        if label == "s":
            v[..., 0] = 1.0
        elif label == "t":
            v[..., 1] = 1.0
        elif label == "ss":
            D[..., 0, 0] = 1.0
        elif label == "tt":
            D[..., 1, 1] = 1.0
        else:
            D[..., 0, 1] = D[..., 1, 0] = 1.0
        grad = np.einsum("...ij,...j->...i", JinvT, v)
        mod = D - np.einsum("...k,...kij->...ij", grad, X)
        grads[label] = grad
        hesses[label] = JinvT @ mod @ Jinv
    return grads, hesses


def assemble_mapped_form(
    spec: ThinProblemSpec,
    basis: TensorBasis,
    s_oversample: int = S_OVERSAMPLE,
    t_points: int = GAUSS_POINTS,
) -> AssembledForms:
    """Assemble ``K0`` and ``Mb`` by the chain rule through the map ``x(s, t)``.

    The Cartesian Hessian is computed pointwise from the Jacobian and second
    derivatives of ``x(s, t) = gamma(s) - eps t g(s) nu(s)``, so this route
    handles a variable thickness profile and, for ``g = 1``, reproduces
    :func:`assemble_thin_form` independently of the closed-form expansion.
    Boundary terms use the true outward normal and line element of the inner
    offset curve.
    """
    L = spec.curve.perimeter
    eps, mu = spec.epsilon, spec.mu
    quad = _Quadrature(basis, L, s_oversample, t_points)
    J, x_ss, x_st, g, a = _map_geometry(spec, quad.s, quad.t)
    _, _, _, _, a1 = _map_geometry(spec, quad.s, np.array([1.0]))
    _check_jacobian(min(float(np.min(a)), float(np.min(a1))), spec)

    grads, hesses = _grad_hess(J, x_ss, x_st)
    # |det J| / eps = g * a
    w = quad.ws * quad.wt[None, :] * g * a
    labels = ("s", "t", "ss", "st", "tt")
    K0 = np.zeros((basis.n, basis.n))
    for i, da in enumerate(labels):
        for db in labels[i:]:
            c = np.einsum("...ij,...ij->...", hesses[da], hesses[db])
            K0 += _term(quad, da, db, w * c)

    Mb = np.zeros_like(K0)
    for end in (0, 1):
        Je, xe_ss, xe_st, _, _ = _map_geometry(spec, quad.s, np.array([float(end)]))
        Je, xe_ss, xe_st = Je[:, 0], xe_ss[:, 0], xe_st[:, 0]
        tangent = Je[..., 0]
        line = np.hypot(tangent[:, 0], tangent[:, 1])
        if end == 0:
            normal = np.zeros_like(tangent)
            normal[:, 1] = 1.0
        else:
            # rotate the tangent so the normal points away from the curve (-nu side)
            normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=-1) / line[:, None]
        Mb += _edge_term(quad, end, "0", "0", quad.ws * line)
        if mu > 0:
            eg, _ = _grad_hess(Je, xe_ss, xe_st)
            nd = {d: np.einsum("qi,qi->q", eg[d], normal) for d in ("s", "t")}
            pen = mu / eps * quad.ws * line
            for i, da in enumerate(("s", "t")):
                for db in ("s", "t")[i:]:
                    K0 += _edge_term(quad, end, da, db, pen * nd[da] * nd[db])

    meta = _metadata(spec, basis, quad, "mapped")
    return AssembledForms(_symmetrize(K0), _symmetrize(Mb), basis, spec, meta)


def assemble_volume_mass(spec: ThinProblemSpec, basis: TensorBasis) -> np.ndarray:
    """Pulled-back area pairing ``int u v (1 - eps t kappa) dt ds`` (uniform strip)."""
    quad = _Quadrature(basis, spec.curve.perimeter, S_OVERSAMPLE, GAUSS_POINTS)
    k = eval_kappa(spec.curve, quad.s)[:, None]
    rho = 1.0 - spec.epsilon * quad.t[None, :] * k
    return _term(quad, "0", "0", quad.ws * quad.wt[None, :] * rho)


@dataclass(frozen=True)
class Traces:
    """Boundary data of a strip function sampled on the curve grid.

    ``dt0`` and ``dt1`` are ``d_t u / eps`` at ``t = 0`` and ``t = 1``.
    """

    s: np.ndarray
    u0: np.ndarray
    u1: np.ndarray
    dt0: np.ndarray
    dt1: np.ndarray


def trace_coefficients(basis: TensorBasis, coeffs) -> tuple:
    """Fourier coefficients of ``u(., 0)``, ``u(., 1)``, ``d_t u(., 0)``, ``d_t u(., 1)``.

    ``coeffs`` may be a single vector or a matrix with one vector per column.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    C = coeffs.reshape((basis.n_s, basis.n_t) + coeffs.shape[1:])
    v0, v1 = (basis.t_basis(np.array([float(e)]), 0)[0] for e in (0, 1))
    d0, d1 = (basis.t_basis(np.array([float(e)]), 1)[0] for e in (0, 1))
    return tuple(np.tensordot(C, v, axes=([1], [0])) for v in (v0, v1, d0, d1))


def extract_traces(basis: TensorBasis, coeffs, curve: ArclengthCurve, epsilon: float) -> Traces:
    if np.size(coeffs) != basis.n:
        raise ConfigError(f"coefficient vector must have length {basis.n}")
    c0, c1, d0, d1 = trace_coefficients(basis, coeffs)
    Phi = basis.s_basis(curve.grid, curve.perimeter)
    return Traces(curve.grid, Phi @ c0, Phi @ c1, Phi @ d0 / epsilon, Phi @ d1 / epsilon)


_DUMP_MAGIC = b"TSKF"
_DUMP_HEADER = struct.Struct("<4sIQIIddd")


def dump_forms(forms: AssembledForms, path) -> None:
    """Write ``K0`` and ``Mb`` as little-endian float64, row-major, after a header.

    Header (``<4sIQIIddd``, 48 bytes): magic ``TSKF``, format version 1,
    ``n``, ``M_s``, ``N_t``, ``eps``, ``mu``, ``b``.
    """
    basis, spec = forms.basis, forms.spec
    header = _DUMP_HEADER.pack(
        _DUMP_MAGIC, 1, basis.n, basis.M_s, basis.N_t, spec.epsilon, spec.mu, spec.b
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(forms.K0, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(forms.Mb, dtype="<f8").tobytes())


def load_forms(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, M_s, N_t, eps, mu, b = _DUMP_HEADER.unpack_from(raw)
    if magic != _DUMP_MAGIC or version != 1:
        raise ValueError("not a form dump")
    body = np.frombuffer(raw, dtype="<f8", offset=_DUMP_HEADER.size)
    if body.size != 2 * n * n:
        raise ValueError("truncated form dump")
    return {
        "n": n,
        "M_s": M_s,
        "N_t": N_t,
        "epsilon": eps,
        "mu": mu,
        "b": b,
        "K0": body[: n * n].reshape(n, n),
        "Mb": body[n * n :].reshape(n, n),
    }
