"""Biharmonic Steklov eigenvalues on thin tubular neighbourhoods of planar curves.

The thin-strip eigenvalues ``lambda_{eps,k}`` are computed by a Fourier x Hermite
Galerkin method in Fermi coordinates and compared with the periodic
fourth-order limit problem ``u'''' - 2 (kappa^2 u')' = 2 lambda u`` on the curve.
"""

from .convergence import SweepReport, ThinSpectrum, run_sweep, thin_spectrum
from .curve import (
    ArclengthCurve,
    CurveSpec,
    ThicknessProfile,
    build_arclength_curve,
    gauss_bonnet_residual,
    max_epsilon,
)
from .errors import ConfigError, NumericError, ThinSteklovError
from .fermiform import ThinProblemSpec, assemble_thin_form, build_basis
from .limit1d import assemble_limit, limit_resolve, limit_spectrum

__version__ = "0.1.0"

__all__ = [
    "ArclengthCurve",
    "ConfigError",
    "CurveSpec",
    "NumericError",
    "SweepReport",
    "ThicknessProfile",
    "ThinProblemSpec",
    "ThinSpectrum",
    "ThinSteklovError",
    "assemble_limit",
    "assemble_thin_form",
    "build_arclength_curve",
    "build_basis",
    "gauss_bonnet_residual",
    "limit_resolve",
    "limit_spectrum",
    "max_epsilon",
    "run_sweep",
    "thin_spectrum",
]
