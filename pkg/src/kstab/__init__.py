"""K-stability invariants of toric polarized manifolds.

Weight spectra, Donaldson-Futaki invariants, quantized and continuous
projections onto torus Hamiltonians, and reduced / twisted / infimum L^p
norms, all computed exactly for rational polytopes and rational
piecewise-linear convex functions.
"""

from .errors import (
    ComputationError,
    DegenerateGram,
    FitMismatch,
    KStabError,
    NonConvergence,
    UnscaledConfig,
    ValidationError,
)
from .geometry import LatticePolytope, lattice_points, moment_integral, triangulate, volume
from .invariants import (
    continuous_projection,
    df,
    df_boundary,
    df_relative,
    infimum_norm,
    norm_p,
    reduced_norm,
    twisted_norm,
)
from .lab import moment_convergence, product_detector, stability_scan
from .plfun import AffinePiece, PLConvexFunction
from .quantize import SubtorusDirections, ToricTestConfig, ehrhart_fit, weight_spectrum

__version__ = "0.1.0"

__all__ = [
    "ComputationError",
    "DegenerateGram",
    "FitMismatch",
    "KStabError",
    "NonConvergence",
    "UnscaledConfig",
    "ValidationError",
    "LatticePolytope",
    "lattice_points",
    "moment_integral",
    "triangulate",
    "volume",
    "continuous_projection",
    "df",
    "df_boundary",
    "df_relative",
    "infimum_norm",
    "norm_p",
    "reduced_norm",
    "twisted_norm",
    "moment_convergence",
    "product_detector",
    "stability_scan",
    "AffinePiece",
    "PLConvexFunction",
    "SubtorusDirections",
    "ToricTestConfig",
    "ehrhart_fit",
    "weight_spectrum",
]
