"""Gabor frames generated by scaled B-splines and truncated Gaussians."""

from .bounds import GaborLattice, NotCertifiedError, PreconditionError
from .splines import build_bspline, bspline_eval, scaled_bspline_eval
from .windows import Family, WindowSpec

__all__ = [
    "Family",
    "GaborLattice",
    "NotCertifiedError",
    "PreconditionError",
    "WindowSpec",
    "build_bspline",
    "bspline_eval",
    "scaled_bspline_eval",
]

__version__ = "0.1.0"
