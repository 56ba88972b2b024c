"""Centered B-splines as exact piecewise polynomials.

``B_1`` is the indicator of ``[-1/2, 1/2)`` and ``B_{N+1} = B_N * B_1``.  Each
convolution is carried out symbolically with rational arithmetic, so the
coefficients stored on a :class:`PiecewisePolynomial` are the correctly
rounded doubles of the exact ones.

Pieces are stored in the *local* variable ``t = x - knot_left`` in ``[0, 1]``
which keeps Horner evaluation well conditioned for the orders used here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_RECOMMENDED_ORDER = 50


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial pieces on consecutive intervals.

    ``coeffs[j, i]`` is the coefficient of ``t**i`` on the interval
    ``[breakpoints[j], breakpoints[j + 1])`` with ``t = x - breakpoints[j]``.
    Intervals are half-open, so evaluation is right-continuous and the last
    breakpoint lies outside the support.  For continuous splines (``N >= 2``)
    this choice is invisible; for ``B_1`` it makes integer translates tile
    exactly, including at half-integers.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray
    even: bool = False  # continuous and even: evaluate at -|x| so the tails never cancel

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if bp.ndim != 1 or len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if c.shape[0] != len(bp) - 1:
            raise ValueError("one coefficient row per interval required")
        bp.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", c)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def __call__(self, x):
        return bspline_eval(self, x)

    def piece_values(self, j: int, t):
        """Evaluate piece ``j`` at local coordinate ``t`` (no support test)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in self.coeffs[j, ::-1]:
            out = out * t + c
        return out

    def integral(self) -> float:
        """Exact integral over the support (term-by-term antiderivative)."""
        widths = np.diff(self.breakpoints)
        total = 0.0
        for j, h in enumerate(widths):
            powers = h ** np.arange(1, self.coeffs.shape[1] + 1)
            total += float(np.sum(self.coeffs[j] * powers / np.arange(1, self.coeffs.shape[1] + 1)))
        return total


def _check_order(N) -> int:
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
        raise TypeError(f"spline order must be an integer, got {N!r}")
    if N < 1:
        raise ValueError(f"spline order must be >= 1, got {N}")
    return int(N)


@lru_cache(maxsize=None)
def _exact_pieces(N: int) -> tuple[tuple[Fraction, ...], ...]:
    # B_1 on [-1/2, 1/2]: one piece equal to 1.
    pieces = [[Fraction(1)]]
    for _ in range(N - 1):
        # Antiderivatives F_j(t) = C_j + int_0^t p_j, continuous across pieces.
        antider = []
        offset = Fraction(0)
        for p in pieces:
            q = [offset] + [c / (i + 1) for i, c in enumerate(p)]
            antider.append(q)
            offset = sum(q, Fraction(0))  # F_j(1)
        deg = len(antider[0])
        zero = [Fraction(0)] * deg
        total = [offset] + [Fraction(0)] * (deg - 1)
        # B_{N+1} on piece i (local t) equals F_i(t) - F_{i-1}(t).
        new = []
        for i in range(len(pieces) + 1):
            upper = antider[i] if i < len(pieces) else total
            lower = antider[i - 1] if i > 0 else zero
            new.append([u - v for u, v in zip(upper, lower)])
        pieces = new
    return tuple(tuple(p) for p in pieces)


@lru_cache(maxsize=None)
def build_bspline(N: int) -> PiecewisePolynomial:
    """Centered B-spline ``B_N`` supported on ``[-N/2, N/2]``."""
    N = _check_order(N)
    if N > MAX_RECOMMENDED_ORDER:
        warnings.warn(
            f"B-spline order {N} exceeds {MAX_RECOMMENDED_ORDER}; double-precision "
            "piece coefficients lose relative accuracy in the far tails",
            RuntimeWarning,
            stacklevel=2,
        )
    exact = _exact_pieces(N)
    coeffs = np.array([[float(c) for c in p] for p in exact])
    knots = np.arange(N + 1, dtype=float) - N / 2.0
    return PiecewisePolynomial(knots, coeffs, even=N >= 2)


def bspline_eval(spline: PiecewisePolynomial, x):
    """Evaluate a piecewise polynomial; zero outside its support.

    Accepts scalars or arrays and returns the same shape (a Python float for
    scalar input).
    """
    xa = np.asarray(x, dtype=float)
    bp = spline.breakpoints
    flat = xa.ravel()
    if spline.even:
        flat = -np.abs(flat)
    idx = np.searchsorted(bp, flat, side="right") - 1
    idx = np.clip(idx, 0, len(bp) - 2)
    t = flat - bp[idx]
    coeffs = spline.coeffs[idx]
    out = np.zeros_like(flat)
    for i in range(coeffs.shape[1] - 1, -1, -1):
        out = out * t + coeffs[:, i]
    inside = (flat >= bp[0]) & (flat < bp[-1])
    out = np.where(inside, out, 0.0).reshape(xa.shape)
    if np.ndim(x) == 0:
        return float(out)
    return out


def unser_scale(N: int) -> float:
    """The factor sqrt(N/12) that gives B_N unit variance."""
    return math.sqrt(N / 12.0)


def scaled_bspline_eval(N: int, x):
    """``sqrt(N/12) * B_N(sqrt(N/12) * x)``, supported on ``[-sqrt(3N), sqrt(3N)]``."""
    s = unser_scale(_check_order(N))
    if np.ndim(x) == 0:
        return s * bspline_eval(build_bspline(N), s * float(x))
    return s * bspline_eval(build_bspline(N), s * np.asarray(x, dtype=float))


def partition_of_unity_residual(N: int, grid) -> float:
    """max over ``grid`` of ``|sum_n B_N(x - n) - 1|``."""
    N = _check_order(N)
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    if x.size == 0:
        raise ValueError("grid must be non-empty")
    spline = build_bspline(N)
    lo = math.floor(x.min() - N / 2.0) - 1
    hi = math.ceil(x.max() + N / 2.0) + 1
    shifts = np.arange(lo, hi + 1, dtype=float)
    # Only about N + 1 shifts are nonzero at any x; summing the rest adds exact zeros.
    total = np.zeros_like(x)
    for n in shifts:
        total += bspline_eval(spline, x - n)
    return float(np.max(np.abs(total - 1.0)))
