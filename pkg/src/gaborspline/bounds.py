"""Bessel bounds for Gabor systems.

Two routes are provided and are meant to be compared against each other:

* numeric: the CC-condition sums, in time (:func:`cc_bessel_time`) or in
  frequency (:func:`cc_bessel_freq`), evaluated on a grid with a refinement
  pass and a certified margin for the lattice terms that were not summed;
* analytic: the explicit finite majorants ``P_N``, ``Q_N``, ``K`` and the
  bound for the B-spline dual window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import windows as W
from .windows import Envelope, Family, WindowSpec

MIN_LEMMA_ORDER = 14
TRUNCATION_LEVEL = 1e-18
_CHUNK = 2_000_000


class PreconditionError(ValueError):
    """A parameter violates a hypothesis of the estimate being evaluated."""


class NotCertifiedError(ArithmeticError):
    """A truncated lattice sum could not be given a finite tail bound."""


def require_lemma_order(N) -> int:
    if int(N) != N or N < MIN_LEMMA_ORDER:
        raise PreconditionError(
            f"N >= {MIN_LEMMA_ORDER} required by the pointwise sinc-power estimate (got N={N})"
        )
    return int(N)


@dataclass(frozen=True)
class GaborLattice:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0) or not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise PreconditionError(f"lattice steps must be positive and finite, got a={self.a}, b={self.b}")

    @property
    def ab(self) -> float:
        return self.a * self.b

    @classmethod
    def dual_pair(cls, N: int) -> "GaborLattice":
        """``a = sqrt(12/N)``, ``b = sqrt(N/12) / (2N - 1)``."""
        return cls(*W.dual_lattice(N))


class Method(str, Enum):
    NUMERIC_TIME_CC = "NumericTimeCC"
    NUMERIC_FREQ_CC = "NumericFreqCC"
    ANALYTIC_PN = "AnalyticPN"
    ANALYTIC_QN = "AnalyticQN"
    ANALYTIC_HN = "AnalyticHN"


@dataclass(frozen=True)
class BesselEstimate:
    value: float
    method: Method
    sup_grid_points: int = 0
    k_range: int = 0
    n_range: int = 0
    tail_margin: float = 0.0
    argmax: float = math.nan
    clamped: bool = False
    notes: dict = field(default_factory=dict, compare=False)


# -- numeric CC sums ---------------------------------------------------------


def _lattice_sum(func, x, step_n, step_k, n, k):
    """``sum_k |sum_n f(x - n s_n) f(x - n s_n - k s_k)|`` for each x."""
    out = np.empty_like(x)
    per_x = max(1, len(n) * len(k))
    chunk = max(1, _CHUNK // per_x)
    for lo in range(0, len(x), chunk):
        xs = x[lo : lo + chunk]
        u = xs[:, None] - n[None, :] * step_n
        first = func(u)
        second = func(u[:, :, None] - k[None, None, :] * step_k)
        inner = np.einsum("pn,pnk->pk", first, second)
        out[lo : lo + chunk] = np.abs(inner).sum(axis=1)
    return out


def _grid_sup(S, period, sup_points, rel_tol=1e-10, candidates=3, max_iter=60):
    x = np.linspace(0.0, period, sup_points + 1)
    vals = S(x)
    best = float(vals.max())
    best_x = float(x[np.argmax(vals)])
    h = period / sup_points
    # Refine around the strongest local maxima of the grid.
    interior = np.r_[True, vals[1:] >= vals[:-1]] & np.r_[vals[:-1] >= vals[1:], True]
    idx = np.flatnonzero(interior)
    idx = idx[np.argsort(vals[idx])[::-1][:candidates]]
    for i in idx:
        lo, hi = max(0.0, x[i] - h), min(period, x[i] + h)
        prev = float(vals[i])
        for _ in range(max_iter):
            xr = np.linspace(lo, hi, 33)
            vr = S(xr)
            j = int(np.argmax(vr))
            cur = float(vr[j])
            if cur > best:
                best, best_x = cur, float(xr[j])
            width = (hi - lo) / 32
            lo, hi = max(0.0, xr[j] - width), min(period, xr[j] + width)
            if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
                break
            prev = cur
    return best, best_x


def _cc(func, envelope: Envelope | None, support, period, step_n, step_k, sup_points):
    if sup_points < 16:
        raise PreconditionError(f"sup_points must be >= 16, got {sup_points}")
    if support is not None:
        R = max(abs(support[0]), abs(support[1]))
        gmax = None
    elif envelope is not None:
        probe_r = max(envelope.start, envelope.radius(1e-3))
        probe = np.linspace(-probe_r, probe_r, 8193)
        gmax = 1.01 * float(np.max(np.abs(func(probe))))
        gmax = max(gmax, envelope(probe_r))
        R = envelope.radius(TRUNCATION_LEVEL * gmax)
    else:
        raise NotCertifiedError("window has neither compact support nor a decay envelope")

    n = np.arange(math.floor(-R / step_n) - 1, math.ceil((period + R) / step_n) + 2, dtype=float)
    kmax = math.ceil(2.0 * R / step_k) + 1
    k = np.arange(-kmax, kmax + 1, dtype=float)

    margin = 0.0
    if support is None:
        tail_n = 2.0 * envelope.lattice_tail(R, step_n)
        tail_k = 2.0 * envelope.lattice_tail(R, step_k)
        sum_n = (2.0 * R / step_n + 1.0) * gmax + tail_n
        sum_k = (2.0 * R / step_k + 1.0) * gmax + tail_k
        margin = tail_n * sum_k + sum_n * tail_k
        if not math.isfinite(margin):
            raise NotCertifiedError("tail bound for the truncated lattice sum is not finite")

    value, arg = _grid_sup(lambda x: _lattice_sum(func, x, step_n, step_k, n, k), period, sup_points)
    return value, arg, margin, len(n), len(k)


def cc_bessel_time(w: WindowSpec, L: GaborLattice, sup_points: int = 512) -> BesselEstimate:
    """``(1/b) sup_{x in [0,a]} sum_k |sum_n g(x-na) g(x-na-k/b)|`` plus tail margin."""
    value, arg, margin, nn, nk = _cc(
        lambda u: W.eval_time(w, u), W.time_envelope(w), w.support, L.a, L.a, 1.0 / L.b, sup_points
    )
    return BesselEstimate(
        value=(value + margin) / L.b,
        method=Method.NUMERIC_TIME_CC,
        sup_grid_points=sup_points,
        n_range=nn,
        k_range=nk,
        tail_margin=margin / L.b,
        argmax=arg,
    )


def cc_bessel_freq(w: WindowSpec, L: GaborLattice, sup_points: int = 512) -> BesselEstimate:
    """``(1/a) sup_{gamma in [0,b]} sum_k |sum_n g^(gamma-nb) g^(gamma-nb-k/a)|`` plus tail margin."""
    if not w.has_fourier_closed_form:
        raise PreconditionError(f"{w.label} has no closed-form Fourier transform")
    value, arg, margin, nn, nk = _cc(
        lambda u: W.eval_fourier(w, u), W.fourier_envelope(w), None, L.b, L.b, 1.0 / L.a, sup_points
    )
    return BesselEstimate(
        value=(value + margin) / L.a,
        method=Method.NUMERIC_FREQ_CC,
        sup_grid_points=sup_points,
        n_range=nn,
        k_range=nk,
        tail_margin=margin / L.a,
        argmax=arg,
    )


# -- analytic estimates ------------------------------------------------------


def _one_minus_exp(y: float) -> float:
    return -math.expm1(-y)


def analytic_P(N: int, s: float) -> float:
    """Majorant of ``sum_k |p_N^(gamma - k/s)|``, uniform in gamma.

    The ceilings counting lattice points per branch are already replaced by
    ``1 + (...)``, exactly as in the closed form this reproduces.
    """
    N = require_lemma_order(N)
    if not s > 0:
        raise PreconditionError(f"s must be positive, got {s}")
    lnN = math.log(N)
    corr = 1.0 + 17.0 * lnN / (7.0 * N)
    inner = (1.0 + 2.0 * s * math.sqrt(lnN) / math.pi) * 4.0 / (5.0 * math.e**2 * N) * corr
    middle = (
        (2.0 + 2.0 * s * (math.sqrt(N) / (4.0 * math.sqrt(3.0)) - math.sqrt(lnN) / math.pi))
        * 4.0 * lnN**2 / (5.0 * N**3) * corr
    )
    outer = 2.0 * (
        math.exp(-math.pi**2 * N / 24.0) / _one_minus_exp(math.pi**2 * math.sqrt(N) / (math.sqrt(3.0) * s))
        + (2.0 / math.pi) ** N * (1.0 + s * math.sqrt(N) / (4.0 * math.sqrt(3.0) * (N - 1)))
    )
    return inner + middle + outer


def analytic_pn_bound(N: int, L: GaborLattice) -> float:
    """``P_N(a) P_N(1/b) / a``, a majorant of the frequency CC bound of ``p_N``."""
    return analytic_P(N, L.a) * analytic_P(N, 1.0 / L.b) / L.a


def analytic_K(N0: int, x: float) -> float:
    N0 = require_lemma_order(N0)
    if not x > 0:
        raise PreconditionError(f"x must be positive, got {x}")
    ln0 = math.log(N0)
    corr = 1.0 + 17.0 * ln0 / (7.0 * N0)
    poly = (
        4.0 / (5.0 * math.e**2) * (2.0 * x / math.pi + 1.0 / math.sqrt(ln0))
        + (ln0 / N0) ** 1.5 * 0.8 * (2.0 / math.sqrt(N0) + x / (2.0 * math.sqrt(3.0)))
    ) * corr
    expo = (2.0 * N0 / math.sqrt(ln0)) * (
        math.exp(-math.pi**2 * N0 / 24.0) / _one_minus_exp(math.pi**2 * math.sqrt(N0) / (math.sqrt(3.0) * x))
        + (2.0 / math.pi) ** N0 * (1.0 + x * math.sqrt(N0) / (4.0 * math.sqrt(3.0) * (N0 - 1)))
    )
    return poly + expo


def choose_N(L: GaborLattice, eps: float, N0: int = MIN_LEMMA_ORDER) -> int:
    """Order ``floor(K(a) K(1/b) / (a eps)) + N0`` after which ``p_N``'s Bessel bound is below eps."""
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    N0 = require_lemma_order(N0)
    ratio = analytic_K(N0, L.a) * analytic_K(N0, 1.0 / L.b) / (L.a * eps)
    return int(math.floor(ratio)) + N0


def analytic_Q(N: int, s: float) -> float:
    """``(1 + 2sN) e^{-N^2/2} + 2 e^{-N^2/2} / (1 - e^{-N/s})``; underflows to 0 near N = 38."""
    if int(N) != N or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}")
    if not s > 0:
        raise PreconditionError(f"s must be positive, got {s}")
    e = math.exp(-0.5 * N * N)
    return (1.0 + 2.0 * s * N) * e + 2.0 * e / _one_minus_exp(N / s)


def analytic_qn_bound(N: int, L: GaborLattice) -> float:
    return analytic_Q(N, L.b) * analytic_Q(N, 1.0 / L.a) / L.b


def analytic_hn_bound(N: int) -> float:
    """Explicit majorant of ``B(h_N, a, b)`` on the dual lattice, before any asymptotics.

    Tends to ``(5/3) * 9 sqrt(3) / (2 sqrt(N))`` for large N.
    """
    if int(N) != N or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}")
    a, b = W.dual_lattice(N)
    height = b * math.sqrt(12.0 / N)
    c = (1.5 * N - 1.0) * math.sqrt(12.0 / N)
    return (1.0 + 2.0 * b * c) * height * (1.0 + 2.0 * c / a) * height / b


def approx_duality_bound(N: int) -> float:
    """``sqrt(P_N(a) P_N(1/b) / a * B(h_N))`` on the dual lattice."""
    N = require_lemma_order(N)
    return math.sqrt(analytic_pn_bound(N, GaborLattice.dual_pair(N)) * analytic_hn_bound(N))


def analytic_estimate(w: WindowSpec, L: GaborLattice) -> BesselEstimate:
    """Analytic bound matching a window family, wrapped for side-by-side reports."""
    if w.family is Family.RESIDUAL_P:
        return BesselEstimate(analytic_pn_bound(w.N, L), Method.ANALYTIC_PN)
    if w.family is Family.TRUNCATED_Q:
        v = analytic_qn_bound(w.N, L)
        return BesselEstimate(v, Method.ANALYTIC_QN, clamped=(v == 0.0))
    if w.family is Family.BSPLINE_DUAL:
        a, b = W.dual_lattice(w.N)
        if not (math.isclose(L.a, a, rel_tol=1e-12) and math.isclose(L.b, b, rel_tol=1e-12)):
            raise PreconditionError("the h_N bound holds on the lattice a = sqrt(12/N), b = sqrt(N/12)/(2N-1) only")
        return BesselEstimate(analytic_hn_bound(w.N), Method.ANALYTIC_HN)
    raise PreconditionError(f"no analytic Bessel bound for {w.label}")


# -- pointwise inequalities --------------------------------------------------


@dataclass(frozen=True)
class BranchCheck:
    name: str
    points: int
    violations: int
    min_slack: float  # min over points of (bound - lhs)


def _sinc_minus_gauss_series(x, terms: int = 40):
    """``exp(-x^2/6) - sin(x)/x`` summed term by term (no cancellation near 0)."""
    x2 = np.asarray(x, dtype=float) ** 2
    total = np.zeros_like(x2)
    power = np.ones_like(x2)
    for k in range(terms):
        coef = (-1.0 / 6.0) ** k / math.factorial(k) - (-1.0) ** k / math.factorial(2 * k + 1)
        total += coef * power
        power = power * x2
    return total


def check_aux_inequality(step: float = 1e-4) -> BranchCheck:
    """``exp(-x^2/6) >= sin(x)/x`` on a grid over ``[0, pi/2]``."""
    x = np.arange(0.0, math.pi / 2 + 0.5 * step, step)
    x = x[x <= math.pi / 2]
    d = _sinc_minus_gauss_series(x)
    return BranchCheck("exp(-x^2/6) >= sin(x)/x", len(x), int(np.sum(d < 0)), float(d.min()))


def lemma_branch_bounds(N: int) -> tuple[float, float, float]:
    """``(split, inner_bound, outer_bound)`` of the pointwise sinc-power estimate."""
    N = require_lemma_order(N)
    lnN = math.log(N)
    corr = 1.0 + 17.0 * lnN / (7.0 * N)
    split = math.sqrt(12.0 * lnN / N)
    return split, 4.0 / (5.0 * math.e**2 * N) * corr, 4.0 * lnN**2 / (5.0 * N**3) * corr


def check_lemma_pointwise(N: int, step: float = 1e-4) -> tuple[BranchCheck, BranchCheck]:
    """``|exp(-x^2 N/6) - (sin x/x)^N|`` against both branch bounds on ``[0, pi/2]``."""
    split, inner, outer = lemma_branch_bounds(N)
    x = np.arange(0.0, math.pi / 2 + 0.5 * step, step)
    x = x[x <= math.pi / 2]
    lhs = np.abs(np.exp(-x * x * N / 6.0) - np.sinc(x / math.pi) ** N)
    first = x < split
    out = []
    for name, mask, bound in (("|x| < split", first, inner), ("split <= |x| <= pi/2", ~first, outer)):
        slack = bound - lhs[mask]
        out.append(BranchCheck(name, int(mask.sum()), int(np.sum(slack < 0)), float(slack.min())))
    return out[0], out[1]


def fourier_branch_bound(N: int, gamma):
    """Pointwise majorant of ``|p_N^(gamma)|``: the two lemma branches up to
    ``sqrt(N)/(4 sqrt 3)``, then ``exp(-2 pi^2 gamma^2) + |sqrt(N/12)/(pi gamma)|^N``."""
    _, inner, outer = lemma_branch_bounds(N)
    g = np.abs(np.asarray(gamma, dtype=float))
    s1 = math.sqrt(math.log(N)) / math.pi
    s2 = math.sqrt(N) / (4.0 * math.sqrt(3.0))
    with np.errstate(divide="ignore", over="ignore"):
        far = np.exp(-2.0 * math.pi**2 * g * g) + (math.sqrt(N / 12.0) / (math.pi * g)) ** N
    return np.where(g < s1, inner, np.where(g <= s2, outer, far))
