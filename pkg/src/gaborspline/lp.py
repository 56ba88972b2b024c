"""L^p distances between the scaled B-splines and the Gaussian, in time and
frequency, with adaptive Gauss-Legendre quadrature and certified tails."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erfc
from scipy.special import zeta as hurwitz_zeta

from . import windows as W
from .bounds import NotCertifiedError, require_lemma_order
from .splines import _check_order, unser_scale

GAUSS_ORDER = 20
PANEL_TOL = 1e-12
MIN_QUAD_POINTS = 1024


class Exponent(Enum):
    """Marker for the sup norm; finite exponents are plain floats."""

    INF = "inf"

    def __str__(self):
        return "inf"


INF = Exponent.INF


def parse_exponent(p) -> float | Exponent:
    """Accept a float in ``[1, inf)``, :data:`INF`, or the strings ``"inf"``/``"∞"``."""
    if p is INF:
        return INF
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "∞", "infinity"):
            return INF
        try:
            p = float(s)
        except ValueError:
            raise ValueError(f"invalid exponent {p!r}") from None
    if isinstance(p, bool) or not isinstance(p, (int, float, np.integer, np.floating)):
        raise TypeError(f"invalid exponent {p!r}")
    p = float(p)
    if math.isinf(p):
        raise ValueError("use lp.INF for the sup norm, not a float infinity")
    if not p >= 1.0:
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    return p


def _check_quad(quad_points: int) -> int:
    if quad_points < MIN_QUAD_POINTS:
        raise ValueError(f"quad_points must be >= {MIN_QUAD_POINTS}, got {quad_points}")
    return int(quad_points)


# -- quadrature ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _gauss_rule(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panel(f, lo, hi):
    x, w = _gauss_rule(GAUSS_ORDER)
    h = 0.5 * (hi - lo)
    return h * float(np.dot(w, f(lo + h * (x + 1.0))))


def _sign_change_points(d, breaks, samples_per_interval=64):
    """Roots of ``d`` located by bracketing on a grid and ``brentq``."""
    roots = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        x = np.linspace(lo, hi, samples_per_interval + 1)
        v = d(x)
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            roots.append(brentq(lambda t: float(d(np.array([t]))[0]), x[i], x[i + 1], xtol=1e-15))
    return roots


def adaptive_integral(
    f, breaks, quad_points: int = 4096, tol: float = PANEL_TOL, noise: float = 0.0, max_panels: int = 200_000
) -> float:
    """Integral of ``f`` over ``[breaks[0], breaks[-1]]``.

    Each seed interval is cut into equal panels so that the initial rule uses
    about ``quad_points`` nodes.  A panel is accepted once its two halves agree
    with it to ``tol`` times the running estimate (scaled by its width), or to
    ``noise`` per unit length, the rounding level of ``f`` itself.  Accepted
    pieces are summed with ``math.fsum``.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    total_width = breaks[-1] - breaks[0]
    n_panels = max(len(breaks) - 1, quad_points // GAUSS_ORDER)
    panels = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(round(n_panels * (hi - lo) / total_width)))
        edges = np.linspace(lo, hi, k + 1)
        panels.extend(zip(edges[:-1], edges[1:]))
    estimates = [_panel(f, lo, hi) for lo, hi in panels]
    per_width = max(tol * abs(math.fsum(estimates)) / total_width, noise, 1e-300)
    parts = []
    stack = list(zip(panels, estimates))
    visited = 0
    while stack:
        (lo, hi), est = stack.pop()
        visited += 1
        if visited > max_panels:
            raise NotCertifiedError(f"adaptive quadrature did not reach tolerance {tol} within {max_panels} panels")
        mid = 0.5 * (lo + hi)
        left, right = _panel(f, lo, mid), _panel(f, mid, hi)
        if abs(left + right - est) <= per_width * (hi - lo):
            parts.append(left + right)
        else:
            stack.append(((lo, mid), left))
            stack.append(((mid, hi), right))
    return math.fsum(parts)


def _noise_level(d, lo, hi, p: float, amplitude: float) -> float:
    """Rounding level of ``|d|^p`` when ``d`` is a difference of terms of size ``amplitude``."""
    dmax = float(np.max(np.abs(d(np.linspace(lo, hi, 1025)))))
    return p * dmax ** (p - 1.0) * 16.0 * np.finfo(float).eps * amplitude


def _grid_sup(d, lo, hi, points: int) -> float:
    x = np.linspace(lo, hi, points + 1)
    v = np.abs(d(x))
    best = float(v.max())
    for i in np.argsort(v)[-3:]:
        a, b = x[max(i - 1, 0)], x[min(i + 1, points)]
        if b <= a:
            continue
        res = minimize_scalar(lambda t: -abs(float(d(np.array([t]))[0])), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(b))})
        best = max(best, -float(res.fun))
    return best


# -- time domain -----------------------------------------------------------------


def _gauss_std(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def residual_time(N: int, x):
    """``g_N(x) - (2 pi)^(-1/2) exp(-x^2/2)``."""
    return W.eval_time(W.scaled_bspline(N), x) - _gauss_std(np.asarray(x, dtype=float))


def _gauss_tail_p(X: float, p: float) -> float:
    # int_X^inf ((2 pi)^(-1/2) e^(-x^2/2))^p dx
    return (2.0 * math.pi) ** (-p / 2.0) * math.sqrt(math.pi / (2.0 * p)) * float(erfc(X * math.sqrt(p / 2.0)))


def _time_window(N: int, p: float) -> float:
    X = math.sqrt(3.0 * N)
    while _gauss_tail_p(X, p) > 1e-14 * 1e-6:
        X += 0.5
    return X


def lp_distance_time(N: int, p, quad_points: int = 4096) -> float:
    """``||g_N - Gaussian||_p`` over the real line."""
    N = _check_order(N)
    p = parse_exponent(p)
    quad_points = _check_quad(quad_points)
    s = math.sqrt(3.0 * N)
    d = lambda x: residual_time(N, x)  # noqa: E731
    if p is INF:
        return _grid_sup(d, 0.0, s, quad_points)
    X = _time_window(N, p)
    knots = (np.arange(N + 1) - N / 2.0) * math.sqrt(12.0 / N)
    breaks = np.concatenate([[0.0], knots[knots > 0], [X]]) if N > 1 else np.array([0.0, s, X])
    breaks = np.unique(np.concatenate([breaks, _sign_change_points(d, np.unique(breaks))]))
    noise = _noise_level(d, 0.0, X, p, 1.0 / math.sqrt(2.0 * math.pi))
    inner = adaptive_integral(lambda x: np.abs(d(x)) ** p, breaks, quad_points, noise=noise)
    # Beyond X only the Gaussian is left; its tail is added exactly.
    return (2.0 * (inner + _gauss_tail_p(X, p))) ** (1.0 / p)


# -- frequency domain ------------------------------------------------------------


def residual_freq(N: int, gamma):
    """``exp(-2 pi^2 gamma^2) - sinc(sqrt(12/N) gamma)^N``."""
    return W.residual_p_fourier(N, gamma)


def freq_tail_bound(N: int, q: float, G: float) -> float:
    """Majorant of ``int_G^inf |p_N^|^q`` from the Gaussian plus power envelope."""
    c = math.sqrt(N / 12.0) / math.pi
    gauss = 0.5 * math.sqrt(math.pi / (2.0 * q)) / math.pi * float(erfc(math.pi * G * math.sqrt(2.0 * q)))
    Nq = N * q
    power = math.exp(Nq * math.log(c) + (1.0 - Nq) * math.log(G)) / (Nq - 1.0)
    return 2.0 ** (q - 1.0) * (gauss + power)


def freq_split_points(N: int) -> tuple[float, float]:
    return math.sqrt(math.log(N)) / math.pi, math.sqrt(N) / (4.0 * math.sqrt(3.0))


def _freq_breaks(N: int, G: float) -> np.ndarray:
    zeros = np.arange(1, int(G / math.sqrt(N / 12.0)) + 1) * math.sqrt(N / 12.0)
    return np.unique(np.concatenate([[0.0, G], [s for s in freq_split_points(N) if s < G], zeros[zeros < G]]))


def _sinc_power_tail(N: int, q: float, k0: int, nodes: int) -> float:
    """``int_{k0 s}^inf |sinc(gamma / s)|^(N q) dgamma`` with ``s = sqrt(N/12)``.

    Summing the periods first turns the tail into a single integral over one
    period against the Hurwitz zeta function, so nothing is truncated.
    """
    m = N * q
    x, w = _gauss_rule(nodes)
    t = 0.5 * (x + 1.0)
    vals = np.abs(np.sin(np.pi * t)) ** m * hurwitz_zeta(m, k0 + t)
    return unser_scale(N) * math.pi ** (-m) * 0.5 * float(vals @ w)


def lq_distance_freq(N: int, q, quad_points: int = 4096) -> float:
    """``||p_N^||_q`` with ``p_N^ = exp(-2 pi^2 gamma^2) - sinc(sqrt(12/N) gamma)^N``.

    The interval where the Gaussian term is representable is integrated
    adaptively.  Past it the integrand is a pure sinc power whose integral to
    infinity is evaluated in closed form up to a one-period quadrature.
    """
    N = _check_order(N)
    if N < 2:
        raise ValueError("frequency-side distance needs N >= 2 (integrable sinc power)")
    q = parse_exponent(q)
    quad_points = _check_quad(quad_points)
    d = lambda g: residual_freq(N, g)  # noqa: E731
    G = max(freq_split_points(N)[1], 1.0)
    if q is INF:
        # Past G the envelope is below the interior sup once G is moved out far enough.
        sup = _grid_sup(d, 0.0, G, quad_points)
        while W.fourier_envelope(W.residual_p(N))(G) > sup:
            G *= 2.0
            sup = max(sup, _grid_sup(d, 0.0, G, quad_points))
        return sup
    s = unser_scale(N)
    # exp(-2 pi^2 gamma^2) underflows past gamma = 6, leaving only the sinc power.
    k_core = max(1, math.ceil(max(G, 6.0) / s))
    breaks = _freq_breaks(N, k_core * s)
    breaks = np.unique(np.concatenate([breaks, _sign_change_points(d, breaks)]))
    noise = _noise_level(d, 0.0, k_core * s, q, 1.0)
    core = adaptive_integral(lambda g: np.abs(d(g)) ** q, breaks, quad_points, noise=noise)
    coarse = _sinc_power_tail(N, q, k_core, GAUSS_ORDER)
    fine = _sinc_power_tail(N, q, k_core, 2 * GAUSS_ORDER)
    inner = core + fine
    if abs(fine - coarse) > 1e-14 * inner or fine > freq_tail_bound(N, q, k_core * s):
        raise NotCertifiedError(f"sinc-power tail for N={N}, q={q} did not converge")
    return (2.0 * inner) ** (1.0 / q)


def sup_majorant_freq(N: int) -> float:
    """Explicit bound on ``sup |p_N^|`` from the pointwise sinc-power estimate."""
    N = require_lemma_order(N)
    lnN = math.log(N)
    return max(4.0 / (5.0 * math.e**2 * N) * (1.0 + 17.0 * lnN / (7.0 * N)),
               math.exp(-math.pi**2 * N / 24.0) + (2.0 / math.pi) ** N)


# -- self distance ---------------------------------------------------------------


def scaled_fourier_self_distance(N: int, p, quad_points: int = 4096) -> float:
    """``|| g_N - (2 pi)^(-1/2) g_N^(. / (2 pi)) ||_p``.

    The standard Gaussian is a fixed point of this scaled Fourier transform.
    """
    N = _check_order(N)
    if N < 2:
        raise ValueError("needs N >= 2")
    p = parse_exponent(p)
    quad_points = _check_quad(quad_points)
    c = math.sqrt(12.0 / N) / (2.0 * math.pi)

    def d(x):
        x = np.asarray(x, dtype=float)
        return W.eval_time(W.scaled_bspline(N), x) - W.sinc_power(c * x, N) / math.sqrt(2.0 * math.pi)

    s = math.sqrt(3.0 * N)
    if p is INF:
        X = 2.0 * math.pi * max(freq_split_points(N)[1], 1.0)
        return max(_grid_sup(d, 0.0, X, quad_points), _grid_sup(d, X, 8 * X, quad_points))
    # Outside the spline support only the sinc power is left.
    zeros = np.arange(1, 200) / c
    G = 2.0 * math.pi * max(freq_split_points(N)[1], 1.0)
    while True:
        X = max(G, s)
        breaks = np.unique(np.concatenate([[0.0, s, X], zeros[zeros < X],
                                           (np.arange(N + 1) - N / 2.0) * math.sqrt(12.0 / N)]))
        breaks = breaks[(breaks >= 0) & (breaks <= X)]
        breaks = np.unique(np.concatenate([breaks, _sign_change_points(d, breaks)]))
        noise = _noise_level(d, 0.0, X, p, 1.0 / math.sqrt(2.0 * math.pi))
        inner = adaptive_integral(lambda x: np.abs(d(x)) ** p, breaks, quad_points, noise=noise)
        # |sinc(cx)|^N / sqrt(2 pi) <= (1/(pi c x))^N / sqrt(2 pi)
        Np = N * p
        tail = (2.0 * math.pi) ** (-p / 2.0) * math.exp(-Np * math.log(math.pi * c) + (1.0 - Np) * math.log(X)) / (Np - 1.0)
        if tail <= 1e-14 * inner:
            return (2.0 * inner) ** (1.0 / p)
        G *= 1.5


def self_distance_triangle_bound(N: int, p, quad_points: int = 4096) -> float:
    """Triangle-inequality majorant for :func:`scaled_fourier_self_distance`."""
    p = parse_exponent(p)
    scale = (2.0 * math.pi) ** (-0.5) if p is INF else (2.0 * math.pi) ** (1.0 / p - 0.5)
    return lp_distance_time(N, p, quad_points) + scale * lq_distance_freq(N, p, quad_points)


# -- tables ----------------------------------------------------------------------


DOMAINS = ("time", "freq", "self")
# The time-side sup norm equals the L1 norm of the transform whenever the
# transform keeps one sign, so that comparison is an equality up to rounding.
MAJORANT_RTOL = 1e-10


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    p: float | Exponent
    domain: str
    distance: float
    majorant: float | None
    quad_points: int

    @property
    def passed(self) -> bool | None:
        return None if self.majorant is None else self.distance <= self.majorant * (1.0 + MAJORANT_RTOL)


def _distance(domain: str, N: int, p, quad_points: int) -> float:
    if domain == "time":
        return lp_distance_time(N, p, quad_points)
    if domain == "freq":
        return lq_distance_freq(N, p, quad_points)
    if domain == "self":
        return scaled_fourier_self_distance(N, p, quad_points)
    raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")


def _majorant(domain: str, N: int, p, quad_points: int) -> float | None:
    if p is not INF or N < 14:
        return None
    if domain == "freq":
        return sup_majorant_freq(N)
    if domain == "time":
        return lq_distance_freq(N, 1.0, quad_points)
    return None


def convergence_table(N_list, p_list, domain: str = "time", quad_points: int = 4096) -> list[ConvergenceRow]:
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")
    rows = []
    for N in N_list:
        for p in p_list:
            p = parse_exponent(p)
            rows.append(ConvergenceRow(int(N), p, domain, _distance(domain, N, p, quad_points),
                                       _majorant(domain, N, p, quad_points), quad_points))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is INF:
        return "inf"
    return f"{v:.17g}"


CSV_HEADER = ["N", "p", "domain", "distance", "majorant", "pass"]


def write_table_csv(fh, rows, header_lines=()) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.N, _fmt(r.p), r.domain, _fmt(r.distance), _fmt(r.majorant), _fmt(r.passed)])


def read_table_csv(fh, quad_points: int = 0) -> list[ConvergenceRow]:
    reader = csv.DictReader(line for line in fh if not line.startswith("#"))
    rows = []
    for d in reader:
        rows.append(ConvergenceRow(int(d["N"]), parse_exponent(d["p"]), d["domain"], float(d["distance"]),
                                   float(d["majorant"]) if d["majorant"] else None, quad_points))
    return rows


def empirical_constant(rows, q) -> float:
    """``max distance^q * N^q / sqrt(ln N)`` over rows with exponent ``q``.

    For the sup norm the exponent in the rate is 1.
    """
    q = parse_exponent(q)
    e = 1.0 if q is INF else q
    vals = [r.distance**e * r.N**e / math.sqrt(math.log(r.N)) for r in rows if r.p == q and r.N >= 2]
    if not vals:
        raise ValueError("no rows with that exponent")
    return max(vals)
