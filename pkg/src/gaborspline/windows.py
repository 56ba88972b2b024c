"""Closed-form windows: Gaussians, their B-spline and truncated approximations,
the B-spline dual window and Janssen's dual of the Gaussian.

A :class:`WindowSpec` is an immutable value.  :func:`eval_time` and
:func:`eval_fourier` dispatch on its family.  Windows with unbounded support
also carry a decay :class:`Envelope`, which the Bessel-bound code uses to
certify truncated lattice sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import special

from .splines import build_bspline, bspline_eval, scaled_bspline_eval, unser_scale

_LOG_SINC_TERMS = 30


def _bernoulli_numbers(m: int) -> list[Fraction]:
    B = [Fraction(1)]
    for n in range(1, m + 1):
        B.append(-sum(math.comb(n + 1, k) * B[k] for k in range(n)) / (n + 1))
    return B


_B = _bernoulli_numbers(2 * _LOG_SINC_TERMS)
_LOG_SINC_COEFFS = {
    n: float(Fraction(2 ** (2 * n - 1)) * abs(_B[2 * n]) / (n * math.factorial(2 * n)))
    for n in range(1, _LOG_SINC_TERMS + 1)
}

SQRT_2PI = math.sqrt(2.0 * math.pi)


class Family(str, Enum):
    NORMALIZED_GAUSSIAN = "normalized-gaussian"
    JANSSEN_GAUSSIAN = "janssen-gaussian"
    BSPLINE = "bspline"
    SCALED_BSPLINE = "scaled-bspline"
    RESIDUAL_P = "residual-p"
    TRUNCATED_Q = "truncated-q"
    TRUNCATED_PHI = "truncated-phi"
    BSPLINE_DUAL = "bspline-dual"
    JANSSEN_DUAL = "janssen-dual"


_NEEDS_ORDER = {
    Family.BSPLINE,
    Family.SCALED_BSPLINE,
    Family.RESIDUAL_P,
    Family.TRUNCATED_Q,
    Family.TRUNCATED_PHI,
    Family.BSPLINE_DUAL,
}
_FOURIER = {
    Family.NORMALIZED_GAUSSIAN,
    Family.JANSSEN_GAUSSIAN,
    Family.BSPLINE,
    Family.SCALED_BSPLINE,
    Family.RESIDUAL_P,
}


@dataclass(frozen=True)
class WindowSpec:
    family: Family
    N: int | None = None
    a: float | None = None
    b: float | None = None
    eps: float | None = None
    k_max: int | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in _NEEDS_ORDER:
            if self.N is None or int(self.N) != self.N or self.N < 1:
                raise ValueError(f"{fam.value} needs an integer order N >= 1, got {self.N!r}")
            object.__setattr__(self, "N", int(self.N))
        if fam is Family.JANSSEN_DUAL:
            _check_janssen(self.a, self.b, self.eps)

    @property
    def has_fourier_closed_form(self) -> bool:
        return self.family in _FOURIER

    @property
    def support(self) -> tuple[float, float] | None:
        """Support interval for compactly supported windows, else ``None``."""
        fam, N = self.family, self.N
        if fam is Family.BSPLINE:
            return (-N / 2.0, N / 2.0)
        if fam is Family.SCALED_BSPLINE:
            r = math.sqrt(3.0 * N)
            return (-r, r)
        if fam is Family.TRUNCATED_PHI:
            return (-float(N), float(N))
        if fam is Family.BSPLINE_DUAL:
            r = (1.5 * N - 1.0) * math.sqrt(12.0 / N)
            return (-r, r)
        return None

    @property
    def label(self) -> str:
        if self.family in _NEEDS_ORDER:
            return f"{self.family.value}(N={self.N})"
        if self.family is Family.JANSSEN_DUAL:
            return f"{self.family.value}(a={self.a},b={self.b},eps={self.eps})"
        return self.family.value

    def __call__(self, x):
        return eval_time(self, x)


def normalized_gaussian() -> WindowSpec:
    return WindowSpec(Family.NORMALIZED_GAUSSIAN)


def janssen_gaussian() -> WindowSpec:
    return WindowSpec(Family.JANSSEN_GAUSSIAN)


def bspline(N: int) -> WindowSpec:
    return WindowSpec(Family.BSPLINE, N=N)


def scaled_bspline(N: int) -> WindowSpec:
    return WindowSpec(Family.SCALED_BSPLINE, N=N)


def residual_p(N: int) -> WindowSpec:
    return WindowSpec(Family.RESIDUAL_P, N=N)


def truncated_q(N: int) -> WindowSpec:
    return WindowSpec(Family.TRUNCATED_Q, N=N)


def truncated_phi(N: int) -> WindowSpec:
    return WindowSpec(Family.TRUNCATED_PHI, N=N)


def bspline_dual(N: int) -> WindowSpec:
    return WindowSpec(Family.BSPLINE_DUAL, N=N)


def janssen_dual(a: float, b: float, eps: float, k_max: int | None = None) -> WindowSpec:
    return WindowSpec(Family.JANSSEN_DUAL, a=a, b=b, eps=eps, k_max=k_max)


def dual_lattice(N: int) -> tuple[float, float]:
    """Lattice ``(a, b)`` on which the scaled B-spline and ``h_N`` are dual."""
    return math.sqrt(12.0 / N), math.sqrt(N / 12.0) / (2 * N - 1)


# -- time domain -------------------------------------------------------------


def _gauss(x):
    return np.exp(-0.5 * x * x) / SQRT_2PI


def eval_time(w: WindowSpec, x):
    """Pointwise value of the window; scalars in, float out."""
    xa = np.asarray(x, dtype=float)
    fam, N = w.family, w.N
    if fam is Family.NORMALIZED_GAUSSIAN:
        out = _gauss(xa)
    elif fam is Family.JANSSEN_GAUSSIAN:
        out = 2.0**0.25 * np.exp(-math.pi * xa * xa)
    elif fam is Family.BSPLINE:
        out = bspline_eval(build_bspline(N), xa)
    elif fam is Family.SCALED_BSPLINE:
        out = scaled_bspline_eval(N, xa)
    elif fam is Family.RESIDUAL_P:
        out = _gauss(xa) - scaled_bspline_eval(N, xa)
    elif fam is Family.TRUNCATED_Q:
        out = np.where(np.abs(xa) <= N, math.exp(-0.5 * N * N), np.exp(-0.5 * xa * xa))
    elif fam is Family.TRUNCATED_PHI:
        out = np.where(np.abs(xa) <= N, np.exp(-0.5 * xa * xa) - math.exp(-0.5 * N * N), 0.0)
    elif fam is Family.BSPLINE_DUAL:
        out = _bspline_dual(N, xa)
    elif fam is Family.JANSSEN_DUAL:
        out, _ = janssen_dual_eval(w.a, w.b, w.eps, xa, w.k_max)
    else:  # pragma: no cover
        raise ValueError(fam)
    if np.ndim(x) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def _bspline_dual(N: int, x):
    s = unser_scale(N)
    spline = build_bspline(N)
    y = s * x
    total = np.zeros_like(y)
    for n in range(-N + 1, N):
        total += bspline_eval(spline, y + n)
    # b * sqrt(12/N) with b fixed by the dual lattice equals 1/(2N - 1).
    return total / (2 * N - 1)


# -- frequency domain --------------------------------------------------------

_SERIES_SWITCH = 1e-2


def sinc_power(u, N: int):
    """``(sin(pi u) / (pi u)) ** N`` with a log-series branch near zero."""
    u = np.asarray(u, dtype=float)
    v = math.pi * u
    small = np.abs(v) < _SERIES_SWITCH
    v2 = v * v
    # log(sin v / v) = -v^2/6 - v^4/180 - v^6/2835 - v^8/37800 - ...
    log_small = -v2 * (1.0 / 6 + v2 * (1.0 / 180 + v2 * (1.0 / 2835 + v2 / 37800)))
    big = np.sinc(np.where(small, 1.0, u)) ** N
    return np.where(small, np.exp(N * log_small), big)


def _log_sinc_excess(v):
    """``-log(sin v / v) - v^2/6`` for ``0 <= v < pi``, free of cancellation."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    small = v < 1.0
    # -log(sin v / v) = sum_n 2^(2n-1) |B_2n| v^(2n) / (n (2n)!), first term v^2/6.
    vs = v[small]
    v2 = vs * vs
    acc = np.zeros_like(vs)
    for n in range(_LOG_SINC_TERMS, 1, -1):
        acc = (acc + _LOG_SINC_COEFFS[n]) * v2
    out[small] = acc * v2
    vb = v[~small]
    out[~small] = -np.log(np.sin(vb) / vb) - vb * vb / 6.0
    return out


def residual_p_fourier(N: int, gamma):
    """``exp(-2 pi^2 gamma^2) - sinc(gamma / sqrt(N/12))^N``.

    Inside the main lobe ``sinc^N = exp(-2 pi^2 gamma^2 - N * excess)``, so the
    difference is ``-exp(-2 pi^2 gamma^2) * expm1(-N * excess)`` with no cancellation.
    """
    shape = np.shape(gamma)
    ga = np.abs(np.atleast_1d(np.asarray(gamma, dtype=float))).ravel()
    v = math.pi * ga / unser_scale(N)
    lobe = v < math.pi
    out = np.exp(-2.0 * math.pi**2 * ga * ga) - sinc_power(ga / unser_scale(N), N)
    vl = v[lobe]
    ex = _log_sinc_excess(vl)
    out[lobe] = -np.exp(-2.0 * math.pi**2 * ga[lobe] ** 2) * np.expm1(-N * ex)
    return out.reshape(shape)


def eval_fourier(w: WindowSpec, gamma):
    """Closed-form Fourier transform ``int g(x) exp(-2 pi i x gamma) dx``."""
    if not w.has_fourier_closed_form:
        raise ValueError(f"no closed-form Fourier transform for {w.label}")
    ga = np.asarray(gamma, dtype=float)
    fam, N = w.family, w.N
    if fam is Family.NORMALIZED_GAUSSIAN:
        out = np.exp(-2.0 * math.pi**2 * ga * ga)
    elif fam is Family.JANSSEN_GAUSSIAN:
        out = 2.0**0.25 * np.exp(-math.pi * ga * ga)
    elif fam is Family.BSPLINE:
        out = sinc_power(ga, N)
    elif fam is Family.SCALED_BSPLINE:
        out = sinc_power(ga / unser_scale(N), N)
    else:  # residual p_N
        out = residual_p_fourier(N, ga)
    if np.ndim(gamma) == 0:
        return float(out)
    return out


# -- decay envelopes ---------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    """Majorant ``|g(u)| <= sum_i C_i exp(-alpha_i u^2) + sum_j (c_j / |u|)^{p_j}``
    valid for ``|u| >= start``.  Every term is nonincreasing in ``|u|``."""

    start: float
    gauss: tuple[tuple[float, float], ...] = ()
    power: tuple[tuple[float, float], ...] = ()

    def __call__(self, r: float) -> float:
        r = max(r, self.start)
        val = sum(C * math.exp(-al * r * r) for C, al in self.gauss)
        for c, p in self.power:
            e = p * math.log(c / r) if r > 0 else math.inf
            val += math.inf if e > 709.0 else math.exp(e)
        return val

    def tail_integral(self, r: float) -> float:
        """Upper bound for ``int_r^inf`` of the envelope, ``r >= start``."""
        r = max(r, self.start)
        val = 0.0
        for C, al in self.gauss:
            val += C * 0.5 * math.sqrt(math.pi / al) * math.erfc(math.sqrt(al) * r)
        for c, p in self.power:
            if p <= 1:
                return math.inf
            val += c**p * r ** (1.0 - p) / (p - 1.0)
        return val

    def lattice_tail(self, r: float, step: float) -> float:
        """Bound for ``sum_{j >= 0} |g(u_j)|`` over points ``u_j >= r`` spaced by ``step``."""
        return self(r) + self.tail_integral(r) / step

    def radius(self, level: float) -> float:
        """Smallest ``r >= start`` (found by doubling/bisection) with envelope(r) <= level."""
        lo = self.start
        if self(lo) <= level:
            return lo
        hi = max(1.0, 2.0 * lo)
        while self(hi) > level:
            hi *= 2.0
            if hi > 1e8:
                raise ArithmeticError("envelope does not reach the requested level")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if self(mid) > level:
                lo = mid
            else:
                hi = mid
        return hi


def time_envelope(w: WindowSpec) -> Envelope | None:
    """Decay majorant in time for windows with unbounded support."""
    fam, N = w.family, w.N
    if fam in (Family.NORMALIZED_GAUSSIAN, Family.RESIDUAL_P):
        start = 0.0 if fam is Family.NORMALIZED_GAUSSIAN else math.sqrt(3.0 * N)
        return Envelope(start, gauss=((1.0 / SQRT_2PI, 0.5),))
    if fam is Family.JANSSEN_GAUSSIAN:
        return Envelope(0.0, gauss=((2.0**0.25, math.pi),))
    if fam is Family.TRUNCATED_Q:
        return Envelope(float(N), gauss=((1.0, 0.5),))
    return None


def fourier_envelope(w: WindowSpec) -> Envelope | None:
    """Decay majorant of the Fourier transform, ``None`` if not available."""
    fam, N = w.family, w.N
    if fam is Family.NORMALIZED_GAUSSIAN:
        return Envelope(0.0, gauss=((1.0, 2.0 * math.pi**2),))
    if fam is Family.JANSSEN_GAUSSIAN:
        return Envelope(0.0, gauss=((2.0**0.25, math.pi),))
    if fam is Family.BSPLINE:
        return Envelope(0.0, power=((1.0 / math.pi, float(N)),))
    if fam is Family.SCALED_BSPLINE:
        return Envelope(0.0, power=((unser_scale(N) / math.pi, float(N)),))
    if fam is Family.RESIDUAL_P:
        # |p_N^(gamma)| <= e^{-2 pi^2 gamma^2} + |sqrt(N/12) / (pi gamma)|^N on all of R.
        return Envelope(
            0.0,
            gauss=((1.0, 2.0 * math.pi**2),),
            power=((unser_scale(N) / math.pi, float(N)),),
        )
    return None


# -- erfc and Janssen's dual -------------------------------------------------


def erfc(x):
    """Complementary error function, ``2/sqrt(pi) int_x^inf exp(-s^2) ds``."""
    out = special.erfc(np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out


def _check_janssen(a, b, eps):
    if a is None or b is None or eps is None:
        raise ValueError("Janssen dual needs a, b and eps")
    if a <= 0 or b <= 0:
        raise ValueError("lattice steps must be positive")
    if a * b >= 1:
        raise ValueError(f"Janssen dual requires ab < 1, got ab = {a * b}")
    if not 0 < eps < 1 - a * b:
        raise ValueError(f"Janssen dual requires 0 < eps < 1 - ab = {1 - a * b}, got {eps}")


def janssen_constant(a: float, b: float, k_max: int, literal: bool = False) -> float:
    """Normalising constant of Janssen's dual over ``|k+1/2| <= k_max+1/2``.

    ``K = sum_k (-1)^k (2k+1) exp(-pi a (k+1/2)^2 / b)``.  With this exponent the
    window satisfies the duality identity with constant ``b`` exactly.  The
    ``literal`` form drops the ``/ b``; it yields a dual only up to the factor
    ``K_literal / K``.
    """
    k = np.arange(-k_max - 1, k_max + 1)
    c = k + 0.5
    scale = a if literal else a / b
    return float(np.sum((-1.0) ** k * 2.0 * c * np.exp(-math.pi * scale * c * c)))


def janssen_default_kmax(a: float, b: float, eps: float, xmax: float = 0.0) -> int:
    """Half-width so the first omitted term is below 1e-16 of the leading one.

    The terms of the series peak near ``k + 1/2 = x b / (eps + ab)``, so the
    range is widened by that offset for the largest ``|x|`` requested.
    """
    width = math.sqrt(0.25 + 16.0 * math.log(10.0) * max(b, 1.0) / (math.pi * a))
    centre = abs(xmax) * b / (eps + a * b)
    return int(math.ceil(centre + width)) + 1


def janssen_dual_eval(a: float, b: float, eps: float, x, k_max: int | None = None, literal_constant: bool = False):
    """Janssen's dual window of ``2^{1/4} exp(-pi x^2)`` on the lattice ``(a, b)``.

    Returns ``(value, tail_estimate)``.  Every term of the series is combined
    in log space with the ``exp(pi x^2)`` prefactor; for terms whose erfc
    argument is negative the identity ``erfc(z) = 2 - erfc(-z)`` is used and
    the constant parts cancel in pairs ``k <-> -k-1`` over the symmetric range.
    """
    _check_janssen(a, b, eps)
    xa = np.asarray(x, dtype=float)
    if k_max is None:
        k_max = janssen_default_kmax(a, b, eps, float(np.max(np.abs(xa))) if xa.size else 0.0)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    K = janssen_constant(a, b, k_max, literal=literal_constant)
    k = np.arange(-k_max - 1, k_max + 1)
    c = (k + 0.5)[:, None]
    sign = ((-1.0) ** k)[:, None]
    flat = xa.ravel()[None, :]
    root = math.sqrt(math.pi / eps)
    base = math.pi * (flat * flat - a * c * c / b)  # exponent of the raw term without erfc

    def erfc_term(z):
        # exp(base) * erfc(z) for z >= 0, via the scaled erfcx.
        return np.exp(base - z * z) * special.erfcx(z)

    z = (flat - c * a) * root
    # x >= 0: keep erfc(z) for z >= 0, rewrite z < 0 as 2 - erfc(-z).
    # x < 0: use the mirrored representation sum = -sum (-1)^k e^base erfc(-z).
    pos = flat >= 0
    zz = np.where(pos, z, -z)
    safe = np.where(zz >= 0, zz, 0.0)
    neg = np.where(zz < 0, -zz, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = erfc_term(safe)
        mirrored = np.where(zz < 0, 2.0 * np.exp(base) - erfc_term(neg), 0.0)
    terms = np.where(zz >= 0, direct, mirrored)
    total = np.sum(sign * terms, axis=0)
    total = np.where(pos[0], total, -total)
    pref = 2.0**-0.25 * b / K
    value = pref * total

    # Omitted raw terms: |term| <= exp(pi (x^2 - a c^2 / b)) * min(2, e^{-z^2}) for z >= 0.
    # Sum explicit majorants over a band of omitted c, then a geometric remainder.
    xs = np.abs(xa.ravel())[None, :]  # the x < 0 representation mirrors x > 0
    j = np.arange(k_max + 64)[:, None]
    tail = np.zeros(xa.size)
    for side in (1.0, -1.0):
        cc = side * (k_max + 1.5 + j)
        zc = (xs - cc * a) * root
        expo = math.pi * (xs * xs - a * cc * cc / b) - np.where(zc > 0, zc * zc, 0.0)
        with np.errstate(over="ignore"):
            band = 2.0 * np.exp(expo)
        c_last = abs(cc[-1, 0])
        ratio = math.exp(-2.0 * math.pi * a * c_last / b)
        tail += band.sum(axis=0) + band[-1] * ratio / (1.0 - ratio)
    tail = abs(pref) * tail
    c0 = k_max + 1.5
    kscale = a if literal_constant else a / b
    k_tail = 4.0 * c0 * math.exp(-math.pi * kscale * c0 * c0) / (1.0 - math.exp(-2.0 * math.pi * kscale * c0))
    tail = tail + np.abs(value) * k_tail / abs(K)
    value = value.reshape(xa.shape)
    tail = tail.reshape(xa.shape)
    if np.ndim(x) == 0:
        return float(value), float(tail)
    return value, tail
