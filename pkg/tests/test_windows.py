import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from gaborspline import windows as W
from gaborspline.splines import build_bspline, bspline_eval, scaled_bspline_eval
from gaborspline.windows import Family, WindowSpec

mp.mp.dps = 40


def fourier_by_quadrature(w: WindowSpec, gamma, breaks):
    """``int w(x) cos(2 pi x gamma) dx`` for an even window, panel-wise Gauss-Legendre."""
    x, wt = np.polynomial.legendre.leggauss(48)
    out = np.zeros_like(gamma)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        t = 0.5 * (hi - lo) * (x + 1) + lo
        vals = W.eval_time(w, t)
        out += 0.5 * (hi - lo) * (np.cos(2 * np.pi * np.outer(gamma, t)) @ (wt * vals))
    return out


def fourier_by_fft(w: WindowSpec, half_width: float, n: int = 2**16):
    """Discrete transform of samples on ``[-half_width, half_width)``."""
    dx = 2 * half_width / n
    x = -half_width + dx * np.arange(n)
    spec = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(W.eval_time(w, x)))) * dx
    freqs = np.fft.fftshift(np.fft.fftfreq(n, dx))
    return freqs, spec.real


# -- time domain ---------------------------------------------------------------


def test_gaussian_at_zero():
    assert W.eval_time(W.normalized_gaussian(), 0.0) == pytest.approx(0.3989422804014327, rel=1e-15)


@pytest.mark.parametrize("N", [2, 4, 6])
def test_q_plateau_and_tails(N):
    w = W.truncated_q(N)
    inside = np.linspace(-N, N, 101)
    assert_allclose(W.eval_time(w, inside), math.exp(-N * N / 2), rtol=1e-15)
    outside = np.array([-N - 0.5, N + 1e-9, N + 3.0])
    assert_allclose(W.eval_time(w, outside), np.exp(-outside**2 / 2), rtol=1e-12)


@pytest.mark.parametrize("N", [2, 4, 6])
def test_phi_continuity(N):
    w = W.truncated_phi(N)
    assert W.eval_time(w, float(N)) == 0.0
    assert W.eval_time(w, -float(N)) == 0.0
    h = 1e-6
    x = np.linspace(N - 0.01, N + 0.01, 20001)
    jumps = np.abs(np.diff(W.eval_time(w, x)))
    # Lipschitz constant of the Gaussian near N is N e^{-N^2/2} <= 1.
    assert jumps.max() <= (x[1] - x[0]) * 1.0 + h
    assert w.support == (-N, N)


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 14, 20])
def test_h_plateau(N):
    w = W.bspline_dual(N)
    r = math.sqrt(3 * N)
    x = np.linspace(-r, r, 4001)
    assert_allclose(W.eval_time(w, x), 1.0 / (2 * N - 1), atol=1e-12)


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 14, 20])
def test_h_support(N):
    w = W.bspline_dual(N)
    c = (1.5 * N - 1) * math.sqrt(12 / N)
    assert w.support == pytest.approx((-c, c))
    far = np.concatenate([np.linspace(c * (1 + 1e-12), c + 5, 200), -np.linspace(c * (1 + 1e-12), c + 5, 200)])
    assert np.all(W.eval_time(w, far) == 0.0)
    assert W.eval_time(w, c - 1e-3) > 0.0


def test_h_brute_force_shifts():
    # h_N at 0 from an explicit sum of shifted splines.
    N = 3
    total = sum(bspline_eval(build_bspline(N), float(n)) for n in range(-N + 1, N))
    assert W.eval_time(W.bspline_dual(N), 0.0) == pytest.approx(total / (2 * N - 1), abs=1e-15)
    assert W.eval_time(W.bspline_dual(N), 0.0) == pytest.approx(0.2, abs=1e-15)


def test_residual_p_at_zero_n12():
    # Oracle for B_12(0): Fourier inversion of sinc^12.
    b12 = 2 * mp.quad(lambda t: (mp.sin(mp.pi * t) / (mp.pi * t)) ** 12 if t else 1, [0, 1, 2, 3, 6, mp.inf])
    expected = 1 / math.sqrt(2 * math.pi) - math.sqrt(1.0) * float(b12)
    assert W.eval_time(W.residual_p(12), 0.0) == pytest.approx(expected, abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.floats(-15, 15, allow_nan=False))
def test_residual_consistency(N, x):
    lhs = W.eval_time(W.residual_p(N), x)
    rhs = W.eval_time(W.normalized_gaussian(), x) - scaled_bspline_eval(N, x)
    assert lhs == rhs


def test_dual_lattice():
    assert W.dual_lattice(3) == pytest.approx((2.0, 0.1), rel=1e-15)
    a, b = W.dual_lattice(14)
    assert a == pytest.approx(math.sqrt(12 / 14))
    assert b == pytest.approx(math.sqrt(14 / 12) / 27)


def test_fourier_closed_form_families():
    expected = {Family.NORMALIZED_GAUSSIAN, Family.JANSSEN_GAUSSIAN, Family.SCALED_BSPLINE, Family.RESIDUAL_P,
                Family.BSPLINE}
    for fam in Family:
        if fam is Family.JANSSEN_DUAL:
            w = W.janssen_dual(1.0, 0.5, 0.3)
        elif fam in (Family.NORMALIZED_GAUSSIAN, Family.JANSSEN_GAUSSIAN):
            w = WindowSpec(fam)
        else:
            w = WindowSpec(fam, 4)
        assert w.has_fourier_closed_form == (fam in expected)


def test_window_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(Family.SCALED_BSPLINE)
    with pytest.raises(ValueError):
        WindowSpec(Family.BSPLINE_DUAL, 0)
    with pytest.raises(ValueError):
        WindowSpec("no-such-window", 3)


def test_window_spec_is_immutable():
    w = W.scaled_bspline(3)
    with pytest.raises(AttributeError):
        w.N = 4


# -- frequency domain --------------------------------------------------------


def test_fourier_values():
    assert W.eval_fourier(W.residual_p(14), 0.0) == 0.0
    assert W.eval_fourier(W.scaled_bspline(9), 0.0) == 1.0
    assert W.eval_fourier(W.normalized_gaussian(), 0.0) == 1.0
    g = 0.37
    assert W.eval_fourier(W.normalized_gaussian(), g) == pytest.approx(math.exp(-2 * math.pi**2 * g * g), rel=1e-15)


def test_scaled_bspline_fourier_n12():
    # Unscaled B_12 at 0.5 equals (2/pi)^12; the scaled one at 0.5 * sqrt(12/12).
    assert W.eval_fourier(W.bspline(12), 0.5) == pytest.approx((2 / math.pi) ** 12, rel=1e-14)
    assert W.eval_fourier(W.scaled_bspline(12), 0.5) == pytest.approx((2 / math.pi) ** 12, rel=1e-14)


def test_fourier_rejects_families_without_closed_form():
    with pytest.raises(ValueError):
        W.eval_fourier(W.bspline_dual(3), 0.1)


@pytest.mark.parametrize("N", [3, 12, 20])
def test_scaled_bspline_fourier_pair_by_quadrature(N):
    gamma = np.linspace(0, 4, 81)
    knots = (np.arange(N + 1) - N / 2) * math.sqrt(12 / N)
    ref = fourier_by_quadrature(W.scaled_bspline(N), gamma, knots)
    assert_allclose(W.eval_fourier(W.scaled_bspline(N), gamma), ref, atol=1e-13)


@pytest.mark.parametrize(
    "w, half_width",
    [(W.scaled_bspline(12), 40.0), (W.normalized_gaussian(), 40.0), (W.janssen_gaussian(), 20.0)],
)
def test_fourier_pair_by_fft(w, half_width):
    freqs, spec = fourier_by_fft(w, half_width)
    sel = np.abs(freqs) <= 4
    closed = W.eval_fourier(w, freqs[sel])
    big = np.abs(closed) > 1e-3 * np.abs(closed).max()
    assert np.max(np.abs(spec[sel][big] - closed[big]) / np.abs(closed[big])) < 1e-5
    assert np.max(np.abs(spec[sel] - closed)) < 1e-9


def _residual_p_hat_mp(N, g):
    # The two terms agree to ~gamma^4, so 80 digits covers gamma down to 1e-8.
    with mp.workdps(80):
        g = mp.mpf(g)
        x = mp.pi * mp.sqrt(mp.mpf(12) / N) * g
        s = mp.mpf(1) if x == 0 else mp.sin(x) / x
        return float(mp.e ** (-2 * mp.pi**2 * g**2) - s**N)


@pytest.mark.parametrize("N", [14, 30, 100])
def test_residual_p_fourier_relative_accuracy(N):
    gammas = np.concatenate([[1e-8, 1e-4, 3e-3], np.linspace(0.01, 2.5, 120)])
    vals = W.residual_p_fourier(N, gammas)
    for g, v in zip(gammas, vals):
        ref = _residual_p_hat_mp(N, g)
        assert abs(v - float(ref)) <= 1e-11 * abs(float(ref)) + 1e-300


def test_sinc_power_series_switch_is_continuous():
    u0 = W._SERIES_SWITCH / math.pi
    u = np.array([u0 * (1 - 1e-12), u0 * (1 + 1e-12)])
    v = W.sinc_power(u, 200)
    assert v[0] == pytest.approx(v[1], rel=1e-12)
    assert W.sinc_power(u0 * 0.5, 200) == pytest.approx(float(mp.sinc(mp.pi * u0 * 0.5) ** 200), rel=1e-14)


# -- envelopes -------------------------------------------------------------------


ENVELOPED_TIME = [W.normalized_gaussian(), W.janssen_gaussian(), W.residual_p(14), W.truncated_q(5)]
ENVELOPED_FREQ = [W.normalized_gaussian(), W.janssen_gaussian(), W.bspline(6), W.scaled_bspline(14), W.residual_p(14)]


@pytest.mark.parametrize("w", ENVELOPED_TIME, ids=lambda w: w.label)
def test_time_envelope_dominates(w):
    env = W.time_envelope(w)
    r = np.linspace(env.start, env.start + 12, 2001)
    vals = np.abs(W.eval_time(w, r))
    bound = np.array([env(x) for x in r])
    assert np.all(vals <= bound * (1 + 1e-12) + 1e-300)


@pytest.mark.parametrize("w", ENVELOPED_FREQ, ids=lambda w: w.label)
def test_fourier_envelope_dominates(w):
    env = W.fourier_envelope(w)
    r = np.linspace(max(env.start, 1e-3), 10, 4001)
    vals = np.abs(W.eval_fourier(w, r))
    bound = np.array([env(x) for x in r])
    assert np.all(vals <= bound * (1 + 1e-12) + 1e-300)


@pytest.mark.parametrize("r", [0.5, 1.5, 3.0])
def test_envelope_tail_integral(r):
    env = W.Envelope(0.0, gauss=((1.0, 0.5),), power=((0.8, 6.0),))
    ref = mp.quad(lambda t: mp.e ** (-0.5 * t * t) + (0.8 / t) ** 6, [r, mp.inf])
    assert env.tail_integral(r) == pytest.approx(float(ref), rel=1e-12)


def test_envelope_radius_reaches_level():
    env = W.time_envelope(W.normalized_gaussian())
    R = env.radius(1e-18)
    assert env(R) <= 1e-18 * (1 + 1e-9)


# -- erfc and Janssen's dual -----------------------------------------------------


def test_erfc_basic():
    assert W.erfc(0.0) == 1.0
    for x in (0.3, 1.7):
        assert W.erfc(x) + W.erfc(-x) == pytest.approx(2.0, abs=1e-15)


def test_erfc_one_by_quadrature():
    ref = 2 / mp.sqrt(mp.pi) * mp.quad(lambda s: mp.e ** (-s * s), [1, mp.inf])
    assert W.erfc(1.0) == pytest.approx(float(ref), rel=1e-14)
    assert W.erfc(1.0) == pytest.approx(0.157299207050285, rel=1e-13)


@pytest.mark.parametrize("x", np.linspace(-10, 10, 41))
def test_erfc_relative_accuracy(x):
    assert W.erfc(x) == pytest.approx(float(mp.erfc(x)), rel=1e-12)


@pytest.mark.parametrize("literal", [False, True])
def test_janssen_constant_truncation(literal):
    k6 = W.janssen_constant(1.0, 0.5, 6, literal=literal)
    k12 = W.janssen_constant(1.0, 0.5, 12, literal=literal)
    assert abs(k6 - k12) < 1e-12


def test_janssen_symmetry():
    x = np.linspace(0.0, 6.0, 121)
    vp, _ = W.janssen_dual_eval(1.0, 0.25, 0.5, x)
    vm, _ = W.janssen_dual_eval(1.0, 0.25, 0.5, -x)
    assert np.max(np.abs(vp - vm)) < 1e-9


@pytest.mark.parametrize("a, b, eps", [(1.0, 0.25, 0.5), (0.5, 0.5, 0.3), (1.0, 0.5, 0.2), (0.8, 0.5, 0.4)])
def test_janssen_duality_identity(a, b, eps):
    # sum_n g(x - na) gt(x - na - k/b) = b delta_k0 with g = 2^{1/4} exp(-pi x^2)
    g = W.janssen_gaussian()
    x = np.linspace(0, a, 9)[:, None]
    n = np.arange(-40, 41)[None, :]
    for k in (-2, -1, 0, 1, 2):
        u = x - n * a
        gt, _ = W.janssen_dual_eval(a, b, eps, u - k / b)
        s = np.sum(W.eval_time(g, u) * gt, axis=1)
        assert_allclose(s, b if k == 0 else 0.0, atol=1e-10)


def test_janssen_literal_constant_is_off_by_ratio():
    a, b, eps = 1.0, 0.5, 0.2
    ratio = W.janssen_constant(a, b, 12) / W.janssen_constant(a, b, 12, literal=True)
    x = np.array([0.0, 0.3, 1.1])
    v, _ = W.janssen_dual_eval(a, b, eps, x)
    vl, _ = W.janssen_dual_eval(a, b, eps, x, literal_constant=True)
    assert_allclose(vl, v * ratio, rtol=1e-12)
    assert abs(ratio - 1) > 1e-3


def test_janssen_tail_is_small_and_finite():
    v, tail = W.janssen_dual_eval(1.0, 0.25, 0.5, np.linspace(-30, 30, 61))
    assert np.all(np.isfinite(v))
    assert np.all(np.isfinite(tail))
    assert np.max(tail) < 1e-12


@pytest.mark.parametrize("a, b, eps", [(2.0, 0.5, 0.1), (1.0, 0.5, 0.5), (1.0, 0.5, 0.0), (1.0, 0.5, -0.1)])
def test_janssen_rejects_bad_parameters(a, b, eps):
    with pytest.raises(ValueError):
        W.janssen_dual_eval(a, b, eps, 0.0)


def test_janssen_rejects_small_kmax():
    with pytest.raises(ValueError):
        W.janssen_dual_eval(1.0, 0.5, 0.2, 0.0, k_max=0)


def test_janssen_window_spec_roundtrip():
    w = W.janssen_dual(1.0, 0.25, 0.5)
    v, _ = W.janssen_dual_eval(1.0, 0.25, 0.5, 0.7)
    assert W.eval_time(w, 0.7) == v
