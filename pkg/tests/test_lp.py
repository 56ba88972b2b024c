import io
import math
from functools import lru_cache

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaborspline import bounds as B
from gaborspline import lp
from gaborspline import windows as W
from gaborspline.lp import INF

# Frozen from an mpmath oracle built on the closed-form cubic B_4: residual roots
# located with a bracketing solver, quadrature at 30 digits, and the |sinc|^4
# frequency tail past 400 zeros taken from its 1/(8 U^3) asymptotic.
GOLDEN_N4 = {
    ("time", 1.0): 0.03858535477174729,
    ("time", 2.0): 0.018120648727336784,
    ("time", 3.5): 0.01437599158038086,
    ("freq", 1.0): 0.01626599188711591,
    ("freq", 2.0): 0.018120648727336784,
}

SWEEP = (14, 30, 60)


@lru_cache(maxsize=None)
def dist(domain, N, p):
    fn = {"time": lp.lp_distance_time, "freq": lp.lq_distance_freq, "self": lp.scaled_fourier_self_distance}
    return fn[domain](N, p)


# -- exponents ---------------------------------------------------------------------


@pytest.mark.parametrize("raw, want", [(1, 1.0), ("2", 2.0), (3.5, 3.5), ("inf", INF), ("∞", INF), (INF, INF)])
def test_parse_exponent(raw, want):
    assert lp.parse_exponent(raw) == want


@pytest.mark.parametrize("bad", [0.5, 0, -1, "abc", math.nan])
def test_parse_exponent_rejects_values(bad):
    with pytest.raises(ValueError):
        lp.parse_exponent(bad)


def test_float_infinity_is_not_the_sup_norm():
    with pytest.raises(ValueError, match="lp.INF"):
        lp.parse_exponent(math.inf)
    with pytest.raises(TypeError):
        lp.parse_exponent(True)


def test_quad_points_floor():
    with pytest.raises(ValueError):
        lp.lp_distance_time(14, 2, quad_points=512)


# -- quadrature --------------------------------------------------------------------


def test_adaptive_integral_on_kinked_integrand():
    val = lp.adaptive_integral(lambda x: np.abs(np.sin(x)) ** 1.5, np.array([0.0, 1.0, 7.0]))
    ref = mp.quad(lambda x: abs(mp.sin(x)) ** 1.5, [0, 1, mp.pi, 2 * mp.pi, 7])
    assert val == pytest.approx(float(ref), rel=1e-12)


def test_adaptive_integral_budget():
    with pytest.raises(B.NotCertifiedError):
        lp.adaptive_integral(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), np.array([0.0, 1.0]), max_panels=50)


# -- oracle values ---------------------------------------------------------------


@pytest.mark.parametrize("key", sorted(GOLDEN_N4))
def test_golden_order_four(key):
    domain, p = key
    assert dist(domain, 4, p) == pytest.approx(GOLDEN_N4[key], rel=1e-12)


@pytest.mark.parametrize("N", [4, 14, 30])
def test_plancherel(N):
    assert dist("time", N, 2.0) == pytest.approx(dist("freq", N, 2.0), rel=1e-9)


@pytest.mark.parametrize("domain, N, p", [("time", 14, 1.0), ("time", 30, INF), ("freq", 14, 2.0), ("freq", 30, INF), ("self", 14, 2.0)])
def test_quadrature_doubling(domain, N, p):
    fn = {"time": lp.lp_distance_time, "freq": lp.lq_distance_freq, "self": lp.scaled_fourier_self_distance}[domain]
    assert fn(N, p, quad_points=8192) == pytest.approx(dist(domain, N, p), rel=1e-8)


def test_residual_time_at_origin():
    # B_2 scaled is a hat of height 1/sqrt(6).
    assert lp.residual_time(2, 0.0) == pytest.approx(1 / math.sqrt(6) - 1 / math.sqrt(2 * math.pi), abs=1e-15)


# -- convergence ---------------------------------------------------------------


@pytest.mark.parametrize("domain", ["time", "freq"])
@pytest.mark.parametrize("p", [1.0, 2.0, INF])
def test_distances_decrease(domain, p):
    vals = [dist(domain, N, p) for N in SWEEP]
    assert all(v > 0 for v in vals)
    assert vals[0] > vals[1] > vals[2]


def test_self_distance_decreases_and_is_positive():
    vals = [dist("self", N, 2.0) for N in SWEEP]
    assert vals[0] > vals[1] > vals[2] > 0


@pytest.mark.parametrize("N", [14, 30])
def test_self_distance_triangle_diagnostic(N):
    assert dist("self", N, 2.0) <= lp.self_distance_triangle_bound(N, 2.0)


@pytest.mark.parametrize("N", SWEEP)
def test_sup_norm_chain(N):
    # ||p_N||_inf <= ||p_N^||_1; equality up to rounding when p_N^ has one sign.
    assert dist("time", N, INF) <= dist("freq", N, 1.0) * (1 + lp.MAJORANT_RTOL)


@pytest.mark.parametrize("N", [14, 30, 100])
def test_sup_majorant(N):
    assert lp.lq_distance_freq(N, INF) <= lp.sup_majorant_freq(N)


def test_sup_majorant_requires_order():
    with pytest.raises(B.PreconditionError):
        lp.sup_majorant_freq(13)


@pytest.mark.parametrize("N", [14, 30, 100])
def test_branch_majorant_dense(N):
    g = np.linspace(0, 4 * math.sqrt(N), 400_001)
    assert np.all(np.abs(lp.residual_freq(N, g)) <= B.fourier_branch_bound(N, g))


@settings(max_examples=60, deadline=None)
@given(st.integers(14, 200), st.floats(0, 30))
def test_freq_residual_below_envelope(N, g):
    assert abs(lp.residual_freq(N, g)) <= W.fourier_envelope(W.residual_p(N))(g) * (1 + 1e-12)


def test_freq_tail_bound_dominates():
    N, q, G = 14, 1.0, 3.0
    c = math.sqrt(12 / N)
    with mp.workdps(30):
        f = lambda g: abs(mp.e ** (-2 * mp.pi**2 * g**2) - (mp.sin(mp.pi * c * g) / (mp.pi * c * g)) ** N)  # noqa: E731
        ref = mp.quad(f, [G + k / c for k in range(0, 200)]) + mp.quad(f, [G + 199 / c, mp.inf])
    assert float(ref) <= lp.freq_tail_bound(N, q, G)


# -- tables ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def table():
    rows = lp.convergence_table([14, 30], [1, 2, "inf"], "time") + lp.convergence_table([14, 30], ["inf"], "freq")
    return rows


def test_table_rows_match_single_calls(table):
    for r in (table[0], table[2], table[-1]):
        assert r.distance == dist(r.domain, r.N, r.p)


def test_table_majorants(table):
    for r in table:
        if r.p is INF:
            assert r.majorant is not None and r.passed
        else:
            assert r.majorant is None and r.passed is None
    freq_row = table[-1]
    assert freq_row.majorant == lp.sup_majorant_freq(30)


def test_table_csv_round_trip(table):
    buf = io.StringIO()
    lp.write_table_csv(buf, table, header_lines=["command=converge"])
    text = buf.getvalue()
    assert text.splitlines()[1] == ",".join(lp.CSV_HEADER)
    back = lp.read_table_csv(io.StringIO(text), quad_points=4096)
    assert back == table


def test_table_rejects_unknown_domain():
    with pytest.raises(ValueError):
        lp.convergence_table([14], [2], "space")


def test_empirical_constant(table):
    c2 = lp.empirical_constant(table, 2)
    expected = max(r.distance**2 * r.N**2 / math.sqrt(math.log(r.N)) for r in table if r.p == 2.0)
    assert c2 == expected
    cinf = lp.empirical_constant(table, "inf")
    assert math.isfinite(cinf) and cinf > 0
    with pytest.raises(ValueError):
        lp.empirical_constant(table, 3)
