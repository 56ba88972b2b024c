"""Discretised Gabor analysis and synthesis, duality residuals and
reconstruction-error measurement.

Signals live on uniform grids ``t_j = t0 + j dt``.  Translations ``T_{na}``
and modulations ``E_{mb}`` are evaluated exactly at grid points (windows are
closed-form, so no interpolation happens).  When ``1/(b dt)`` is an integer
``P`` and all ``P`` modulation indices are used, the discrete sum over ``m``
is an exact Dirac comb of period ``1/b``.  The reconstruction computed on the
grid then coincides with the continuous-domain operator sampled at the grid
points, and the only approximation left is the Riemann sum used for norms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import windows as W
from .bounds import GaborLattice, approx_duality_bound
from .windows import Family, WindowSpec

_INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class SampledSignal:
    samples: np.ndarray
    t0: float
    dt: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).ravel()
        if len(s) < 2:
            raise ValueError("a sampled signal needs at least two samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.samples) - 1)

    def norm(self) -> float:
        return math.sqrt(self.dt * float(np.sum(np.abs(self.samples) ** 2)))

    def inner(self, other: "SampledSignal") -> complex:
        return complex(self.dt * np.vdot(other.samples, self.samples))

    def padded(self, left: int, right: int) -> "SampledSignal":
        s = np.concatenate([np.zeros(left, complex), self.samples, np.zeros(right, complex)])
        return SampledSignal(s, self.t0 - left * self.dt, self.dt)


@dataclass(frozen=True)
class GaborCoefficients:
    """``values[i, j]`` is the coefficient at modulation ``m[i]`` and translation ``n[j]``."""

    values: np.ndarray
    m: np.ndarray
    n: np.ndarray
    lattice: GaborLattice


@dataclass(frozen=True)
class DualityReport:
    k_max: int
    per_k_residual: dict
    max_residual: float
    grid_step: float


@dataclass(frozen=True)
class ReconstructionReport:
    mu_measured: float
    mu_bound: float | None
    lattice: GaborLattice
    m_range: int
    n_range: int
    signal_id: str
    dt: float
    norm: float


# -- duality -----------------------------------------------------------------


def duality_residual(g: WindowSpec, h: WindowSpec, L: GaborLattice, grid_step: float) -> DualityReport:
    """Sup over one period of ``|sum_n g(x-na) h(x-na-k/b) - b delta_k0|`` for every
    ``k`` whose shifted supports can overlap."""
    if g.support is None or h.support is None:
        raise ValueError("duality_residual needs compactly supported windows")
    if not grid_step > 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if grid_step > L.a / 16:
        raise ValueError(f"grid_step must be <= a/16 = {L.a / 16}")
    x = np.arange(0.0, L.a, grid_step)
    glo, ghi = g.support
    width = (ghi - glo) + (h.support[1] - h.support[0])
    n = np.arange(math.floor((0.0 - ghi) / L.a) - 1, math.ceil((L.a - glo) / L.a) + 2)
    u = x[:, None] - n[None, :] * L.a
    gv = W.eval_time(g, u)
    k_max = int(math.floor(width * L.b)) + 1
    per_k = {}
    for k in range(-k_max, k_max + 1):
        s = np.sum(gv * np.conj(W.eval_time(h, u - k / L.b)), axis=1)
        target = L.b if k == 0 else 0.0
        per_k[k] = float(np.max(np.abs(s - target)))
    return DualityReport(k_max, per_k, max(per_k.values()), grid_step)


# -- analysis / synthesis ----------------------------------------------------


def _period(L: GaborLattice, dt: float) -> tuple[float, int | None]:
    P = 1.0 / (L.b * dt)
    Pi = int(round(P))
    return P, (Pi if abs(P - Pi) <= _INTEGER_TOL * P else None)


def window_radius(w: WindowSpec) -> float:
    """Half-width outside of which the window is (relatively) below 1e-18."""
    if w.support is not None:
        return max(abs(w.support[0]), abs(w.support[1]))
    env = W.time_envelope(w)
    if env is None:
        if w.family is Family.JANSSEN_DUAL:
            # Decays at least like the Gaussian it is dual to; use a generous radius.
            return 12.0 / math.sqrt(math.pi * (1 - w.a * w.b - w.eps) + 1e-12) + 2 * w.a
        raise ValueError(f"cannot size the support of {w.label}")
    peak = float(np.max(np.abs(W.eval_time(w, np.linspace(-env.start - 1, env.start + 1, 4001)))))
    return env.radius(1e-18 * max(peak, 1e-300))


def default_n_range(f: SampledSignal, w: WindowSpec, L: GaborLattice) -> np.ndarray:
    R = window_radius(w)
    return np.arange(math.floor((f.t0 - R) / L.a), math.ceil((f.t_end + R) / L.a) + 1)


def _m_indices(L: GaborLattice, dt: float, m_range: int | None) -> tuple[np.ndarray, int | None]:
    P, Pi = _period(L, dt)
    if m_range is None:
        if Pi is None:
            raise ValueError(
                f"1/(b dt) = {P} is not an integer; pass an explicit m_range"
            )
        return np.arange(-(Pi // 2), Pi - Pi // 2), Pi
    M = int(m_range)
    if M < 0:
        raise ValueError("m_range must be >= 0")
    if 2 * M + 1 > math.floor(P + _INTEGER_TOL * P):
        raise ValueError(
            f"aliasing guard: 2*m_range+1 = {2 * M + 1} exceeds 1/(b dt) = {P:.6g} modulations per grid period"
        )
    return np.arange(-M, M + 1), Pi


def _window_slices(w: WindowSpec, L: GaborLattice, f: SampledSignal, n: np.ndarray):
    """Yield ``(n, lo, hi, values)`` with ``values = w(t_j - n a)`` for ``lo <= j < hi``.

    Outside ``[lo, hi)`` the translate is below its truncation radius.  When
    ``a / dt`` is an integer every translate is a slice of one sampled array.
    """
    R = window_radius(w)
    dt, t0, J = f.dt, f.t0, len(f)
    shift = L.a / dt
    s = int(round(shift))
    if abs(shift - s) <= _INTEGER_TOL * shift and s > 0:
        # w(t0 + (j - n s) dt): sample once on the index range i = j - n s.
        i_lo = int(math.floor((-R - t0) / dt)) - 1
        i_hi = int(math.ceil((R - t0) / dt)) + 2
        base = W.eval_time(w, t0 + dt * np.arange(i_lo, i_hi))
        for nn in n:
            lo, hi = max(0, i_lo + nn * s), min(J, i_hi + nn * s)
            if lo < hi:
                yield int(nn), lo, hi, base[lo - nn * s - i_lo : hi - nn * s - i_lo]
        return
    for nn in n:
        c = nn * L.a
        lo = max(0, int(math.floor((c - R - t0) / dt)) - 1)
        hi = min(J, int(math.ceil((c + R - t0) / dt)) + 2)
        if lo < hi:
            yield int(nn), lo, hi, W.eval_time(w, t0 + dt * np.arange(lo, hi) - c)


def _fold(F: np.ndarray, lo: int, P: int) -> np.ndarray:
    start = lo % P
    buf = np.zeros(math.ceil((start + len(F)) / P) * P, dtype=complex)
    buf[start : start + len(F)] = F
    return buf.reshape(-1, P).sum(axis=0)


def analyze(
    f: SampledSignal,
    w: WindowSpec,
    L: GaborLattice,
    m_range: int | None = None,
    n_range=None,
) -> GaborCoefficients:
    """``c[m, n] = dt * sum_j f(t_j) conj(exp(2 pi i m b t_j) w(t_j - n a))``."""
    m, Pi = _m_indices(L, f.dt, m_range)
    n = default_n_range(f, w, L) if n_range is None else np.asarray(n_range, dtype=int)
    R = window_radius(w)
    if n.size == 0 or n.min() * L.a - R > f.t_end or n.max() * L.a + R < f.t0:
        raise ValueError("signal too short: requested translations miss the sampled domain")
    out = np.zeros((len(m), len(n)), dtype=complex)
    col = {int(nn): j for j, nn in enumerate(n)}
    if Pi is not None:
        phase = np.exp(-2j * np.pi * m * L.b * f.t0)
        for nn, lo, hi, win in _window_slices(w, L, f, n):
            F = f.samples[lo:hi] * np.conj(win)
            out[:, col[nn]] = f.dt * phase * np.fft.fft(_fold(F, lo, Pi))[m % Pi]
    else:
        for nn, lo, hi, win in _window_slices(w, L, f, n):
            E = np.exp(-2j * np.pi * np.outer(m, f.t[lo:hi]) * L.b)
            out[:, col[nn]] = f.dt * E @ (f.samples[lo:hi] * np.conj(win))
    return GaborCoefficients(out, m, n, L)


def synthesize(coeffs: GaborCoefficients, w: WindowSpec, like: SampledSignal) -> SampledSignal:
    """``sum_{m,n} c[m, n] exp(2 pi i m b t) w(t - n a)`` on the grid of ``like``."""
    L = coeffs.lattice
    c = np.asarray(coeffs.values)
    if c.shape != (len(coeffs.m), len(coeffs.n)):
        raise ValueError("coefficient array does not match its index ranges")
    n = np.asarray(coeffs.n, dtype=int)
    _, Pi = _period(L, like.dt)
    out = np.zeros(len(like), dtype=complex)
    col = {int(nn): j for j, nn in enumerate(n)}
    if Pi is not None and len(np.unique(coeffs.m % Pi)) == len(coeffs.m):
        phase = np.exp(2j * np.pi * coeffs.m * L.b * like.t0)
        for nn, lo, hi, win in _window_slices(w, L, like, n):
            C = np.zeros(Pi, dtype=complex)
            C[coeffs.m % Pi] = c[:, col[nn]] * phase
            series = np.fft.ifft(C) * Pi
            out[lo:hi] += series[np.arange(lo, hi) % Pi] * win
    else:
        for nn, lo, hi, win in _window_slices(w, L, like, n):
            E = np.exp(2j * np.pi * np.outer(like.t[lo:hi], coeffs.m) * L.b)
            out[lo:hi] += (E @ c[:, col[nn]]) * win
    return SampledSignal(out, like.t0, like.dt)


def _edge_energy_fraction(f: SampledSignal, frac: float = 0.02) -> float:
    e = np.abs(f.samples) ** 2
    k = max(1, int(frac * len(e)))
    total = e.sum()
    return float((e[:k].sum() + e[-k:].sum()) / total) if total > 0 else 0.0


def _mu_bound(analysis_w: WindowSpec, synthesis_w: WindowSpec, L: GaborLattice) -> float | None:
    if synthesis_w.family is not Family.BSPLINE_DUAL:
        return None
    N = synthesis_w.N
    a, b = W.dual_lattice(N)
    if not (math.isclose(L.a, a, rel_tol=1e-12) and math.isclose(L.b, b, rel_tol=1e-12)):
        return None
    if analysis_w.family is Family.SCALED_BSPLINE and analysis_w.N == N:
        return 0.0
    if analysis_w.family is Family.NORMALIZED_GAUSSIAN and N >= 14:
        return approx_duality_bound(N)
    return None


def reconstruction_error(
    f: SampledSignal,
    analysis_w: WindowSpec,
    synthesis_w: WindowSpec,
    L: GaborLattice,
    m_range: int | None = None,
    signal_id: str = "",
    edge_tol: float = 1e-12,
) -> ReconstructionReport:
    """Relative error ``||f - sum <f, E T g> E T h|| / ||f||`` on a padded grid."""
    norm = f.norm()
    if norm == 0:
        raise ValueError("zero signal: relative reconstruction error is undefined")
    if _edge_energy_fraction(f) > edge_tol:
        raise ValueError("signal is not negligible near the ends of its sampled domain")
    pad = int(math.ceil((window_radius(analysis_w) + window_radius(synthesis_w)) / f.dt)) + 1
    fp = f.padded(pad, pad)
    n = default_n_range(fp, analysis_w, L)
    coeffs = analyze(fp, analysis_w, L, m_range=m_range, n_range=n)
    rec = synthesize(coeffs, synthesis_w, fp)
    err = SampledSignal(fp.samples - rec.samples, fp.t0, fp.dt).norm()
    return ReconstructionReport(
        mu_measured=err / norm,
        mu_bound=_mu_bound(analysis_w, synthesis_w, L),
        lattice=L,
        m_range=len(coeffs.m),
        n_range=len(coeffs.n),
        signal_id=signal_id,
        dt=f.dt,
        norm=norm,
    )


# -- test signals ------------------------------------------------------------


def make_signal(kind: str, dt: float, half_width: float = 12.0, seed: int = 0, width: float = 1.0) -> SampledSignal:
    """Gaussian bump, windowed chirp or seeded random band-limited signal on a
    grid aligned to multiples of ``dt`` and centred at 0."""
    J = int(math.ceil(half_width / dt))
    t = dt * np.arange(-J, J + 1)
    env = np.exp(-0.5 * (t / width) ** 2)
    if kind == "gaussian":
        s = env.astype(complex)
    elif kind == "chirp":
        beta = 0.5 / width**2
        s = env * np.exp(2j * np.pi * beta * t * t)
    elif kind == "random":
        rng = np.random.default_rng(seed)
        freqs = rng.uniform(-1.0, 1.0, size=8) / width
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        s = env * (amps[None, :] * np.exp(2j * np.pi * t[:, None] * freqs[None, :])).sum(axis=1)
    elif kind == "zero":
        s = np.zeros_like(t, dtype=complex)
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    return SampledSignal(s, float(t[0]), dt)


# -- file formats ------------------------------------------------------------


def write_signal_csv(path, f: SampledSignal) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, v in zip(f.t, f.samples):
            w.writerow([f"{t:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def read_signal_csv(path) -> SampledSignal:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        if [h.strip() for h in header] != ["t", "re", "im"]:
            raise ValueError(f"expected header t,re,im, got {header}")
        for row in reader:
            rows.append([float(v) for v in row])
    arr = np.array(rows)
    if arr.shape[0] < 2:
        raise ValueError("a sampled signal needs at least two samples")
    steps = np.diff(arr[:, 0])
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * abs(dt):
        raise ValueError("sample times must be uniformly spaced")
    return SampledSignal(arr[:, 1] + 1j * arr[:, 2], float(arr[0, 0]), dt)


def write_signal_raw(path, f: SampledSignal) -> None:
    """Interleaved ``re, im`` little-endian float64 pairs; t0 and dt are not stored."""
    pairs = np.empty((len(f), 2), dtype="<f8")
    pairs[:, 0] = f.samples.real
    pairs[:, 1] = f.samples.imag
    pairs.tofile(path)


def read_signal_raw(path, t0: float, dt: float) -> SampledSignal:
    pairs = np.fromfile(path, dtype="<f8")
    if pairs.size % 2:
        raise ValueError("raw signal file must hold an even number of float64 values")
    pairs = pairs.reshape(-1, 2)
    return SampledSignal(pairs[:, 0] + 1j * pairs[:, 1], t0, dt)


def write_coefficients_csv(path, coeffs: GaborCoefficients) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "re", "im"])
        for i, m in enumerate(coeffs.m):
            for j, n in enumerate(coeffs.n):
                v = coeffs.values[i, j]
                w.writerow([int(m), int(n), f"{v.real:.17g}", f"{v.imag:.17g}"])


def read_coefficients_csv(path, lattice: GaborLattice) -> GaborCoefficients:
    data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
    m = np.unique(data["m"].astype(int))
    n = np.unique(data["n"].astype(int))
    vals = np.zeros((len(m), len(n)), dtype=complex)
    mi = np.searchsorted(m, data["m"].astype(int))
    ni = np.searchsorted(n, data["n"].astype(int))
    vals[mi, ni] = data["re"] + 1j * data["im"]
    return GaborCoefficients(vals, m, n, lattice)
