"""``gabor-spline`` command line front-end.

Every subcommand writes a CSV whose leading ``# key=value`` lines record all
resolved settings, so identical settings give byte-identical output.  Exit
codes: 0 success, 2 precondition violation, 3 numerical non-certification.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__, gabor, lp
from . import windows as W
from .bounds import (
    GaborLattice,
    NotCertifiedError,
    PreconditionError,
    analytic_estimate,
    analytic_pn_bound,
    cc_bessel_freq,
    cc_bessel_time,
    check_aux_inequality,
    check_lemma_pointwise,
    choose_N,
    require_lemma_order,
)
from .windows import Family, WindowSpec

EXIT_OK, EXIT_PRECONDITION, EXIT_NOT_CERTIFIED = 0, 2, 3
DUALITY_THRESHOLD = 1e-10
EXACT_PAIR_TOLERANCE = 1e-6
THREADS_ENV = "GABOR_SPLINE_THREADS"

WINDOW_ALIASES = {
    "p": Family.RESIDUAL_P,
    "q": Family.TRUNCATED_Q,
    "phi": Family.TRUNCATED_PHI,
    "h": Family.BSPLINE_DUAL,
    "g": Family.SCALED_BSPLINE,
    "gaussian": Family.NORMALIZED_GAUSSIAN,
}

DEFAULTS = {
    "window": None,
    "N": None,
    "a": None,
    "b": None,
    "prop_lattice": None,
    "off_lattice": 1.1,
    "eps": None,
    "N0": 14,
    "grid_step": None,
    "sup_points": 512,
    "quad_points": 4096,
    "seed": 0,
    "signal": "gaussian",
    "signal_file": None,
    "m_range": None,
    "domain": None,
    "p": "1,2,inf",
    "step": 1e-4,
    "out": None,
}


def fmt(v) -> str:
    """17 significant digits for floats; plain text otherwise."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


@dataclass
class Report:
    header: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def render(self) -> str:
        buf = io.StringIO()
        for k, v in self.header.items():
            buf.write(f"# {k}={fmt(v)}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
        return buf.getvalue()


# -- configuration -----------------------------------------------------------


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PreconditionError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.lstrip("-").replace("-", "_")
            if k not in DEFAULTS:
                raise PreconditionError(f"{path}:{lineno}: unknown key {k!r}")
            cfg[k] = v
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _float(cfg, key, required=True):
    v = cfg.get(key)
    if v is None:
        if required:
            raise PreconditionError(f"--{key.replace('_', '-')} is required")
        return None
    try:
        return float(v)
    except ValueError:
        raise PreconditionError(f"--{key.replace('_', '-')} must be a number, got {v!r}") from None


def _int(cfg, key, required=True):
    v = cfg.get(key)
    if v is None:
        if required:
            raise PreconditionError(f"--{key.replace('_', '-')} is required")
        return None
    try:
        f = float(v)
    except ValueError:
        raise PreconditionError(f"--{key.replace('_', '-')} must be an integer, got {v!r}") from None
    if f != int(f):
        raise PreconditionError(f"--{key.replace('_', '-')} must be an integer, got {v!r}")
    return int(f)


def _int_list(cfg, key):
    v = cfg.get(key)
    if v is None:
        raise PreconditionError(f"--{key} is required")
    try:
        return [int(s) for s in str(v).split(",") if s.strip()]
    except ValueError:
        raise PreconditionError(f"--{key} must be a comma-separated list of integers, got {v!r}") from None


def lattice_from(cfg) -> GaborLattice:
    if cfg.get("prop_lattice") is not None:
        return GaborLattice.dual_pair(_int(cfg, "prop_lattice"))
    return GaborLattice(_float(cfg, "a"), _float(cfg, "b"))


def family_from(name: str) -> Family:
    if name is None:
        raise PreconditionError("--window is required")
    key = str(name).strip().lower()
    if key in WINDOW_ALIASES:
        return WINDOW_ALIASES[key]
    try:
        return Family(key)
    except ValueError:
        choices = sorted({f.value for f in Family} | set(WINDOW_ALIASES))
        raise PreconditionError(f"unknown window {name!r}; choose from {', '.join(choices)}") from None


def window_from(cfg) -> WindowSpec:
    fam = family_from(cfg.get("window"))
    if fam is Family.JANSSEN_DUAL:
        L = lattice_from(cfg)
        return W.janssen_dual(L.a, L.b, _float(cfg, "eps"))
    N = _int(cfg, "N", required=fam not in (Family.NORMALIZED_GAUSSIAN, Family.JANSSEN_GAUSSIAN))
    try:
        return WindowSpec(fam, N)
    except ValueError as e:
        raise PreconditionError(str(e)) from None


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise PreconditionError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise PreconditionError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _base_header(cmd, cfg, keys) -> dict:
    h = {"command": cmd, "version": __version__}
    for k in keys:
        h[k] = cfg.get(k)
    return h


# -- subcommands ---------------------------------------------------------------


def cmd_bounds(cfg) -> Report:
    w = window_from(cfg)
    L = lattice_from(cfg)
    sup_points = _int(cfg, "sup_points")
    if w.family is Family.RESIDUAL_P:
        require_lemma_order(w.N)
    domain = cfg.get("domain") or ("freq" if w.family is Family.RESIDUAL_P else "time")
    if domain == "freq":
        numeric = cc_bessel_freq(w, L, sup_points)
    elif domain == "time":
        numeric = cc_bessel_time(w, L, sup_points)
    else:
        raise PreconditionError(f"--domain must be time or freq for bounds, got {domain!r}")
    ests = [numeric]
    try:
        ests.append(analytic_estimate(w, L))
    except PreconditionError:
        pass
    rep = Report(_base_header("bounds", cfg, ["sup_points"]), ["window", "N", "a", "b", "method", "value", "tail_margin"])
    rep.header.update(window=w.family.value, N=w.N, a=L.a, b=L.b, domain=domain)
    for e in ests:
        rep.rows.append([w.family.value, w.N, L.a, L.b, e.method.value, float(e.value), float(e.tail_margin)])
    if len(ests) == 2:
        dominated = ests[0].value <= ests[1].value
        rep.header["numeric_le_analytic"] = dominated
        rep.summary.append(
            f"{ests[0].method.value}={ests[0].value:.6g}  {ests[1].method.value}={ests[1].value:.6g}  "
            f"{'pass' if dominated else 'FAIL'}"
        )
    else:
        rep.summary.append(f"{numeric.method.value}={numeric.value:.6g} (no analytic bound for this window)")
    return rep


def cmd_duality(cfg) -> Report:
    N = _int(cfg, "N")
    if N < 1:
        raise PreconditionError(f"N must be >= 1, got {N}")
    L = GaborLattice.dual_pair(N)
    off = cfg.get("off_lattice_on", False)
    if off:
        L = GaborLattice(L.a, L.b * _float(cfg, "off_lattice"))
    step = _float(cfg, "grid_step", required=False) or L.a / 256
    rep_ = gabor.duality_residual(W.scaled_bspline(N), W.bspline_dual(N), L, step)
    passed = rep_.max_residual < DUALITY_THRESHOLD
    rep = Report(_base_header("duality", cfg, []), ["k", "residual"])
    rep.header.update(N=N, a=L.a, b=L.b, off_lattice=off, grid_step=step, threshold=DUALITY_THRESHOLD,
                      max_residual=rep_.max_residual, **{"pass": passed})
    rep.rows = [[k, v] for k, v in sorted(rep_.per_k_residual.items())]
    rep.summary.append(f"max residual {rep_.max_residual:.3e} over |k| <= {rep_.k_max}: {'pass' if passed else 'fail'}")
    return rep


def _signal(cfg, dt) -> tuple[gabor.SampledSignal, str]:
    if cfg.get("signal_file"):
        path = cfg["signal_file"]
        f = gabor.read_signal_csv(path)
        if not math.isclose(f.dt, dt, rel_tol=1e-9):
            raise PreconditionError(f"signal file step {f.dt} differs from the grid step {dt}")
        return f, os.path.basename(path)
    kind = cfg.get("signal")
    seed = _int(cfg, "seed")
    sid = f"{kind}-seed{seed}" if kind == "random" else kind
    return gabor.make_signal(kind, dt, seed=seed), sid


def cmd_reconstruct(cfg) -> Report:
    N = _int(cfg, "N")
    fam = family_from(cfg.get("window") or "scaled-bspline")
    if fam is Family.NORMALIZED_GAUSSIAN:
        analysis = W.normalized_gaussian()
        require_lemma_order(N)
    elif fam is Family.SCALED_BSPLINE:
        analysis = W.scaled_bspline(N)
    else:
        raise PreconditionError("reconstruct analyses with scaled-bspline or normalized-gaussian")
    L = GaborLattice.dual_pair(N)
    dt = _float(cfg, "grid_step", required=False) or L.a / 256
    if dt > L.a / 16:
        raise PreconditionError(f"--grid-step must be <= a/16 = {L.a / 16}")
    f, sid = _signal(cfg, dt)
    if f.norm() == 0:
        raise PreconditionError("zero signal: the relative reconstruction error is undefined")
    rep_ = gabor.reconstruction_error(f, analysis, W.bspline_dual(N), L, m_range=_int(cfg, "m_range", required=False),
                                      signal_id=sid)
    # The exact pair has bound 0; there the discretisation budget is the threshold.
    threshold = None if rep_.mu_bound is None else (rep_.mu_bound if rep_.mu_bound > 0 else EXACT_PAIR_TOLERANCE)
    passed = None if threshold is None else rep_.mu_measured <= threshold
    rep = Report(_base_header("reconstruct", cfg, ["seed"]),
                 ["signal_id", "window", "N", "a", "b", "dt", "m_range", "n_range", "mu_measured", "mu_bound", "pass"])
    rep.header.update(N=N, a=L.a, b=L.b, grid_step=dt, threshold=threshold)
    rep.rows.append([sid, analysis.family.value, N, L.a, L.b, dt, rep_.m_range, rep_.n_range,
                     rep_.mu_measured, rep_.mu_bound, passed])
    rep.summary.append(f"mu={rep_.mu_measured:.3e} bound={fmt(rep_.mu_bound) or 'n/a'}")
    return rep


def cmd_lemma_check(cfg) -> Report:
    N = require_lemma_order(_int(cfg, "N"))
    step = _float(cfg, "step")
    first, second = check_lemma_pointwise(N, step)
    aux = check_aux_inequality(step)
    rep = Report(_base_header("lemma-check", cfg, ["step"]), ["N", "branch", "points", "violations", "min_slack"])
    rep.header["N"] = N
    for c in (first, second, aux):
        rep.rows.append([N, c.name, c.points, c.violations, c.min_slack])
    ok = all(c.violations == 0 for c in (first, second, aux))
    rep.header["pass"] = ok
    rep.summary.append(f"N={N}: {'all points pass' if ok else 'violations found'}")
    return rep


def cmd_choose_n(cfg) -> Report:
    L = lattice_from(cfg)
    eps = _float(cfg, "eps")
    N0 = _int(cfg, "N0")
    N = choose_N(L, eps, N0)
    analytic = analytic_pn_bound(N, L)
    numeric, path = None, "analytic-chain"
    if cfg.get("numeric_on"):
        numeric = cc_bessel_freq(W.residual_p(N), L, _int(cfg, "sup_points")).value
        path = "numeric-freq-cc"
    passed = analytic < eps and (numeric is None or numeric < eps)
    rep = Report(_base_header("choose-n", cfg, ["sup_points"]),
                 ["a", "b", "eps", "N0", "N", "analytic_bound", "numeric_bound", "check_path", "pass"])
    rep.header.update(a=L.a, b=L.b, eps=eps, N0=N0)
    rep.rows.append([L.a, L.b, eps, N0, N, analytic, numeric, path, passed])
    rep.summary.append(f"N={N} analytic={analytic:.3e} < eps={eps:g}: {'pass' if passed else 'FAIL'}")
    if not passed:
        raise NotCertifiedError(rep.summary[-1])
    return rep


def cmd_converge(cfg) -> Report:
    Ns = _int_list(cfg, "N")
    ps = [lp.parse_exponent(s) for s in str(cfg.get("p")).split(",") if s.strip()]
    domain = cfg.get("domain") or "time"
    quad = _int(cfg, "quad_points")
    jobs = [(N, p) for N in Ns for p in ps]
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        rows = list(pool.map(lambda job: lp.convergence_table([job[0]], [job[1]], domain, quad)[0], jobs))
    rep = Report(_base_header("converge", cfg, ["domain", "quad_points"]), lp.CSV_HEADER)
    rep.header.update(N=",".join(map(str, Ns)), p=",".join(map(str, ps)), domain=domain)
    for r in rows:
        rep.rows.append([r.N, r.p, r.domain, r.distance, r.majorant, r.passed])
    for p in ps:
        d = [r.distance for r in rows if r.p == p]
        mono = all(x > y for x, y in zip(d, d[1:]))
        rep.header[f"decreasing_p{p}"] = mono
    rep.summary.append(f"{len(rows)} rows")
    return rep


COMMANDS = {
    "bounds": cmd_bounds,
    "duality": cmd_duality,
    "reconstruct": cmd_reconstruct,
    "lemma-check": cmd_lemma_check,
    "choose-n": cmd_choose_n,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--window")
    common.add_argument("--N", help="order (a comma-separated list for converge)")
    common.add_argument("--a")
    common.add_argument("--b")
    common.add_argument("--prop-lattice", dest="prop_lattice", metavar="N",
                        help="use a = sqrt(12/N), b = sqrt(N/12)/(2N-1)")
    common.add_argument("--eps")
    common.add_argument("--N0")
    common.add_argument("--grid-step", dest="grid_step")
    common.add_argument("--sup-points", dest="sup_points")
    common.add_argument("--quad-points", dest="quad_points")
    common.add_argument("--seed")
    common.add_argument("--domain", help="time, freq or self")
    common.add_argument("--p", help="exponents, e.g. 1,2,inf")
    common.add_argument("--step", help="grid step for lemma-check")
    common.add_argument("--signal", help="gaussian, chirp, random or zero")
    common.add_argument("--signal-file", dest="signal_file", help="CSV with columns t,re,im")
    common.add_argument("--m-range", dest="m_range")

    parser = argparse.ArgumentParser(prog="gabor-spline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "duality":
            sp.add_argument("--off-lattice", dest="off_lattice", nargs="?", const="1.1", default=None,
                            metavar="FACTOR", help="multiply b by FACTOR (default 1.1) as a negative control")
        if name == "choose-n":
            sp.add_argument("--numeric", action="store_true", help="also evaluate the numeric frequency CC sum at N")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        cfg["off_lattice_on"] = getattr(args, "off_lattice", None) is not None
        cfg["numeric_on"] = bool(getattr(args, "numeric", False))
        rep = COMMANDS[args.command](cfg)
    except PreconditionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NotCertifiedError as e:
        print(f"not certified: {e}", file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    text = rep.render()
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in rep.summary:
        print(line, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
