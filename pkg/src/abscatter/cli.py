"""Command-line interface: every operation behind one binary.

Subcommands are grouped by module (``config``, ``specfn``,
``resolvent``, ``resonance``, ``geodesic``, ``wave``, ``smooth``,
``audit``, ``reproduce``).  Results go to stdout, or to ``--out`` when
given, in which case a manifest JSON (command, config digest, seed,
version, output list) is written alongside; identical manifests imply
byte-identical outputs.  Reals in CSV output carry 17 significant
digits so values round-trip exactly.

Exit codes: 0 success, 2 validation failure, 3 numerical-budget
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import subprocess
import sys

import numpy as np

VERSION = "0.1.0"
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_USAGE = 64


class ValidationFailure(Exception):
    """Input rejected by a precondition; maps to exit code 2."""


class BudgetFailure(Exception):
    """A numerical budget was exhausted; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(EXIT_USAGE)


def _fmt(x) -> str:
    """17-significant-digit decimal, round-trip exact for doubles."""
    return format(float(x), ".17g")


def _apply_thread_cap():
    cap = os.environ.get("ABSCATTER_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _parse_pair(text, name, n=2, cast=float):
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationFailure(
            "%s must be %d comma-separated values" % (name, n))
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise ValidationFailure("%s: %s" % (name, exc))


def _load_config(path):
    from .geometry import SolenoidConfig
    try:
        return SolenoidConfig.from_json(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ValidationFailure("cannot load config %s: %s" % (path, exc))


def _config_digest(path):
    if path is None:
        return ""
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError:
        return ""


def _emit(args, text, kind="txt"):
    """Write the result to --out plus a manifest, or to stdout."""
    out = getattr(args, "out", None)
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(out, "w") as fh:
        fh.write(text)
    manifest = {
        "command": " ".join(args._argv),
        "config_digest": _config_digest(getattr(args, "config", None)),
        "seed": int(getattr(args, "seed", 0)),
        "tool_version": VERSION,
        "outputs": [out],
    }
    with open(out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------
# subcommand implementations
# ----------------------------------------------------------------------

def _cmd_config_validate(args):
    from . import geometry
    config = _load_config(args.config)
    violations = geometry.validate(config)
    if violations:
        report = "invalid configuration:\n" + "".join(
            "  - %s\n" % v for v in violations)
        sys.stderr.write(report)
        return EXIT_VALIDATION
    fs = config.flux_summary()
    summary = {
        "n_solenoids": config.n,
        "total_flux": fs.beta,
        "flux_center": [float(fs.center[0]), float(fs.center[1])],
        "R0": config.R0,
        "R1": config.R1,
    }
    if config.n >= 2:
        dm, pair = geometry.d_max(config)
        summary["d_max"] = dm
        summary["d_max_pair"] = list(pair)
    _emit(args, _json_text(summary))
    return EXIT_OK


def _cmd_specfn_eval(args):
    from . import specfn
    fns = {
        "j": specfn.bessel_j,
        "h1": specfn.hankel1,
        "i": specfn.bessel_i,
        "k": specfn.bessel_k,
        "j_dz": specfn.bessel_j_dz,
        "h1_dz": specfn.hankel1_dz,
    }
    re, im = _parse_pair(args.z, "--z")
    z = complex(re, im)
    try:
        if args.fn == "q_minus_half":
            val = complex(specfn.legendre_q_minus_half(args.nu, z.real))
        else:
            val = complex(fns[args.fn](args.nu, z, arg=args.arg)
                          if args.fn in ("j", "h1", "j_dz", "h1_dz")
                          else fns[args.fn](args.nu, z))
    except specfn.EvaluationOverflow as exc:
        raise BudgetFailure(str(exc))
    except (ValueError, ArithmeticError) as exc:
        raise ValidationFailure(str(exc))
    _emit(args, _json_text({"fn": args.fn, "nu": args.nu,
                            "z_re": z.real, "z_im": z.imag,
                            "value_re": val.real, "value_im": val.imag}))
    return EXIT_OK


def _load_polar_csv(path, center):
    """CSV r,theta,re,im on a full polar grid -> PolarFunction."""
    from .mode_resolvent import PolarFunction
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1)
    except (OSError, ValueError) as exc:
        raise ValidationFailure("cannot read %s: %s" % (path, exc))
    if data.ndim != 2 or data.shape[1] != 4:
        raise ValidationFailure("%s must have columns r,theta,re,im" % path)
    r = np.unique(data[:, 0])
    n_theta = data.shape[0] // r.size
    if r.size * n_theta != data.shape[0]:
        raise ValidationFailure("%s is not a full r x theta grid" % path)
    order = np.lexsort((data[:, 1], data[:, 0]))
    vals = (data[order, 2] + 1j * data[order, 3]).reshape(r.size, n_theta)
    return PolarFunction(center=np.asarray(center), r=r, values=vals)


def _cmd_resolvent_pair(args):
    from . import mode_resolvent
    from .specfn import LogLambda
    config = _load_config(args.config)
    re, im = _parse_pair(args.lam, "--lambda")
    lam = LogLambda.from_complex(complex(re, im), sheet=args.sheet)
    center = config.flux_summary().center
    f = _load_polar_csv(args.f, center)
    g = _load_polar_csv(args.g, center)
    try:
        res = mode_resolvent.cutoff_pairing(config, lam, f, g,
                                            args.mode_cut)
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    _emit(args, _json_text({"value_re": res.value.real,
                            "value_im": res.value.imag,
                            "tail_bound": res.tail_bound,
                            "J": res.mode_cut}))
    return EXIT_OK


def _cmd_resonance_scan(args):
    from . import resonance
    config = _load_config(args.config)
    window = _parse_pair(args.window, "--window", 4)
    nx, ny = _parse_pair(args.cells.replace("x", ","), "--cells", 2, int)
    system = resonance.build_system(config, mu=args.mu, n_r=args.n_r,
                                    n_theta=args.n_theta,
                                    h_solver=args.h_solver)
    try:
        hits = resonance.resonance_scan(
            system, window, (nx, ny),
            samples_per_edge=args.samples_per_edge)
    except resonance.WindingError as exc:
        raise BudgetFailure(str(exc))
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    lines = ["re_lambda,im_lambda,abs_det,winding_cell,condition"]
    for h in hits:
        z = h.lam.to_complex()
        cell = "-".join(str(c) for c in h.winding_cell)
        lines.append(",".join([_fmt(z.real), _fmt(z.imag),
                               _fmt(abs(h.det_value_at_polish)), cell,
                               _fmt(h.condition_estimate)]))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_resonance_predict(args):
    from . import resonance
    config = _load_config(args.config)
    i, j = _parse_pair(args.pair, "--pair", 2, int)
    lo, hi = _parse_pair(args.re_range, "--re-range")
    if args.points < 2:
        raise ValidationFailure("--points must be >= 2")
    lines = ["re_lambda,center,half_width,pair_i,pair_j"]
    for x in np.geomspace(lo, hi, args.points):
        try:
            band = resonance.predicted_string(config, (i, j), float(x),
                                              epsilon=args.epsilon)
        except (ValueError, IndexError) as exc:
            raise ValidationFailure(str(exc))
        lines.append(",".join([_fmt(x), _fmt(band.center),
                               _fmt(band.half_width), str(i), str(j)]))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_geodesic_enum(args):
    from . import geometry
    config = _load_config(args.config)
    start = _parse_pair(args.start, "--start")
    end = _parse_pair(args.end, "--end")
    try:
        geos = geometry.enumerate_geodesics(config, start, end,
                                            args.max_length,
                                            args.max_vertices)
    except geometry.GeodesicBudgetError as exc:
        raise BudgetFailure(str(exc))
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    _emit(args, geometry.geodesics_to_csv(geos))
    return EXIT_OK


def _cmd_wave_kernel(args):
    from . import wave
    try:
        res = wave.mode_sum_sine_kernel(args.t, args.r1, args.r2,
                                        args.theta, args.alpha,
                                        mode_cut=args.modes)
    except wave.BoundaryBandError as exc:
        raise ValidationFailure(str(exc))
    except wave.TailNotConverged as exc:
        raise BudgetFailure(str(exc))
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    _emit(args, _json_text({"value_re": res.value.real,
                            "value_im": res.value.imag,
                            "tail_bound": res.tail_bound,
                            "regime": res.regime,
                            "mode_cut": res.mode_cut}))
    return EXIT_OK


def _cmd_wave_decay_fit(args):
    from . import wave
    if args.tmin >= args.tmax or args.points < 3:
        raise ValidationFailure("need tmin < tmax and points >= 3")
    t_grid = np.geomspace(args.tmin, args.tmax, args.points)
    try:
        fit = wave.local_decay_fit(args.alpha, args.chi_radius, args.j,
                                   t_grid, mode_cut=args.modes)
    except wave.TailNotConverged as exc:
        raise BudgetFailure(str(exc))
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    nu0 = abs(args.alpha - round(args.alpha))
    _emit(args, _json_text({"slope": fit.slope,
                            "intercept": fit.intercept,
                            "r_squared": fit.r_squared,
                            "n_points": fit.n_points,
                            "expected_slope": -2.0 * nu0 - args.j}))
    return EXIT_OK


def _cmd_smooth_quotient(args):
    from . import smoothing
    k0, k1 = _parse_pair(args.band, "--band", 2, int)
    if k0 > k1:
        raise ValidationFailure("--band needs k0 <= k1")
    lines = ["band,quotient_norm,quotient_sq"]
    for k in range(k0, k1 + 1):
        state = smoothing.band_limited_state(args.j, args.alpha,
                                             2.0 ** k, 2.0 ** (k + 1),
                                             seed=args.seed)
        try:
            res = smoothing.smoothing_quotient(state, args.T,
                                               args.chi_radius)
        except smoothing.ReExpansionError as exc:
            raise BudgetFailure(str(exc))
        lines.append(",".join([str(k), _fmt(res.quotient_norm),
                               _fmt(res.quotient_sq)]))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_audit_region(args):
    from . import audit
    from .specfn import LogLambda
    config = _load_config(args.config) if args.config else None
    if config is not None:
        spec = audit.RegionSpec.from_config(args.n, args.c_delta, config)
    elif args.t_prime is not None:
        spec = audit.RegionSpec(args.n, args.c_delta, args.t_prime)
    else:
        raise ValidationFailure("need --config or --t-prime")
    re0, re1, im0, im1 = _parse_pair(args.grid, "--grid", 4)
    lines = ["re,im,member"]
    for x in np.linspace(re0, re1, args.nx):
        for y in np.linspace(im0, im1, args.ny):
            try:
                member = audit.region_membership(
                    spec, LogLambda.from_complex(complex(x, y)))
            except ValueError as exc:
                raise ValidationFailure(str(exc))
            lines.append(",".join([_fmt(x), _fmt(y), str(int(member))]))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_audit_growth(args):
    from . import audit
    config = _load_config(args.config)
    lo, hi = _parse_pair(args.re_range, "--re-range")
    try:
        fit = audit.resolvent_growth_probe(config, a=args.a, j=args.j,
                                           re_range=(lo, hi),
                                           samples=args.samples,
                                           seed=args.seed)
    except audit.PowerIterationError as exc:
        raise BudgetFailure(str(exc))
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    lines = ["re,im,norm_est"]
    for re, im, nrm in zip(fit.re, fit.im, fit.norm_est):
        lines.append(",".join([_fmt(re), _fmt(im), _fmt(nrm)]))
    _emit(args, "\n".join(lines) + "\n")
    summary = {"power": fit.power,
               "t_fit": fit.t_fit if math.isfinite(fit.t_fit) else None,
               "r_squared": fit.r_squared, "a": fit.a, "j": fit.j}
    sys.stderr.write(_json_text(summary))
    return EXIT_OK


def _cmd_reproduce(args):
    if args.suite != "primary":
        raise ValidationFailure("unknown suite %r" % args.suite)
    test_file = args.tests or _find_acceptance_tests()
    if test_file is None or not os.path.exists(test_file):
        raise ValidationFailure(
            "acceptance tests not found; pass --tests PATH")
    cmd = [sys.executable, "-m", "pytest", test_file, "-v", "-s"]
    if args.fast:
        cmd += ["-m", "not slow"]
    proc = subprocess.run(cmd)
    return EXIT_OK if proc.returncode == 0 else EXIT_BUDGET


def _find_acceptance_tests():
    here = os.path.dirname(os.path.abspath(__file__))
    candidates = [
        os.path.join(os.getcwd(), "tests", "test_acceptance.py"),
        os.path.normpath(os.path.join(here, "..", "..", "tests",
                                      "test_acceptance.py")),
    ]
    for c in candidates:
        if os.path.exists(c):
            return c
    return None


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> _Parser:
    p = _Parser(prog="abscatter",
                description="Scattering toolkit for the planar "
                            "multi-solenoid magnetic Hamiltonian.")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized property suites")
    sub = p.add_subparsers(dest="group", required=True)

    g = sub.add_parser("config", help="configuration handling")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("validate", help="check the standing hypotheses")
    s.add_argument("config", help="configuration JSON path")
    s.add_argument("--out", help="write summary JSON here")
    s.set_defaults(func=_cmd_config_validate)

    g = sub.add_parser("specfn", help="special-function evaluation")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("eval", help="evaluate one special function")
    s.add_argument("--fn", required=True,
                   choices=["j", "h1", "i", "k", "j_dz", "h1_dz",
                            "q_minus_half"])
    s.add_argument("--nu", type=float, required=True, help="order")
    s.add_argument("--z", required=True, help="argument as re,im")
    s.add_argument("--arg", type=float, default=None,
                   help="unwound argument of z (sheet tracking)")
    s.add_argument("--out", help="write result JSON here")
    s.set_defaults(func=_cmd_specfn_eval)

    g = sub.add_parser("resolvent", help="mode-resolvent operations")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("pair", help="cutoff pairing <R(lambda) F, G>")
    s.add_argument("--config", required=True)
    s.add_argument("--lambda", dest="lam", required=True,
                   help="spectral parameter as re,im")
    s.add_argument("--sheet", type=int, default=0)
    s.add_argument("--f", required=True, help="CSV r,theta,re,im")
    s.add_argument("--g", required=True, help="CSV r,theta,re,im")
    s.add_argument("--mode-cut", type=int, default=40)
    s.add_argument("--out", help="write result JSON here")
    s.set_defaults(func=_cmd_resolvent_pair)

    g = sub.add_parser("resonance", help="determinant scan and predictor")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("scan", help="argument-principle resonance scan")
    s.add_argument("--config", required=True)
    s.add_argument("--window", required=True, help="re0,re1,im0,im1")
    s.add_argument("--cells", required=True, help="NxM subdivision")
    s.add_argument("--mu", type=float, default=5.0)
    s.add_argument("--n-r", type=int, default=64)
    s.add_argument("--n-theta", type=int, default=128)
    s.add_argument("--h-solver", type=float, default=0.05)
    s.add_argument("--samples-per-edge", type=int, default=12)
    s.add_argument("--out", help="write hits CSV here")
    s.set_defaults(func=_cmd_resonance_scan)
    s = gs.add_parser("predict", help="predicted string band")
    s.add_argument("--config", required=True)
    s.add_argument("--pair", required=True, help="solenoid indices i,j")
    s.add_argument("--re-range", required=True, help="lo,hi")
    s.add_argument("--points", type=int, default=20)
    s.add_argument("--epsilon", type=float, default=0.05)
    s.add_argument("--out", help="write predictor CSV here")
    s.set_defaults(func=_cmd_resonance_predict)

    g = sub.add_parser("geodesic", help="diffractive geodesics")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("enum", help="enumerate diffractive geodesics")
    s.add_argument("--config", required=True)
    s.add_argument("--start", required=True, help="x,y")
    s.add_argument("--end", required=True, help="x,y")
    s.add_argument("--max-length", type=float, required=True)
    s.add_argument("--max-vertices", type=int, required=True)
    s.add_argument("--out", help="write geodesic CSV here")
    s.set_defaults(func=_cmd_geodesic_enum)

    g = sub.add_parser("wave", help="single-solenoid wave kernel")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("kernel", help="sine-kernel mode sum")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--r1", type=float, required=True)
    s.add_argument("--r2", type=float, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--modes", type=int, default=12)
    s.add_argument("--out", help="write result JSON here")
    s.set_defaults(func=_cmd_wave_kernel)
    s = gs.add_parser("decay-fit", help="local decay exponent fit")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--tmin", type=float, required=True)
    s.add_argument("--tmax", type=float, required=True)
    s.add_argument("--points", type=int, default=12)
    s.add_argument("--chi-radius", type=float, default=1.0)
    s.add_argument("--modes", type=int, default=10)
    s.add_argument("--out", help="write fit JSON here")
    s.set_defaults(func=_cmd_wave_decay_fit)

    g = sub.add_parser("smooth", help="local smoothing quotients")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("quotient", help="dyadic-band smoothing quotients")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--chi", dest="chi_radius", type=float, required=True)
    s.add_argument("--band", required=True, help="dyadic range k0,k1")
    s.add_argument("--j", type=int, default=0, help="angular mode")
    s.add_argument("--out", help="write quotient CSV here")
    s.set_defaults(func=_cmd_smooth_quotient)

    g = sub.add_parser("audit", help="estimate-shape audits")
    gs = g.add_subparsers(dest="action", required=True)
    s = gs.add_parser("region", help="log-region membership grid")
    s.add_argument("--config", default=None)
    s.add_argument("--n", type=int, required=True, help="region order N")
    s.add_argument("--c-delta", type=float, default=1.0)
    s.add_argument("--t-prime", type=float, default=None,
                   help="override T' instead of deriving from config")
    s.add_argument("--grid", required=True, help="re0,re1,im0,im1")
    s.add_argument("--nx", type=int, default=20)
    s.add_argument("--ny", type=int, default=20)
    s.add_argument("--out", help="write membership CSV here")
    s.set_defaults(func=_cmd_audit_region)
    s = gs.add_parser("growth", help="cutoff resolvent growth probe")
    s.add_argument("--config", required=True,
                   help="single-solenoid configuration JSON")
    s.add_argument("--a", type=float, default=0.0,
                   help="line Im lambda = -a log Re lambda")
    s.add_argument("--j", type=int, default=0)
    s.add_argument("--re-range", default="8,40", help="lo,hi")
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--out", help="write norm CSV here")
    s.set_defaults(func=_cmd_audit_growth)

    s = sub.add_parser("reproduce", help="run the acceptance suite")
    s.add_argument("--suite", default="primary")
    s.add_argument("--fast", action="store_true",
                   help="skip the long-running scan criteria")
    s.add_argument("--tests", default=None,
                   help="path to the acceptance test file")
    s.set_defaults(func=_cmd_reproduce)
    return p


def main(argv=None) -> int:
    _apply_thread_cap()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = ["abscatter"] + argv
    try:
        return args.func(args)
    except ValidationFailure as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_VALIDATION
    except BudgetFailure as exc:
        sys.stderr.write("budget exceeded: %s\n" % exc)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
