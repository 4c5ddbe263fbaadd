"""Command-line front end.

Exit codes: 0 success, 1 usage or domain error, 2 frequency not admissible,
3 solver failure. Scalar reports default to JSON, series and sweeps to CSV.
Floats are written with 17 significant digits so every value round-trips.
"""

import argparse
import concurrent.futures
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import discretization as disc
from . import evolution, model, spectra
from .exceptions import DomainError, KGDeltaError, NoContraction, NotAdmissible, SolverFailed, StencilOutOfRange

EXIT_OK, EXIT_USAGE, EXIT_NOT_ADMISSIBLE, EXIT_SOLVER = 0, 1, 2, 3

PHASE_HEADER = ["omega", "beta", "admissible", "n_omega", "slope", "verdict"]
EVOLVE_HEADER = ["t", "energy", "charge", "orbital_dist", "h_norm", "weighted_norm"]
BLOWUP_HEADER = ["t", "v_numeric", "v_analytic", "abs_err"]

_FLOAT_KEYS = {
    "m", "alpha", "gamma", "p", "omega", "omega_min", "omega_max",
    "grid_L", "dt", "t_end", "eps", "t_param",
}
_INT_KEYS = {"steps", "grid_N", "monitor_stride"}
_STR_KEYS = {"mode", "format", "out"}
_DEFAULTS = {"m": 1.0, "alpha": 0.0, "gamma": 0.0, "p": 3.0, "t_param": 1.0, "eps": 0.0, "mode": "Scale"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "value") and isinstance(obj, str):
        return obj.value
    return obj


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = ";".join(_fmt(x) for x in v)
        else:
            out[key] = v
    return out


def _csv_text(header, rows, trailer=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([x if isinstance(x, str) else _fmt(x) for x in row])
    if trailer:
        buf.write(f"# {trailer}\n")
    return buf.getvalue()


def _emit(text, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_report(doc, args):
    doc = _jsonable(doc)
    if (args.format or "json") == "json":
        _emit(json.dumps(doc, indent=2) + "\n", args)
    else:
        flat = _flatten(doc)
        _emit(_csv_text(list(flat), [list(flat.values())]), args)


def _emit_series(header, rows, status, args, extra=None):
    if (args.format or "csv") == "csv":
        trailer = f"status={status}" + "".join(f" {k}={_fmt(v)}" for k, v in (extra or {}).items())
        _emit(_csv_text(header, rows, trailer), args)
    else:
        cols = {h: [r[i] for r in rows] for i, h in enumerate(header)}
        doc = {"status": status, "columns": cols}
        doc.update(extra or {})
        _emit(json.dumps(_jsonable(doc), indent=2) + "\n", args)


def read_config(path):
    """Flat ``key = value`` file; '#' starts a comment, dashes in keys become underscores."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = float(val) if key in _FLOAT_KEYS else int(val) if key in _INT_KEYS else val
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def _merge(args):
    """Fill unset flags from the config file, then from built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, val in cfg.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    for key, val in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    return args


def _params(args):
    return model.validate_params(args.m, args.alpha, args.gamma, args.p)


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _grid(args, spec):
    if args.grid_L is None and args.grid_N is None:
        return disc.grid_for(spec)
    if args.grid_L is None or args.grid_N is None:
        raise UsageError("--grid-L and --grid-N go together")
    return disc.make_grid(args.grid_L, args.grid_N)


def _admissible_or_exit(spec, args):
    if model.admissible(spec):
        return True
    _emit_report({"admissible": False, "omega": spec.omega, "beta": spec.beta}, args)
    return False


def cmd_classify(args):
    _need(args, "omega")
    spec = _params(args).at(args.omega)
    if not _admissible_or_exit(spec, args):
        return EXIT_NOT_ADMISSIBLE
    v = model.classify(spec)
    _emit_report(
        {
            "verdict": v.verdict,
            "n_omega": v.n_omega,
            "slope": v.slope,
            "slope_source": v.slope_source,
            "beta": spec.beta,
            "admissible": True,
            "evidence": v.evidence,
        },
        args,
    )
    return EXIT_OK


def phase_row(params, omega):
    """One phase-diagram row; inadmissible frequencies get empty fields."""
    spec = params.at(omega)
    if not model.admissible(spec):
        return [omega, spec.beta, False, "", "", ""]
    n = model.n_omega(spec)
    try:
        v = model.classify(spec)
    except StencilOutOfRange:
        return [omega, spec.beta, True, n, "", model.Verdict.INCONCLUSIVE.value]
    return [omega, spec.beta, True, n, v.slope, v.verdict.value]


def _threads():
    raw = os.environ.get("KGDELTA_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"KGDELTA_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def phase_rows(params, omega_min, omega_max, steps):
    omegas = np.linspace(omega_min, omega_max, steps + 1)
    with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(lambda w: phase_row(params, float(w)), omegas))


def cmd_phase_diagram(args):
    _need(args, "omega_min", "omega_max", "steps")
    if not (math.isfinite(args.omega_min) and math.isfinite(args.omega_max) and args.omega_min < args.omega_max):
        raise DomainError("omega-min", "need a finite range with --omega-min < --omega-max")
    if args.steps < 1:
        raise DomainError("steps", "must be at least 1")
    rows = phase_rows(_params(args), args.omega_min, args.omega_max, args.steps)
    if (args.format or "csv") == "csv":
        _emit(_csv_text(PHASE_HEADER, rows), args)
    else:
        _emit(json.dumps(_jsonable([dict(zip(PHASE_HEADER, r)) for r in rows]), indent=2) + "\n", args)
    return EXIT_OK


def spectrum_document(grid, spec):
    ph = disc.discrete_profile(grid, spec)
    n_plus, n_minus = spectra.count_negative_Lpm(grid, spec, ph)
    edge = spec.kappa_sq
    lp = disc.build_L_plus(grid, spec, ph)
    lm = disc.build_L_minus(grid, spec, ph)
    below = {}
    for name, op in (("L+", lp), ("L-", lm)):
        k = spectra.inertia_count(op, edge)
        below[name] = list(spectra.eig_bisect(op, k)) if k else []
    kc = spectra.kernel_check(grid, spec, ph)
    sigma1, _, sigma2 = spectra.ess_spectrum_edges(spec)
    return {
        "n_plus": n_plus,
        "n_minus": n_minus,
        "n_radial": spectra.count_negative_radial(grid, spec, ph),
        "eigenvalues_below": below,
        "zero_mode_correlation": {"L-": kc.lminus_correlation, "L+": kc.lplus_correlation},
        "ess_edges": {"sigma1": sigma1, "sigma2": sigma2, "lplus_lminus_edge": edge},
        "grid": {"L": grid.L, "N": grid.N},
    }


def cmd_spectrum(args):
    _need(args, "omega")
    spec = _params(args).at(args.omega)
    if not _admissible_or_exit(spec, args):
        return EXIT_NOT_ADMISSIBLE
    _emit_report(spectrum_document(_grid(args, spec), spec), args)
    return EXIT_OK


def _positive(args, name):
    val = getattr(args, name)
    if not (val is not None and math.isfinite(val) and val > 0):
        raise DomainError(name.replace("_", "-"), f"must be positive, got {val!r}")


def cmd_evolve(args):
    _need(args, "omega", "dt", "t_end")
    _positive(args, "dt")
    _positive(args, "t_end")
    params = _params(args)
    spec = params.at(args.omega)
    if not model.admissible(spec):
        _emit_report({"admissible": False, "omega": spec.omega, "beta": spec.beta}, args)
        return EXIT_NOT_ADMISSIBLE
    grid = _grid(args, spec)
    n_steps = int(round(args.t_end / args.dt))
    stride = args.monitor_stride or max(1, n_steps // 1000)
    cfg = evolution.EvolveConfig(args.dt, args.t_end, grid, monitor_stride=stride)
    try:
        mode = evolution.Perturbation(args.mode)
    except ValueError as exc:
        raise DomainError("mode", f"expected Scale or UnstableDirection, got {args.mode!r}") from exc
    try:
        report = evolution.stability_experiment(spec, args.eps, mode, cfg)
    except SolverFailed as exc:
        series = getattr(exc, "series", None)
        if series is not None:
            _emit_series(EVOLVE_HEADER, _series_rows(series), series.terminated.value, args)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    series = report.series
    _emit_series(
        EVOLVE_HEADER,
        _series_rows(series),
        series.terminated.value,
        args,
        {"max_orbital_dist": report.max_distance},
    )
    return EXIT_OK


def _series_rows(series):
    return [
        [series.times[i], series.energy[i], series.charge[i], series.orbital_dist[i], series.h_norm[i], series.weighted_norm[i]]
        for i in range(series.times.size)
    ]


def cmd_blowup(args):
    if args.dt is None:
        args.dt = 1e-3
    _positive(args, "dt")
    _positive(args, "t_param")
    b = evolution.blowup_ode(args.t_param, args.dt)
    rows = [[t, v, a, e] for t, v, a, e in zip(b.times, b.v_numeric, b.v_analytic, b.abs_err)]
    _emit_series(BLOWUP_HEADER, rows, evolution.Termination.NormExploded.value, args, {"blowup_time": b.blowup_time})
    return EXIT_OK


def cmd_slope(args):
    _need(args, "omega")
    spec = _params(args).at(args.omega)
    if not _admissible_or_exit(spec, args):
        return EXIT_NOT_ADMISSIBLE
    doc = {"omega": spec.omega, "beta": spec.beta, "charge": model.charge(spec)}
    doc["slope"] = model.charge_slope(spec)
    doc["slope_source"] = (model.SlopeSource.CLOSED_FORM_P3 if spec.params.p == 3 else model.SlopeSource.NUMERIC_QUADRATURE)
    if spec.params.p == 3:
        doc["slope_numeric"] = model.charge_slope(spec, "numeric")
    _emit_report(doc, args)
    return EXIT_OK


def _add_common(sub):
    g = sub.add_argument_group("model")
    for name in ("m", "alpha", "gamma", "p", "omega"):
        g.add_argument(f"--{name}", type=float)
    sub.add_argument("--config", metavar="PATH", help="flat key = value file; flags override it")
    sub.add_argument("--out", metavar="PATH")
    sub.add_argument("--format", choices=["json", "csv"])


def build_parser():
    parser = _Parser(prog="kgdelta", description="Standing waves of the nonlinear Klein-Gordon equation with delta potentials.")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (
        ("classify", cmd_classify, "stability verdict for one frequency"),
        ("slope", cmd_slope, "charge and its frequency derivative"),
    ):
        s = subs.add_parser(name, help=helptext)
        _add_common(s)
        s.set_defaults(func=fn)

    s = subs.add_parser("phase-diagram", help="verdicts along a frequency sweep")
    _add_common(s)
    s.add_argument("--omega-min", type=float)
    s.add_argument("--omega-max", type=float)
    s.add_argument("--steps", type=int)
    s.set_defaults(func=cmd_phase_diagram)

    s = subs.add_parser("spectrum", help="negative counts and kernels of the linearization")
    _add_common(s)
    s.add_argument("--grid-L", dest="grid_L", type=float)
    s.add_argument("--grid-N", dest="grid_N", type=int)
    s.set_defaults(func=cmd_spectrum)

    s = subs.add_parser("evolve", help="evolve a perturbed standing wave")
    _add_common(s)
    s.add_argument("--grid-L", dest="grid_L", type=float)
    s.add_argument("--grid-N", dest="grid_N", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--mode", help="Scale or UnstableDirection")
    s.add_argument("--monitor-stride", dest="monitor_stride", type=int)
    s.set_defaults(func=cmd_evolve)

    s = subs.add_parser("blowup", help="homogeneous blow-up ODE against its closed form")
    _add_common(s)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-param", dest="t_param", type=float)
    s.set_defaults(func=cmd_blowup)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _merge(args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: --{exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotAdmissible as exc:
        print(f"not admissible: {exc}", file=sys.stderr)
        return EXIT_NOT_ADMISSIBLE
    except (SolverFailed, NoContraction) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (KGDeltaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
