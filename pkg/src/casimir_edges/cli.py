"""Command-line front end.

Subcommands ``overlap``, ``tilt`` and ``thermal`` write a curve as CSV or JSON;
``point`` evaluates a single configuration and prints a JSON record.

Exit codes: 0 success, 1 fatal error, 2 some rows failed, 64 usage error,
65 a physical invariant was violated.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict

import numpy as np
import scipy

from . import __version__
from .geometry import GeometryError, HalfPlaneVsPlaneConfig, TruncationSpec
from .numerics import QuadratureSpec
from .observables import CurveRow, CurveTable, c_of_theta, overlap_curve, overlap_energy, tilt_curve
from .parabolic import DEFAULT_QUAD
from .thermal import ThermalConfig, em_free_energy_closed, matsubara_free_energy

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 64, 65
CSV_MAGIC = "# casimir-edges v1"
CSV_COLUMNS = "abscissa,energy,error,method,converged"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _engine_flags(p):
    p.add_argument("--nu-max", type=int, default=TruncationSpec.nu_max,
                   help="base parabolic channel cutoff (default %(default)s)")
    p.add_argument("--convergence-tol", type=float, default=TruncationSpec.convergence_tol)
    p.add_argument("--rel-tol", type=float, default=DEFAULT_QUAD.rel_tol,
                   help="relative tolerance of the spectral integral")


def _output_flags(p):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="casimir-edges", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("overlap", help="energy of two parallel half-planes versus d_x/d_y")
    p.add_argument("--dy", type=float, default=1.0)
    p.add_argument("--dx-min", type=float, default=-2.0, help="smallest d_x/d_y")
    p.add_argument("--dx-max", type=float, default=6.0, help="largest d_x/d_y")
    p.add_argument("--steps", type=int, default=33)
    p.add_argument("--method", default="exact", help="exact | reflection:N | pfa")
    _engine_flags(p)
    _output_flags(p)

    p = sub.add_parser("tilt", help="c(theta) for a half-plane facing a plane")
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=1.5)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--method", default="two-reflection", help="exact | two-reflection | reflection:1")
    _engine_flags(p)
    _output_flags(p)

    p = sub.add_parser("thermal", help="first-reflection free energy versus d/lambda_T")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--ratio-min", type=float, default=0.05)
    p.add_argument("--ratio-max", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--channel", choices=("em", "D", "N"), default="em",
                   help="em uses the closed form; D and N sum Matsubara terms directly")
    _output_flags(p)

    p = sub.add_parser("point", help="single configuration as a JSON record")
    geo = p.add_subparsers(dest="geometry", required=True, parser_class=_Parser)
    g = geo.add_parser("overlap", help="two parallel half-planes")
    g.add_argument("--dx", type=float, required=True)
    g.add_argument("--dy", type=float, required=True)
    g.add_argument("--method", default="exact", help="exact | reflection:N | pfa | closed-form")
    _engine_flags(g)
    g.add_argument("--out")
    g = geo.add_parser("tilt", help="half-plane facing a plane")
    g.add_argument("--theta", type=float, required=True)
    g.add_argument("--method", default="two-reflection", help="exact | two-reflection | reflection:1")
    _engine_flags(g)
    g.add_argument("--out")
    return parser


def _specs(args):
    if args.nu_max < 2:
        raise UsageError("--nu-max must be >= 2")
    if not args.convergence_tol > 0 or not args.rel_tol > 0:
        raise UsageError("tolerances must be positive")
    trunc = TruncationSpec(nu_max=args.nu_max, convergence_tol=args.convergence_tol)
    quad = QuadratureSpec(rel_tol=args.rel_tol, abs_tol=DEFAULT_QUAD.abs_tol,
                          max_refinements=DEFAULT_QUAD.max_refinements, map=DEFAULT_QUAD.map)
    return trunc, quad


def _grid(lo, hi, steps):
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    if steps == 1:
        return [lo]
    if not hi > lo:
        raise UsageError("range maximum must exceed minimum")
    return np.linspace(lo, hi, steps).tolist()


def _manifest(argv, args, started, table=None, trunc=None, quad=None):
    return {
        "tool": "casimir-edges",
        "format_version": 1,
        "argv": list(argv),
        "flags": {k: v for k, v in vars(args).items()},
        "versions": {"casimir_edges": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": sys.version.split()[0]},
        "truncation": trunc.as_dict() if trunc else None,
        "quadrature": asdict(quad) if quad else None,
        "wall_time_s": round(time.perf_counter() - started, 6),
        "row_converged": [r.converged for r in table.rows] if table else None,
        "row_failures": [{"abscissa": r.abscissa, "message": r.message}
                         for r in table.failures] if table else None,
    }


def _fmt(v):
    return "nan" if isinstance(v, float) and math.isnan(v) else f"{v:.12g}"


def format_csv(table: CurveTable) -> str:
    lines = [CSV_MAGIC, CSV_COLUMNS]
    for r in table.rows:
        lines.append(",".join([_fmt(r.abscissa), _fmt(r.energy), _fmt(r.error), r.method,
                               "true" if r.converged else "false"]))
    return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_table(table, args, manifest):
    if args.format == "json":
        rows = [{"abscissa": r.abscissa, "energy": r.energy, "error": r.error,
                 "method": r.method, "converged": r.converged, "message": r.message}
                for r in table.rows]
        _emit(_dump({"manifest": manifest, "x_label": table.x_label,
                     "y_label": table.y_label, "rows": rows}), args.out)
    else:
        _emit(format_csv(table), args.out)
        if args.out:
            _emit(_dump(manifest), args.out + ".manifest.json")
    return EXIT_PARTIAL if table.failures else EXIT_OK


def _thermal_table(args):
    cfg = HalfPlaneVsPlaneConfig(args.d, args.theta)
    if not cfg.theta < math.pi / 2:
        raise GeometryError("0 <= theta < pi/2", f"got theta={args.theta}")
    if not args.ratio_min > 0:
        raise GeometryError("ratio > 0", f"got ratio-min={args.ratio_min}")
    rows = []
    for x in _grid(args.ratio_min, args.ratio_max, args.steps):
        if args.channel == "em":
            rows.append(CurveRow(x, em_free_energy_closed(cfg, ThermalConfig(x)), 0.0,
                                 "closed-form", True))
        else:
            res = matsubara_free_energy(cfg, ThermalConfig(x), args.channel)
            rows.append(CurveRow(x, res.value, 0.0, "matsubara", res.converged))
    return CurveTable(tuple(rows), "d/lambda_T", "F/(hbar c L)")


def _run(argv) -> int:
    started = time.perf_counter()
    args = build_parser().parse_args(argv)
    trunc = quad = None
    if args.command == "overlap":
        if not args.dy > 0:
            raise GeometryError("d_y > 0", f"got dy={args.dy}")
        trunc, quad = _specs(args)
        table = overlap_curve(args.dy, _grid(args.dx_min, args.dx_max, args.steps),
                              args.method, trunc, quad)
    elif args.command == "tilt":
        trunc, quad = _specs(args)
        lo, hi = args.theta_min, args.theta_max
        if not (0.0 <= lo and hi <= math.pi / 2):
            raise GeometryError("0 <= theta <= pi/2", f"got [{lo}, {hi}]")
        table = tilt_curve(_grid(lo, hi, args.steps), args.method, trunc, quad)
    elif args.command == "thermal":
        table = _thermal_table(args)
    else:
        trunc, quad = _specs(args)
        if args.geometry == "overlap":
            res = overlap_energy(args.dx, args.dy, args.method, trunc, quad)
            record = {"geometry": "overlap", "d_x": args.dx, "d_y": args.dy,
                      "result": res.as_dict()}
            converged = res.converged
        else:
            est = c_of_theta(args.theta, args.method, trunc, quad)
            record = {"geometry": "tilt", "theta": args.theta,
                      "result": {"c_theta": est.value, "error_estimate": est.error_estimate,
                                 "method": est.method, "converged": est.converged}}
            converged = est.converged
        record["manifest"] = _manifest(argv, args, started, None, trunc, quad)
        _emit(_dump(record), args.out)
        return EXIT_OK if converged else EXIT_PARTIAL
    return _write_table(table, args, _manifest(argv, args, started, table, trunc, quad))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return _run(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except GeometryError as exc:
        print(f"casimir-edges: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - the CLI reports every fatal error as exit 1
        print(f"casimir-edges: fatal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
