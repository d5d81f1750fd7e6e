"""Command-line front end.

    lvseasons classify CFG.json [--format json|text]
    lvseasons simulate CFG.json --t T --x0 a,b,c [--samples N]
    lvseasons orbit CFG.json --n N --x0 a,b,c
    lvseasons fixed-points CFG.json
    lvseasons example {1,2,3}

Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classify import classify_permanence
from .flow import IntegrationError, IntegratorConfig, time_series, write_series_csv
from .orbit import attractor_detect, iterate_orbit
from .params import EXAMPLE_X0, EXAMPLES, ParameterError, load_params, validate_params
from .poincare import NewtonDivergence, all_fixed_points, fixed_point_report, interior_fixed_points
from .svg import orbit_scatter_svg, time_series_svg

log = logging.getLogger("lvseasons")

EXIT_BAD_ARGS = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


class BadArguments(Exception):
    pass


class ConfigParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadArguments(message)


def _triple(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    if any(not np.isfinite(v) or v < 0 for v in vals):
        raise argparse.ArgumentTypeError("initial condition must be finite and nonnegative")
    return np.array(vals)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--rel-tol", type=float, default=1e-10)
    common.add_argument("--abs-tol", type=float, default=1e-12)
    common.add_argument("--out-dir", type=Path, default=Path("."))
    common.add_argument("--format", choices=("csv", "json", "svg", "text"), default=None,
                        help="restrict emitted artifacts to one format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="lvseasons", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="permanence verdict")
    p.add_argument("config")

    p = sub.add_parser("simulate", parents=[common], help="time series of the switched system")
    p.add_argument("config")
    p.add_argument("--t", type=float, required=True, dest="t_end")
    p.add_argument("--x0", type=_triple, required=True)
    p.add_argument("--samples", type=int, default=1001)

    p = sub.add_parser("orbit", parents=[common], help="iterate the period map")
    p.add_argument("config")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--x0", type=_triple, required=True)

    p = sub.add_parser("fixed-points", parents=[common], help="boundary and interior fixed points")
    p.add_argument("config")

    p = sub.add_parser("example", parents=[common], help="run a built-in worked example end to end")
    p.add_argument("which", type=int, choices=sorted(EXAMPLES))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--periods", type=int, default=30, help="horizon of the time-series plot")
    return parser


def _load(path):
    try:
        return load_params(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc


def _wants(args, fmt) -> bool:
    return args.format is None or args.format == fmt


def _write(path: Path, text: str, written: list):
    path.write_text(text, encoding="utf-8")
    written.append(str(path))


def _classify(params, cfg, args, stem, written):
    verdict = classify_permanence(params, cfg)
    if args.format == "text":
        print(verdict.summary())
    else:
        print(verdict.to_json())
    if args.command != "classify" and _wants(args, "json"):
        _write(args.out_dir / f"{stem}_verdict.json", verdict.to_json() + "\n", written)
    return verdict


def _simulate(params, cfg, args, x0, t_end, samples, stem, written):
    t, X = time_series(params, x0, t_end, samples, cfg)
    if _wants(args, "csv"):
        path = args.out_dir / f"{stem}_series.csv"
        write_series_csv(path, t, X, "t")
        written.append(str(path))
    if _wants(args, "svg"):
        _write(args.out_dir / f"{stem}_series.svg", time_series_svg(t, X, f"{stem}: solution"), written)


def _orbit(params, cfg, args, x0, n, stem, written, known=None):
    rec = iterate_orbit(params, x0, n, cfg)
    if _wants(args, "csv"):
        path = args.out_dir / f"{stem}_orbit.csv"
        write_series_csv(path, np.arange(len(rec.points)), rec.points, "k")
        written.append(str(path))
    if known is None:
        known = all_fixed_points(params, cfg)
    report = attractor_detect(rec, known) if len(rec.points) >= 1000 else None
    if _wants(args, "svg"):
        highlight = [fp.theta for fp in known if np.all(fp.theta > 0)]
        _write(args.out_dir / f"{stem}_orbit.svg",
               orbit_scatter_svg(rec.post_transient(), f"{stem}: orbit of the period map", highlight),
               written)
    if report is not None and _wants(args, "json"):
        _write(args.out_dir / f"{stem}_attractor.json", json.dumps(report.to_dict(), indent=2) + "\n", written)
    return report


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        cfg = IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        written: list = []

        if args.command == "classify":
            _classify(_load(args.config), cfg, args, "classify", written)
        elif args.command == "simulate":
            if args.t_end < 0:
                raise BadArguments("--t must be nonnegative")
            _simulate(_load(args.config), cfg, args, args.x0, args.t_end, args.samples, "simulate", written)
        elif args.command == "orbit":
            if args.n < 1:
                raise BadArguments("--n must be at least 1")
            report = _orbit(_load(args.config), cfg, args, args.x0, args.n, "orbit", written)
            if report is not None:
                print(json.dumps(report.to_dict(), indent=2))
        elif args.command == "fixed-points":
            records = all_fixed_points(_load(args.config), cfg)
            text = json.dumps(fixed_point_report(records), indent=2)
            print(text)
            if _wants(args, "json"):
                _write(args.out_dir / "fixed_points.json", text + "\n", written)
        elif args.command == "example":
            k = args.which
            params = validate_params(EXAMPLES[k])
            stem = f"example{k}"
            verdict = _classify(params, cfg, args, stem, written)
            known = ([] if verdict.portrait is None else verdict.portrait.points())
            known += interior_fixed_points(params, cfg)
            _simulate(params, cfg, args, EXAMPLE_X0[k], args.periods * params.omega,
                      20 * args.periods + 1, stem, written)
            report = _orbit(params, cfg, args, EXAMPLE_X0[k], args.n, stem, written, known)
            if report is not None:
                print(json.dumps({"attractor": report.kind,
                                  "diagnostics": report.curve_diagnostics or report.checks}, indent=2))
        for path in written:
            log.info("wrote %s", path)
        return 0
    except BadArguments as exc:
        _fail("BadArguments", str(exc))
        return EXIT_BAD_ARGS
    except ConfigParseError as exc:
        _fail("ConfigParseError", str(exc))
        return EXIT_CONFIG
    except ParameterError as exc:
        payload = exc.to_dict() if hasattr(exc, "to_dict") else {"error": type(exc).__name__}
        payload["message"] = str(exc)
        print(json.dumps(payload), file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, NewtonDivergence, FloatingPointError) as exc:
        _fail(type(exc).__name__, str(exc))
        return EXIT_NUMERIC


def _fail(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
