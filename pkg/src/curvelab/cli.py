"""``lab`` command line.

Exit status is 0 when every declared check passes, 1 when a check fails and
2 on usage, configuration or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .config import ConfigError, load_config
from .conformal import MapError
from .curve import CurveError, chord_arc_constant
from .experiments import ExperimentError, build_curve, curve_label, run_experiment, run_selftest
from .regularity import regularity_report
from .report import emit_report, render_table, render_text
from .seminorms import Quadrature, ResolutionError, parse_function, seminorm_triple

log = logging.getLogger("curvelab")


def parse_curve_spec(text: str) -> dict:
    """``family[:key=value,...]`` or a path to a YAML/JSON mapping."""
    path = Path(text)
    if path.suffix in (".yaml", ".yml", ".json") and path.exists():
        data = yaml.safe_load(path.read_text())
        if not isinstance(data, dict) or "family" not in data:
            raise CurveError(f"{path}: curve file must be a mapping with 'family'")
        return data
    family, _, rest = text.partition(":")
    spec: dict = {"family": family}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise CurveError(f"bad curve parameter {item!r}; expected key=value")
        spec[key.strip()] = yaml.safe_load(value)
    if "n" in spec:
        spec["n_samples"] = spec.pop("n")
    return spec


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    report = run_experiment(cfg)
    out = args.out or cfg.output.path
    emit_report(report, out, cfg.output.formats)
    sys.stdout.write(render_text(report))
    log.info("report written to %s", out)
    return 0 if report.passed else 1


def cmd_curve_info(args) -> int:
    spec = parse_curve_spec(args.spec)
    curve = build_curve(spec, args.n)
    K, pair = chord_arc_constant(curve, return_pair=True)
    info = {
        "curve": curve_label(spec), "samples": curve.n, "length": curve.length,
        "diameter": curve.diameter, "max_segment": curve.max_segment,
        "chord_arc_K_hat": K, "K_pair": list(pair),
    }
    sys.stdout.write(yaml.safe_dump(info, sort_keys=False))
    return 0


def cmd_seminorm(args) -> int:
    spec = parse_curve_spec(args.spec)
    curve = build_curve(spec, args.n)
    u = parse_function(args.fn, args.seed or 0)
    quad = Quadrature(n_trunc=args.n_trunc, radial_order=args.radial_order, angular_order=args.angular_order)
    rep = seminorm_triple(curve, u, args.p, engine=args.engine, quad=quad, exterior=not args.no_exterior)
    sys.stdout.write(yaml.safe_dump({"curve": curve_label(spec), **rep.as_dict()}, sort_keys=False))
    return 0


def cmd_regularity(args) -> int:
    spec = parse_curve_spec(args.spec)
    curve = build_curve(spec, args.n)
    rep = regularity_report(curve, curve_label(spec), grid_size=args.grid)
    sys.stdout.write(render_table([rep.row()]))
    return 0


def cmd_selftest(args) -> int:
    report = run_selftest()
    sys.stdout.write(render_text(report))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Boundary seminorm and curve regularity experiments.")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized test functions")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="report directory (overrides the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("curve", help="curve utilities")
    csub = p.add_subparsers(dest="curve_command", required=True)
    q = csub.add_parser("info", help="length, diameter and chord-arc estimate")
    q.add_argument("spec")
    q.add_argument("--n", type=int, default=1024)
    q.set_defaults(func=cmd_curve_info)

    p = sub.add_parser("seminorm", help="the three seminorms of one function")
    p.add_argument("spec")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--fn", default="cos:1", help="cos:n, sin:n, exp:n, pole:w, const:c, trig:deg")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--engine", choices=("auto", "closed_form", "numeric"), default="auto")
    p.add_argument("--n-trunc", type=int, default=256)
    p.add_argument("--radial-order", type=int, default=64)
    p.add_argument("--angular-order", type=int, default=512)
    p.add_argument("--no-exterior", action="store_true")
    p.set_defaults(func=cmd_seminorm)

    p = sub.add_parser("regularity", help="chord-arc, ball and dual regularity estimates")
    p.add_argument("spec")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--grid", type=int, default=33)
    p.set_defaults(func=cmd_regularity)

    p = sub.add_parser("selftest", help="fast oracle checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, CurveError, MapError, ResolutionError, ExperimentError, OSError, ValueError) as e:
        sys.stderr.write(f"lab: error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
