"""Command line interface: ``spinflip rate | sweep | slope``.

Exit status: 0 success, 2 configuration or usage error, 3 a result did not
meet its convergence criteria.
"""

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import config as cfg
from .errors import ConfigError, ConvergenceError, SpinflipError
from .rate import total_rate
from .stack import FieldPoint
from .sweep import PRESETS, WORKERS_ENV, fit_loglog_slope, format_csv, preset_base, read_csv, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 2, 3


def _echo(scn):
    s, t = scn.stack, scn.transition
    layers = {}
    for name, layer in (("core", s.core), ("coating", s.coating)):
        d = {"outer_radius": layer.outer_radius}
        if layer.resistivity is not None:
            d["resistivity"] = layer.resistivity
        else:
            eps = complex(layer.explicit_rel_permittivity)
            d["rel_permittivity"] = [eps.real, eps.imag]
        mu = complex(layer.rel_permeability)
        d["rel_permeability"] = [mu.real, mu.imag]
        layers[name] = d
    return {
        "wire": {**layers, "atom_distance": scn.distance},
        "transition": {"frequency": t.frequency, "temperature": t.temperature,
                       "angular_factor_S2": t.angular_factor_S2},
        "numerics": asdict(scn.policy),
        "constants": asdict(scn.constants),
    }


def cmd_rate(args):
    scn = cfg.build(cfg.load(args.config))
    try:
        res = total_rate(scn.stack, scn.transition, FieldPoint(scn.distance), scn.policy, scn.constants)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    out = {"input": _echo(scn), "result": asdict(res)}
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        print("# input")
        for section, body in out["input"].items():
            print(f"#   {section}: {json.dumps(body)}")
        for k, v in out["result"].items():
            print(f"{k:20s} {v:.12g}" if isinstance(v, float) else f"{k:20s} {v}")
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def _sweep_setup(args):
    doc = cfg.load(args.config) if args.config else None
    section = dict(doc.get("sweep", {})) if doc else {}
    for key, val in (("preset", args.preset), ("param", args.param), ("from", args.start),
                     ("to", args.stop), ("points", args.points), ("out", args.out),
                     ("overlay", args.overlay)):
        if val is not None:
            section[key] = val
    if args.log:
        section["log"] = True
    preset = section.get("preset")
    if preset and "param" in section:
        raise ConfigError("give either a preset or an explicit parameter, not both", ("sweep",))
    if preset:
        spec = PRESETS[preset]
        base = cfg.build(doc) if doc else preset_base(preset)
    else:
        if doc is None:
            raise ConfigError("an explicit sweep needs --config for the base scenario")
        spec = cfg.sweep_spec(section)
        base = cfg.build(doc)
    workers = args.workers
    if workers is None and doc is not None:
        workers = doc.get("numerics", {}).get("workers")
    return spec, base, workers, section.get("out"), section.get("overlay")


def _write_overlay(src, out):
    with open(src, newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"value_si", "lifetime_s"} <= set(reader.fieldnames or ()):
            raise ConfigError("overlay CSV needs columns value_si and lifetime_s", ("overlay",))
        pts = [(float(r["value_si"]), float(r["lifetime_s"])) for r in reader]
    target = Path(out).with_name(Path(out).stem + "_overlay.csv")
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value_si", "lifetime_s"])
        w.writerows([[f"{v:.12g}", f"{t:.12g}"] for v, t in pts])
    return target


def cmd_sweep(args):
    spec, base, workers, out, overlay = _sweep_setup(args)
    if overlay and not out:
        raise ConfigError("--overlay needs --out")
    rows = run_sweep(spec, base, workers)
    text = format_csv(rows)
    if out:
        Path(out).write_text(text)
        if overlay:
            _write_overlay(overlay, out)
    else:
        sys.stdout.write(text)
    bad = [r for r in rows if not r.converged]
    if bad:
        print(f"warning: {len(bad)} grid point(s) did not converge", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_slope(args):
    rows = read_csv(args.inp)
    fit = fit_loglog_slope(rows, args.start, args.stop, args.param)
    print(f"slope {fit.slope:.6g} +- {fit.stderr:.3g} ({fit.points} points)")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="spinflip", description="Spin-flip lifetimes near a layered wire.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rate", help="evaluate one configuration")
    r.add_argument("--config", required=True, help="JSON configuration file")
    r.add_argument("--json", action="store_true", help="print the result as JSON")
    r.set_defaults(func=cmd_rate)

    s = sub.add_parser("sweep", help="sweep one parameter and write CSV",
                       epilog=f"worker processes: --workers or the {WORKERS_ENV} environment variable")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--config", help="base configuration (required without --preset)")
    s.add_argument("--param", choices=["distance", "skin_depth_2", "outer_radius", "joint_scale"])
    s.add_argument("--from", dest="start", type=float, help="first grid value (SI)")
    s.add_argument("--to", dest="stop", type=float, help="last grid value (SI)")
    s.add_argument("--points", type=int)
    s.add_argument("--log", action="store_true", help="logarithmic grid spacing")
    s.add_argument("--out", help="CSV output path (default: stdout)")
    s.add_argument("--workers", type=int)
    s.add_argument("--overlay", help="measured (value_si, lifetime_s) CSV copied next to --out")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("slope", help="log-log slope of lifetime over a value range")
    f.add_argument("--in", dest="inp", required=True, help="CSV produced by sweep")
    f.add_argument("--from", dest="start", type=float, required=True)
    f.add_argument("--to", dest="stop", type=float, required=True)
    f.add_argument("--param", help="series label when the CSV holds several")
    f.set_defaults(func=cmd_slope)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SpinflipError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
