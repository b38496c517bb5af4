"""Batch command line: sweeps over (f, phi) and export of plot-ready tables.

Ranges are written ``start:stop:count`` (inclusive, evenly spaced); angles
accept ``pi`` in simple arithmetic, e.g. ``0:pi/2:33``.
"""
from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import analytic_ground
from .dynamics import (DEFAULT_SAMPLES, DEFAULT_T, default_cutoff, simulate,
                       spectral_peaks)
from .io import FORMATS, write_table
from .linalg import CUTOFF_CAP, N_TRACK, converged_ground
from .model import ModelParams
from .observables import OBSERVABLES
from .surfaces import PERIOD, grid_map, solve_periodic_schrodinger

log = logging.getLogger("rabipair")

_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
    ast.USub: operator.neg, ast.UAdd: operator.pos,
}


def parse_number(text: str) -> float:
    """Evaluate a number that may use ``pi`` (``pi/4``, ``2pi``, ``-0.5*pi``)."""
    src = re.sub(r"(\d)\s*pi\b", r"\1*pi", text.strip())

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(ast.parse(src, mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def parse_range(text) -> np.ndarray:
    """``start:stop:count`` or a single value, as a float array."""
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([parse_number(parts[0])])
    if len(parts) != 3:
        raise ValueError(f"range {text!r} must look like start:stop:count")
    start, stop = parse_number(parts[0]), parse_number(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise ValueError(f"range count in {text!r} must be an integer") from None
    if count < 1:
        raise ValueError(f"range {text!r} needs a positive count")
    if stop < start or (count > 1 and stop == start):
        raise ValueError(f"range {text!r} must have start < stop")
    return np.linspace(start, stop, count)


def _range_arg(text):
    try:
        return parse_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _number_arg(text):
    try:
        return parse_number(str(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- argument parsing --------------------------------------------------------

def _common(p, phi_default="0"):
    p.add_argument("--f", type=_range_arg, default=parse_range("0"),
                   help="coupling constant or range start:stop:count")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--phi", type=_range_arg, default=None,
                   help=f"relative coordinate pi*x/lambda (default {phi_default})")
    g.add_argument("--x", type=_range_arg, default=None,
                   help="qubit separation in units of the wavelength; phi = pi*x")
    p.add_argument("--delta", type=_number_arg, default=1.0, help="qubit splitting / omega")
    p.add_argument("--omega", type=_number_arg, default=1.0, help="photon energy for output scaling")
    p.add_argument("--nmax", type=int, default=20, help="initial Fock cutoff")
    p.add_argument("--tol", type=float, default=1e-9, help="cutoff convergence tolerance")
    p.add_argument("--ncap", type=int, default=CUTOFF_CAP, help="largest Fock cutoff tried")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--workers", type=int, default=1, help="parallel grid workers")
    p.add_argument("--config", default=None, help="JSON file whose keys mirror the flags")
    p.set_defaults(phi_default=phi_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabipair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surface", help="terms, photon number or entanglement over (f, phi)")
    _common(p)
    p.add_argument("--observable", choices=["term", *OBSERVABLES], default="term")
    p.add_argument("--nu", type=int, default=0, help="state index (0 = ground)")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("transition", help="transition frequency omega*(u_nu2 - u_nu1)")
    _common(p)
    p.add_argument("--nu1", type=int, default=0)
    p.add_argument("--nu", "--nu2", dest="nu2", type=int, default=3)
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("dynamics", help="P(t) of both qubits down and its spectrum")
    _common(p)
    p.add_argument("--nbar", type=_number_arg, default=25.0, help="mean photon number of |alpha>")
    p.add_argument("--T", dest="T", type=_number_arg, default=DEFAULT_T, help="time window (1/omega)")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--spin", type=int, default=4, choices=[1, 2, 3, 4])
    p.add_argument("--peak-threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_dynamics, nmax=None)

    p = sub.add_parser("compare", help="numeric vs closed-form ground energy")
    _common(p, phi_default="0:pi:201")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("relmotion", help="relative-motion levels in one term")
    _common(p)
    p.add_argument("--nu", type=int, default=0)
    p.add_argument("--mu", type=_number_arg, required=False, default=1e4,
                   help="dimensionless mass M lambda^2 omega / pi^2")
    p.add_argument("--grid", type=int, default=512, help="points per pi/2 period")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--wavefunctions", default=None, help="optional path for wavefunction table")
    p.set_defaults(func=cmd_relmotion)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config, if one is given."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        config = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    defaults = {}
    for key, value in config.items():
        dest = key.lstrip("-").replace("-", "_")
        action = next((a for a in sub._actions if a.dest == dest), None)
        if action is None:
            parser.error(f"unknown config key {key!r}")
        if action.type is not None and not isinstance(value, bool):
            try:
                value = action.type(value if not isinstance(value, str) else value)
            except (argparse.ArgumentTypeError, ValueError, TypeError) as exc:
                parser.error(f"config key {key!r}: {exc}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _phi_grid(args) -> np.ndarray:
    if args.x is not None:
        return math.pi * args.x
    if args.phi is not None:
        return args.phi
    return parse_range(args.phi_default)


def _meta(args, **extra) -> dict:
    meta = {
        "tool": "rabipair",
        "version": __version__,
        "command": args.command,
        "delta": args.delta,
        "omega": args.omega,
        "tol": args.tol,
        "n_max_start": args.nmax,
    }
    meta.update(extra)
    return meta


class _Failure:
    def __init__(self, point, error):
        self.point = point
        self.error = error


def _guarded(fn):
    def run(point):
        try:
            return fn(point)
        except Exception as exc:  # reported per grid point
            return _Failure(point, f"{type(exc).__name__}: {exc}")
    return run


def _sweep(args, reduce):
    """Evaluate ``reduce(eig, f, phi)`` on the (f, phi) grid.

    Returns ``(results, failures)`` with results keyed by grid order and
    failed points left out.
    """
    phi = _phi_grid(args)
    points = [(float(f), float(p)) for f in args.f for p in phi]

    def one(point):
        f, p = point
        eig, used = converged_ground(ModelParams(f=f, delta=args.delta, phi=p, n_max=args.nmax),
                                     args.tol, cap=args.ncap)
        return point, used, reduce(eig, f, p)

    out = grid_map(_guarded(one), points, args.workers)
    results = [o for o in out if not isinstance(o, _Failure)]
    failures = [o for o in out if isinstance(o, _Failure)]
    return results, failures


def _finish(args, failures) -> int:
    if not failures:
        return 0
    manifest = [{"f": fl.point[0], "phi": fl.point[1], "error": fl.error} for fl in failures]
    text = json.dumps({"failed": manifest}, indent=1)
    if args.out and args.out != "-":
        path = Path(str(args.out) + ".errors.json")
        path.write_text(text + "\n")
        log.error("%d grid point(s) failed; see %s", len(failures), path)
    else:
        sys.stderr.write(text + "\n")
    return 1


def _max_used(results):
    return max((r[1] for r in results), default=None)


def cmd_surface(args) -> int:
    if not 0 <= args.nu < N_TRACK:
        raise ValueError(f"--nu must be in [0, {N_TRACK - 1}]")
    if args.observable == "term":
        def reduce(eig, f, p):
            return args.omega * float(eig.values[args.nu])
    else:
        fn = OBSERVABLES[args.observable]

        def reduce(eig, f, p):
            return fn(eig, args.nu)[0]

    results, failures = _sweep(args, reduce)
    rows = [(pt[0], pt[1], args.nu, val, used) for pt, used, val in results]
    meta = _meta(args, observable=args.observable, nu=args.nu, n_max_used=_max_used(results))
    write_table(args.out, ["f", "phi", "nu", "value", "n_max"], rows, meta, args.format)
    return _finish(args, failures)


def cmd_transition(args) -> int:
    if not 0 <= args.nu1 <= args.nu2 < N_TRACK:
        raise ValueError(f"need 0 <= nu1 <= nu2 < {N_TRACK}")

    def reduce(eig, f, p):
        return args.omega * float(eig.values[args.nu2] - eig.values[args.nu1])

    results, failures = _sweep(args, reduce)
    rows = [(pt[0], pt[1], args.nu1, args.nu2, val, used) for pt, used, val in results]
    meta = _meta(args, nu1=args.nu1, nu2=args.nu2, n_max_used=_max_used(results))
    write_table(args.out, ["f", "phi", "nu1", "nu2", "value", "n_max"], rows, meta, args.format)
    return _finish(args, failures)


def cmd_compare(args) -> int:
    def reduce(eig, f, p):
        numeric = float(eig.values[0])
        analytic = float(analytic_ground(f, args.delta, p))
        return numeric, analytic

    results, failures = _sweep(args, reduce)
    w = args.omega
    rows = [(pt[0], pt[1], w * num, w * ana, w * abs(num - ana), used)
            for pt, used, (num, ana) in results]
    dev = [r[4] for r in rows]
    meta = _meta(args, n_max_used=_max_used(results),
                 max_deviation=max(dev, default=None),
                 mean_deviation=float(np.mean(dev)) if dev else None)
    write_table(args.out, ["f", "phi", "numeric", "analytic", "deviation", "n_max"], rows, meta,
                args.format)
    return _finish(args, failures)


def _sibling(out, suffix, fmt):
    path = Path(out)
    stem = path.name[: -len(path.suffix)] if path.suffix else path.name
    return path.with_name(f"{stem}_{suffix}.{fmt}")


def cmd_dynamics(args) -> int:
    phi = _phi_grid(args)
    if phi.size != 1:
        raise ValueError("dynamics takes a single --phi value")
    n_max = args.nmax if args.nmax is not None else default_cutoff(args.nbar)
    phi0 = float(phi[0])

    def one(f):
        params = ModelParams(f=float(f), delta=args.delta, phi=phi0, n_max=n_max)
        return simulate(params, args.nbar, T=args.T, n_samples=args.samples, spin=args.spin)

    out = grid_map(_guarded(one), [float(f) for f in args.f], args.workers)
    failures = [_Failure((o.point, phi0), o.error) for o in out if isinstance(o, _Failure)]
    runs = [o for o in out if not isinstance(o, _Failure)]

    meta = _meta(args, phi=phi0, nbar=args.nbar, T=args.T, samples=args.samples,
                 spin=args.spin, n_max_used=n_max)
    summary = []
    for i, run in enumerate(runs):
        f = run.params.f
        peaks = spectral_peaks(run.spectrum, args.peak_threshold)
        summary.append((f, phi0, run.dominant_peak, len(peaks)))
        if args.out and args.out != "-":
            fmeta = dict(meta, f=f)
            write_table(_sibling(args.out, f"f{i:03d}_series", args.format), ["t", "population"],
                        zip(run.series.times.tolist(), run.series.values.tolist()), fmeta,
                        args.format)
            write_table(_sibling(args.out, f"f{i:03d}_spectrum", args.format),
                        ["omega", "magnitude"],
                        zip(run.spectrum.freqs.tolist(), run.spectrum.magnitudes.tolist()),
                        fmeta, args.format)
    write_table(args.out, ["f", "phi", "dominant_peak", "n_peaks"], summary, meta, args.format)
    return _finish(args, failures)


def cmd_relmotion(args) -> int:
    if args.f.size != 1:
        raise ValueError("relmotion takes a single --f value")
    if args.grid < 64:
        raise ValueError("--grid must be >= 64")
    grid = np.arange(args.grid) * (PERIOD / args.grid)
    f = float(args.f[0])
    saved_phi, saved_x = args.phi, args.x
    args.phi, args.x = grid, None
    results, failures = _sweep(args, lambda eig, f_, p: float(eig.values[args.nu]))
    args.phi, args.x = saved_phi, saved_x
    if failures:
        return _finish(args, failures)
    potential = np.array([r[2] for r in results])
    levels, vecs = solve_periodic_schrodinger(potential, args.mu, PERIOD, args.levels)
    w = args.omega
    meta = _meta(args, f=f, nu=args.nu, mu=args.mu, grid=args.grid,
                 potential_min=w * float(potential.min()), n_max_used=_max_used(results))
    write_table(args.out, ["level", "energy"],
                [(m, w * float(e)) for m, e in enumerate(levels)], meta, args.format)
    if args.wavefunctions:
        rows = [(m, float(grid[i]), w * float(potential[i]), float(vecs[i, m]))
                for m in range(vecs.shape[1]) for i in range(grid.size)]
        write_table(args.wavefunctions, ["level", "phi", "potential", "psi"], rows, meta,
                    args.format)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        parser.error(str(exc))
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
