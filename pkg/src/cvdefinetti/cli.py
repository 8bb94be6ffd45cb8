"""Command-line front end.

Every command prints a one-line JSON run header before its results. Exit
codes: 0 success, 1 invalid parameters, 2 numerical failure (truncation,
duality gap, failed certification).
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, projectors, report, simulation
from .errors import (InvalidParameterError, NumericalConsistencyError, SpectralRangeError,
                     TruncationError)
from .fock import GaussianParams

OUTPUT_DIR_ENV = "CVDEFINETTI_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

_MATCHED = "matched"

log = logging.getLogger("cvdefinetti")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def real(text: str) -> float:
    """Float flag; accepts scientific notation."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def integer(text: str) -> int:
    """Integer flag; accepts ``2e7`` style input when the value is integral."""
    v = real(text)
    if not float(v).is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def _out_path(name: str | None, default: str) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    p = Path(name) if name else Path(default)
    return p if p.is_absolute() else base / p


def _header(args, params: dict) -> None:
    hdr = {"command": args.command, "params": params, "seed": getattr(args, "seed", None),
           "version": __version__}
    print(report.dumps(hdr))


def _parse_grid(text: str) -> list[float]:
    """``a, b, c`` list or ``lo:hi:count`` linear grid."""
    text = text.strip()
    if ":" in text:
        lo, hi, count = text.split(":")
        return [float(v) for v in np.linspace(real(lo), real(hi), integer(count))]
    return [real(t) for t in text.split(",") if t.strip()]


def load_config(path) -> tuple[dict, dict]:
    """Read ``[params]`` base values and a ``[sweep]`` grid over one or two parameters."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise InvalidParameterError(f"cannot read config file {path}")
    base = {k: real(v) for k, v in cp["params"].items()} if cp.has_section("params") else {}
    sweep = {k: _parse_grid(v) for k, v in cp["sweep"].items()} if cp.has_section("sweep") else {}
    if len(sweep) > 2:
        raise InvalidParameterError("a sweep may vary at most two parameters")
    return base, sweep


def _grid_points(args, names, ints=()) -> list[dict]:
    base, sweep = ({}, {})
    if getattr(args, "config", None):
        base, sweep = load_config(args.config)
    point = {}
    for name in names:
        val = getattr(args, name, None)
        point[name] = val if val is not None else base.get(name)
    unknown = set(sweep) - set(names)
    if unknown:
        raise InvalidParameterError(f"cannot sweep unknown parameters {sorted(unknown)}")
    keys = list(sweep)
    points = []
    for combo in itertools.product(*(sweep[k] for k in keys)):
        p = dict(point, **dict(zip(keys, combo)))
        missing = [k for k in names if p[k] is None]
        if missing:
            raise InvalidParameterError(f"missing parameters: {', '.join(missing)}")
        for k in ints:
            if not float(p[k]).is_integer():
                raise InvalidParameterError(f"{k} must be an integer, got {p[k]}")
            p[k] = int(p[k])
        points.append(p)
    return points


def cmd_threshold(args) -> int:
    points = _grid_points(args, ["k", "n", "q", "r"], ints=("k", "n"))
    _header(args, {"points": points} if len(points) > 1 else points[0])
    if len(points) > 1:
        rows = [report.sweep_row(**p) for p in points]
        path = _out_path(args.out, "threshold_sweep.csv")
        report.write_csv(rows, path, report.SWEEP_HEADER)
        print(f"wrote {len(rows)} rows to {path}")
        return EXIT_OK
    p = points[0]
    n0 = bounds.closed_form_threshold(**p)
    result = {"n0_closed": n0, "n0_numeric": bounds.solve_min_n0(**p),
              "chain_ratio": bounds.chain_ratio(n0, **p),
              "symmetric_baseline": bounds.symmetric_baseline(p["k"], p["n"])}
    for key, val in result.items():
        print(f"{key} = {val:.6g}")
    if args.out:
        report.write_json(result, _out_path(args.out, "threshold.json"))
    return EXIT_OK


def cmd_bounds(args) -> int:
    proto = bounds.ProtocolParams(k=args.k, n=args.n, q=args.q, r=args.r, n0=args.n0)
    povm = None
    if args.dim is not None:
        povm = projectors.build_povm_set(proto.q, proto.r, proto.n0, args.dim)
    _header(args, {"k": args.k, "n": args.n, "q": args.q, "r": args.r, "n0": proto.n0,
                   "dim": args.dim})
    rep = bounds.bound_report(proto, povm)
    print(report.dumps(rep.to_dict()))
    if args.out:
        report.write_json(rep.to_dict(), _out_path(args.out, "bounds.json"))
    return EXIT_OK


def cmd_gamma(args) -> int:
    dim = args.dim or projectors.headroom_dim(args.n0, args.r)
    _header(args, {"n0": args.n0, "r": args.r, "q": args.q, "delta": args.delta, "dim": dim})
    povm = projectors.build_povm_set(args.q, args.r, args.n0, dim)
    res = bounds.solve_overlap(povm.U1, povm.V1, args.delta, tol=args.tol,
                               lam_hi=4 / min(args.q, 1 - args.q))
    out = {"gamma_numeric": res.primal, "dual": res.dual, "gap": res.gap, "lambda": res.lam,
           "feasible": res.feasible,
           "convexity_violation": bounds.convexity_violation(res.evaluations),
           "gamma_upper_bound": bounds.gamma_upper_bound(args.delta, args.n0, args.r, args.q)}
    print(report.dumps(out))
    if res.gap > args.tol:
        print(f"duality gap {res.gap:.2e} exceeds {args.tol:.1e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_verify_operators(args) -> int:
    _header(args, {"n0": args.n0, "r": args.r, "q": args.q, "dim": args.dim, "tol": args.tol})
    records = projectors.certify_chain(args.q, args.r, args.n0, args.dim, tol=args.tol)
    ok = all(rec["pass"] for rec in records if not rec["supplementary"])
    bundle = {"records": records, "all_pass": ok}
    print(report.dumps(bundle))
    if args.out:
        report.write_json(bundle, _out_path(args.out, "certification.json"))
    if not ok:
        failed = [rec["inequality_id"] for rec in records
                  if not rec["pass"] and not rec["supplementary"]]
        print(f"certification failed for steps {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.mode == "lemma1":
        if args.k is None or args.n is None:
            raise InvalidParameterError("lemma1 mode needs --k and --n")
        _header(args, {"k": args.k, "n": args.n, "pU": args.pu, "pV": args.pv,
                       "delta": args.delta, "trials": args.trials})
        rep = simulation.lemma1_mc_check(args.k, args.n, args.pu, args.pv, args.delta,
                                         args.trials, args.seed)
        print(report.dumps(rep))
        return EXIT_OK

    names = ["k", "n", "q", "r", "n0", "source_r", "alpha_re", "alpha_im", "excess"]
    points = _grid_points(args, names, ints=("k", "n"))
    for p in points:
        # unmatched source squeezing defaults to the protocol value
        if p["source_r"] == _MATCHED:
            p["source_r"] = p["r"]
    _header(args, {"points": points} if len(points) > 1 else points[0])
    rows = []
    for p in points:
        proto = bounds.ProtocolParams(k=p["k"], n=p["n"], q=p["q"], r=p["r"], n0=p["n0"])
        src_r = p["source_r"]
        kind = "iid_with_excess_noise" if p["excess"] > 0 else "iid_squeezed_coherent"
        src = simulation.SourceModel(kind, GaussianParams(p["alpha_re"], p["alpha_im"], 0.0, src_r),
                                     p["excess"])
        rec = simulation.run_verification(proto, src, args.trials, args.seed, args.streams)
        rows.append(dict(p, source_r=src_r, trials=rec.trials, pass_count=rec.pass_count,
                         pass_prob_mc=rec.pass_prob_mc,
                         pass_prob_analytic=rec.pass_prob_analytic,
                         ci_lo=rec.wilson_ci_95[0], ci_hi=rec.wilson_ci_95[1]))
        if len(points) == 1:
            print(report.dumps(rec.to_dict()))
    if len(points) > 1 or args.out:
        path = _out_path(args.out, "simulate.csv")
        report.write_csv(rows, path)
        print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_figures(args) -> int:
    _header(args, {"preset": args.preset, "grid_size": args.grid_size})
    rows = report.figure_rows(args.preset, args.grid_size)
    path = _out_path(args.out, f"{args.preset}.csv")
    report.write_csv(rows, path, report.FIGURE_HEADER)
    print(f"wrote {len(rows)} rows to {path}")
    if args.svg:
        svg = path.with_suffix(".svg")
        xlabel = "r" if args.preset == "fig3a" else "q"
        report.write_svg([row["sweep_var"] for row in rows],
                         {name: [row[name] for row in rows] for name in report.FIGURE_HEADER[1:]},
                         svg, xlabel=xlabel, ylabel="n0")
        print(f"wrote {svg}")
    return EXIT_OK


def cmd_regions(args) -> int:
    _header(args, {"n0": args.n0, "r": args.r, "samples": args.samples})
    rows = report.region_curves(args.n0, args.r, args.samples)
    path = _out_path(args.out, "regions.csv")
    report.write_csv(rows, path, ["curve", "x", "y"])
    print(f"wrote {len(rows)} rows to {path}")
    if args.svg:
        svg = path.with_suffix(".svg")
        # one series per curve needs a shared x axis; plot y against sample index
        series = {c: [row["y"] for row in rows if row["curve"] == c] for c in ("rectangle", "ellipse")}
        m = min(len(v) for v in series.values())
        report.write_svg(range(m), {c: v[:m] for c, v in series.items()}, svg,
                         xlabel="sample", ylabel="y")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cvdefinetti", description=__doc__.splitlines()[0],
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    s = sub.add_parser("threshold", help="energy thresholds n0", formatter_class=fmt)
    s.add_argument("--k", type=integer, help="verified subsystems")
    s.add_argument("--n", type=integer, help="retained subsystems")
    s.add_argument("--q", type=real, help="probability of measuring X")
    s.add_argument("--r", type=real, default=None, help="squeezing (0 if unset)")
    s.add_argument("--config", help="INI file with [params] and [sweep] sections")
    s.add_argument("--out", help=f"output path (relative to ${OUTPUT_DIR_ENV})")
    s.set_defaults(func=cmd_threshold, _defaults={"r": 0.0})

    s = sub.add_parser("bounds", help="all scalar bounds for one protocol", formatter_class=fmt)
    s.add_argument("--k", type=integer, required=True)
    s.add_argument("--n", type=integer, required=True)
    s.add_argument("--q", type=real, required=True)
    s.add_argument("--r", type=real, default=0.0)
    s.add_argument("--n0", type=real, default=None, help="threshold (closed form if unset)")
    s.add_argument("--dim", type=integer, default=None,
                   help="Fock cutoff; when set, gamma is also solved numerically")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("gamma", help="numerical complementary overlap", formatter_class=fmt)
    s.add_argument("--n0", type=real, required=True)
    s.add_argument("--r", type=real, default=0.0)
    s.add_argument("--q", type=real, default=0.5)
    s.add_argument("--delta", type=real, required=True)
    s.add_argument("--dim", type=integer, default=None, help="cutoff (minimal headroom if unset)")
    s.add_argument("--tol", type=real, default=1e-7)
    s.set_defaults(func=cmd_gamma)

    s = sub.add_parser("verify-operators", help="certify the operator chain",
                       formatter_class=fmt)
    s.add_argument("--n0", type=real, required=True)
    s.add_argument("--r", type=real, default=0.0)
    s.add_argument("--q", type=real, default=0.5)
    s.add_argument("--dim", type=integer, required=True)
    s.add_argument("--tol", type=real, default=projectors.CHAIN_TOL)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_operators)

    s = sub.add_parser("simulate", help="Monte Carlo of the verification step",
                       formatter_class=fmt)
    s.add_argument("mode", nargs="?", choices=["verification", "lemma1"], default="verification")
    s.add_argument("--k", type=integer, default=None)
    s.add_argument("--n", type=integer, default=None)
    s.add_argument("--q", type=real, default=None)
    s.add_argument("--r", type=real, default=None, help="protocol squeezing (0 if unset)")
    s.add_argument("--n0", type=real, default=None)
    s.add_argument("--source-r", type=real, default=None,
                   help="source squeezing (matches --r if unset)")
    s.add_argument("--alpha-re", type=real, default=None, help="source displacement (0 if unset)")
    s.add_argument("--alpha-im", type=real, default=None, help="(0 if unset)")
    s.add_argument("--excess", type=real, default=None, help="excess noise variance (0 if unset)")
    s.add_argument("--pu", type=real, default=0.02, help="lemma1 mode: per-copy U1 probability")
    s.add_argument("--pv", type=real, default=0.02, help="lemma1 mode: per-copy V1 probability")
    s.add_argument("--delta", type=real, default=0.3, help="lemma1 mode: deviation")
    s.add_argument("--trials", type=integer, default=100000)
    s.add_argument("--seed", type=integer, default=0)
    s.add_argument("--streams", type=integer, default=1)
    s.add_argument("--config", help="INI file with [params] and [sweep] sections")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate, _defaults={"r": 0.0, "source_r": _MATCHED,
                                                 "alpha_re": 0.0, "alpha_im": 0.0,
                                                 "excess": 0.0})

    s = sub.add_parser("figures", help="threshold curves versus r or q", formatter_class=fmt)
    s.add_argument("preset", choices=["fig3a", "fig3b"])
    s.add_argument("--grid-size", type=integer, default=181)
    s.add_argument("--svg", action="store_true", help="also write an SVG line plot")
    s.add_argument("--out")
    s.set_defaults(func=cmd_figures)

    s = sub.add_parser("regions", help="acceptance rectangle and support ellipse",
                       formatter_class=fmt)
    s.add_argument("--n0", type=real, required=True)
    s.add_argument("--r", type=real, default=0.0)
    s.add_argument("--samples", type=integer, default=200)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_regions)
    return p


def _apply_defaults(args) -> None:
    # flags that may also come from a config file get their defaults late
    base = load_config(args.config)[0] if getattr(args, "config", None) else {}
    for key, val in getattr(args, "_defaults", {}).items():
        if getattr(args, key, None) is None and key not in base:
            setattr(args, key, val)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_defaults(args)
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TruncationError, NumericalConsistencyError, SpectralRangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

if __name__ == "__main__":
    sys.exit(main())
