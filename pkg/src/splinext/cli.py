"""Command-line interface.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .errors import SplinextError
from .experiments import RUNNERS, ExperimentSpec, run, write_outputs

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

_DEFAULTS = {
    "duals": dict(p="3", q="2", n="32", dual="compact"),
    "spectrum": dict(p="3", q="2", n="200", function="exp1d", domain="interval:0.3,0.9"),
    "convergence": dict(p="3", q="2", n="32,64,128,256", function="exp1d"),
    "scaling": dict(p="3", q="2", n="16384,32768,65536,131072", function="exp1d"),
    "fit": dict(p="3", q="2", n="64", function="exp1d", solver="reduced-az,svd"),
    "raster": dict(p="1", q="2", n="", function="expxy"),
}


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splinext", description="B-spline extension frame experiments.")
    sub = parser.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    helps = {
        "duals": "dump dual sequences and their pairing residuals",
        "spectrum": "singular values and sparsity map of the boundary block",
        "convergence": "residual versus N sweep with log-log slope",
        "scaling": "wall-clock timings versus N with log-log slope",
        "fit": "fit one function with one or more solvers",
        "raster": "fit an ESRI ASCII raster (or the synthetic fixture)",
    }
    for kind in RUNNERS:
        d = _DEFAULTS[kind]
        sp = sub.add_parser(kind, help=helps[kind])
        sp.add_argument("--p", default=d["p"], help="spline degree(s), comma list")
        sp.add_argument("--q", default=d["q"], help="oversampling factor, or one per dimension")
        sp.add_argument("--n", default=d["n"], help="basis sizes, comma list; 168x224 for anisotropic")
        sp.add_argument("--domain", default=None, help="e.g. interval:0,0.5 | disk | ball | flower | full:2")
        sp.add_argument("--function", default=d.get("function", "exp1d"),
                        help="exp1d | expxy | expxyz | const")
        sp.add_argument("--zdual", default=d.get("dual", "compact"),
                        help="gram | truncated:EPS | compact[:K][:MABS]")
        sp.add_argument("--solver", default=d.get("solver", "reduced-az"),
                        help="svd | reduced-az | sparse-az | iterative (comma list where meaningful)")
        sp.add_argument("--out", default=None, help="output directory (CSV, SVG, manifest)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--repeats", type=int, default=3, help="timed repetitions (scaling)")
        sp.add_argument("--no-figures", action="store_true", help="skip SVG rendering")
        if kind == "raster":
            sp.add_argument("path", nargs="?", default="synthetic",
                            help="ESRI ASCII grid, or 'synthetic' for the built-in fixture")
    return parser


def spec_from_args(args) -> ExperimentSpec:
    try:
        p = _int_list(args.p)
        q = _int_list(args.q)
    except argparse.ArgumentTypeError as exc:
        raise _InputError(str(exc)) from None
    n = tuple(v.strip() for v in args.n.split(",") if v.strip())
    solvers = tuple(s.strip() for s in args.solver.split(",") if s.strip())
    for s in solvers:
        if s not in ("svd", "reduced-az", "sparse-az", "iterative"):
            raise _InputError(f"unknown solver {s!r}")
    if not p or not q or not solvers or (args.kind != "raster" and not n):
        raise _InputError("--p, --q, --n and --solver must be non-empty")
    return ExperimentSpec(
        kind=args.kind, p=p, q=q, n=n, domain=args.domain, function=args.function,
        dual=args.zdual, solver=solvers, out=args.out, seed=args.seed, jobs=args.jobs,
        raster=getattr(args, "path", None), repeats=args.repeats,
    )


def _print_summary(spec, output, stream):
    for key, value in output.summary.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        print(f"{key}: {value}", file=stream)
    if spec.out is None:
        # without an output directory the main table goes to stdout
        first = next(iter(output.tables.values()))
        stream.write(first.to_csv())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        t0 = time.perf_counter()
        output = run(spec)
        output.summary["wall_time"] = time.perf_counter() - t0
        if spec.out is not None:
            written = write_outputs(spec, output, spec.out, figures=not args.no_figures)
            for path in written:
                print(f"wrote {path}")
        _print_summary(spec, output, sys.stdout)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"splinext: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (_InputError, ValueError, TypeError, KeyError, OSError, SplinextError) as exc:
        print(f"splinext: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
