"""Command-line interface.

Exit codes: 0 every applicable case lies inside its envelope, 1 some
envelope is violated, 2 a numerical failure, 3 a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .asymptotics import FORMULA_IDS, estimate, threshold_n0, threshold_n1
from .bounds import sandwich
from .harness import emit_report, load_grid_config, render_report, sweep, verify_case
from .kernel import KernelParams, tail_series
from .norms import QuadratureConfig, ls_norm_with_route
from .orders import NormOrder

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _order(text: str) -> NormOrder:
    try:
        return NormOrder.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _common(p: argparse.ArgumentParser, need_n: bool = True, need_s: bool = True):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--beta", type=float, default=0.0)
    if need_n:
        p.add_argument("--n", type=_positive_int, required=True)
    if need_s:
        p.add_argument("--s", type=_order, required=True, help="norm order in [1, inf]; 'inf' for the sup norm")


def _output(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=float, default=1e-10, help="relative quadrature tolerance")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genpoisson", description="Fourier-sum error bounds for generalized Poisson kernels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="L_s norm of the kernel tail from frequency n")
    _common(p)
    _output(p)

    p = sub.add_parser("sandwich", help="lower / upper / best-constant bounds")
    _common(p)
    _output(p)

    p = sub.add_parser("estimate", help="evaluate one asymptotic formula")
    _common(p)
    p.add_argument("--formula", choices=FORMULA_IDS, required=True)
    _output(p)

    p = sub.add_parser("verify", help="bounds against every estimate for one case")
    _common(p)
    _output(p)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")

    p = sub.add_parser("sweep", help="verify a grid of cases from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true")

    p = sub.add_parser("thresholds", help="applicability thresholds")
    _common(p, need_n=False, need_s=False)
    p.add_argument("--s", type=_order, default=None, help="norm order; the first threshold uses its conjugate")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out")
    return parser


def _flat(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(record))
    writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in record.values()])
    return buf.getvalue()


def _write(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cfg(args) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=args.tol)


def _params(args) -> KernelParams:
    return KernelParams(args.alpha, args.r, args.beta)


def _cmd_norm(args) -> int:
    params = _params(args)
    series = tail_series(params, args.n)
    value, route = ls_norm_with_route(series, args.s, _cfg(args))
    record = {"alpha": params.alpha, "r": params.r, "beta": params.beta, "n": args.n, "s": str(args.s),
              "norm_scaled": value, "log_scale": series.log_scale, "route": route}
    _write(_flat(record, args.format), args.out)
    return EXIT_OK


def _cmd_sandwich(args) -> int:
    params = _params(args)
    b = sandwich(params, args.n, args.s, _cfg(args))
    record = {"alpha": params.alpha, "r": params.r, "beta": params.beta, "n": args.n, "s": str(args.s),
              "lower_scaled": b.lower, "upper_scaled": b.upper, "best_constant": b.best_constant,
              "log_scale": b.log_scale, "h_star": b.h_star, "lambda_star": b.lambda_star, "route": b.route}
    _write(_flat(record, args.format), args.out)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    e = estimate(args.formula, _params(args), args.n, args.s)
    record = {"formula_id": e.formula_id, "n": args.n, "s": str(args.s), "main_term": e.main_term,
              "envelope_unit": e.envelope_unit,
              "gamma_bound": "" if e.gamma_bound is None else e.gamma_bound,
              "applicable": e.applicable, "threshold_used": e.threshold_used, "log_scale": e.log_scale}
    _write(_flat(record, args.format), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    rep = verify_case(_params(args), args.n, args.s, _cfg(args))
    _write(render_report([rep], args.format, args.timing), args.out)
    return EXIT_VIOLATION if rep.violated else EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        grid = load_grid_config(args.config)
    except (OSError, ValueError) as exc:
        raise UsageError(f"bad config {args.config!r}: {exc}") from exc
    reports = sweep(grid, args.jobs)
    if args.out:
        emit_report(reports, args.format, args.out, args.timing)
    else:
        _write(render_report(reports, args.format, args.timing), None)
    if any(rep.error for rep in reports):
        return EXIT_NUMERIC
    return EXIT_VIOLATION if any(rep.violated for rep in reports) else EXIT_OK


def _cmd_thresholds(args) -> int:
    record = {"alpha": args.alpha, "r": args.r}
    if args.s is not None:
        record["s"] = str(args.s)
        record["n0"] = threshold_n0(args.alpha, args.r, args.s.conjugate)
    else:
        for p in ("1", "2", "inf"):
            record[f"n0_p{p}"] = threshold_n0(args.alpha, args.r, p)
    record["n1"] = threshold_n1(args.alpha, args.r)
    _write(_flat(record, args.format), args.out)
    return EXIT_OK


_COMMANDS = {
    "norm": _cmd_norm,
    "sandwich": _cmd_sandwich,
    "estimate": _cmd_estimate,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "thresholds": _cmd_thresholds,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"genpoisson: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # parameter-domain violations (alpha <= 0, r outside a formula's range, ...)
        print(f"genpoisson: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, MemoryError) as exc:
        print(f"genpoisson: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"genpoisson: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
