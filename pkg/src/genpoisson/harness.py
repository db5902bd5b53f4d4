"""Verification of the asymptotic estimates against the numerical bounds.

A case is a tuple (alpha, r, beta, n, s). For each case the lower and upper
bounds are computed, every estimate that describes the case is evaluated,
and the coefficient gamma implied by each side is compared with the
estimate's stated bound.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .asymptotics import FORMULA_IDS, AsymptoticEstimate, estimate, formulas_for, l2_exact
from .bounds import SandwichBounds, sandwich
from .kernel import KernelParams
from .norms import QuadratureConfig
from .orders import NormOrder

# relative slack on |gamma| <= bound, covering quadrature error in the bounds
GAMMA_SLACK = 1e-9


@dataclass
class EstimateCheck:
    estimate: AsymptoticEstimate
    gamma_lower: float
    gamma_upper: float

    @property
    def within(self) -> bool:
        e = self.estimate
        if e.gamma_bound is None:
            return True
        limit = e.gamma_bound * (1.0 + GAMMA_SLACK)
        return bool(abs(self.gamma_lower) <= limit and abs(self.gamma_upper) <= limit)

    @property
    def counts(self) -> bool:
        """Whether this check takes part in pass/fail decisions."""
        return bool(self.estimate.applicable) and self.estimate.gamma_bound is not None


@dataclass
class VerificationReport:
    case_id: str
    params: KernelParams
    n: int
    s: NormOrder
    sandwich: Optional[SandwichBounds] = None
    checks: List[EstimateCheck] = field(default_factory=list)
    gamma_implied_lower: float = math.nan
    gamma_implied_upper: float = math.nan
    applicable: bool = False
    wall_time_ms: int = 0
    error: Optional[str] = None
    extras: dict = field(default_factory=dict)

    @property
    def estimates(self) -> List[AsymptoticEstimate]:
        return [c.estimate for c in self.checks]

    @property
    def within_envelope(self) -> dict:
        return {c.estimate.formula_id: c.within for c in self.checks}

    @property
    def violated(self) -> bool:
        return any(c.counts and not c.within for c in self.checks)


def case_id(alpha: float, r: float, beta: float, n: int, s) -> str:
    """Stable id from the parameter tuple rounded to 12 significant digits."""
    key = f"{float(alpha):.12g}|{float(r):.12g}|{float(beta):.12g}|{int(n)}|{NormOrder.of(s)}"
    return hashlib.sha1(key.encode()).hexdigest()[:16]


def verify_case(params: KernelParams, n: int, s, cfg: QuadratureConfig = None) -> VerificationReport:
    """Bounds, estimates and implied coefficients for one case (errors propagate)."""
    cfg = cfg or QuadratureConfig()
    order = NormOrder.of(s)
    start = time.perf_counter()
    report = VerificationReport(case_id(params.alpha, params.r, params.beta, n, order), params, int(n), order)
    bounds = sandwich(params, n, order, cfg)
    report.sandwich = bounds
    for fid in formulas_for(params.r, order):
        est = estimate(fid, params, n, order)
        report.checks.append(EstimateCheck(est, est.implied_gamma(bounds.lower), est.implied_gamma(bounds.upper)))
    primary = report.checks[0]
    report.gamma_implied_lower = primary.gamma_lower
    report.gamma_implied_upper = primary.gamma_upper
    report.applicable = primary.estimate.applicable
    if order.value == 2.0:
        report.extras["exact_l2"] = l2_exact(params, n).value
    if params.r == 1.0 and order.value == 1.0:
        # |upper - main| n (1 - q) / q, the size of the unnamed O(1) factor
        report.extras["trend_statistic"] = abs(primary.gamma_upper)
    report.wall_time_ms = int(round(1000.0 * (time.perf_counter() - start)))
    return report


def _verify_isolated(args) -> VerificationReport:
    params, n, s, cfg = args
    try:
        return verify_case(params, n, s, cfg)
    except (ArithmeticError, ValueError, MemoryError) as exc:
        order = NormOrder.of(s)
        return VerificationReport(case_id(params.alpha, params.r, params.beta, n, order), params, int(n), order,
                                  error=f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class GridConfig:
    alpha: tuple
    r: tuple
    beta: tuple
    s: tuple
    n: tuple
    quadrature: QuadratureConfig = QuadratureConfig()

    def cases(self):
        for a, r, b, s, n in itertools.product(self.alpha, self.r, self.beta, self.s, self.n):
            yield KernelParams(a, r, b), n, NormOrder.of(s)


def _split_list(text: str) -> list:
    return [item.strip() for item in text.replace("\n", ",").split(",") if item.strip()]


def parse_grid_config(text: str) -> GridConfig:
    """Read a sweep description in INI form.

    [grid] holds comma-separated lists for alpha, r, beta, s and n (s accepts
    ``inf``; beta defaults to 0). An optional [quadrature] section overrides
    rel_tol, max_refinements and sup_grid.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(str(exc).splitlines()[0]) from exc
    if not parser.has_section("grid"):
        raise ValueError("config needs a [grid] section")
    grid = parser["grid"]
    missing = [k for k in ("alpha", "r", "s", "n") if k not in grid]
    if missing:
        raise ValueError(f"[grid] is missing {', '.join(missing)}")
    unknown = set(grid) - {"alpha", "r", "beta", "s", "n"}
    if unknown:
        raise ValueError(f"unknown [grid] keys: {', '.join(sorted(unknown))}")
    alpha = tuple(float(x) for x in _split_list(grid["alpha"]))
    r = tuple(float(x) for x in _split_list(grid["r"]))
    beta = tuple(float(x) for x in _split_list(grid.get("beta", "0")))
    s = tuple(NormOrder.parse(x) for x in _split_list(grid["s"]))
    n = tuple(int(x) for x in _split_list(grid["n"]))
    quad = QuadratureConfig()
    if parser.has_section("quadrature"):
        q = parser["quadrature"]
        unknown = set(q) - {"rel_tol", "max_refinements", "sup_grid"}
        if unknown:
            raise ValueError(f"unknown [quadrature] keys: {', '.join(sorted(unknown))}")
        quad = QuadratureConfig(
            rel_tol=float(q.get("rel_tol", quad.rel_tol)),
            max_refinements=int(q.get("max_refinements", quad.max_refinements)),
            sup_grid=int(q.get("sup_grid", quad.sup_grid)),
        )
    for name, values in (("alpha", alpha), ("r", r), ("beta", beta), ("s", s), ("n", n)):
        if not values:
            raise ValueError(f"[grid] {name} list is empty")
    return GridConfig(alpha, r, beta, s, n, quad)


def load_grid_config(path: str) -> GridConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_grid_config(fh.read())


def sweep(grid: GridConfig, jobs: int = 1) -> List[VerificationReport]:
    """Evaluate every case of the grid; failures are recorded per row."""
    tasks = [(p, n, s, grid.quadrature) for p, n, s in grid.cases()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_verify_isolated, tasks))
    else:
        reports = [_verify_isolated(t) for t in tasks]
    return sorted(reports, key=lambda rep: (rep.case_id, rep.n))


# ---------------------------------------------------------------- output


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


_BASE_COLUMNS = ["case_id", "alpha", "r", "beta", "n", "s", "lower_scaled", "upper_scaled", "log_scale",
                 "best_constant", "h_star", "lambda_star"]
_PER_FORMULA = ["main", "envelope", "gamma_lower", "gamma_upper", "within", "applicable"]


def _formula_order(reports) -> list:
    present = {c.estimate.formula_id for rep in reports for c in rep.checks}
    return [fid for fid in FORMULA_IDS if fid in present]


def csv_columns(reports, timing: bool = False) -> list:
    cols = list(_BASE_COLUMNS)
    for fid in _formula_order(reports):
        cols += [f"{fid}_{k}" for k in _PER_FORMULA]
    cols.append("error")
    if timing:
        cols.append("wall_time_ms")
    return cols


def _csv_row(rep: VerificationReport, fids: list, timing: bool) -> list:
    b = rep.sandwich
    row = [rep.case_id, _num(rep.params.alpha), _num(rep.params.r), _num(rep.params.beta), str(rep.n), str(rep.s)]
    if b is None:
        row += [""] * 6
    else:
        row += [_num(b.lower), _num(b.upper), _num(b.log_scale), _num(b.best_constant), _num(b.h_star),
                _num(b.lambda_star)]
    by_id = {c.estimate.formula_id: c for c in rep.checks}
    for fid in fids:
        c = by_id.get(fid)
        if c is None:
            row += [""] * len(_PER_FORMULA)
        else:
            e = c.estimate
            row += [_num(e.main_term), _num(e.envelope_unit), _num(c.gamma_lower), _num(c.gamma_upper),
                    _num(c.within), _num(e.applicable)]
    row.append(rep.error or "")
    if timing:
        row.append(str(rep.wall_time_ms))
    return row


def report_to_dict(rep: VerificationReport, timing: bool = False) -> dict:
    b = rep.sandwich
    out = {
        "case_id": rep.case_id,
        "params": {"alpha": rep.params.alpha, "r": rep.params.r, "beta": rep.params.beta},
        "n": rep.n,
        "s": str(rep.s),
        "sandwich": None if b is None else {
            "lower": b.lower, "upper": b.upper, "best_constant": b.best_constant, "log_scale": b.log_scale,
            "h_star": b.h_star, "lambda_star": b.lambda_star, "route": b.route,
        },
        "estimates": [
            {
                "formula_id": c.estimate.formula_id,
                "main_term": c.estimate.main_term,
                "envelope_unit": c.estimate.envelope_unit,
                "gamma_bound": c.estimate.gamma_bound,
                "applicable": c.estimate.applicable,
                "threshold_used": c.estimate.threshold_used,
                "log_scale": c.estimate.log_scale,
                "gamma_lower": c.gamma_lower,
                "gamma_upper": c.gamma_upper,
                "within_envelope": c.within,
                "extras": dict(sorted(c.estimate.extras.items())),
            }
            for c in rep.checks
        ],
        "gamma_implied_lower": rep.gamma_implied_lower,
        "gamma_implied_upper": rep.gamma_implied_upper,
        "applicable": rep.applicable,
        "error": rep.error,
        "extras": dict(sorted(rep.extras.items())),
    }
    if timing:
        out["wall_time_ms"] = rep.wall_time_ms
    return out


def _json_value(x, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # 17 significant digits round-trip exactly; non-finite values become null
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        return "[\n" + ",\n".join(pad + _json_value(v, indent + 1) for v in x) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def render_report(reports, fmt: str = "csv", timing: bool = False) -> str:
    reports = list(reports)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = csv_columns(reports, timing)
        writer.writerow(cols)
        fids = _formula_order(reports)
        for rep in reports:
            writer.writerow(_csv_row(rep, fids, timing))
        return buf.getvalue()
    if fmt == "json":
        return _json_value([report_to_dict(rep, timing) for rep in reports], 0) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def emit_report(reports, fmt: str, path: str, timing: bool = False) -> None:
    """Write reports as CSV or JSON; I/O failures name the path."""
    text = render_report(reports, fmt, timing)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path!r}: {exc.strerror or exc}") from exc
