"""Two-sided numerical bounds on the worst-case Fourier-sum error for the class
generated by the unit L_1 ball.

With P the kernel tail from frequency n,

    lower = sup_h ||P - P(. + h)||_s / (2 pi)
    upper = ||P||_s / pi
    best_constant = inf_lambda ||P - lambda||_s / pi

and the worst-case error lies between ``lower`` and ``upper``. All values
are in scaled units (multiply by exp(log_scale) for the raw value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .kernel import KernelParams, Scaled, TailSeries, tail_series, tail_sum
from .norms import MAX_GRID, QuadratureConfig, golden_maximize, ls_norm_with_route, make_sampler
from .orders import NormOrder, OrderLike
from .specfun import ConvergenceError

_H_TOL = 1e-6
_LAMBDA_TOL = 1e-10
_ROLL_BLOCK = 2**24
# shift-grid points per unit of carrier frequency in the direct h scan
_SHIFTS_PER_N = 8
_ENVELOPE_SCAN = 128
_ENVELOPE_SEEDS = 2
# relative to the carrier period; the norm is quadratic in the error, ~1e-8
_ENVELOPE_H_TOL = 1e-4
# the bump transform decays like exp(-sqrt(x)); past this it is below 1e-18
_BUMP_CUTOFF = 1600.0
# the direct h search runs on the leading coefficients holding all but this
# fraction of the l1 mass; only the final candidates see the full series
_PROBE_MASS = 1e-5
_PROBE_CFG = QuadratureConfig(rel_tol=1e-8)


@dataclass(frozen=True)
class SandwichBounds:
    lower: float
    upper: float
    best_constant: float
    log_scale: float
    h_star: float
    lambda_star: float
    route: str = "direct"


def _series(params: KernelParams, n: int) -> TailSeries:
    return tail_series(params, n)


def _pow2_at_least(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0))))


def _upper(series: TailSeries, order: NormOrder, cfg: QuadratureConfig):
    value, route = ls_norm_with_route(series, order, cfg)
    return value / math.pi, route


def upper_bound(params: KernelParams, n: int, s: OrderLike, cfg: QuadratureConfig = None) -> Scaled:
    """``||P||_s / pi`` for the kernel tail from frequency n."""
    series = _series(params, n)
    value, _ = _upper(series, NormOrder.of(s), cfg or QuadratureConfig())
    return Scaled(value, series.log_scale)


def _difference_norm(series: TailSeries, order: NormOrder, cfg: QuadratureConfig, h: float, route: str) -> float:
    return ls_norm_with_route(series.shifted_difference(h), order, cfg, route=route)[0]


def _roll_profile(series: TailSeries, order: NormOrder, cfg: QuadratureConfig):
    """Cheap trapezoid estimates of the difference norm on h = 2 pi j / H, 0 < h <= pi."""
    H = _pow2_at_least(max(128, _SHIFTS_PER_N * series.start))
    N = _pow2_at_least(max(H, cfg.sup_grid, 4 * (series.start + series.bandwidth(1e-4))))
    if N > MAX_GRID:
        raise ConvergenceError(f"shift scan would need a grid of {N} points (limit {MAX_GRID})")
    g = series.grid(N)
    step = N // H
    shifts = np.arange(1, H // 2 + 1)
    prof = np.empty(len(shifts))
    rows = max(1, _ROLL_BLOCK // N)
    idx = np.arange(N)
    for lo in range(0, len(shifts), rows):
        js = shifts[lo:lo + rows]
        d = np.abs(g[None, :] - g[(idx[None, :] + (js * step)[:, None]) % N])
        prof[lo:lo + rows] = d.max(axis=1) if order.is_inf else np.mean(d ** order.value, axis=1)
    return 2.0 * np.pi * shifts / H, prof, 2.0 * np.pi / H


def _probe(series: TailSeries) -> TailSeries:
    """Leading part of ``series`` used to locate the maximising shift.

    Its discarded-mass fields are zeroed on purpose: probe norms only rank
    shifts and never enter a reported bound.
    """
    mag = np.abs(series.coef)
    rest = np.cumsum(mag[::-1])[::-1]
    keep = max(1, int(np.searchsorted(-rest, -_PROBE_MASS * rest[0])))
    return replace(series, coef=series.coef[:keep], l1_rest=0.0, l2_rest=0.0)


def _top_peaks(values: np.ndarray, count: int) -> np.ndarray:
    left = np.concatenate(([-np.inf], values[:-1]))
    right = np.concatenate((values[1:], [-np.inf]))
    peaks = np.nonzero((values >= left) & (values >= right))[0]
    return peaks[np.argsort(values[peaks])[::-1][:count]]


def _lower_direct(series: TailSeries, order: NormOrder, cfg: QuadratureConfig):
    probe = _probe(series)
    hs, prof, dh = _roll_profile(probe, order, cfg)
    brackets = [(hs[i] - dh, hs[i] + dh) for i in _top_peaks(prof, 3)]
    seed = math.pi / series.start
    brackets.append((seed - dh, seed + dh))
    found = []
    for a, b in brackets:
        a, b = max(a, 1e-12), min(b, 2.0 * math.pi - 1e-12)
        found.append(golden_maximize(lambda h: _difference_norm(probe, order, _PROBE_CFG, h, "direct"), a, b,
                                     _H_TOL))
    found.sort(key=lambda hv: hv[1], reverse=True)
    best = (found[0][0], -math.inf)
    for h, _ in found[:2]:
        val = _difference_norm(series, order, cfg, h, "direct")
        if val > best[1]:
            best = (h, val)
    return best


def _lower_envelope(series: TailSeries, order: NormOrder, cfg: QuadratureConfig):
    n = series.start
    period = 2.0 * math.pi / n
    # the carrier phase exp(i n h) repeats every 2 pi / n; the slow envelope
    # shift is scanned on a coarse grid and each point is moved to the nearest
    # anti-phase shift (2m + 1) pi / n before refinement
    centres = {(2 * m + 1) * math.pi / n for m in range(_ENVELOPE_SEEDS)}
    N = _pow2_at_least(max(_ENVELOPE_SCAN, 4 * series.bandwidth(1e-4)))
    N -= N % _ENVELOPE_SCAN
    env = series.envelope_grid(N)
    p = order.value
    step = N // _ENVELOPE_SCAN
    scan = []
    for j in range(1, _ENVELOPE_SCAN // 2 + 1):
        h = 2.0 * math.pi * j / _ENVELOPE_SCAN
        h = (math.floor(h / period) + 0.5) * period
        phase = complex(math.cos(n * h), math.sin(n * h))
        d = env - phase * np.roll(env, -j * step)
        scan.append((float(np.mean(np.abs(d) ** p)), h))
    scan.sort(reverse=True)
    centres.update(h for _, h in scan[:3])
    best = (min(centres), -math.inf)
    for c in sorted(centres):
        a, b = max(c - 0.5 * period, 1e-12), min(c + 0.5 * period, math.pi)
        cand = golden_maximize(lambda h: _difference_norm(series, order, cfg, h, "envelope"), a, b,
                               _ENVELOPE_H_TOL * period)
        if cand[1] > best[1]:
            best = cand
    return best


def _lower(series: TailSeries, order: NormOrder, cfg: QuadratureConfig, route: str):
    if route == "envelope":
        h, val = _lower_envelope(series, order, cfg)
    else:
        h, val = _lower_direct(series, order, cfg)
    h = math.remainder(h, 2.0 * math.pi)
    return val / (2.0 * math.pi), abs(h)


def lower_bound(params: KernelParams, n: int, s: OrderLike, cfg: QuadratureConfig = None):
    """``sup_h ||P - P(. + h)||_s / (2 pi)`` and the maximising shift h in (0, pi]."""
    cfg = cfg or QuadratureConfig()
    order = NormOrder.of(s)
    series = _series(params, n)
    _, route = _upper(series, order, cfg)
    val, h = _lower(series, order, cfg, route)
    return Scaled(val, series.log_scale), h


def _best_constant(series: TailSeries, order: NormOrder, cfg: QuadratureConfig, route: str, upper: float,
                   bound: float):
    if route == "envelope":
        # the constant couples only to the carrier-averaged mean of
        # |P|^(s-2) P, which vanishes to the accuracy of the route itself
        return upper, 0.0
    if order.value == 2.0:
        # P has no constant term: ||P - lambda||_2^2 = ||P||_2^2 + 2 pi lambda^2
        return upper, 0.0
    # sup |P| <= bound, so the minimiser lies in [-bound, bound]
    sampler = make_sampler(series)

    def neg_norm(lam):
        return -ls_norm_with_route(series, order, cfg, route="direct", constant=lam, sampler=sampler)[0]

    lam, val = golden_maximize(neg_norm, -bound, bound, _LAMBDA_TOL * bound)
    return -val / math.pi, lam


def best_constant_deviation(params: KernelParams, n: int, s: OrderLike, cfg: QuadratureConfig = None):
    """``inf_lambda ||P - lambda||_s / pi`` and the minimising constant."""
    cfg = cfg or QuadratureConfig()
    order = NormOrder.of(s)
    series = _series(params, n)
    upper, route = _upper(series, order, cfg)
    val, lam = _best_constant(series, order, cfg, route, upper, tail_sum(params, n).value)
    return Scaled(val, series.log_scale), lam


def sandwich(params: KernelParams, n: int, s: OrderLike, cfg: QuadratureConfig = None) -> SandwichBounds:
    """Lower, upper and best-constant bounds sharing one kernel series."""
    cfg = cfg or QuadratureConfig()
    order = NormOrder.of(s)
    series = _series(params, n)
    upper, route = _upper(series, order, cfg)
    lower, h = _lower(series, order, cfg, route)
    best, lam = _best_constant(series, order, cfg, route, upper, tail_sum(params, n).value)
    return SandwichBounds(lower, upper, best, series.log_scale, h, lam, route)


@lru_cache(maxsize=None)
def _bump_nodes(panels: int):
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    v = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    bump = _bump(v)
    return v, wt * bump / np.dot(wt, bump)


def _bump(u: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(np.abs(u) < 1.0, np.exp(-1.0 / (1.0 - u * u)), 0.0)


def _bump_table(kmax: int, eps: float) -> np.ndarray:
    """Transform at k = 0 .. kmax as Fourier coefficients of the periodised bump.

    The bump is flat to all orders at its ends, so the trapezoid sum is
    spectrally accurate; the aliased remainder sits beyond the cutoff.
    """
    M = 1 << max(6, math.ceil(math.log2(kmax + 1 + _BUMP_CUTOFF / eps)))
    x = 2.0 * math.pi * np.fft.fftfreq(M)
    c = np.fft.rfft(_bump(x / eps)).real
    return c[: kmax + 1] / c[0]


def bump_transform(k: np.ndarray, eps: float) -> np.ndarray:
    """``int rho_eps(u) cos(k u) du`` for the unit-mass C-infinity bump on [-eps, eps].

    Beyond ``k eps = _BUMP_CUTOFF`` the transform is below 1e-18 and is
    returned as zero. Integer k use one FFT; other k use panel quadrature.
    """
    if not 0.0 < eps < math.pi:
        raise ValueError(f"eps must lie in (0, pi), got {eps!r}")
    k = np.abs(np.asarray(k, dtype=float))
    out = np.zeros(k.shape)
    live = k * eps <= _BUMP_CUTOFF
    if not live.any():
        return out
    kl = k[live]
    if np.all(kl == np.round(kl)):
        out[live] = _bump_table(int(kl.max()), eps)[kl.astype(np.int64)]
        return out
    v, wt = _bump_nodes(32 + 2 * math.ceil(float(kl.max()) * eps))
    res = np.empty(kl.shape)
    chunk = max(1, 2**22 // len(v))
    for lo in range(0, len(kl), chunk):
        res[lo:lo + chunk] = np.cos(np.outer(kl[lo:lo + chunk] * eps, v)) @ wt
    out[live] = res
    return out


def empirical_class_lower_bound(params: KernelParams, n: int, s: OrderLike, eps: float, a: float, b: float,
                                cfg: QuadratureConfig = None) -> Scaled:
    """``||P * phi||_s / pi`` for phi = (rho_eps(. - a) - rho_eps(. - b)) / 2.

    phi has zero mean and unit-or-less L_1 norm, so this is the error of one
    member of the class and hence a lower bound on the worst case. The
    convolution is formed coefficient-wise, its multiplier obtained by
    quadrature of the bump against cos(k u).
    """
    if not 0.0 < eps < math.pi:
        raise ValueError(f"eps must lie in (0, pi), got {eps!r}")
    cfg = cfg or QuadratureConfig()
    series = _series(params, n)
    if math.remainder(a - b, 2.0 * math.pi) == 0.0:
        return Scaled(0.0, series.log_scale)
    k = series.frequencies()
    factor = bump_transform(k, eps) * 0.5 * (np.exp(-1j * k * a) - np.exp(-1j * k * b))
    value = ls_norm_with_route(series.multiplied(factor), NormOrder.of(s), cfg, route="direct")[0]
    return Scaled(value / math.pi, series.log_scale)
