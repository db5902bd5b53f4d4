"""L_s norms of 2pi-periodic functions, and the L_s[0, v] norm of (t^2 + 1)^(-1/2).

Periodic norms come in two flavours. The direct route samples the function
on uniform grids: plain trapezoid for even integer s, otherwise an 8-point
Gauss-Legendre rule per grid cell with cells that contain a sign change
re-integrated piecewise between the zeros. The envelope route applies to
kernel tails whose spectrum is a narrow band around a high carrier frequency
n: writing P(t) = Re(exp(int) B(t)) with B slowly varying, the carrier
averages out and ||P||_s = ||cos||_s * mean(|B|^s)^(1/s) up to terms of
relative size exp(-decay * n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special

from .kernel import TailSeries, TruncationError
from .orders import NormOrder, OrderLike
from .specfun import ConvergenceError, cos_norm, gauss_2f1

__all__ = [
    "NormOrder",
    "QuadratureConfig",
    "periodic_ls_norm",
    "golden_maximize",
    "inverse_sqrt_norm",
    "inverse_sqrt_norm_limit",
    "window_residual",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_U_X, _U_W = np.polynomial.legendre.leggauss(16)
_U_X = 0.5 * (_U_X + 1.0)
_U_W = 0.5 * _U_W
# cell nodes on [-1, 1]: both ends plus the Gauss points, ascending
_CELL_X = np.concatenate(([-1.0], _GL_X, [1.0]))
_TO_CHEB = np.linalg.inv(np.polynomial.chebyshev.chebvander(_CELL_X, len(_CELL_X) - 1))
_BISECT_STEPS = 48
_SUP_REFINE = 1e-6
# largest grid the rules may use; the cell rule holds about ten grids at once
MAX_GRID = 2**24
MAX_CELL_GRID = 2**23
_CACHE_LIMIT = 2**21
_ROW_BLOCK = 2**18

Periodic = Union[Callable, TailSeries]


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    max_refinements: int = 24
    sup_grid: int = 4096

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 1:
            raise ValueError(f"max_refinements must be an integer >= 1, got {self.max_refinements!r}")
        g = self.sup_grid
        if int(g) != g or g < 64 or g & (g - 1):
            raise ValueError(f"sup_grid must be a power of two >= 64, got {g!r}")


def _pow2_at_least(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0))))


def golden_maximize(fn: Callable[[float], float], a: float, b: float, tol: float):
    """Golden-section search for a local maximum of ``fn`` on [a, b].

    Returns ``(x, fn(x))`` for the best point seen, so a unimodal assumption
    that fails only costs accuracy, never validity.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    best = (x1, f1) if f1 >= f2 else (x2, f2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
            cand = (x1, f1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
            cand = (x2, f2)
        if cand[1] > best[1]:
            best = cand
    return best


class _Sampler:
    """Grid and pointwise access to a real periodic function, minus a constant.

    Grids are cached for the two finest sizes requested, which is what the
    doubling loops and repeated searches over the constant reuse.
    """

    def __init__(self, f: Periodic, constant: float = 0.0):
        self.f = f
        self.constant = float(constant)
        self.start_size = 1
        self._cache = {}

    @property
    def is_series(self) -> bool:
        return isinstance(self.f, TailSeries)

    def top_frequency(self, rel: float) -> int:
        if self.is_series:
            return self.f.start + self.f.bandwidth(rel)
        return 0

    def raw_grid(self, N: int, offset: float) -> np.ndarray:
        key = (N, offset)
        hit = self._cache.get(key)
        if hit is None:
            for old in [k for k in self._cache if k[0] < N // 2]:
                del self._cache[old]
            if self.is_series:
                hit = self.f.grid(N, offset)
            else:
                t = np.arange(N) * (2.0 * np.pi / N) + offset
                hit = np.asarray(self.f(t), dtype=float)
            if N <= _CACHE_LIMIT:
                self._cache[key] = hit
        return hit

    def grid(self, N: int, offset: float = 0.0) -> np.ndarray:
        g = self.raw_grid(N, offset)
        return g - self.constant if self.constant else g

    def midpoint_grid(self, N: int) -> np.ndarray:
        """Samples at the midpoints of the N-point grid (not cached)."""
        if self.is_series:
            g = self.f.midpoint_grid(N)
        else:
            g = np.asarray(self.f((np.arange(N) + 0.5) * (2.0 * np.pi / N)), dtype=float)
        return g - self.constant if self.constant else g

    def midpoint_grids(self, N: int):
        """midpoint_grid(N), midpoint_grid(2N), ... in turn."""
        if self.is_series:
            for g in self.f.midpoint_grids(N):
                yield g - self.constant if self.constant else g
        else:
            while True:
                yield self.midpoint_grid(N)
                N *= 2

    def at(self, t: float) -> float:
        return float(self.f(t)) - self.constant


def make_sampler(f: Periodic) -> _Sampler:
    return _Sampler(f)


def _clenshaw(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Chebyshev series with per-row coefficients ``coef[i]`` at points ``x[i, ...]``."""
    c = coef.reshape(coef.shape + (1,) * (x.ndim - 1))
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(coef.shape[1] - 1, 0, -1):
        b1, b2 = 2.0 * x * b1 - b2 + c[:, k], b1
    return x * b1 - b2 + c[:, 0]


def _split_cells(values: np.ndarray, s: float):
    """Integral of |f|^s over [-1, 1] for cells whose samples change sign.

    Each cell is replaced by its degree-9 polynomial interpolant through the
    ten samples; zeros are located by bisection inside the sample intervals
    that bracket a sign change, and every piece between zeros is integrated
    with the substitution x = zero + (end - zero) u^2, which absorbs the
    |x - zero|^s behaviour at the zero.
    """
    m = values.shape[0]
    coef = values @ _TO_CHEB.T
    pos = values >= 0.0
    change = pos[:, :-1] != pos[:, 1:]
    rows, slots = np.nonzero(change)
    lo = _CELL_X[slots].copy()
    hi = _CELL_X[slots + 1].copy()
    lo_pos = pos[rows, slots]
    crow = coef[rows]
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        mid_pos = _clenshaw(crow, mid) >= 0.0
        same = mid_pos == lo_pos
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    roots = 0.5 * (lo + hi)

    first = np.ones(len(rows), dtype=bool)
    first[1:] = rows[1:] != rows[:-1]
    last = np.ones(len(rows), dtype=bool)
    last[:-1] = rows[:-1] != rows[1:]
    left = np.full(len(rows), -1.0)
    left[1:] = 0.5 * (roots[1:] + roots[:-1])
    left[first] = -1.0
    right = np.full(len(rows), 1.0)
    right[:-1] = 0.5 * (roots[1:] + roots[:-1])
    right[last] = 1.0

    anchor = np.concatenate((roots, roots))
    far = np.concatenate((left, right))
    seg_rows = np.concatenate((rows, rows))
    span = far - anchor
    x = anchor[:, None] + span[:, None] * (_U_X**2)[None, :]
    vals = np.abs(_clenshaw(coef[seg_rows], x)) ** s
    seg = np.abs(span) * (vals @ (2.0 * _U_X * _U_W))
    return np.bincount(seg_rows, weights=seg, minlength=m), rows, roots


def _near_cells(values: np.ndarray, left_zero: np.ndarray, right_zero: np.ndarray, s: float) -> np.ndarray:
    """Integral of |f|^s over [-1, 1] for sign-definite cells next to a zero.

    ``left_zero`` (< -1, or nan) and ``right_zero`` (> 1, or nan) locate the
    neighbouring zeros in this cell's coordinates. For non-integer s the
    branch point there slows Gauss-Legendre down, so each half is mapped by
    x = zero + (x - zero) u^2 restricted to the cell; the interpolant is only
    evaluated inside the cell.
    """
    coef = values @ _TO_CHEB.T
    has_l = ~np.isnan(left_zero)
    has_r = ~np.isnan(right_zero)
    split = np.where(has_l & has_r, 0.0, np.where(has_l, 1.0, -1.0))
    total = np.zeros(len(values))
    for zero, a, b, use in ((left_zero, -1.0, split, has_l), (right_zero, split, 1.0, has_r)):
        idx = np.nonzero(use)[0]
        if not len(idx):
            continue
        z = zero[idx]
        a = np.broadcast_to(a, len(values))[idx]
        b = np.broadcast_to(b, len(values))[idx]
        near, far = (a, b) if zero is left_zero else (b, a)
        length = far - z
        ua = np.sqrt((near - z) / length)
        u = ua[:, None] + (1.0 - ua)[:, None] * _U_X[None, :]
        x = z[:, None] + length[:, None] * u * u
        vals = np.abs(_clenshaw(coef[idx], x)) ** s
        total[idx] += np.abs(length) * (1.0 - ua) * ((vals * 2.0 * u) @ _U_W)
    return total


def _cell_quadrature(sampler: _Sampler, N: int, s: float) -> float:
    """Integral of |f|^s over one period with N Gauss-Legendre cells."""
    h = 2.0 * np.pi / N
    cols = [sampler.grid(N, 0.0)]
    for x in _GL_X:
        cols.append(sampler.grid(N, 0.5 * h * (1.0 + x)))
    # accumulate column by column; full (N, 10) stacks are formed only for flagged cells
    right = np.roll(cols[0], -1)
    lo = np.minimum(cols[0], right)
    hi = np.maximum(cols[0], right)
    del right
    inner = np.zeros(N)
    tmp = np.empty(N)
    for w, col in zip(_GL_W, cols[1:]):
        np.abs(col, out=tmp)
        tmp **= s
        tmp *= w
        inner += tmp
        np.minimum(lo, col, out=lo)
        np.maximum(hi, col, out=hi)
    del tmp
    flagged = np.nonzero((lo < 0.0) & (hi > 0.0))[0]
    del lo, hi

    def rows_of(idx):
        return np.stack([c[idx] for c in cols] + [cols[0][(idx + 1) % N]], axis=1)

    if len(flagged):
        # blocks bound the (cells, 10) stacks and the per-cell Chebyshev work
        parts = []
        for lo in range(0, len(flagged), _ROW_BLOCK):
            block = flagged[lo:lo + _ROW_BLOCK]
            inner[block], r, z = _split_cells(rows_of(block), s)
            parts.append((r + lo, z))
        rows = np.concatenate([r for r, _ in parts])
        roots = np.concatenate([z for _, z in parts])
        if s != round(s):
            cells = flagged[rows]
            # a zero at local x sits at x + 2 in the left neighbour and x - 2 in the right one
            near = np.zeros(N, dtype=bool)
            near[(cells - 1) % N] = True
            near[(cells + 1) % N] = True
            near[flagged] = False
            idx = np.nonzero(near)[0]
            if len(idx):
                slot = np.full(N, -1)
                slot[idx] = np.arange(len(idx))
                # nearest zero on each side; cells with none keep nan
                right_zero = np.full(len(idx), np.inf)
                left_zero = np.full(len(idx), -np.inf)
                pos = slot[(cells - 1) % N]
                keep = pos >= 0
                np.minimum.at(right_zero, pos[keep], roots[keep] + 2.0)
                pos = slot[(cells + 1) % N]
                keep = pos >= 0
                np.maximum.at(left_zero, pos[keep], roots[keep] - 2.0)
                right_zero[np.isinf(right_zero)] = np.nan
                left_zero[np.isinf(left_zero)] = np.nan
                for lo in range(0, len(idx), _ROW_BLOCK):
                    sl = slice(lo, lo + _ROW_BLOCK)
                    inner[idx[sl]] = _near_cells(rows_of(idx[sl]), left_zero[sl], right_zero[sl], s)
    return 0.5 * h * float(np.sum(inner))


def _nested_trapezoid(sampler: _Sampler, s: float):
    """Trapezoid rule for a doubling sequence of N.

    The 2N-point sum is the N-point sum plus the N points offset by pi / N,
    so each doubling only samples the new midpoints.
    """
    last = {}

    def power_sum(g):
        return float(np.dot(g, g)) if s == 2.0 else float(np.sum(np.abs(g) ** s))

    def rule(N: int) -> float:
        half = last.get("N")
        if half is not None and 2 * half == N:
            if last.get("next") != half:
                last["midpoints"] = sampler.midpoint_grids(half)
            total = last["sum"] + power_sum(next(last["midpoints"]))
            last["next"] = N
        else:
            total = power_sum(sampler.grid(N))
        last.update(N=N, sum=total)
        return (2.0 * np.pi / N) * total

    return rule


def _alias_bound(series: TailSeries):
    """Rigorous bound on the N-point trapezoid error for the squared series, as a function of N.

    Difference frequencies never alias once N covers the spectral width; a sum
    frequency jN only pairs indices k, l >= jN - kmax, so Cauchy-Schwarz bounds
    each alias by the squared l2 mass above that index.
    """
    m = len(series.coef)
    kmax = series.start + m - 1
    upper = []

    def bound(N: int) -> float:
        if N < m:
            return math.inf
        if not upper:
            upper.append(np.cumsum((np.abs(series.coef) ** 2)[::-1])[::-1])
        total, j = 0.0, 1
        while j * N <= 2 * kmax:
            total += float(upper[0][max(0, j * N - kmax - series.start)])
            j += 1
        return np.pi * total

    return bound


def _refine(rule, N0: int, cfg: QuadratureConfig, what: str, limit: int = MAX_GRID, certify=None):
    """Double N from N0 until two successive rule values agree, or ``certify``
    vouches for a single value; returns (value, N)."""
    prev = None
    N = N0
    for _ in range(cfg.max_refinements):
        if N > limit:
            raise ConvergenceError(f"{what} did not reach rel_tol={cfg.rel_tol} on grids up to {limit} points")
        cur = rule(N)
        if prev is not None and abs(cur - prev) <= cfg.rel_tol * abs(cur):
            return cur, N
        if certify is not None and certify(N, cur):
            return cur, N
        prev = cur
        N *= 2
    raise ConvergenceError(f"{what} did not reach rel_tol={cfg.rel_tol} within {cfg.max_refinements} refinements")


def _direct_finite(sampler: _Sampler, s: float, cfg: QuadratureConfig) -> float:
    N0 = max(sampler.start_size, _pow2_at_least(max(64, sampler.top_frequency(1e-4))))
    if s == round(s) and int(round(s)) % 2 == 0:
        certify = None
        if s == 2.0 and sampler.is_series and sampler.constant == 0.0:
            alias = _alias_bound(sampler.f)
            certify = lambda N, v: alias(N) <= 0.5 * cfg.rel_tol * abs(v)
        total, N = _refine(_nested_trapezoid(sampler, s), N0, cfg, "trapezoid rule", certify=certify)
    else:
        total, N = _refine(lambda N: _cell_quadrature(sampler, N, s), N0, cfg, "cell quadrature", MAX_CELL_GRID)
    # later calls on the same sampler (other constants) start one level below
    sampler.start_size = N // 2
    return total ** (1.0 / s)


def _direct_sup(sampler: _Sampler, cfg: QuadratureConfig) -> float:
    top = sampler.top_frequency(1e-8)
    N = min(_pow2_at_least(max(cfg.sup_grid, 16 * top)), MAX_GRID)
    if N < 4 * top:
        raise ConvergenceError(f"sup norm needs a grid above {MAX_GRID} points for frequencies up to {top}")
    v = np.abs(sampler.grid(N))
    peaks = np.nonzero((v >= np.roll(v, 1)) & (v >= np.roll(v, -1)))[0]
    top = peaks[np.argsort(v[peaks])[::-1][:3]]
    h = 2.0 * np.pi / N
    best = float(v.max())
    for i in top:
        t0 = i * h
        val = _newton_peak(sampler, t0, h) if sampler.is_series else None
        if val is None:
            _, val = golden_maximize(lambda t: abs(sampler.at(t)), t0 - h, t0 + h, _SUP_REFINE * h)
        best = max(best, val)
    return best


def _newton_peak(sampler: _Sampler, t0: float, h: float):
    """Local max of |f - constant| near grid peak t0 by Newton on f'; None if the step leaves [t0-h, t0+h]."""
    t = t0
    best = -math.inf
    for _ in range(12):
        f, d1, d2 = sampler.f.derivatives(t)
        g = f - sampler.constant
        best = max(best, abs(g))
        if d1 == 0.0:
            return best
        if d2 == 0.0 or g * d2 > 0.0:
            # not a maximum of |f| along this branch
            return None
        # the quadratic model's remaining gain; below rounding level we are done
        if 0.5 * d1 * d1 / abs(d2) <= 1e-15 * abs(g):
            return best
        t -= d1 / d2
        if abs(t - t0) > h:
            return None
    return None


def _envelope_finite(series: TailSeries, s: float, cfg: QuadratureConfig) -> float:
    def mean_power(N):
        return float(np.sum(np.abs(series.envelope_grid(N)) ** s)) / N

    N0 = _pow2_at_least(max(64, series.bandwidth(1e-6)))
    mean, _ = _refine(mean_power, N0, cfg, "envelope trapezoid rule")
    return cos_norm(s) * mean ** (1.0 / s)


def _norm_ceiling(series: TailSeries, order: NormOrder) -> float:
    """Upper estimate of the L_s norm from Parseval, the l1 sum and Hoelder."""
    sup = series.l1
    if order.is_inf:
        return sup
    s = order.value
    l2 = math.sqrt(math.pi * (float(np.sum(np.abs(series.coef) ** 2)) + series.l2_rest))
    if s <= 2.0:
        return (2.0 * math.pi) ** (1.0 / s - 0.5) * l2
    return min((2.0 * math.pi) ** (1.0 / s) * sup, l2 ** (2.0 / s) * sup ** (1.0 - 2.0 / s))


def _truncation_error(series: TailSeries, order: NormOrder, value: float) -> float:
    """Bound on how much the discarded coefficients can move the norm."""
    if order.is_inf:
        return series.l1_rest
    s = order.value
    l2 = math.sqrt(math.pi * series.l2_rest)
    if s == 2.0:
        return l2 * l2 / (2.0 * value) if value > 0.0 else l2
    if s > 2.0:
        return (2.0 * math.pi) ** (1.0 / s) * series.l1_rest
    return (2.0 * math.pi) ** (1.0 / s - 0.5) * l2


def ls_norm_with_route(f: Periodic, s: OrderLike, cfg: QuadratureConfig = None,
                       route: str = "auto", constant: float = 0.0, sampler: "_Sampler" = None):
    """``periodic_ls_norm`` that also reports which route produced the value.

    Passing the same ``sampler`` (built with ``make_sampler(f)``) across calls
    reuses its grids; only the constant changes between calls.
    """
    cfg = cfg or QuadratureConfig()
    order = NormOrder.of(s)
    if route not in ("auto", "direct", "envelope"):
        raise ValueError(f"unknown route {route!r}")
    is_series = isinstance(f, TailSeries)
    envelope_ok = is_series and not order.is_inf and constant == 0.0 and f.carrier_ready()
    if route == "envelope" and not envelope_ok:
        raise ValueError("the envelope route needs a finite order, no constant and a carrier-dominated tail series")
    use_envelope = envelope_ok and route != "direct"
    if is_series and (f.l1_rest > 0.0 or f.l2_rest > 0.0):
        # fail before any quadrature when even the largest possible norm
        # cannot absorb the discarded terms
        ceiling = _norm_ceiling(f, order) + abs(constant) * (2.0 * math.pi) ** order.inverse
        if not _truncation_error(f, order, ceiling) <= cfg.rel_tol * ceiling or math.isinf(ceiling):
            raise TruncationError(f"discarded kernel terms exceed the tolerance for every attainable L_{order} "
                                  f"norm; the {len(f)}-term series is too short")
    if use_envelope:
        value = _envelope_finite(f, order.value, cfg)
    else:
        if sampler is None:
            sampler = _Sampler(f, constant)
        else:
            sampler.constant = float(constant)
        value = _direct_sup(sampler, cfg) if order.is_inf else _direct_finite(sampler, order.value, cfg)
    if is_series:
        err = _truncation_error(f, order, value)
        if err > cfg.rel_tol * value:
            raise TruncationError(
                f"discarded kernel terms may change the L_{order} norm by {err:.3g} "
                f"(value {value:.3g}); the {len(f)}-term series is too short")
    return value, ("envelope" if use_envelope else "direct")


def periodic_ls_norm(f: Periodic, s: OrderLike, cfg: QuadratureConfig = None,
                     route: str = "auto", constant: float = 0.0) -> float:
    """L_s norm over [0, 2pi] of ``f - constant``.

    ``f`` is either a vectorised callable or a ``TailSeries`` (whose norm is
    then in the series' scaled units). Raises ``ConvergenceError`` when the
    refinement budget runs out and ``TruncationError`` when the series'
    discarded terms could exceed the requested tolerance.
    """
    return ls_norm_with_route(f, s, cfg, route, constant)[0]


def inverse_sqrt_norm(v: float, s: OrderLike) -> float:
    """``( int_0^v (t^2 + 1)^(-s/2) dt )^(1/s)``; 1 for the sup norm.

    Closed forms: asinh for s = 1 and, for s > 1, the incomplete Beta
    function after x = t^2 / (1 + t^2).
    """
    v = float(v)
    if not v > 0.0:
        raise ValueError(f"v must be > 0, got {v!r}")
    order = NormOrder.of(s)
    if order.is_inf:
        return 1.0
    p = order.value
    if p == 1.0:
        return math.asinh(v)
    b = 0.5 * (p - 1.0)
    x = v * v / (1.0 + v * v)
    whole = 0.5 * special.beta(0.5, b)
    if x < 0.5:
        integral = whole * special.betainc(0.5, b, x)
    else:
        integral = whole - _upper_piece(v, p)
    return integral ** (1.0 / p)


def _upper_piece(v: float, p: float) -> float:
    """``int_v^inf (t^2 + 1)^(-p/2) dt`` for p > 1, without cancellation."""
    b = 0.5 * (p - 1.0)
    return 0.5 * special.beta(0.5, b) * special.betainc(b, 0.5, 1.0 / (1.0 + v * v))


def inverse_sqrt_norm_limit(s: OrderLike) -> float:
    """The v -> inf limit of ``inverse_sqrt_norm``, via Gauss's theorem, for s > 1."""
    order = NormOrder.of(s)
    if order.is_inf:
        return 1.0
    p = order.value
    if not p > 1.0:
        raise ValueError(f"the integral over [0, inf) diverges for s <= 1 (got s={p!r})")
    return gauss_2f1(0.5, 0.5 * (3.0 - p), 1.5, 1.0) ** (1.0 / p)


def window_residual(alpha: float, r: float, s: float, n: int) -> float:
    """Normalised gap between the finite-window norm and its limit.

    With v = pi n^(1-r) / (alpha r) returns
    (inverse_sqrt_norm(v, s) - inverse_sqrt_norm_limit(s)) * (s - 1) * v^(s - 1),
    which stays in (-2, 2) once n is past the applicability threshold.
    """
    s = float(s)
    if not s > 1.0 or math.isinf(s):
        raise ValueError(f"s must be finite and > 1, got {s!r}")
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    v = math.pi * float(n) ** (1.0 - r) / (alpha * r)
    limit = inverse_sqrt_norm_limit(s)
    # J - L = L ((1 - tail / L^s)^(1/s) - 1), evaluated without cancellation
    gap = limit * math.expm1(math.log1p(-_upper_piece(v, s) / limit**s) / s)
    return gap * (s - 1.0) * v ** (s - 1.0)
