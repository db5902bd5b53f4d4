"""Generalized Poisson kernels and their tails.

Every tail quantity is carried in factored form: a value scaled by
``exp(w * alpha * n**r)`` together with ``log_scale = -w * alpha * n**r``.
At the orders where the asymptotics become interesting the raw values sit
far below double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import mpmath
import numpy as np

TAIL_RTOL = 1e-18
MAX_TAIL_TERMS = 2**25
MAX_SERIES_TERMS = 2**22
_FIRST_BLOCK = 1024
_MAX_BLOCK = 2**21


class TruncationError(ArithmeticError):
    """A kernel series cannot be truncated within the configured term budget."""


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    r: float
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "r", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha!r}")
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise ValueError(f"r must be finite and > 0, got {self.r!r}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta!r}")

    @property
    def phase(self) -> float:
        return 0.5 * math.pi * self.beta

    def log_scale(self, n: int) -> float:
        return -self.alpha * float(n) ** self.r


class Scaled(NamedTuple):
    """``value * exp(log_scale)`` is the represented quantity."""

    value: float
    log_scale: float

    @property
    def raw(self) -> float:
        return self.value * math.exp(self.log_scale)


def _check_order(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"truncation index must be an integer >= 1, got {n!r}")
    return int(n)


def power_gap(n: int, j, r: float):
    """``(n + j)**r - n**r`` without cancellation, for j >= 0 (scalar or array)."""
    nf = float(n)
    return nf**r * np.expm1(r * np.log1p(np.asarray(j, dtype=float) / nf))


def _remainder_bound(c: float, r: float, n: int, last: int) -> float:
    """Upper bound on sum_{k > last} exp(-c (k^r - n^r)).

    The terms decrease, so the sum is dominated by the integral from ``last``;
    with u = t^r and a = 1/r - 1, log(u/U) <= (u-U)/U gives the closed form
    U^a exp(-c(U - n^r)) / (r (c - a+/U)), valid when c > a+/U.
    """
    u = float(last) ** r
    a = max(1.0 / r - 1.0, 0.0)
    rate = c - a / u
    if rate <= 0.0:
        return math.inf
    log_b = a * math.log(u) - c * float(power_gap(n, last - n, r)) - math.log(r * rate)
    return math.exp(log_b) if log_b < 700.0 else math.inf


def _euler_maclaurin_tail(c: float, r: float, n: int, start: int) -> float:
    """sum_{k >= start} exp(-c (k^r - n^r)) via Euler-Maclaurin (two corrections)."""
    with mpmath.workdps(30):
        a = mpmath.mpf(1) / r
        x = mpmath.mpf(start)
        shift = c * mpmath.mpf(n) ** r
        integral = a * mpmath.mpf(c) ** (-a) * mpmath.gammainc(a, c * x**r) * mpmath.exp(shift)
        f = mpmath.exp(-c * x**r + shift)
        g1 = -c * r * x ** (r - 1)
        g2 = -c * r * (r - 1) * x ** (r - 2)
        g3 = -c * r * (r - 1) * (r - 2) * x ** (r - 3)
        d1 = g1 * f
        d3 = (g3 + 3 * g1 * g2 + g1**3) * f
        total = integral + f / 2 - d1 / 12 + d3 / 720
        return float(total)


def tail_sum(params: KernelParams, n: int, weight: float = 1.0, rtol: float = TAIL_RTOL,
             max_terms: int = MAX_TAIL_TERMS) -> Scaled:
    """``sum_{k >= n} exp(-weight * alpha * k**r)`` in scaled form.

    Terms are accumulated in blocks until the integral-comparison bound on
    what is left falls below ``rtol`` times the running sum. Beyond
    ``max_terms`` the remainder is closed with Euler-Maclaurin.
    """
    n = _check_order(n)
    if not weight > 0.0:
        raise ValueError(f"weight must be > 0, got {weight!r}")
    c = weight * params.alpha
    r = params.r
    partials = []
    total = 0.0
    done = 0
    block = _FIRST_BLOCK
    while True:
        j = np.arange(done, done + block, dtype=float)
        partials.append(float(np.sum(np.exp(-c * power_gap(n, j, r)))))
        total = math.fsum(partials)
        done += block
        if _remainder_bound(c, r, n, n + done - 1) <= rtol * total:
            break
        if done >= max_terms:
            partials.append(_euler_maclaurin_tail(c, r, n, n + done))
            total = math.fsum(partials)
            break
        block = min(2 * block, _MAX_BLOCK, max_terms - done)
    return Scaled(total, -c * float(n) ** r)


def series_length(params: KernelParams, n: int, rtol: float = TAIL_RTOL,
                  max_terms: int = MAX_SERIES_TERMS) -> int:
    """Number of kernel terms kept from k = n on, by the tail_sum stopping rule."""
    n = _check_order(n)
    c, r = params.alpha, params.r
    # a partial sum is a lower bound on the total, which only makes the rule stricter
    total = tail_sum(params, n, 1.0, rtol=1e-3).value

    def enough(length):
        return _remainder_bound(c, r, n, n + length - 1) <= rtol * total

    hi = 64
    while not enough(hi):
        if hi >= max_terms:
            return max_terms
        hi = min(2 * hi, max_terms)
    lo = hi // 2
    if enough(lo):
        return lo if lo >= 1 else 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if enough(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _unit_phases(step: float, m: int) -> np.ndarray:
    """``exp(i step j)`` for j < m, as an outer product of two short tables."""
    width = max(1, math.isqrt(m))
    rows = -(-m // width)
    return np.outer(np.exp(1j * (width * step) * np.arange(rows)), np.exp(1j * step * np.arange(width))).ravel()[:m]


@dataclass(frozen=True)
class TailSeries:
    """A real trigonometric series ``Re sum_j coef[j] exp(i (start + j) t)``.

    ``l1_rest`` and ``l2_rest`` bound ``sum |coef|`` and ``sum |coef|^2`` over
    the discarded indices. ``decay`` is ``-log|coef[1]/coef[0]|`` of the
    generating kernel; it controls how far the spectrum stays from zero
    relative to the carrier ``start``.
    """

    start: int
    coef: np.ndarray = field(repr=False)
    l1_rest: float = 0.0
    l2_rest: float = 0.0
    decay: float = 0.0
    log_scale: float = 0.0

    def __len__(self) -> int:
        return len(self.coef)

    @property
    def stop(self) -> int:
        return self.start + len(self.coef)

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.coef))) + self.l1_rest

    def frequencies(self) -> np.ndarray:
        return self.start + np.arange(len(self.coef), dtype=float)

    def __call__(self, t):
        """Pointwise evaluation (direct sum; O(len) work per point)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.arange(len(self.coef), dtype=float)
        out = np.empty(t_arr.shape)
        for idx, tv in np.ndenumerate(t_arr):
            carrier = complex(math.cos(self.start * tv), math.sin(self.start * tv))
            out[idx] = (carrier * np.dot(self.coef, np.exp(1j * j * tv))).real
        return out if np.ndim(t) else float(out[0])

    def derivatives(self, t: float):
        """``(f, f', f'')`` at a scalar t in one pass over the coefficients."""
        k = self.frequencies()
        z = self.coef * np.exp(1j * (k * t))
        return float(np.sum(z.real)), float(-np.dot(k, z.imag)), float(-np.dot(k * k, z.real))

    def _folded(self, N: int, offset: float, include_carrier: bool, twisted: bool = False) -> np.ndarray:
        """Coefficients summed by frequency modulo N.

        ``twisted`` weights frequency k by (-1)**(k // N), i.e. folds modulo
        2N and subtracts the upper half.
        """
        m = len(self.coef)
        first = self.start if include_carrier else 0
        c = self.coef if self.coef.dtype == complex else self.coef.astype(complex)
        if offset:
            c = c * _unit_phases(offset, m) * complex(math.cos(first * offset), math.sin(first * offset))
        lead = first % (2 * N if twisted else N)
        total = -(-(lead + m) // N) * N
        buf = np.zeros(total, dtype=complex)
        buf[lead:lead + m] = c
        if total == N:
            return buf
        rows = buf.reshape(-1, N)
        if twisted:
            return rows[0::2].sum(axis=0) - rows[1::2].sum(axis=0)
        return rows.sum(axis=0)

    @staticmethod
    def _real_samples(acc: np.ndarray) -> np.ndarray:
        # real part of N * ifft(acc): symmetrise the spectrum, half-length transform
        N = len(acc)
        half = N // 2 + 1
        herm = acc[:half].copy()
        herm[1:] += np.conj(acc[:N - half:-1])
        herm[0] += np.conj(acc[0])
        herm *= 0.5 * N
        return np.fft.irfft(herm, n=N)

    def grid(self, N: int, offset: float = 0.0) -> np.ndarray:
        """Exact samples at ``2 pi m / N + offset`` (aliasing-free folding)."""
        return self._real_samples(self._folded(N, offset, include_carrier=True))

    def midpoint_grid(self, N: int) -> np.ndarray:
        """Exact samples at ``2 pi (m + 1/2) / N``.

        The half-step phase exp(i pi k / N) splits into a sign per block of N
        frequencies and a factor that depends on k mod N only, so it is applied
        after folding.
        """
        acc = self._folded(N, 0.0, include_carrier=True, twisted=True)
        return self._real_samples(acc * _unit_phases(np.pi / N, N))

    def midpoint_grids(self, N: int):
        """Yield midpoint_grid(N), midpoint_grid(2N), ... from one shared fold chain.

        The fold modulo L is the sum of the two halves of the fold modulo 2L
        and the twisted fold is their difference, so a single pass over the
        coefficients serves every level. Each level is released once used.
        """
        m = len(self.coef)
        top = 2 * N
        while top < m:
            top *= 2
        lead = self.start % top
        fold = np.zeros(top, dtype=complex)
        fit = min(m, top - lead)
        fold[lead:lead + fit] = self.coef[:fit]
        fold[:m - fit] += self.coef[fit:]
        chain = [fold]
        del fold
        while len(chain[-1]) > 2 * N:
            half = len(chain[-1]) // 2
            chain.append(chain[-1][:half] + chain[-1][half:])
        L = N
        while chain:
            fold = chain.pop()
            L = len(fold) // 2
            acc = fold[:L] - fold[L:]
            del fold
            yield self._real_samples(acc * _unit_phases(np.pi / L, L))
        while True:
            L *= 2
            yield self.midpoint_grid(L)

    def envelope_grid(self, N: int, offset: float = 0.0) -> np.ndarray:
        """Complex samples of ``sum_j coef[j] exp(i j t)`` (carrier removed)."""
        acc = self._folded(N, offset, include_carrier=False)
        return np.fft.ifft(acc) * N

    def bandwidth(self, rel: float) -> int:
        """Smallest J with |coef[j]| <= rel * max|coef| for all j >= J."""
        mag = np.abs(self.coef)
        big = np.nonzero(mag > rel * mag.max())[0]
        return int(big[-1]) + 1 if len(big) else 1

    def shifted_difference(self, h: float) -> "TailSeries":
        """Series of ``f(t) - f(t + h)``."""
        k = self.frequencies()
        factor = 1.0 - np.exp(1j * k * h)
        return replace(self, coef=self.coef * factor, l1_rest=2.0 * self.l1_rest, l2_rest=4.0 * self.l2_rest)

    def multiplied(self, factor: np.ndarray) -> "TailSeries":
        """Coefficient-wise multiplier with |factor| <= 1 (convolution by a unit-mass function)."""
        return replace(self, coef=self.coef * factor)

    def carrier_ready(self) -> bool:
        """Whether the spectrum is narrow enough, relative to its carrier, for carrier averaging.

        All kept frequencies must lie below 3 * start and the kernel's decay
        per index times start (its log-distance to the first harmonic) must
        exceed 40.
        """
        return len(self.coef) <= 2 * self.start and self.decay * self.start >= 40.0


def tail_series(params: KernelParams, n: int, rtol: float = TAIL_RTOL,
                max_terms: int = MAX_SERIES_TERMS) -> TailSeries:
    """Scaled coefficients of the kernel tail starting at frequency ``n``.

    Truncation follows the ``tail_sum`` rule with weight 1. When the rule is
    not met within ``max_terms`` the series keeps ``max_terms`` terms and
    records bounds on the discarded mass so callers can judge the error.
    """
    n = _check_order(n)
    length = series_length(params, n, rtol, max_terms)
    j = np.arange(length, dtype=float)
    w = np.exp(-params.alpha * power_gap(n, j, params.r))
    last = n + length - 1
    l1_rest = _remainder_bound(params.alpha, params.r, n, last)
    l2_rest = _remainder_bound(2.0 * params.alpha, params.r, n, last)
    decay = params.alpha * float(power_gap(n, 1, params.r))
    coef = w * complex(math.cos(params.phase), -math.sin(params.phase))
    return TailSeries(n, coef, l1_rest, l2_rest, decay, params.log_scale(n))


def kernel_tail_eval(params: KernelParams, n: int, t) -> Scaled:
    """The kernel tail at ``t`` (scalar or array) as ``(Q(t), -alpha n^r)``."""
    series = tail_series(params, n)
    kept = float(np.sum(np.abs(series.coef)))
    if not series.l1_rest <= 1e-12 * kept:
        raise TruncationError(
            f"kernel tail for {params} at n={n} needs more than {len(series)} terms")
    return Scaled(series(t), series.log_scale)


def poisson_closed_form(q: float, beta: float, t):
    """Abel-summed ``sum_{k>=1} q^k cos(k t - beta pi / 2)`` for 0 < q < 1."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    phi = 0.5 * math.pi * beta
    t = np.asarray(t, dtype=float)
    out = (q * np.cos(t - phi) - q * q * math.cos(phi)) / (1.0 - 2.0 * q * np.cos(t) + q * q)
    return out if out.ndim else float(out)
