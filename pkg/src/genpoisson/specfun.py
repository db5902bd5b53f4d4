"""Scalar special functions for real arguments.

Gamma and Beta via a Lanczos approximation, the complete elliptic integral
of the first kind via the arithmetic-geometric mean, and the Gauss
hypergeometric series (with Gauss's closed form at z = 1).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .orders import NormOrder, OrderLike

# Lanczos g = 7, nine coefficients: ~15 significant digits for Re x > 0.5.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_SERIES_RTOL = 1e-16
_SERIES_QUIET_TERMS = 3
_SERIES_MAX_TERMS = 10**6


class ConvergenceError(ArithmeticError):
    """An iterative evaluation exhausted its budget without converging."""


def _lanczos_sum(x: float) -> float:
    # x here is the shifted argument (Gamma(x + 1))
    acc = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (x + i)
    return acc


def log_gamma(x: float) -> float:
    """``log(Gamma(x))`` for real ``x > 0``."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"log_gamma requires a finite x > 0, got {x!r}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (xm + 0.5) * math.log(t) - t + math.log(_lanczos_sum(xm))


def gamma_fn(x: float) -> float:
    """Euler's Gamma function for real ``x > 0``."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"gamma_fn requires a finite x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    if x > 140.0:
        return math.exp(log_gamma(x))
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    # split the power so t**(xm + 0.5) cannot overflow before exp(-t) is applied
    half = t ** (0.5 * (xm + 0.5))
    return math.sqrt(2.0 * math.pi) * half * math.exp(-t) * half * _lanczos_sum(xm)


def beta_fn(x: float, y: float) -> float:
    """Euler's Beta function ``Gamma(x) Gamma(y) / Gamma(x + y)``."""
    if not (x > 0.0 and y > 0.0):
        raise ValueError(f"beta_fn requires x, y > 0, got ({x!r}, {y!r})")
    if x + y < 100.0:
        return gamma_fn(x) * gamma_fn(y) / gamma_fn(x + y)
    return math.exp(log_gamma(x) + log_gamma(y) - log_gamma(x + y))


def elliptic_k(q: float) -> float:
    """Complete elliptic integral of the first kind, modulus ``q`` in [0, 1).

    K(q) = pi / (2 * AGM(1, sqrt(1 - q^2))).
    """
    q = float(q)
    if not 0.0 <= q < 1.0:
        raise ValueError(f"elliptic_k requires 0 <= q < 1, got {q!r}")
    a, b = 1.0, math.sqrt((1.0 - q) * (1.0 + q))
    for _ in range(64):
        if abs(a - b) <= 1e-15 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    else:  # pragma: no cover - quadratic convergence makes this unreachable
        raise ConvergenceError("AGM iteration did not converge")
    return math.pi / (a + b)


class HypergeometricArgs(NamedTuple):
    a: float
    b: float
    c: float
    z: float


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0.0 and float(x).is_integer()


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function F(a, b; c; z) for real arguments.

    |z| < 1 is summed directly; z == 1 uses Gauss's Gamma-quotient theorem
    and needs ``c - a - b > 0``. Also accepts a single ``HypergeometricArgs``.
    """
    if _is_nonpositive_integer(c):
        raise ValueError(f"c must not be zero or a negative integer, got {c!r}")
    if z == 1.0:
        excess = c - a - b
        if not excess > 0.0:
            raise ValueError(f"F(a,b;c;1) diverges unless c - a - b > 0 (got {excess!r})")
        args = (c, excess, c - a, c - b)
        if min(args) <= 0.0:
            raise ValueError("Gauss closed form here needs positive Gamma arguments")
        if max(args) < 100.0:
            return gamma_fn(c) * gamma_fn(excess) / (gamma_fn(c - a) * gamma_fn(c - b))
        return math.exp(log_gamma(c) + log_gamma(excess) - log_gamma(c - a) - log_gamma(c - b))
    if not abs(z) < 1.0:
        raise ValueError(f"series branch requires |z| < 1, got z={z!r}")

    total = 1.0
    term = 1.0
    quiet = 0
    for k in range(_SERIES_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if abs(term) < _SERIES_RTOL * abs(total):
            quiet += 1
            if quiet >= _SERIES_QUIET_TERMS:
                return total
        else:
            quiet = 0
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {z}) series did not converge in {_SERIES_MAX_TERMS} terms")


def hyp2f1(args: HypergeometricArgs) -> float:
    return gauss_2f1(*args)


def cos_norm(s: OrderLike) -> float:
    """L_s norm of cos over one period; 1 for the sup norm."""
    order = NormOrder.of(s)
    if order.is_inf:
        return 1.0
    p = order.value
    # int_0^{2pi} |cos t|^p dt = 2 sqrt(pi) Gamma((p+1)/2) / Gamma(p/2 + 1)
    log_integral = math.log(2.0 * math.sqrt(math.pi)) + log_gamma(0.5 * (p + 1.0)) - log_gamma(0.5 * p + 1.0)
    return math.exp(log_integral / p)


class PoissonConstant(NamedTuple):
    """``value`` from the hypergeometric form, ``quadrature`` from the norm itself."""

    value: float
    quadrature: float


def _poisson_profile_norm(s: float, q: float, rel_tol: float = 1e-13) -> float:
    # || (1 - 2 q cos t + q^2)^(-1/2) ||_s ; integrand analytic and periodic,
    # so the plain trapezoid rule converges geometrically
    prev = None
    n = 64
    while n <= 2**22:
        t = np.arange(n) * (2.0 * np.pi / n)
        vals = (1.0 - 2.0 * q * np.cos(t) + q * q) ** (-0.5 * s)
        cur = (2.0 * np.pi / n) * float(np.sum(vals))
        if prev is not None and abs(cur - prev) <= rel_tol * cur:
            return cur ** (1.0 / s)
        prev = cur
        n *= 2
    raise ConvergenceError(f"profile norm quadrature did not converge for q={q}")


def k_sq_constant(s: OrderLike, q: float) -> PoissonConstant:
    """The constant 2^{-1-1/s} || (1 - 2q cos t + q^2)^{-1/2} ||_s, finite s.

    Returned as ``(hypergeometric value, quadrature value)``; at s = 1 it
    coincides with ``elliptic_k(q)``.
    """
    order = NormOrder.of(s)
    if order.is_inf:
        raise ValueError("k_sq_constant is defined here for finite s only")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    p = order.value
    hyper = 0.5 * math.pi ** (1.0 / p) * gauss_2f1(0.5 * p, 0.5 * p, 1.0, q * q) ** (1.0 / p)
    quad = 2.0 ** (-1.0 - 1.0 / p) * _poisson_profile_norm(p, q)
    return PoissonConstant(hyper, quad)
