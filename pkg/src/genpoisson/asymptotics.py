"""Closed-form asymptotic estimates for the worst-case Fourier-sum error.

Every estimate is written as

    error = exp(-alpha n^r) * (main_term + gamma * envelope_unit)

with an explicit bound on |gamma| where one is known. ``main_term`` and
``envelope_unit`` are stored in scaled units (the exponential factor is
carried separately as ``log_scale``), so an implied coefficient is simply
(bound - main_term) / envelope_unit.

Formula ids:

  window        finite-window integral form, valid for every s in [1, inf]
  limit         window integral replaced by its limit, 1 < s < inf
  l2            s = 2 specialisation of ``limit``
  l2_refined    sharper s = 2 form derived from the exact s = 2 value
  l1_log        logarithmic s = 1 form
  uniform_p     sup-norm error on the class generated by the L_p ball, 1 < p < inf
  classical_l1, classical_sup   earlier 0 < r < 1 results without constants
  nikolsky, stechkin, ls_r1, unified     r = 1 results
  stepanets, telyakovsky, ls_rlarge      r > 1 results
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import mpmath

from .kernel import KernelParams, Scaled, power_gap, tail_sum
from .norms import inverse_sqrt_norm, inverse_sqrt_norm_limit
from .orders import NormOrder, OrderLike
from .specfun import cos_norm, elliptic_k, gauss_2f1, k_sq_constant

WINDOW_GAMMA = (14.0 * math.pi) ** 2
L2_GAMMA = 392.0 * math.pi**2.5
L2_REFINED_GAMMA = math.sqrt(54.0 * math.pi**3 / (54.0 * math.pi**3 - 1.0))
L1_LOG_GAMMA = 20.0 * math.pi**4
STEPANETS_GAMMA = 2.0


@dataclass(frozen=True)
class AsymptoticEstimate:
    formula_id: str
    main_term: float
    envelope_unit: float
    gamma_bound: Optional[float]
    applicable: bool
    threshold_used: Optional[int]
    log_scale: float
    extras: dict = field(default_factory=dict, compare=False)

    def implied_gamma(self, value: float) -> float:
        """Coefficient that makes ``main_term + gamma * envelope_unit`` equal ``value``."""
        if self.envelope_unit > 0.0:
            return (value - self.main_term) / self.envelope_unit
        return 0.0 if value == self.main_term else math.copysign(math.inf, value - self.main_term)

    def within(self, value: float, slack: float = 0.0) -> bool:
        if self.gamma_bound is None:
            return True
        return abs(self.implied_gamma(value)) <= self.gamma_bound * (1.0 + slack)


class SigmaXi(NamedTuple):
    sigma: int
    xi: int


def sigma_xi(s: OrderLike) -> SigmaXi:
    """Exponent of (1 - q) and on/off switch of the r = 1 remainder terms."""
    order = NormOrder.of(s)
    return SigmaXi(1 if order.value == 1.0 else 2, 0 if order.value == 2.0 else 1)


def _check_fractional(alpha: float, r: float):
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    if not 0.0 < r < 1.0:
        raise ValueError(f"this formula needs 0 < r < 1, got r={r!r}")


def _check_order(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    return int(n)


# ---------------------------------------------------------------- thresholds

_WORK_DPS = 40


def _n0_rhs(p: NormOrder):
    if p.value == 1.0:
        return mpmath.mpf(1) / 14
    base = 1 / (3 * mpmath.pi) ** 3
    if p.is_inf:
        return base
    return base * (mpmath.mpf(p.value) - 1) / mpmath.mpf(p.value)


def _n0_lhs(alpha, r, chi, n):
    ar = mpmath.mpf(alpha) * mpmath.mpf(r)
    n = mpmath.mpf(n)
    return n ** (-mpmath.mpf(r)) / ar + ar * chi * n ** (mpmath.mpf(r) - 1)


def n0_holds(alpha: float, r: float, p: OrderLike, n: int) -> bool:
    """Whether the first applicability inequality holds at n."""
    order = NormOrder.of(p)
    with mpmath.workdps(_WORK_DPS):
        chi = mpmath.mpf(1) if order.is_inf else mpmath.mpf(order.value)
        return _n0_lhs(alpha, r, chi, n) <= _n0_rhs(order)


def _n1_lhs(alpha, r, n):
    ar = mpmath.mpf(alpha) * mpmath.mpf(r)
    n = mpmath.mpf(n)
    r = mpmath.mpf(r)
    v = mpmath.pi * n ** (1 - r) / ar
    return n ** (-r) * (1 + mpmath.log(v)) / ar + ar * n ** (r - 1)


def n1_holds(alpha: float, r: float, n: int) -> bool:
    """Whether the logarithmic applicability inequality holds at n."""
    with mpmath.workdps(_WORK_DPS):
        return _n1_lhs(alpha, r, n) <= 1 / (3 * mpmath.pi) ** 3


def _first_true(pred, lo: int) -> int:
    """Smallest n >= lo with pred(n), for pred monotone (False ... True) on [lo, inf)."""
    if pred(lo):
        return lo
    step = 1
    hi = lo + step
    while not pred(hi):
        lo = hi
        step *= 2
        hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=4096)
def _threshold_n0(alpha: float, r: float, p: NormOrder) -> int:
    return _first_true(lambda n: n0_holds(alpha, r, p, n), 1)


def threshold_n0(alpha: float, r: float, p: OrderLike) -> int:
    """Smallest n from which the window, limit and uniform_p estimates are asserted.

    The left side (alpha r)^-1 n^-r + alpha r chi(p) n^(r-1) decreases strictly
    in n, so a doubling bracket and bisection give the exact integer; the
    comparison itself is done in 40-digit arithmetic.
    """
    _check_fractional(alpha, r)
    return _threshold_n0(float(alpha), float(r), NormOrder.of(p))


_LINEAR_SCAN_CAP = 100_000


@lru_cache(maxsize=4096)
def _threshold_n1(alpha: float, r: float) -> int:
    # the left side is a sum of a strictly decreasing term and a term that
    # increases up to ln n = ((1 - 2r)/r - ln(pi/(alpha r))) / (1 - r) and
    # decreases after it
    turn = ((1.0 - 2.0 * r) / r - math.log(math.pi / (alpha * r))) / (1.0 - r)
    burn_in = math.exp(min(turn, 60.0)) if turn > 0.0 else 1.0
    with mpmath.workdps(_WORK_DPS):
        rhs = 1 / (3 * mpmath.pi) ** 3
        first = mpmath.mpf(1) / (mpmath.mpf(alpha) * mpmath.mpf(r))
        last = min(math.ceil(burn_in), _LINEAR_SCAN_CAP)
        for n in range(1, last + 1):
            if _n1_lhs(alpha, r, n) <= rhs:
                return n
        if burn_in > last:
            # the rising term alone exceeds the bound on [last, burn_in]
            rising = first * mpmath.mpf(last) ** (-mpmath.mpf(r)) * (1 + mpmath.log(mpmath.pi * mpmath.mpf(last) ** (1 - mpmath.mpf(r)) * first))
            if rising <= rhs:  # pragma: no cover - only for extreme parameters
                raise ArithmeticError("n1 search region too large for a linear scan")
    return _first_true(lambda n: n1_holds(alpha, r, n), max(1, math.ceil(burn_in)))


def threshold_n1(alpha: float, r: float) -> int:
    """Smallest n from which the logarithmic s = 1 estimate is asserted."""
    _check_fractional(alpha, r)
    return _threshold_n1(float(alpha), float(r))


# ---------------------------------------------------------------- 0 < r < 1


def _window_argument(alpha: float, r: float, n: int) -> float:
    return math.pi * float(n) ** (1.0 - r) / (alpha * r)


def window_estimate(params: KernelParams, n: int, s: OrderLike) -> AsymptoticEstimate:
    """Main term with the finite-window integral, any s in [1, inf]."""
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    order = NormOrder.of(s)
    inv_s = order.inverse
    inv_c = 1.0 - inv_s  # 1/s'
    ar = a * r
    j = inverse_sqrt_norm(_window_argument(a, r, n), order)
    grow = float(n) ** ((1.0 - r) * inv_c)
    main = grow * cos_norm(order) * math.pi ** (-(1.0 + inv_s)) * ar ** (-inv_c) * j
    env = grow * (ar ** (-(1.0 + inv_c)) * j * float(n) ** (-r) + 1.0 / grow)
    thr = threshold_n0(a, r, order.conjugate)
    return AsymptoticEstimate("window", main, env, WINDOW_GAMMA, n >= thr, thr, params.log_scale(n),
                              {"window_norm": j})


def limit_estimate(params: KernelParams, n: int, s: OrderLike) -> AsymptoticEstimate:
    """Window integral replaced by its v -> inf limit, 1 < s < inf."""
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    order = NormOrder.of(s)
    if order.is_inf or order.value == 1.0:
        raise ValueError(f"limit estimate needs 1 < s < inf, got s={order}")
    sv = order.value
    inv_c = 1.0 - 1.0 / sv
    sc = order.conjugate.value
    ar = a * r
    grow = float(n) ** ((1.0 - r) * inv_c)
    main = grow * cos_norm(order) * math.pi ** (-(1.0 + 1.0 / sv)) * ar ** (-inv_c) * inverse_sqrt_norm_limit(order)
    env = grow * ((1.0 + ar ** ((sv - 1.0) * inv_c) / (sv - 1.0)) / grow
                  + sc ** (1.0 / sv) * ar ** (-(1.0 + inv_c)) * float(n) ** (-r))
    thr = threshold_n0(a, r, order.conjugate)
    return AsymptoticEstimate("limit", main, env, WINDOW_GAMMA, n >= thr, thr, params.log_scale(n))


def _l2_prefactor(params: KernelParams, n: int) -> float:
    return float(n) ** ((1.0 - params.r) / 2.0) / math.sqrt(2.0 * math.pi * params.alpha * params.r)


def l2_estimate(params: KernelParams, n: int) -> AsymptoticEstimate:
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    ar = a * r
    main = _l2_prefactor(params, n)
    env = main * ((ar + math.sqrt(ar)) * float(n) ** (-(1.0 - r) / 2.0) + math.sqrt(2.0) / ar * float(n) ** (-r))
    thr = threshold_n0(a, r, 2.0)
    return AsymptoticEstimate("l2", main, env, L2_GAMMA, n >= thr, thr, params.log_scale(n))


def l2_exact(params: KernelParams, n: int) -> Scaled:
    """The exact s = 2 worst-case error, (pi^-1 sum_{k>=n} exp(-2 alpha k^r))^(1/2)."""
    n = _check_order(n)
    total = tail_sum(params, n, 2.0)
    return Scaled(math.sqrt(total.value / math.pi), 0.5 * total.log_scale)


def l2_refined_estimate(params: KernelParams, n: int) -> AsymptoticEstimate:
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    ar = a * r
    main = _l2_prefactor(params, n)
    env = main * (float(n) ** (-r) / (2.0 * ar) + ar * float(n) ** (-(1.0 - r)))
    thr = threshold_n0(a, r, 2.0)
    return AsymptoticEstimate("l2_refined", main, env, L2_REFINED_GAMMA, n >= thr, thr, params.log_scale(n))


def l1_log_estimate(params: KernelParams, n: int) -> AsymptoticEstimate:
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    main = 4.0 / math.pi**2 * math.log(_window_argument(a, r, n))
    thr = threshold_n1(a, r)
    return AsymptoticEstimate("l1_log", main, 1.0, L1_LOG_GAMMA, n >= thr, thr, params.log_scale(n))


def uniform_p_estimate(params: KernelParams, n: int, p: OrderLike) -> AsymptoticEstimate:
    """Sup-norm error on the class generated by the unit L_p ball, 1 < p < inf."""
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    order = NormOrder.of(p)
    if order.is_inf or order.value == 1.0:
        raise ValueError(f"uniform_p estimate needs 1 < p < inf, got p={order}")
    pv = order.value
    pc = order.conjugate.value
    ar = a * r
    grow = float(n) ** ((1.0 - r) / pv)
    hyper = gauss_2f1(0.5, 0.5 * (3.0 - pc), 1.5, 1.0) ** (1.0 / pc)
    main = grow * cos_norm(pc) * math.pi ** (-(1.0 + 1.0 / pc)) * ar ** (-1.0 / pv) * hyper
    env = grow * ((1.0 + ar ** ((pc - 1.0) / pv) / (pc - 1.0)) / grow
                  + pv ** (1.0 / pc) * ar ** (-(1.0 + 1.0 / pv)) * float(n) ** (-r))
    thr = threshold_n0(a, r, order)
    return AsymptoticEstimate("uniform_p", main, env, WINDOW_GAMMA, n >= thr, thr, params.log_scale(n))


def classical_l1_estimate(params: KernelParams, n: int) -> AsymptoticEstimate:
    """Earlier s = 1 result: (4/pi^2) ln n^(1-r) with an O(1) remainder of unknown size."""
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    main = 4.0 / math.pi**2 * (1.0 - r) * math.log(n)
    return AsymptoticEstimate("classical_l1", main, 1.0, None, True, 1, params.log_scale(n))


def classical_sup_estimate(params: KernelParams, n: int) -> AsymptoticEstimate:
    """Earlier s = inf result: n^(1-r)/(pi alpha r) with an O(1) remainder of unknown size."""
    a, r = params.alpha, params.r
    _check_fractional(a, r)
    n = _check_order(n)
    ar = a * r
    grow = float(n) ** (1.0 - r)
    main = grow / (math.pi * ar)
    env = grow * (float(n) ** (-r) / ar**2 + 1.0 / grow)
    return AsymptoticEstimate("classical_sup", main, env, None, True, 1, params.log_scale(n))


# ---------------------------------------------------------------- r = 1

R1_VARIANTS = ("nikolsky", "stechkin", "ls_r1", "unified")


def historical_r1(s: OrderLike, alpha: float, n: int, variant: str) -> AsymptoticEstimate:
    """Known r = 1 results (q = exp(-alpha)); their O(1) constants are not explicit."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    n = _check_order(n)
    order = NormOrder.of(s)
    q = math.exp(-alpha)
    one_q = -math.expm1(-alpha)
    sigma, xi = sigma_xi(order)
    extras = {}
    if variant in ("nikolsky", "stechkin"):
        if order.value != 1.0:
            raise ValueError(f"{variant} covers s = 1 only, got s={order}")
        main = 8.0 / math.pi**2 * elliptic_k(q)
        env = 1.0 / n if variant == "nikolsky" else q / (one_q * n)
    elif variant == "ls_r1":
        if order.is_inf:
            kconst = 0.5 / one_q  # half the sup of (1 - 2q cos t + q^2)^(-1/2)
        else:
            kconst = k_sq_constant(order, q).value
        main = 2.0 * math.pi ** (-(1.0 + order.inverse)) * cos_norm(order) * kconst
        env = q / (n * one_q**sigma)
    elif variant == "unified":
        if order.is_inf:
            main = 1.0 / (math.pi * one_q)
            env = q / (n * one_q**2)
        else:
            sv = order.value
            main = cos_norm(order) / math.pi * gauss_2f1(0.5 * sv, 0.5 * sv, 1.0, q * q) ** (1.0 / sv)
            env = xi * q / (n * one_q**sigma)
            # value with the hypergeometric argument exp(-alpha) instead of exp(-2 alpha)
            extras["main_term_printed_argument"] = cos_norm(order) / math.pi * gauss_2f1(0.5 * sv, 0.5 * sv, 1.0, q) ** (1.0 / sv)
    else:
        raise ValueError(f"unknown r = 1 variant {variant!r}; expected one of {R1_VARIANTS}")
    extras["unbounded_constant"] = True
    return AsymptoticEstimate(variant, main, env, None, True, 1, -alpha * n, extras)


# ---------------------------------------------------------------- r > 1

R_LARGE_VARIANTS = ("stepanets", "telyakovsky", "ls_rlarge")


def historical_r_large(params: KernelParams, n: int, variant: str, s: OrderLike = 1) -> AsymptoticEstimate:
    """Known r > 1 results; only the first carries an explicit remainder constant."""
    a, r = params.alpha, params.r
    if not r > 1.0:
        raise ValueError(f"these formulas need r > 1, got r={r!r}")
    n = _check_order(n)
    order = NormOrder.of(s)
    x = a * r * float(n) ** (r - 1.0)
    shallow = (1.0 + 1.0 / x) * math.exp(-x)
    extras = {}
    if variant == "stepanets":
        if order.value != 1.0:
            raise ValueError("stepanets covers s = 1 only")
        main, env, gamma = 4.0 / math.pi, shallow, STEPANETS_GAMMA
    elif variant == "telyakovsky":
        if order.value != 1.0:
            raise ValueError("telyakovsky covers s = 1 only")
        # both remainder terms relative to exp(-alpha n^r)
        far = math.exp(-2.0 * a * float(power_gap(n, 1, r)))
        near = (1.0 + 1.0 / (a * r * float(n + 2) ** r)) * math.exp(-a * float(power_gap(n, 2, r)))
        main, env, gamma = 4.0 / math.pi, far + near, None
        extras["unbounded_constant"] = True
    elif variant == "ls_rlarge":
        main, env, gamma = cos_norm(order) / math.pi, shallow, None
        extras["unbounded_constant"] = True
    else:
        raise ValueError(f"unknown r > 1 variant {variant!r}; expected one of {R_LARGE_VARIANTS}")
    return AsymptoticEstimate(variant, main, env, gamma, True, 1, params.log_scale(n), extras)


# ---------------------------------------------------------------- registry

FORMULA_IDS = (
    "window", "limit", "l2", "l2_refined", "l1_log", "uniform_p", "classical_l1", "classical_sup",
    "nikolsky", "stechkin", "ls_r1", "unified", "stepanets", "telyakovsky", "ls_rlarge",
)


def estimate(formula_id: str, params: KernelParams, n: int, s: OrderLike = 2) -> AsymptoticEstimate:
    """Evaluate any formula by id; ``s`` doubles as p for ``uniform_p``."""
    if formula_id == "window":
        return window_estimate(params, n, s)
    if formula_id == "limit":
        return limit_estimate(params, n, s)
    if formula_id == "l2":
        return l2_estimate(params, n)
    if formula_id == "l2_refined":
        return l2_refined_estimate(params, n)
    if formula_id == "l1_log":
        return l1_log_estimate(params, n)
    if formula_id == "uniform_p":
        return uniform_p_estimate(params, n, s)
    if formula_id == "classical_l1":
        return classical_l1_estimate(params, n)
    if formula_id == "classical_sup":
        return classical_sup_estimate(params, n)
    if formula_id in R1_VARIANTS:
        if params.r != 1.0:
            raise ValueError(f"{formula_id} needs r = 1, got r={params.r!r}")
        return historical_r1(s, params.alpha, n, formula_id)
    if formula_id in R_LARGE_VARIANTS:
        return historical_r_large(params, n, formula_id, s)
    raise ValueError(f"unknown formula {formula_id!r}; expected one of {FORMULA_IDS}")


def formulas_for(r: float, s: OrderLike) -> tuple:
    """Formula ids that describe the L_1-ball class at this (r, s), primary one first."""
    order = NormOrder.of(s)
    if r < 1.0:
        ids = ["window"]
        if not order.is_inf and order.value > 1.0:
            ids.append("limit")
        if order.value == 2.0:
            ids += ["l2", "l2_refined"]
        if order.value == 1.0:
            ids += ["l1_log", "classical_l1"]
        if order.is_inf:
            ids.append("classical_sup")
        return tuple(ids)
    if r == 1.0:
        ids = ["unified", "ls_r1"]
        if order.value == 1.0:
            ids = ["stechkin", "nikolsky"] + ids
        return tuple(ids)
    ids = ["ls_rlarge"]
    if order.value == 1.0:
        ids = ["stepanets", "telyakovsky"] + ids
    return tuple(ids)
