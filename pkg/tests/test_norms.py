import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from genpoisson.kernel import KernelParams, TruncationError, tail_series, tail_sum
from genpoisson.norms import (QuadratureConfig, golden_maximize, inverse_sqrt_norm, inverse_sqrt_norm_limit,
                              ls_norm_with_route, periodic_ls_norm, window_residual)
from genpoisson.orders import NormOrder
from genpoisson.specfun import ConvergenceError


def _quad_norm(f, s, breaks=()):
    pts = sorted(set([0.0, 2 * math.pi, *breaks]))
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        val, _ = integrate.quad(lambda t: abs(f(t)) ** s, a, b, epsabs=0, epsrel=1e-13, limit=400)
        total += val
    return total ** (1.0 / s)


# ---------------------------------------------------------------- NormOrder


def test_norm_order_parsing_and_conjugate():
    assert NormOrder.parse("inf").is_inf and NormOrder.parse("Infinity").is_inf
    assert NormOrder.of(3).conjugate.value == pytest.approx(1.5, rel=1e-15)
    assert NormOrder.of(1).conjugate.is_inf and NormOrder.of("inf").conjugate.value == 1.0
    assert NormOrder.of(2).conjugate.value == 2.0
    assert str(NormOrder.of(2)) == "2" and str(NormOrder.of("inf")) == "inf" and str(NormOrder.of(1.5)) == "1.5"
    for bad in (0.5, -1, "abc", math.nan):
        with pytest.raises(ValueError):
            NormOrder.of(bad)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0001, 1e6))
def test_conjugate_relation(s):
    c = NormOrder.of(s).conjugate.value
    assert 1.0 / s + 1.0 / c == pytest.approx(1.0, rel=1e-14)


def test_quadrature_config_validation():
    for bad in ({"rel_tol": 0}, {"max_refinements": 0}, {"sup_grid": 100}, {"sup_grid": 32}):
        with pytest.raises(ValueError):
            QuadratureConfig(**bad)


# ---------------------------------------------------------------- periodic norms


@pytest.mark.parametrize("s, expected", [(1, 4.0), (2, math.sqrt(math.pi)), ("inf", 1.0)])
def test_cos_norms(s, expected):
    assert periodic_ls_norm(np.cos, s) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("s", [1, 1.5, 3, 4])
def test_trig_polynomial_against_quad(s):
    def f(t):
        return np.cos(3 * t) + 0.5 * np.sin(7 * t + 0.3) - 0.2

    roots = optimize.brentq  # sign changes located for the oracle's breakpoints
    grid = np.linspace(0, 2 * math.pi, 4001)
    vals = f(grid)
    breaks = [roots(f, grid[i], grid[i + 1]) for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]]
    assert periodic_ls_norm(f, s) == pytest.approx(_quad_norm(f, s, breaks), rel=1e-9)


def test_sup_norm_of_trig_polynomial():
    def f(t):
        return np.cos(3 * t) + 0.5 * np.sin(7 * t + 0.3)

    t = np.linspace(0, 2 * math.pi, 2**20, endpoint=False)
    i = int(np.argmax(np.abs(f(t))))
    res = optimize.minimize_scalar(lambda x: -abs(f(x)), bracket=(t[i - 1], t[i], t[i + 1]), tol=1e-12)
    assert periodic_ls_norm(f, "inf") == pytest.approx(-res.fun, rel=1e-12)


def test_parseval_on_kernel_tail():
    p = KernelParams(1.0, 0.5)
    series = tail_series(p, 16)
    expected = math.sqrt(math.pi * tail_sum(p, 16, 2.0).value)
    assert periodic_ls_norm(series, 2) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha, r, n", [(0.5, 0.25, 16), (1.0, 0.5, 4), (2.0, 0.75, 64), (1.0, 0.5, 256)])
def test_parseval_grid(alpha, r, n):
    p = KernelParams(alpha, r, 0.3)
    ratio = periodic_ls_norm(tail_series(p, n), 2) ** 2 / math.pi / tail_sum(p, n, 2.0).value
    assert ratio == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("alpha, r, beta, n", [(1.0, 0.5, 0.0, 32), (0.7, 0.3, 0.4, 8), (2.0, 0.8, 1.3, 50)])
def test_l1_norm_against_fine_grid(alpha, r, beta, n):
    # independent fixed grid: pointwise kernel, 2^20 nodes, midpoint on |P|
    series = tail_series(KernelParams(alpha, r, beta), n)
    N = 2**20
    g = series.grid(N, math.pi / N)
    ref = 2 * math.pi / N * float(np.sum(np.abs(g)))
    assert periodic_ls_norm(series, 1) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("s", [1.0, 1.5, 3.0])
def test_routes_agree_on_large_carrier(s):
    # decay * n = 0.5 sqrt(n) clears the carrier-averaging test from n = 6400
    series = tail_series(KernelParams(1.0, 0.5), 8100)
    assert series.carrier_ready()
    direct, r1 = ls_norm_with_route(series, s, route="direct")
    env, r2 = ls_norm_with_route(series, s, route="auto")
    assert (r1, r2) == ("direct", "envelope")
    assert env == pytest.approx(direct, rel=1e-9)


def test_envelope_route_refused_where_invalid():
    series = tail_series(KernelParams(1.0, 0.5), 16)
    with pytest.raises(ValueError):
        ls_norm_with_route(series, 2, route="envelope")
    with pytest.raises(ValueError):
        ls_norm_with_route(series, 2, route="sideways")


@settings(max_examples=20, deadline=None)
@given(st.floats(0.7, 3.0), st.floats(0.4, 0.9), st.floats(0.0, 4.0), st.integers(2, 64))
def test_normalised_norm_monotone_in_s(alpha, r, beta, n):
    series = tail_series(KernelParams(alpha, r, beta), n)
    try:
        vals = [(2 * math.pi) ** (-1.0 / s) * periodic_ls_norm(series, s) for s in (1, 2, 4)]
        vals.append(periodic_ls_norm(series, "inf"))
    except (TruncationError, ConvergenceError):
        return
    for a, b in zip(vals, vals[1:]):
        assert a <= b * (1 + 1e-9)


def test_constant_is_subtracted():
    assert periodic_ls_norm(lambda t: np.cos(t) + 0.5, 2, constant=0.5) == pytest.approx(math.sqrt(math.pi),
                                                                                         rel=1e-12)


def test_truncated_series_raises():
    series = tail_series(KernelParams(0.5, 0.25), 4, max_terms=1024)
    with pytest.raises(TruncationError):
        periodic_ls_norm(series, 2)


def test_refinement_budget_raises():
    with pytest.raises(ConvergenceError):
        periodic_ls_norm(lambda t: np.abs(np.sin(t)) ** 0.3, 1.5, QuadratureConfig(rel_tol=1e-14, max_refinements=2))


def test_golden_maximize():
    x, fx = golden_maximize(lambda x: -(x - 0.3) ** 2, -1.0, 2.0, 1e-10)
    assert x == pytest.approx(0.3, abs=1e-9) and fx == pytest.approx(0.0, abs=1e-17)


# ---------------------------------------------------------------- window integral


def test_inverse_sqrt_norm_values():
    assert inverse_sqrt_norm(7.0, "inf") == 1.0
    assert inverse_sqrt_norm(1.0, 1) == pytest.approx(math.log(1 + math.sqrt(2)), rel=1e-14)
    assert inverse_sqrt_norm(1.0, 2) == pytest.approx(math.sqrt(math.pi / 4), rel=1e-14)
    with pytest.raises(ValueError):
        inverse_sqrt_norm(0.0, 2)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 1e4), st.floats(1.0, 9.0))
def test_inverse_sqrt_norm_against_quad(v, s):
    ref = float(mpmath.quad(lambda t: (t * t + 1) ** (-s / 2), [0, min(v, 1), v])) ** (1.0 / s)
    assert inverse_sqrt_norm(v, s) == pytest.approx(ref, rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 1e5), st.floats(1.05, 9.0))
def test_inverse_sqrt_norm_increasing_and_bounded(v, s):
    lo, hi = inverse_sqrt_norm(v, s), inverse_sqrt_norm(v * 1.5, s)
    assert lo < hi or hi == pytest.approx(lo, rel=1e-15)
    assert hi <= inverse_sqrt_norm_limit(s) * (1 + 1e-15)


@pytest.mark.parametrize("s, expected", [(2, math.sqrt(math.pi / 2)), (3, 1.0), (4, (math.pi / 4) ** 0.25)])
def test_inverse_sqrt_norm_limit(s, expected):
    assert inverse_sqrt_norm_limit(s) == pytest.approx(expected, rel=1e-12)
    # and against direct quadrature to a large cutoff plus the analytic rest
    v = 1e6
    ref = float(mpmath.quad(lambda t: (t * t + 1) ** (-mpmath.mpf(s) / 2), [0, 1, 100, v]))
    ref += v ** (1 - s) / (s - 1)
    assert inverse_sqrt_norm_limit(s) == pytest.approx(ref ** (1 / s), rel=1e-10)


def test_inverse_sqrt_norm_limit_domain():
    assert inverse_sqrt_norm_limit("inf") == 1.0
    with pytest.raises(ValueError):
        inverse_sqrt_norm_limit(1)


def _residual_oracle(alpha, r, s, n):
    with mpmath.workdps(40):
        v = mpmath.pi * mpmath.mpf(n) ** (1 - mpmath.mpf(r)) / (mpmath.mpf(alpha) * r)
        f = lambda t: (t * t + 1) ** (-mpmath.mpf(s) / 2)
        whole = mpmath.quad(f, [0, 1, v, mpmath.inf])
        part = mpmath.quad(f, [0, 1, v])
        return float((part ** (1 / mpmath.mpf(s)) - whole ** (1 / mpmath.mpf(s))) * (s - 1) * v ** (s - 1))


@pytest.mark.parametrize("alpha, r, s, n", [(1.0, 0.5, 2.0, 100), (2.0, 0.25, 1.5, 50), (1.0, 0.5, 3.0, 1225)])
def test_window_residual_examples(alpha, r, s, n):
    got = window_residual(alpha, r, s, n)
    assert abs(got) < 2
    assert got == pytest.approx(_residual_oracle(alpha, r, s, n), rel=1e-8)


def test_window_gap_vanishes_for_s3():
    # the unnormalised gap J(v) - J(inf) shrinks monotonically to zero
    gaps = []
    for n in (10, 100, 1000):
        v = math.pi * n**0.5
        gaps.append(abs(window_residual(1.0, 0.5, 3.0, n)) / (2.0 * v * v))
    assert gaps[0] > gaps[1] > gaps[2] > 0 and gaps[2] < 1e-4


def test_window_residual_domain():
    for args in ((1, 0.5, 1.0, 10), (1, 0.5, math.inf, 10), (1, 1.0, 2.0, 10), (0, 0.5, 2.0, 10), (1, 0.5, 2, 0)):
        with pytest.raises(ValueError):
            window_residual(*args)


@pytest.mark.parametrize("alpha,r,n", [(1.0, 0.5, 4), (0.5, 0.5, 16), (2.0, 1.0, 3)])
def test_alias_bound_covers_trapezoid_error(alpha, r, n):
    from genpoisson.norms import _alias_bound
    series = tail_series(KernelParams(alpha, r), n)
    exact = np.pi * float(np.sum(np.abs(series.coef) ** 2))
    bound = _alias_bound(series)
    for N in (2 ** j for j in range(4, 16)):
        g = series.grid(N)
        err = abs(2 * np.pi / N * float(np.dot(g, g)) - exact)
        assert err <= bound(N) + 1e-13 * exact
