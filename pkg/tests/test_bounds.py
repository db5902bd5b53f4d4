import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import genpoisson.bounds as bounds
from genpoisson.bounds import (best_constant_deviation, bump_transform, empirical_class_lower_bound, lower_bound,
                               sandwich, upper_bound)
from genpoisson.kernel import KernelParams, TruncationError, tail_series, tail_sum
from genpoisson.norms import periodic_ls_norm
from genpoisson.specfun import ConvergenceError


def _weights(p, n, terms=4000):
    k = np.arange(n, n + terms, dtype=float)
    return k, np.exp(-p.alpha * (k**p.r - float(n) ** p.r))


def _parseval_difference(p, n, h):
    """||P - P(. + h)||_2 in scaled units from the coefficients alone."""
    k, w = _weights(p, n)
    return math.sqrt(math.pi * float(np.sum(w * w * 2.0 * (1.0 - np.cos(k * h)))))


# ---------------------------------------------------------------- upper


@pytest.mark.parametrize("alpha, r, beta, n", [(1.0, 0.5, 0.0, 16), (0.5, 0.75, 1.1, 7), (2.0, 0.25, 3.0, 100)])
def test_upper_s2_is_parseval(alpha, r, beta, n):
    p = KernelParams(alpha, r, beta)
    u = upper_bound(p, n, 2)
    t = tail_sum(p, n, 2.0)
    assert u.log_scale == pytest.approx(0.5 * t.log_scale, rel=1e-15)
    assert u.value == pytest.approx(math.sqrt(t.value) / math.sqrt(math.pi), rel=1e-9)


def test_upper_geometric():
    assert upper_bound(KernelParams(math.log(2), 1.0), 1, 2).raw == pytest.approx(1 / math.sqrt(3 * math.pi),
                                                                                 rel=1e-12)


def test_upper_l1_against_fixed_grid():
    series = tail_series(KernelParams(1.0, 0.5), 32)
    N = 2**20
    ref = 2 * math.pi / N * float(np.sum(np.abs(series.grid(N, math.pi / N)))) / math.pi
    assert upper_bound(KernelParams(1.0, 0.5), 32, 1).value == pytest.approx(ref, rel=1e-8)


def test_upper_s2_decreasing_in_n():
    p = KernelParams(1.0, 0.5)
    vals = [upper_bound(p, n, 2).raw for n in (1, 2, 4, 8, 16, 32, 64)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- lower


def test_lower_s2_parseval_oracle():
    p = KernelParams(1.0, 0.5, 0.4)
    n = 16
    low, h = lower_bound(p, n, 2)
    assert 0.0 < h <= math.pi
    assert low.value == pytest.approx(_parseval_difference(p, n, h) / (2 * math.pi), rel=1e-9)
    # and the sup itself: no point of a dense shift grid does better
    scan = max(_parseval_difference(p, n, hh) for hh in np.linspace(1e-4, math.pi, 20001))
    assert low.value >= scan / (2 * math.pi) * (1 - 1e-9)


def test_lower_sup_grid_doubling_is_stable(monkeypatch):
    p = KernelParams(1.0, 0.5)
    base, _ = lower_bound(p, 64, "inf")
    monkeypatch.setattr(bounds, "_SHIFTS_PER_N", 2 * bounds._SHIFTS_PER_N)
    finer, _ = lower_bound(p, 64, "inf")
    assert finer.value >= base.value * (1 - 1e-9)
    assert finer.value == pytest.approx(base.value, rel=1e-6)


_cases = st.tuples(st.floats(0.2, 3.0), st.floats(0.1, 0.9), st.floats(0.0, 4.0), st.integers(2, 128),
                   st.sampled_from([1, 1.5, 2, 4, "inf"]))


@settings(max_examples=12, deadline=None)
@given(_cases)
def test_sandwich_ordering(case):
    alpha, r, beta, n, s = case
    try:
        b = sandwich(KernelParams(alpha, r, beta), n, s)
    except (TruncationError, ConvergenceError):
        return  # tails needing more terms or grids than the budget
    assert b.lower <= b.upper * (1 + 1e-9)
    assert b.best_constant <= b.upper * (1 + 1e-9)


# ---------------------------------------------------------------- best constant


def test_best_constant_s2_is_zero():
    p = KernelParams(1.0, 0.5)
    val, lam = best_constant_deviation(p, 32, 2)
    assert lam == 0.0
    assert val.value == upper_bound(p, 32, 2).value
    # orthogonality: ||P - lam||_2^2 = ||P||_2^2 + 2 pi lam^2
    series = tail_series(p, 32)
    base = periodic_ls_norm(series, 2)
    for lam in (-0.3, 0.1, 0.5):
        shifted = periodic_ls_norm(series, 2, constant=lam)
        assert shifted**2 == pytest.approx(base**2 + 2 * math.pi * lam**2, rel=1e-10)


def test_best_constant_grid_scan_oracle():
    p = KernelParams(1.0, 0.5)
    n = 32
    val, lam = best_constant_deviation(p, n, 1)
    series = tail_series(p, n)
    # int |P - lam| for every lam at once from sorted midpoint samples
    N = 2**22
    x = np.sort(series.grid(N, math.pi / N))
    csum = np.concatenate(([0.0], np.cumsum(x)))

    def scan(lams):
        idx = np.searchsorted(x, lams)
        below = lams * idx - csum[idx]
        above = (csum[-1] - csum[idx]) - lams * (N - idx)
        return 2 * math.pi / N * (below + above) / math.pi

    bound = tail_sum(p, n).value
    lams = np.linspace(-bound, bound, 10**4)
    coarse = scan(lams)
    i = int(np.argmin(coarse))
    step = lams[1] - lams[0]
    fine_l = np.linspace(lams[i] - step, lams[i] + step, 10**4)
    fine = scan(fine_l)
    assert val.value == pytest.approx(float(fine.min()), rel=1e-8)
    assert lam == pytest.approx(float(fine_l[np.argmin(fine)]), abs=1e-3 * bound)
    assert val.value <= upper_bound(p, n, 1).value


# ---------------------------------------------------------------- class member


def test_bump_transform():
    k = np.array([0.0, 1.0, 50.0])
    got = bump_transform(k, 1e-3)
    assert got[0] == pytest.approx(1.0, rel=1e-13)
    assert np.all(np.abs(got) <= 1.0)
    assert got[2] < 1.0


def _bump_oracle(xi):
    with mpmath.workdps(30):
        f = lambda u: mpmath.exp(-1 / (1 - u * u))
        z = mpmath.quad(f, [-1, 0, 1])
        return float(mpmath.quad(lambda u: f(u) * mpmath.cos(xi * u), mpmath.linspace(-1, 1, 41)) / z)


@pytest.mark.parametrize("eps", [0.5, 1e-2])
def test_bump_transform_against_mpmath(eps):
    k = np.array([0, 1, 7, 40, 300, 2000], dtype=float)
    k = k[k * eps <= 60]
    got = bump_transform(k, eps)  # integer k: FFT route
    off = bump_transform(k + 0.25, eps)  # non-integer k: quadrature route
    for kk, g, o in zip(k, got, off):
        assert abs(g - _bump_oracle(kk * eps)) <= 1e-14
        assert abs(o - _bump_oracle((kk + 0.25) * eps)) <= 1e-14


def test_bump_transform_cutoff():
    # far beyond the cutoff the transform is zero; just inside it is negligible
    assert bump_transform(np.array([1e6]), 0.01)[0] == 0.0
    assert abs(bump_transform(np.array([1599.0]), 1.0)[0]) < 1e-14


def test_empirical_zero_when_points_coincide():
    assert empirical_class_lower_bound(KernelParams(1, 0.5), 16, 2, 1e-3, 0.7, 0.7).value == 0.0


def test_empirical_trend_towards_lower():
    p = KernelParams(1.0, 0.5)
    n = 16
    low, h = lower_bound(p, n, 2)
    up = upper_bound(p, n, 2)
    vals = [empirical_class_lower_bound(p, n, 2, eps, 0.0, h).value for eps in (1e-2, 1e-3, 1e-4)]
    assert vals[0] < vals[1] < vals[2] <= low.value * (1 + 1e-9)
    assert vals[1] == pytest.approx(low.value, rel=1e-2)
    assert all(v <= up.value + 1e-8 for v in vals)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.3, 0.9), st.integers(2, 40), st.sampled_from([1, 2, "inf"]),
       st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi), st.floats(1e-3, 0.5))
def test_empirical_below_upper(alpha, r, n, s, a, b, eps):
    p = KernelParams(alpha, r)
    try:
        up = upper_bound(p, n, s).value
        val = empirical_class_lower_bound(p, n, s, eps, a, b).value
    except (TruncationError, ConvergenceError):
        return
    assert val <= up * (1 + 1e-9) + 1e-8


def test_empirical_rejects_bad_eps():
    with pytest.raises(ValueError):
        empirical_class_lower_bound(KernelParams(1, 0.5), 4, 2, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        empirical_class_lower_bound(KernelParams(1, 0.5), 4, 2, 4.0, 0.0, 1.0)
