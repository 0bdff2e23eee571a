from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from weylcalc.errors import ConvergenceError, PmaxTooSmall
from weylcalc.weights import (EntireSeries, WeightSequence, associated_function,
                              associated_function_log, associated_inverse_log, check_conditions,
                              growth_ratio, growth_ratio_check, series_derivative, series_eval,
                              series_inverse)


def _rel(a, b):
    return abs(a - b) / abs(b)


# sequences -------------------------------------------------------------------------

def test_log_values_closed_forms():
    L = WeightSequence.factorial_power(2).log_values(5)
    assert_allclose(L, [2 * math.log(math.factorial(p)) for p in range(6)], rtol=1e-14)
    L = WeightSequence.self_power(h=0.5, s=2, m=2).log_values(4)
    expect = [0.0] + [4 * n * math.log(n) + n * math.log(2) for n in range(1, 5)]
    assert_allclose(L, expect, rtol=1e-14, atol=1e-14)


def test_explicit_sequence_and_config_roundtrip():
    seq = WeightSequence.explicit(["1", "1", "2", "6", "24"])
    assert seq.max_index == 4
    assert_allclose(seq.log_values(4), np.log([1, 1, 2, 6, 24]))
    with pytest.raises(PmaxTooSmall):
        seq.log_values(5)
    for s in (seq, WeightSequence.factorial_power(1.5), WeightSequence.self_power(2, 1, 3)):
        assert WeightSequence.from_config(s.to_config()) == s


def test_invalid_sequences():
    with pytest.raises(ValueError):
        WeightSequence.explicit(["1", "0"])
    with pytest.raises(ValueError):
        WeightSequence("gamma")
    with pytest.raises(ValueError):
        WeightSequence.factorial_power(-1)


# conditions ------------------------------------------------------------------------

def test_gevrey_conditions_hold():
    rep = check_conditions(WeightSequence.factorial_power(2), 50)
    assert rep.M1 and rep.M2 and rep.M3_prime and rep.M4 and rep.stk
    assert rep.stk_params == {"s": 2.0, "m": 1.0, "C0": 1.0}
    # M_{p-1}/M_p = p^-2, so the tail slope is exactly -2
    assert rep.m3_tail_slope == pytest.approx(-2.0, abs=1e-10)
    assert set(rep.to_dict()) >= {"M1", "M2", "M3'", "M4", "stk", "finite_range"}


def test_factorial_fails_m3_prime():
    # p! has M_{p-1}/M_p = 1/p, the borderline that M3' excludes
    rep = check_conditions(WeightSequence.factorial_power(1), 60)
    assert rep.M1 and not rep.M3_prime


def test_non_log_convex_fails_m1():
    rep = check_conditions(WeightSequence.explicit(["1", "1", "10", "11", "200"]), 4)
    assert not rep.M1


def test_stk_with_larger_s_fails():
    rep = check_conditions(WeightSequence.factorial_power(2), 30, s=3)
    assert rep.stk is False


def test_self_power_conditions():
    rep = check_conditions(WeightSequence.self_power(1, 2, 2), 60)
    assert rep.M1 and rep.M4


# associated function --------------------------------------------------------------

def _assoc_brute(seq, rho, top=30000):
    L = seq.log_values(top)
    return max(0.0, max(p * math.log(rho) - L[p] for p in range(top + 1)))


@pytest.mark.parametrize("rho", [0.5, 1.0, 3.0, 40.0, 1e4])
def test_associated_function_brute_force(rho):
    seq = WeightSequence.factorial_power(1)
    assert associated_function(seq, rho) == pytest.approx(_assoc_brute(seq, rho), rel=1e-12, abs=1e-12)


def test_associated_function_pmax_too_small():
    with pytest.raises(PmaxTooSmall):
        associated_function_log(WeightSequence.factorial_power(1), math.log(1e6), pmax=10)


@given(st.floats(0.1, 200.0))
def test_associated_inverse_is_inverse(t):
    seq = WeightSequence.factorial_power(2)
    u = associated_inverse_log(seq, t)
    assert associated_function_log(seq, u) == pytest.approx(t, rel=1e-9)
    # smallest such y: slightly below it the value drops under t
    assert associated_function_log(seq, u - 1e-6) < t


# the entire series ------------------------------------------------------------------

@pytest.mark.parametrize("lam", [0, 0.5, 3, 50, 700])
def test_series_factorial_is_exp(lam):
    P = EntireSeries(WeightSequence.factorial_power(1))
    ctx = P.context()
    assert _rel(series_eval(P, lam), ctx.exp(lam)) < ctx.mpf(10) ** -40


@pytest.mark.parametrize("lam", [0.25, 4, 100, 1e4])
def test_series_factorial_squared_is_bessel(lam):
    # sum lam^n / n!^2 = I_0(2 sqrt(lam))
    P = EntireSeries(WeightSequence.factorial_power(2))
    ctx = P.context()
    expect = ctx.besseli(0, 2 * ctx.sqrt(lam))
    assert _rel(series_eval(P, lam), expect) < ctx.mpf(10) ** -40


def test_series_self_power_direct_sum():
    P = EntireSeries(WeightSequence.self_power(1, 2, 2))
    ctx = P.context()
    lam = ctx.mpf(1e6)
    direct = ctx.fsum(lam ** n / ctx.mpf(n) ** (4 * n) for n in range(1, 200)) + 1
    assert _rel(series_eval(P, lam), direct) < ctx.mpf(10) ** -40


def test_truncated_series_is_polynomial():
    P = EntireSeries(WeightSequence.factorial_power(1), truncation=3)
    ctx = P.context()
    assert _rel(series_eval(P, 2), ctx.mpf(19) / 3) < ctx.mpf(10) ** -55


def test_explicit_series_exhausts():
    P = EntireSeries(WeightSequence.explicit(["1", "1", "2"]))
    with pytest.raises(ConvergenceError):
        series_eval(P, 100)


def test_derivative_and_growth_ratio():
    P = EntireSeries(WeightSequence.factorial_power(1))
    ctx = P.context()
    assert _rel(series_derivative(P, 10), ctx.exp(10)) < ctx.mpf(10) ** -40
    # lam P'/P = lam for the exponential
    assert growth_ratio_check(P, [1.0, 5.0, 20.0]) == pytest.approx([1.0, 5.0, 20.0], rel=1e-12)
    assert growth_ratio(P, 0) == 0.0


@given(st.floats(0.0, 1000.0))
@settings(max_examples=30)
def test_inverse_bracket_certified(log10_y):
    P = EntireSeries(WeightSequence.self_power(1, 2, 2))
    y = mpmath.mpf(10) ** log10_y
    inv = series_inverse(P, y)
    assert inv.lo <= inv.value <= inv.hi
    assert series_eval(P, inv.lo) <= y <= series_eval(P, inv.hi)
    assert (inv.hi - inv.lo) <= 1e-25 * max(inv.hi, 1)


@given(st.floats(0.0, 500.0))
@settings(max_examples=30)
def test_inverse_roundtrip(lam):
    P = EntireSeries(WeightSequence.factorial_power(2))
    inv = series_inverse(P, series_eval(P, lam))
    assert float(inv.value) == pytest.approx(lam, rel=1e-12, abs=1e-12)


def test_inverse_domain():
    P = EntireSeries(WeightSequence.factorial_power(1))
    assert series_inverse(P, 1).value == 0
    with pytest.raises(ValueError):
        series_inverse(P, 0.5)
