import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from halpern_mann.errors import RateOverflow, UsageError
from halpern_mann.exact import (
    bit_budget,
    ceil_conv,
    ceil_nat,
    div,
    exp_floor,
    floor_nat,
    ln_ceil,
    log2_ceil,
    minimum,
    positive,
    to_real,
)


def test_ceil_conv_examples():
    assert ceil_conv(-2.3) == 0
    assert ceil_conv(2.0) == 2
    assert ceil_conv(Fraction(7, 2)) == 4
    assert ln_ceil(Fraction(3 * 2, 1)) == 2


def test_ceil_conv_nan_is_usage_error():
    with pytest.raises(UsageError):
        ceil_conv(float("nan"))


def test_floats_read_as_decimal():
    assert to_real(0.1) == Fraction(1, 10)
    with pytest.raises(UsageError):
        to_real(True)
    with pytest.raises(UsageError):
        positive(0)


@pytest.mark.parametrize("x,expected", [(0, 1), (1, 2), (3, 20), (8, 2980), (12, 162754),
                                        (14, 1202604), (Fraction(1, 2), 1), (-1, 0)])
def test_exp_floor_small(x, expected):
    assert exp_floor(x) == expected


@given(st.fractions(min_value=0, max_value=60, max_denominator=1000))
def test_exp_floor_matches_mpmath(x):
    with mpmath.workprec(400):
        ref = int(mpmath.floor(mpmath.exp(mpmath.mpf(x.numerator) / x.denominator)))
    assert exp_floor(x) == ref


@given(st.floats(min_value=0, max_value=700))
def test_exp_floor_dominates_double_precision(x):
    # upward value never below the naive double evaluation (up to its own rounding)
    assert exp_floor(x) >= math.floor(math.exp(x) * (1 - 1e-12))


def test_exp_floor_large_is_exact_integer():
    v = exp_floor(5000)
    with mpmath.workprec(8000):
        assert v == int(mpmath.floor(mpmath.exp(5000)))


def test_exp_overflow_reports_certified_lower_bound():
    with bit_budget(128):
        with pytest.raises(RateOverflow) as info:
            exp_floor(100)
    assert info.value.lower == 1 << 128
    assert exp_floor(100) >= info.value.lower


@given(st.fractions(min_value=Fraction(1, 10**6), max_value=10**6, max_denominator=10**6))
def test_ln_ceil_brackets(x):
    k = ln_ceil(x)
    assert k >= 0
    if k > 0:
        with mpmath.workprec(200):
            v = mpmath.log(mpmath.mpf(x.numerator) / x.denominator)
            assert k - 1 < v <= k


@given(st.fractions(min_value=Fraction(1, 1000), max_value=10**9))
def test_log2_ceil_exact(x):
    k = log2_ceil(x)
    assert x <= Fraction(2) ** k
    assert k == 0 or Fraction(2) ** (k - 1) < x


def test_floor_ceil():
    assert floor_nat(Fraction(7, 2)) == 3
    assert ceil_nat(Fraction(7, 2)) == 4
    assert floor_nat(-3) == 0
    with bit_budget(64):
        with pytest.raises(RateOverflow):
            floor_nat(Fraction(2) ** 100)


def test_demotion_rounds_down():
    tiny = Fraction(1, 2 ** 3000)
    q = div(tiny, 3)
    assert isinstance(q, mpmath.mpf)
    man, exp = q.man_exp
    assert Fraction(man) * Fraction(2) ** exp <= tiny / 3
    assert minimum(Fraction(1, 2), q) == q
