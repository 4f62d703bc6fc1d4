import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from approxc.floats import (
    MAXFLOAT, MAXFLOAT_FRAC, float_bits, float_interval_op_err, ieee_div,
    nearest_float, round_down_float, round_up_float, sin_f64, to_fraction,
)
from approxc.sampling import trial_rng


def test_nearest_float_matches_division():
    # CPython's int/int division is correctly rounded; use it as the oracle
    rng = trial_rng(3, 0)
    for _ in range(2000):
        n = rng.randint(-10**15, 10**15)
        d = rng.randint(1, 10**15)
        assert nearest_float(Fraction(n, d)) == n / d


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_nearest_float_round_trip(x):
    assert nearest_float(Fraction(x)) == x


def test_known_values():
    f = nearest_float(Fraction(1, 3))
    assert float_bits(f) == 0x3FD5555555555555
    assert Fraction(1, 3) - to_fraction(f) == Fraction(1, 3 * 2**54)


def test_point_one_plus_point_two():
    got = nearest_float(Fraction(1, 10)) + nearest_float(Fraction(2, 10))
    assert float_bits(got) == 0x3FD3333333333334
    assert got == 0.30000000000000004


def test_overflow_thresholds():
    assert nearest_float(MAXFLOAT_FRAC) == MAXFLOAT
    assert nearest_float(Fraction(2**1024)) == math.inf
    assert nearest_float(-Fraction(2**1024)) == -math.inf
    # below the rounding midpoint it stays finite
    assert nearest_float(Fraction(2**1024 - 2**970) - 1) == MAXFLOAT


def test_subnormals():
    tiny = Fraction(1, 2**1074)
    assert nearest_float(tiny) == math.ldexp(1, -1074)
    assert nearest_float(tiny / 3) == 0.0


def test_directed_rounding():
    q = Fraction(1, 3)
    lo, hi = round_down_float(q), round_up_float(q)
    assert to_fraction(lo) <= q <= to_fraction(hi)
    assert math.nextafter(lo, math.inf) == hi
    # exact dyadics round to themselves both ways
    assert round_down_float(Fraction(3, 4)) == round_up_float(Fraction(3, 4)) == 0.75


def test_ieee_div():
    assert ieee_div(1.0, 0.0) == math.inf
    assert ieee_div(-1.0, 0.0) == -math.inf
    assert math.isnan(ieee_div(0.0, 0.0))
    assert ieee_div(1.0, 2.0) == 0.5


def test_sin_f64_correctly_rounded():
    rng = trial_rng(5, 0)
    xs = [rng.uniform(-10, 10) for _ in range(150)]
    xs += [0.1, -0.1, 1.0, 3.141592653589793, 1e10, -1e10, 1e300, 0.2]
    for x in xs:
        with mpmath.workprec(1200):
            ref = float(mpmath.sin(mpmath.mpf(x)))
        assert sin_f64(x) == ref, x


def test_sin_f64_special_values():
    assert sin_f64(0.0) == 0.0
    assert math.copysign(1.0, sin_f64(-0.0)) == -1.0
    assert math.isnan(sin_f64(math.nan))
    assert math.isnan(sin_f64(math.inf))


def test_interval_op_err_point_cases():
    one = (Fraction(1), Fraction(1))
    two = (Fraction(2), Fraction(2))
    z = (Fraction(0), Fraction(0))
    h = (Fraction(1, 2), Fraction(1, 2))
    # 1 + 2 with no input error: 3.0 exact, bound 0
    lo, hi = float_interval_op_err("+", one, z, two, z)
    assert lo == hi == 0
    # widen both by 1/2: interval [2, 4], all representable, max distance 1
    lo, hi = float_interval_op_err("+", one, h, two, h)
    assert lo == hi == 1


def test_interval_op_err_overflow_and_zero_divisor():
    big = (MAXFLOAT_FRAC, MAXFLOAT_FRAC)
    z = (Fraction(0), Fraction(0))
    lo, hi = float_interval_op_err("*", big, z, big, z)
    assert hi is None
    lo, hi = float_interval_op_err("/", (Fraction(1), Fraction(1)), z,
                                   (Fraction(1), Fraction(1)),
                                   (Fraction(2), Fraction(2)))
    assert hi is None  # divisor interval [-1, 3] contains zero
