"""Arbitrary-precision dyadic interval arithmetic.

The computable stand-in for exact real evaluation: every operation
returns an enclosure guaranteed to contain the mathematical result for
any point selection from its argument enclosures.  Endpoints are dyadic
rationals, rounded outward at the requested precision.

Sine is computed by an interval Taylor expansion with a full-tail
remainder bound after range reduction against a fixed high-precision
pi; the construction is inclusion-monotone in the precision so that
refining an enclosure always nests inside the coarser one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

DEFAULT_MAX_PRECISION = 4096

# pi is cached once at a precision high enough for argument reduction of
# any binary64 magnitude at the maximum supported working precision
_PI_BITS = 5376


class PrecisionOverflow(Exception):
    pass


class DivisorStraddlesZero(Exception):
    pass


class Tern(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def rd_down(x: Fraction, p: int) -> Fraction:
    s = x * (1 << p)
    return Fraction(s.numerator // s.denominator, 1 << p)


def rd_up(x: Fraction, p: int) -> Fraction:
    s = x * (1 << p)
    return Fraction(-((-s.numerator) // s.denominator), 1 << p)


@dataclass(frozen=True)
class RealEnclosure:
    lo: Fraction
    hi: Fraction
    precision_bits: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"inverted enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, q: Fraction) -> bool:
        return self.lo <= q <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi


def from_rational(q: Fraction, p: int) -> RealEnclosure:
    return RealEnclosure(rd_down(q, p), rd_up(q, p), p)


def compare_leq(a: RealEnclosure, b: RealEnclosure) -> Tern:
    """Is a <= b?  Unknown when the enclosures overlap."""
    if a.hi <= b.lo:
        return Tern.YES
    if b.hi < a.lo:
        return Tern.NO
    return Tern.UNKNOWN


# ---------------------------------------------------------------------------
# pi via Machin's formula, computed once with integer arithmetic

_pi_cache: Optional[Tuple[Fraction, Fraction]] = None


def _atan_inv_scaled(m: int, bits: int) -> Tuple[int, int]:
    """Integer bounds on 2^bits * atan(1/m) for integer m >= 2."""
    lo = 0
    hi = 0
    k = 0
    mpow = m
    m2 = m * m
    one = 1 << bits
    while True:
        denom = (2 * k + 1) * mpow
        t_f = one // denom
        if t_f == 0:
            # alternating remainder is below one scaled ulp
            return lo - 1, hi + 1
        t_c = -((-one) // denom)
        if k % 2 == 0:
            lo += t_f
            hi += t_c
        else:
            lo -= t_c
            hi -= t_f
        k += 1
        mpow *= m2


def pi_bounds() -> Tuple[Fraction, Fraction]:
    """A fixed enclosure of pi, independent of the working precision."""
    global _pi_cache
    if _pi_cache is None:
        a5_lo, a5_hi = _atan_inv_scaled(5, _PI_BITS)
        a239_lo, a239_hi = _atan_inv_scaled(239, _PI_BITS)
        lo = 16 * a5_lo - 4 * a239_hi
        hi = 16 * a5_hi - 4 * a239_lo
        d = 1 << _PI_BITS
        _pi_cache = (Fraction(lo, d), Fraction(hi, d))
    return _pi_cache


# ---------------------------------------------------------------------------
# sine

_SIN_ARG_CAP = Fraction(33, 10)  # reduce whenever |arg| exceeds this


def _sin_taylor_interval(mlo: Fraction, mhi: Fraction, p: int) -> Tuple[Fraction, Fraction]:
    """Taylor sum of sin over a narrow interval with |m| <= 3.3.

    Rounds every intermediate to p+16 bits and finishes with a
    geometric full-tail remainder, which keeps results at higher
    precision nested inside lower-precision ones.
    """
    w = p + 16
    mlo, mhi = rd_down(mlo, w), rd_up(mhi, w)
    cands = (mlo * mlo, mlo * mhi, mhi * mhi)
    m2lo = rd_down(max(Fraction(0), min(cands)), w)
    m2hi = rd_up(max(cands), w)
    t_lo, t_hi = mlo, mhi
    s_lo = s_hi = Fraction(0)
    thresh = Fraction(1, 1 << (p + 8))
    j = 0
    while True:
        s_lo = rd_down(s_lo + t_lo, w)
        s_hi = rd_up(s_hi + t_hi, w)
        c = (2 * j + 2) * (2 * j + 3)
        prods = (t_lo * m2lo, t_lo * m2hi, t_hi * m2lo, t_hi * m2hi)
        n_lo, n_hi = min(prods), max(prods)
        # next term is -T_j * M2 / c
        t_lo = rd_down(-n_hi / c, w)
        t_hi = rd_up(-n_lo / c, w)
        j += 1
        if max(abs(t_lo), abs(t_hi)) <= thresh:
            break
        if j > 10000:
            raise PrecisionOverflow("sine series failed to converge")
    rho = m2hi / Fraction((2 * j + 2) * (2 * j + 3))
    if rho >= 1:
        raise PrecisionOverflow("sine argument too large after reduction")
    tail = 2 * max(abs(t_lo), abs(t_hi)) / (1 - rho)
    lo = max(Fraction(-1), s_lo - tail)
    hi = min(Fraction(1), s_hi + tail)
    return rd_down(lo, p), rd_up(hi, p)


def _reduce_arg(r: Fraction, p: int) -> Tuple[Fraction, Fraction]:
    """Exact interval for r - n*2pi with n chosen so |result| <= 3.3."""
    pi_lo, pi_hi = pi_bounds()
    tpi_lo, tpi_hi = 2 * pi_lo, 2 * pi_hi
    # nearest integer to r / 2pi, using the midpoint of the pi bounds
    q = r / ((tpi_lo + tpi_hi) / 2)
    n = (q.numerator * 2 + q.denominator) // (2 * q.denominator)
    if n.bit_length() + p + 16 > _PI_BITS:
        raise PrecisionOverflow(
            f"argument too large for sine reduction at {p} bits")
    for _ in range(8):
        if n >= 0:
            lo, hi = r - n * tpi_hi, r - n * tpi_lo
        else:
            lo, hi = r - n * tpi_lo, r - n * tpi_hi
        if hi > _SIN_ARG_CAP:
            n += 1
        elif lo < -_SIN_ARG_CAP:
            n -= 1
        else:
            return lo, hi
    raise PrecisionOverflow("sine argument reduction failed")


def sin_point(r: Fraction, p: int) -> RealEnclosure:
    """Rigorous enclosure of sin(r) for an exact rational r."""
    if r == 0:
        return RealEnclosure(Fraction(0), Fraction(0), p)
    if abs(r) <= _SIN_ARG_CAP:
        lo, hi = _sin_taylor_interval(r, r, p)
    else:
        a, b = _reduce_arg(r, p)
        lo, hi = _sin_taylor_interval(a, b, p)
    return RealEnclosure(lo, hi, p)


def _sin_enclosure(x: RealEnclosure, p: int) -> RealEnclosure:
    if x.width >= 7:  # wider than a full period
        return RealEnclosure(Fraction(-1), Fraction(1), p)
    s1 = sin_point(x.lo, p + 2)
    s2 = sin_point(x.hi, p + 2)
    lo = min(s1.lo, s2.lo)
    hi = max(s1.hi, s2.hi)
    # account for interior extrema at (2k+1) * pi/2
    pi_lo, pi_hi = pi_bounds()
    k_min = math.floor((2 * x.lo / pi_hi - 1) / 2) - 1
    k_max = math.floor((2 * x.hi / pi_lo - 1) / 2) + 1
    for k in range(k_min, k_max + 1):
        m = 2 * k + 1
        if m >= 0:
            c_lo, c_hi = m * pi_lo / 2, m * pi_hi / 2
        else:
            c_lo, c_hi = m * pi_hi / 2, m * pi_lo / 2
        if c_hi >= x.lo and c_lo <= x.hi:  # extremum possibly inside
            if k % 2 == 0:
                hi = Fraction(1)
            else:
                lo = Fraction(-1)
    lo = max(lo, Fraction(-1))
    hi = min(hi, Fraction(1))
    return RealEnclosure(rd_down(lo, p), rd_up(hi, p), p)


# ---------------------------------------------------------------------------
# operation dispatch

def enclose_op(op: str, args: List[RealEnclosure], precision_bits: int,
               max_bits: int = DEFAULT_MAX_PRECISION) -> RealEnclosure:
    """Apply a real builtin to enclosures, rounding outward.

    The result contains the exact mathematical value for every point
    selection from the arguments.
    """
    p = precision_bits
    if p > max_bits:
        raise PrecisionOverflow(f"{p} bits exceeds the configured cap {max_bits}")
    if op == "+r":
        x, y = args
        return RealEnclosure(rd_down(x.lo + y.lo, p), rd_up(x.hi + y.hi, p), p)
    if op == "-r":
        x, y = args
        return RealEnclosure(rd_down(x.lo - y.hi, p), rd_up(x.hi - y.lo, p), p)
    if op == "*r":
        x, y = args
        cs = (x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
        return RealEnclosure(rd_down(min(cs), p), rd_up(max(cs), p), p)
    if op == "/r":
        x, y = args
        if y.lo <= 0 <= y.hi:
            raise DivisorStraddlesZero(f"divisor enclosure [{y.lo}, {y.hi}]")
        cs = (x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi)
        return RealEnclosure(rd_down(min(cs), p), rd_up(max(cs), p), p)
    if op == "absr":
        (x,) = args
        if x.lo >= 0:
            lo, hi = x.lo, x.hi
        elif x.hi <= 0:
            lo, hi = -x.hi, -x.lo
        else:
            lo, hi = Fraction(0), max(-x.lo, x.hi)
        return RealEnclosure(rd_down(lo, p), rd_up(hi, p), p)
    if op == "dr":
        x, y = args
        d_lo, d_hi = x.lo - y.hi, x.hi - y.lo
        if d_lo >= 0:
            lo, hi = d_lo, d_hi
        elif d_hi <= 0:
            lo, hi = -d_hi, -d_lo
        else:
            lo, hi = Fraction(0), max(-d_lo, d_hi)
        return RealEnclosure(rd_down(lo, p), rd_up(hi, p), p)
    if op == "sinr":
        (x,) = args
        return _sin_enclosure(x, p)
    raise ValueError(f"not an enclosure operation: {op}")
