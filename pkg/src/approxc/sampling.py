"""Seeded value distributions shared by the checkers.

Exact reals mix small integers, dyadics near binade boundaries, general
rationals up to |x| <= 1000, and values near zero; error distributions
include zero so tight memberships get exercised.  Naturals are sampled
small and are approximated exactly (zero error): natural-number data
drives control flow and iteration counts, where the compilation rules
assume exactness.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional


def trial_rng(seed: int, trial: int) -> random.Random:
    """Derived per-trial generator: deterministic and platform-stable."""
    return random.Random((seed * 1_000_003 + trial) & 0x7FFFFFFFFFFFFFFF)


def sample_real_fraction(rng: random.Random) -> Fraction:
    k = rng.randrange(10)
    if k <= 2:
        return Fraction(rng.randint(-3, 3))
    if k <= 4:
        # dyadics near binade boundaries
        e = rng.randint(-3, 3)
        j = rng.randint(-4, 4)
        return Fraction(2) ** e + Fraction(j, 1 << 55)
    if k <= 6:
        # general rationals in [-1000, 1000]
        num = rng.randint(-10**6, 10**6)
        den = rng.randint(1, 1000)
        q = Fraction(num, den)
        if abs(q) > 1000:
            q = Fraction(num % 1000, den)
        return q
    if k <= 8:
        # near zero
        return Fraction(rng.randint(-100, 100), 10 ** rng.randint(3, 12))
    # exactly representable doubles
    return Fraction(rng.randint(-(1 << 30), 1 << 30), 1 << rng.randint(0, 20))


def sample_err_fraction(rng: random.Random) -> Optional[Fraction]:
    """An error magnitude; None is infinity.  Zero appears often."""
    k = rng.randrange(12)
    if k <= 3:
        return Fraction(0)
    if k == 4:
        return None
    if k <= 7:
        return Fraction(1, 1 << rng.randrange(0, 50))
    if k <= 9:
        return Fraction(rng.randint(1, 1000), rng.randint(1, 1000))
    return Fraction(rng.randint(1, 10))


def sample_finite_err_fraction(rng: random.Random) -> Fraction:
    q = sample_err_fraction(rng)
    while q is None:
        q = sample_err_fraction(rng)
    return q


def sample_nat(rng: random.Random) -> int:
    # kept small: recursive programs evaluate their own depth per call
    k = rng.randrange(6)
    if k == 0:
        return 0
    if k <= 3:
        return rng.randint(1, 20)
    if k == 4:
        return rng.randint(1, 50)
    return 1 << rng.randint(0, 6)
