"""Random instance generators shared by the tests."""

import math
from fractions import Fraction

from nilcps.arrangements import Arrangement, ConvexBody
from nilcps.group import HyperplaneH


def random_arrangement(rng, d, n, coef=4, degenerate=0.3):
    """n distinct hyperplanes with small integer data; some share a point or a normal."""
    hs = {}
    while len(hs) < n:
        a = [rng.randint(-coef, coef) for _ in range(d)]
        if not any(a):
            continue
        if hs and rng.random() < degenerate:
            # reuse the normal of an existing plane (parallel) or pass through the origin
            if rng.random() < 0.5:
                a = list(rng.choice(list(hs))[0])
                b = rng.randint(-6, 6)
            else:
                b = 0
        else:
            b = rng.randint(-6, 6)
        g = math.gcd(*a, b)
        a, b = tuple(v // g for v in a), b // g
        first = next(v for v in a if v)
        if first < 0:
            a, b = tuple(-v for v in a), -b
        hs[(a, b)] = None
    return Arrangement.build([HyperplaneH(tuple(map(Fraction, a)), Fraction(b)) for a, b in hs], d)


def random_box(rng, d, size=8):
    lo = [Fraction(-rng.randint(1, size)) for _ in range(d)]
    hi = [Fraction(rng.randint(1, size)) for _ in range(d)]
    return ConvexBody.box(lo, hi)
