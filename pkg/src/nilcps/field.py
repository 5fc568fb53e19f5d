"""Exact arithmetic in real multi-quadratic fields Q(sqrt d1, ..., sqrt dk).

An element is stored as 2**k rational coefficients over the basis
sqrt(prod(d_i for i in S)), indexed by the bitmask S.  With a single generator
this is the familiar a + b*sqrt(D); with none it is a plain rational.

Signs are decided by splitting x = u + v*sqrt(d_k) over the subfield and
comparing u**2 with d_k * v**2, so no floating point is ever consulted.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as _Q, mpz as _Z
    _RAT = (int, Fraction, type(_Q(0)), type(_Z(0)))
except ImportError:  # pragma: no cover
    _Q = Fraction
    _RAT = (int, Fraction)


def _to_fraction(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(int(c.numerator), int(c.denominator))

__all__ = ["Field", "ExactScalar", "QQ", "as_fraction", "sign"]


def _squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


def as_fraction(v) -> Fraction:
    """Parse ints, Fractions and "p/q" strings into a Fraction.

    Floats are refused: exact inputs only.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Rational):
        return Fraction(v.numerator, v.denominator)
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"expected an exact rational, got {type(v).__name__}")


class Field:
    """Q adjoined square roots of pairwise coprime squarefree integers."""

    _cache: dict = {}

    def __new__(cls, gens=()):
        gens = tuple(int(g) for g in gens)
        if gens in cls._cache:
            return cls._cache[gens]
        for g in gens:
            if not _squarefree(g):
                raise ValueError(f"generator {g} is not a squarefree integer > 1")
        for i, a in enumerate(gens):
            for b in gens[i + 1:]:
                if math.gcd(a, b) != 1:
                    raise ValueError("generators must be pairwise coprime")
        self = super().__new__(cls)
        self.gens = gens
        self.k = len(gens)
        self.size = 1 << self.k
        # radicand of each basis element and float value of its root
        self.radicands = tuple(
            math.prod(gens[i] for i in range(self.k) if (m >> i) & 1)
            for m in range(self.size))
        self.roots = tuple(math.sqrt(d) for d in self.radicands)
        # basis product: e_S * e_T = coef * e_{S xor T}
        self.mult = tuple(
            tuple(math.prod(gens[i] for i in range(self.k) if ((s & t) >> i) & 1)
                  for t in range(self.size))
            for s in range(self.size))
        cls._cache[gens] = self
        return self

    def __reduce__(self):
        return (Field, (self.gens,))

    def __repr__(self):
        if not self.gens:
            return "QQ"
        return "Q(" + ", ".join(f"sqrt{g}" for g in self.gens) + ")"

    @property
    def D(self) -> int:
        """Field parameter of a quadratic field (0 for the rationals)."""
        if self.k == 0:
            return 0
        if self.k == 1:
            return self.gens[0]
        raise ValueError("D is only defined for quadratic or rational fields")

    def __call__(self, *coeffs) -> "ExactScalar":
        return ExactScalar(self, coeffs)

    def zero(self) -> "ExactScalar":
        return ExactScalar._raw(self, (_Q(0),) * self.size)

    def one(self) -> "ExactScalar":
        return self.from_rational(1)

    def from_rational(self, q) -> "ExactScalar":
        c = [_Q(0)] * self.size
        c[0] = _Q(as_fraction(q))
        return ExactScalar._raw(self, tuple(c))

    def sqrt_of(self, i: int) -> "ExactScalar":
        """The generator sqrt(gens[i])."""
        c = [_Q(0)] * self.size
        c[1 << i] = _Q(1)
        return ExactScalar._raw(self, tuple(c))

    def coerce(self, v) -> "ExactScalar":
        if isinstance(v, ExactScalar):
            if v.field is self:
                return v
            return v.lift(self)
        return self.from_rational(v)

    def join(self, other: "Field") -> "Field":
        if other is self:
            return self
        gens = tuple(sorted(set(self.gens) | set(other.gens)))
        return Field(gens)

    def conj_mask(self, flips) -> int:
        """Bitmask of generators negated by the automorphism flipping `flips`."""
        m = 0
        for g in flips:
            m |= 1 << self.gens.index(int(g))
        return m


QQ = Field(())


@lru_cache(maxsize=None)
def _conj_signs(size: int, mask: int) -> tuple:
    return tuple(-1 if bin(s & mask).count("1") & 1 else 1 for s in range(size))


def _sign_coeffs(coeffs: tuple, gens: tuple, k: int) -> int:
    if k == 0:
        c = coeffs[0]
        return (c > 0) - (c < 0)
    half = 1 << (k - 1)
    u = coeffs[:half]
    v = coeffs[half:]
    su = _sign_coeffs(u, gens, k - 1)
    sv = _sign_coeffs(v, gens, k - 1)
    if sv == 0:
        return su
    if su == 0 or su == sv:
        return sv
    # opposite signs: sign(u) * sign(u^2 - d v^2)
    sub = gens[:k - 1]
    mult = Field(sub).mult
    d = gens[k - 1]
    u2 = _mul_coeffs(u, u, mult, half)
    v2 = _mul_coeffs(v, v, mult, half)
    diff = tuple(a - d * b for a, b in zip(u2, v2))
    return su * _sign_coeffs(diff, gens, k - 1)


def _mul_coeffs(x: tuple, y: tuple, mult: tuple, size: int) -> tuple:
    out = [_Q(0)] * size
    for s in range(size):
        a = x[s]
        if not a:
            continue
        row = mult[s]
        for t in range(size):
            b = y[t]
            if b:
                out[s ^ t] += a * b * row[t]
    return tuple(out)


class ExactScalar:
    """An element of a multi-quadratic field, immutable and totally ordered."""

    __slots__ = ("field", "coeffs", "_hash")

    def __init__(self, field: Field, coeffs):
        if len(coeffs) == 1 and field.size > 1:
            coeffs = tuple(coeffs) + (0,) * (field.size - 1)
        if len(coeffs) != field.size:
            raise ValueError(f"{field} needs {field.size} coefficients")
        self.field = field
        self.coeffs = tuple(_Q(as_fraction(c)) for c in coeffs)
        self._hash = None

    @classmethod
    def _raw(cls, field, coeffs):
        obj = cls.__new__(cls)
        obj.field = field
        obj.coeffs = coeffs
        obj._hash = None
        return obj

    @classmethod
    def quadratic(cls, a, b=0, D=0) -> "ExactScalar":
        """Build a + b*sqrt(D); D = 0 gives the rational a."""
        if D == 0:
            if as_fraction(b) != 0:
                raise ValueError("D = 0 admits no sqrt part")
            return QQ.from_rational(a)
        return ExactScalar(Field((D,)), (a, b))

    # -- views ---------------------------------------------------------
    @property
    def a(self) -> Fraction:
        return _to_fraction(self.coeffs[0])

    @property
    def b(self) -> Fraction:
        if self.field.k != 1:
            if self.field.k == 0:
                return Fraction(0)
            raise ValueError("b is only defined over a quadratic field")
        return _to_fraction(self.coeffs[1])

    @property
    def D(self) -> int:
        return self.field.D

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return _to_fraction(self.coeffs[0])

    def lift(self, field: Field) -> "ExactScalar":
        if field is self.field:
            return self
        pos = []
        for g in self.field.gens:
            if g not in field.gens:
                raise ValueError(f"{self.field} does not embed in {field}")
            pos.append(field.gens.index(g))
        out = [_Q(0)] * field.size
        for s, c in enumerate(self.coeffs):
            if c:
                m = 0
                for i, p in enumerate(pos):
                    if (s >> i) & 1:
                        m |= 1 << p
                out[m] = c
        return ExactScalar._raw(field, tuple(out))

    # -- arithmetic ----------------------------------------------------
    def _other(self, o):
        if isinstance(o, ExactScalar):
            if o.field is self.field:
                return self, o
            f = self.field.join(o.field)
            return self.lift(f), o.lift(f)
        if isinstance(o, _RAT) and not isinstance(o, bool):
            return self, self.field.from_rational(o)
        return None, None

    def __add__(self, o):
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        return ExactScalar._raw(x.field, tuple(a + b for a, b in zip(x.coeffs, y.coeffs)))

    __radd__ = __add__

    def __sub__(self, o):
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        return ExactScalar._raw(x.field, tuple(a - b for a, b in zip(x.coeffs, y.coeffs)))

    def __rsub__(self, o):
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        return y - x

    def __neg__(self):
        return ExactScalar._raw(self.field, tuple(-a for a in self.coeffs))

    def __pos__(self):
        return self

    def __mul__(self, o):
        if isinstance(o, _RAT) and not isinstance(o, bool):
            return ExactScalar._raw(self.field, tuple(a * o for a in self.coeffs))
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        f = x.field
        return ExactScalar._raw(f, _mul_coeffs(x.coeffs, y.coeffs, f.mult, f.size))

    __rmul__ = __mul__

    def conj(self, mask: int | None = None) -> "ExactScalar":
        """Galois conjugate; default mask flips every generator.

        For a quadratic field this is the star map a + b√D -> a - b√D.
        """
        f = self.field
        if mask is None:
            mask = f.size - 1
        sg = _conj_signs(f.size, mask)
        return ExactScalar._raw(f, tuple(c if s > 0 else -c for c, s in zip(self.coeffs, sg)))

    star = conj

    def norm(self) -> Fraction:
        """Field norm: product over all Galois conjugates (a rational)."""
        f = self.field
        p = f.one()
        for m in range(f.size):
            p = p * self.conj(m)
        return p.to_fraction()

    def inverse(self) -> "ExactScalar":
        f = self.field
        if not any(self.coeffs):
            raise ZeroDivisionError("inverse of zero")
        if f.k == 0:
            return ExactScalar._raw(f, (1 / self.coeffs[0],))
        # multiply by all nontrivial conjugates: result is the rational norm
        num = f.one()
        for m in range(1, f.size):
            num = num * self.conj(m)
        n = (self * num).to_fraction()
        return num * (1 / n)

    def __truediv__(self, o):
        if isinstance(o, _RAT) and not isinstance(o, bool):
            if o == 0:
                raise ZeroDivisionError("division by zero")
            return ExactScalar._raw(self.field, tuple(a / o for a in self.coeffs))
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        return x * y.inverse()

    def __rtruediv__(self, o):
        x, y = self._other(o)
        if x is None:
            return NotImplemented
        return y * x.inverse()

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.inverse() ** (-e)
        out = self.field.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    # -- order ---------------------------------------------------------
    def sign(self) -> int:
        f = self.field
        return _sign_coeffs(self.coeffs, f.gens, f.k)

    def __bool__(self):
        return any(self.coeffs)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def _cmp(self, o):
        d = self - o
        if d is NotImplemented:
            return NotImplemented
        return d.sign()

    def __eq__(self, o):
        if isinstance(o, ExactScalar) or (isinstance(o, _RAT) and not isinstance(o, bool)):
            x, y = self._other(o)
            return x.coeffs == y.coeffs
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.coeffs[0])
            else:
                self._hash = hash((self.field.gens, self.coeffs))
        return self._hash

    def __lt__(self, o):
        c = self._cmp(o)
        return c if c is NotImplemented else c < 0

    def __le__(self, o):
        c = self._cmp(o)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, o):
        c = self._cmp(o)
        return c if c is NotImplemented else c > 0

    def __ge__(self, o):
        c = self._cmp(o)
        return c if c is NotImplemented else c >= 0

    def __float__(self):
        return float(sum(float(c) * r for c, r in zip(self.coeffs, self.field.roots) if c))

    def __repr__(self):
        return f"ExactScalar({self})"

    def __str__(self):
        f = self.field
        parts = []
        for s, c in enumerate(self.coeffs):
            if not c and s:
                continue
            if s == 0:
                parts.append(str(c))
            else:
                parts.append(f"{c}*sqrt{f.radicands[s]}")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")


def sign(v) -> int:
    """Exact sign of a Fraction, int or ExactScalar."""
    if isinstance(v, ExactScalar):
        return v.sign()
    return (v > 0) - (v < 0)
