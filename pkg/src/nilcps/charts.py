"""Coordinate charts and Z-modules for lattices of cut-and-project schemes.

A chart expresses the group law on chart coordinates as x + y + Q(x, y)
with Q bilinear, and the passage to exponential coordinates as
exp = chart + E(chart, chart).  Both bilinear maps only read lower layers,
so inverses are explicit: x^-1 = -x + Q(x, x) and chart = exp - E(exp, exp).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .field import ExactScalar, Field, as_fraction
from .group import GroupSpec, bch_multiply

__all__ = ["Chart", "exp_chart", "heisenberg_matrix_chart", "Module", "parse_field_element",
           "CHARTS"]


@dataclass(frozen=True)
class Chart:
    name: str
    n: int
    Q: tuple   # (k, i, j, coef): (x*y)_k gains coef * x_i * y_j
    E: tuple   # (k, i, j, coef): exp_k = chart_k + coef * chart_i * chart_j

    def multiply(self, x: Sequence, y: Sequence) -> tuple:
        out = [a + b for a, b in zip(x, y)]
        for k, i, j, c in self.Q:
            out[k] = out[k] + c * (x[i] * y[j])
        return tuple(out)

    def inverse(self, x: Sequence) -> tuple:
        out = [-a for a in x]
        for k, i, j, c in self.Q:
            out[k] = out[k] + c * (x[i] * x[j])
        return tuple(out)

    def to_exp(self, x: Sequence) -> tuple:
        out = list(x)
        for k, i, j, c in self.E:
            out[k] = out[k] + c * (x[i] * x[j])
        return tuple(out)

    def from_exp(self, x: Sequence) -> tuple:
        out = list(x)
        for k, i, j, c in self.E:
            out[k] = out[k] - c * (x[i] * x[j])
        return tuple(out)

    def check_against(self, spec: GroupSpec, samples: int = 40, seed: int = 1) -> None:
        """Confirm the chart reproduces the exponential-coordinate product."""
        import random
        if spec.n != self.n:
            raise ValueError(f"chart {self.name} is {self.n}-dimensional, group is {spec.n}")
        rng = random.Random(seed)
        for _ in range(samples):
            x = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(self.n))
            y = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(self.n))
            lhs = self.to_exp(self.multiply(x, y))
            rhs = bch_multiply(spec, self.to_exp(x), self.to_exp(y))
            if tuple(lhs) != tuple(rhs):
                raise ValueError(f"chart {self.name} does not match the group law of {spec}")
            if tuple(self.multiply(x, self.inverse(x))) != (0,) * self.n:
                raise ValueError(f"chart {self.name} inverse is wrong")


def exp_chart(spec: GroupSpec) -> Chart:
    Q = []
    for i, j, row in spec.brackets:
        for k, c in row:
            Q.append((k, i, j, c / 2))
            Q.append((k, j, i, -c / 2))
    return Chart("exp", spec.n, tuple(Q), ())


def heisenberg_matrix_chart() -> Chart:
    """(a,b,c)(x,y,z) = (a+x, b+y, c+z+ay); exp coordinates (a, b, c - ab/2)."""
    return Chart("heisenberg-matrix", 3, ((2, 0, 1, Fraction(1)),), ((2, 0, 1, Fraction(-1, 2)),))


CHARTS = {"exp": exp_chart, "heisenberg-matrix": lambda spec: heisenberg_matrix_chart()}


_TERM = re.compile(r"^([+-]?)\s*(?:(\d+(?:/\d+)?)\s*\*?\s*)?(?:sqrt\s*\(?\s*(\d+)\s*\)?)?$")


def parse_field_element(text, field: Field) -> ExactScalar:
    """Parse strings like "3/2 - 2*sqrt2 + sqrt6" into the given field."""
    if not isinstance(text, str):
        return field.coerce(as_fraction(text))
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty field element")
    parts = re.findall(r"[+-]?[^+-]+", s)
    coeffs = [Fraction(0)] * field.size
    for p in parts:
        m = _TERM.match(p)
        if not m or (m.group(2) is None and m.group(3) is None):
            raise ValueError(f"cannot parse term {p!r} in {text!r}")
        sgn = -1 if m.group(1) == "-" else 1
        c = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        rad = int(m.group(3)) if m.group(3) else 1
        idx = None
        for s_idx, r in enumerate(field.radicands):
            if r == rad:
                idx = s_idx
        if idx is None:
            raise ValueError(f"sqrt{rad} is not a basis element of {field}")
        coeffs[idx] += sgn * c
    return ExactScalar._raw(field, tuple(coeffs))


class Module:
    """Free Z-module spanned by field elements (e.g. Z[sqrt2] = <1, sqrt2>)."""

    def __init__(self, field: Field, basis: Sequence):
        self.field = field
        self.basis = tuple(field.coerce(b) for b in basis)
        self.rank = len(self.basis)
        if self.rank == 0:
            raise ValueError("module needs a basis")
        # coefficient matrix: field-basis coordinates x module basis
        from .polytope import rank_of
        mat = [list(b.coeffs) for b in self.basis]
        if rank_of(mat) != self.rank:
            raise ValueError("module basis is linearly dependent over Q")
        self._mat = mat
        self._mult = None

    def element(self, coeffs: Sequence[int]) -> ExactScalar:
        out = self.field.zero()
        for c, b in zip(coeffs, self.basis):
            if c:
                out = out + b * int(c)
        return out

    def decompose(self, x: ExactScalar):
        """Rational coordinates of x in the module basis, or None if x is outside the span."""
        x = self.field.coerce(x)
        # solve sum_s c_s basis_s = x over Q (least rows)
        size = self.field.size
        rows = [[self._mat[s][t] for s in range(self.rank)] + [x.coeffs[t]] for t in range(size)]
        # Gaussian elimination on an overdetermined consistent system
        m = [list(r) for r in rows]
        piv_cols = []
        rk = 0
        for col in range(self.rank):
            p = next((r for r in range(rk, size) if m[r][col]), None)
            if p is None:
                continue
            m[rk], m[p] = m[p], m[rk]
            pv = m[rk][col]
            m[rk] = [v / pv for v in m[rk]]
            for r in range(size):
                if r != rk and m[r][col]:
                    f = m[r][col]
                    m[r] = [a - f * b for a, b in zip(m[r], m[rk])]
            piv_cols.append(col)
            rk += 1
        if any(m[r][-1] for r in range(rk, size)):
            return None
        sol = [Fraction(0)] * self.rank
        for r, col in enumerate(piv_cols):
            sol[col] = m[r][-1]
        return tuple(sol)

    def integer_coords(self, x: ExactScalar):
        c = self.decompose(x)
        if c is None or any(v.denominator != 1 for v in c):
            return None
        return tuple(int(v) for v in c)

    def mult_table(self):
        """T[s][t] = rational coordinates of basis_s * basis_t, or None if not in span."""
        if self._mult is None:
            self._mult = [[self.decompose(a * b) for b in self.basis] for a in self.basis]
        return self._mult

    def float_rows(self, masks: Sequence[int]):
        """Float values of the basis under each Galois automorphism mask."""
        return [[float(b.conj(m)) for b in self.basis] for m in masks]
