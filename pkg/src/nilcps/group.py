"""Homogeneous Lie groups of nilpotency step at most two.

Points are exponential coordinates; the product is X + Y + 1/2 [X, Y] with
the bracket given by sparse structure constants.  Coordinates may be ints,
Fractions or ExactScalars; everything stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .field import ExactScalar, as_fraction, sign

__all__ = [
    "GroupSpec", "GroupPoint", "HyperplaneH", "CrookedGroupError",
    "abelian", "heisenberg", "filiform",
    "bch_multiply", "inverse", "dilate", "quasi_norm", "ball_contains",
    "ball_volume", "act_on_hyperplane", "is_locally_two_step",
    "angle_between", "conjugation_distortion",
    "matrix_to_exp", "exp_to_matrix", "heisenberg_matrix_multiply",
]

HALF = Fraction(1, 2)


class CrookedGroupError(ValueError):
    """Raised where a step >= 3 group would need a non-affine action."""


def _zero_like(v):
    return v * 0


@dataclass(frozen=True)
class GroupSpec:
    """Dimension, dilation weights, structure constants and norm kind.

    `brackets` maps (i, j) with i < j to a tuple of (k, c) meaning
    [e_i, e_j] has coefficient c on e_k.  Antisymmetry is implicit.
    """

    n: int
    weights: tuple
    brackets: tuple = ()
    norm_kind: str = "weighted-max"
    _table: dict = dc_field(default=None, compare=False, repr=False, hash=False)
    _two_step: bool = dc_field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        w = tuple(as_fraction(x) for x in self.weights)
        if len(w) != self.n or self.n < 1:
            raise ValueError("weights must have length n >= 1")
        if any(x <= 0 for x in w):
            raise ValueError("dilation weights must be positive")
        if any(w[i] > w[i + 1] for i in range(self.n - 1)):
            raise ValueError("weights must be non-decreasing")
        object.__setattr__(self, "weights", w)
        table = {}
        for i, j, k, c in _bracket_triples(self.brackets):
            if not (0 <= i < self.n and 0 <= j < self.n and 0 <= k < self.n):
                raise ValueError(f"bracket index out of range: {(i, j, k)}")
            if i == j:
                raise ValueError("[e_i, e_i] must vanish")
            c = as_fraction(c)
            if c == 0:
                continue
            if i > j:
                i, j, c = j, i, -c
            row = table.setdefault((i, j), {})
            row[k] = row.get(k, 0) + c
        for (i, j), row in table.items():
            for k, c in row.items():
                if c and w[k] != w[i] + w[j]:
                    raise ValueError(
                        f"[e{i},e{j}] -> e{k} breaks dilation compatibility")
        frozen = tuple(sorted((i, j, tuple(sorted((k, c) for k, c in row.items() if c)))
                              for (i, j), row in table.items()))
        object.__setattr__(self, "brackets", frozen)
        object.__setattr__(self, "_table", {(i, j): dict(r) for i, j, r in frozen})
        if self.norm_kind not in ("weighted-max", "koranyi"):
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == "koranyi" and not self.is_heisenberg_layout():
            raise ValueError("koranyi norm needs the Heisenberg layout")
        if not _jacobi_holds(self):
            raise ValueError("structure constants violate the Jacobi identity")
        object.__setattr__(self, "_two_step", is_locally_two_step(self))

    @property
    def homdim(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    @property
    def is_abelian(self) -> bool:
        return not self.brackets

    def bracket_coeff(self, i: int, j: int, k: int) -> Fraction:
        if i == j:
            return Fraction(0)
        if i < j:
            return self._table.get((i, j), {}).get(k, Fraction(0))
        return -self._table.get((j, i), {}).get(k, Fraction(0))

    def is_heisenberg_layout(self) -> bool:
        return (self.n == 3 and self.weights == (1, 1, 2)
                and self.brackets == ((0, 1, ((2, Fraction(1)),)),))

    def with_norm(self, norm_kind: str) -> "GroupSpec":
        return GroupSpec(self.n, self.weights, _as_triples(self.brackets), norm_kind)


def _bracket_triples(brackets):
    for item in brackets:
        if len(item) == 4:
            yield item
        else:
            i, j, row = item
            for k, c in row:
                yield i, j, k, c


def _as_triples(brackets):
    return tuple(_bracket_triples(brackets))


def _bracket_vec(spec: GroupSpec, x: Sequence, y: Sequence) -> list:
    out = [_zero_like(x[0])] * spec.n
    for (i, j), row in spec._table.items():
        t = x[i] * y[j] - x[j] * y[i]
        if t:
            for k, c in row.items():
                out[k] = out[k] + c * t
    return out


def _basis(n, i):
    return [Fraction(int(k == i)) for k in range(n)]


def _jacobi_holds(spec: GroupSpec) -> bool:
    n = spec.n
    for a in range(n):
        for b in range(n):
            for c in range(n):
                ea, eb, ec = _basis(n, a), _basis(n, b), _basis(n, c)
                t1 = _bracket_vec(spec, ea, _bracket_vec(spec, eb, ec))
                t2 = _bracket_vec(spec, eb, _bracket_vec(spec, ec, ea))
                t3 = _bracket_vec(spec, ec, _bracket_vec(spec, ea, eb))
                if any(p + q + r for p, q, r in zip(t1, t2, t3)):
                    return False
    return True


def abelian(n: int, norm_kind: str = "weighted-max") -> GroupSpec:
    return GroupSpec(n, (1,) * n, (), norm_kind)


def heisenberg(norm_kind: str = "weighted-max") -> GroupSpec:
    """Three-dimensional Heisenberg group, [e1, e2] = e3, weights (1, 1, 2)."""
    return GroupSpec(3, (1, 1, 2), ((0, 1, 2, 1),), norm_kind)


def filiform(n: int = 4) -> GroupSpec:
    """Standard filiform algebra [e1, e_j] = e_{j+1}; 3-step when n = 4."""
    w = (1, 1) + tuple(range(2, n))
    return GroupSpec(n, w, tuple((0, j, j + 1, 1) for j in range(1, n - 1)))


class GroupPoint(tuple):
    """Exponential coordinates of a group element (an immutable tuple)."""

    def __new__(cls, coords):
        return super().__new__(cls, coords)

    @property
    def coords(self) -> tuple:
        return tuple(self)

    def __repr__(self):
        return "GroupPoint(" + ", ".join(str(c) for c in self) + ")"


def _check(spec: GroupSpec, *pts):
    for p in pts:
        if len(p) != spec.n:
            raise ValueError(f"point of length {len(p)} in a {spec.n}-dimensional group")
    fields = {c.field.gens for p in pts for c in p if isinstance(c, ExactScalar) and not c.is_rational()}
    if len(fields) > 1:
        raise ValueError("scalar-field mismatch between operands")


def bch_multiply(spec: GroupSpec, x: Sequence, y: Sequence) -> GroupPoint:
    """X * Y = X + Y + 1/2 [X, Y] (exact for 2-step groups)."""
    _check(spec, x, y)
    if not spec._two_step:
        raise CrookedGroupError("the truncated product needs a step <= 2 group")
    br = _bracket_vec(spec, x, y)
    return GroupPoint(a + b + HALF * c for a, b, c in zip(x, y, br))


def inverse(x: Sequence) -> GroupPoint:
    return GroupPoint(-c for c in x)


def _exact_power(r: Fraction, w: Fraction) -> Fraction:
    if w.denominator == 1:
        return r ** int(w)
    q = w.denominator
    num = _int_root(r.numerator, q)
    den = _int_root(r.denominator, q)
    if num is None or den is None:
        raise ValueError(f"{r}^{w} is not rational; pass r as a perfect {q}-th power")
    return Fraction(num, den) ** w.numerator


def _int_root(m: int, q: int):
    if m < 0:
        return None
    t = round(m ** (1.0 / q))
    for c in (t - 1, t, t + 1):
        if c >= 0 and c ** q == m:
            return c
    return None


def dilate(spec: GroupSpec, r, x: Sequence) -> GroupPoint:
    """D_r: coordinate i scaled by r**weights[i]."""
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("dilation parameter must be positive")
    _check(spec, x)
    return GroupPoint(c * _exact_power(r, w) for c, w in zip(x, spec.weights))


def quasi_norm(spec: GroupSpec, x: Sequence) -> float:
    _check(spec, x)
    v = [float(c) for c in x]
    if spec.norm_kind == "koranyi":
        return ((v[0] ** 2 + v[1] ** 2) ** 2 + v[2] ** 2) ** 0.25
    return max((abs(c) ** (1.0 / float(w)) for c, w in zip(v, spec.weights)), default=0.0)


def ball_contains(spec: GroupSpec, r, center: Sequence, x: Sequence) -> bool:
    """Exact test |x * center^-1| < r."""
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    d = bch_multiply(spec, x, inverse(center))
    return norm_less(spec, d, r)


def norm_less(spec: GroupSpec, d: Sequence, r: Fraction) -> bool:
    if spec.norm_kind == "koranyi":
        s = d[0] * d[0] + d[1] * d[1]
        return sign(s * s + d[2] * d[2] - r ** 4) < 0
    for c, w in zip(d, spec.weights):
        # |c| < r^(p/q)  <=>  |c|^q < r^p
        p, q = w.numerator, w.denominator
        if sign(abs(c) ** q - r ** p) >= 0:
            return False
    return True


def ball_volume(spec: GroupSpec, r) -> Fraction:
    """Lebesgue volume of the weighted-max ball of radius r: 2**n r**homdim."""
    if spec.norm_kind != "weighted-max":
        raise ValueError("closed-form ball volume is only available for the weighted-max norm")
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    return Fraction(2) ** spec.n * _exact_power(r, spec.homdim)


@dataclass(frozen=True)
class HyperplaneH:
    """<normal, x> = offset, stored with first nonzero normal entry 1."""

    normal: tuple
    offset: object

    def __post_init__(self):
        normal = tuple(Fraction(c) if isinstance(c, int) else c for c in self.normal)
        offset = Fraction(self.offset) if isinstance(self.offset, int) else self.offset
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", offset)
        nz = [c for c in normal if c]
        if not nz:
            raise ValueError("hyperplane normal must be nonzero")
        lead = nz[0]
        if lead != 1:
            object.__setattr__(self, "normal", tuple(c / lead for c in normal))
            object.__setattr__(self, "offset", offset / lead)

    @property
    def dim(self) -> int:
        return len(self.normal)

    def evaluate(self, x: Sequence):
        return sum((a * b for a, b in zip(self.normal, x)), _zero_like(self.offset)) - self.offset

    def contains(self, x: Sequence) -> bool:
        return not self.evaluate(x)


def translation_matrix(spec: GroupSpec, x: Sequence) -> list:
    """Matrix of y -> x * y - x, i.e. I + 1/2 ad_x."""
    n = spec.n
    zero = _zero_like(x[0]) if len(x) else Fraction(0)
    m = [[zero + (1 if i == j else 0) for j in range(n)] for i in range(n)]
    for (i, j), row in spec._table.items():
        for k, c in row.items():
            # [x, e_j] has x_i c on e_k ; [x, e_i] has -x_j c on e_k
            m[k][j] = m[k][j] + HALF * c * x[i]
            m[k][i] = m[k][i] - HALF * c * x[j]
    return m


def act_on_hyperplane(spec: GroupSpec, x: Sequence, P: HyperplaneH) -> HyperplaneH:
    """Image x * P of a hyperplane under left translation.

    Points v map to x + v + 1/2 [x, v]; since ad_x squares to zero in a
    step-2 group the inverse linear map is I - 1/2 ad_x, so the new normal is
    (I - 1/2 ad_x)^T n.
    """
    if not spec._two_step:
        raise CrookedGroupError("left translates of hyperplanes are curved in step >= 3 groups")
    _check(spec, x)
    if P.dim != spec.n:
        raise ValueError("hyperplane dimension mismatch")
    n = spec.n
    minus = inverse(x)
    a = translation_matrix(spec, minus)  # I - 1/2 ad_x
    normal = [sum((a[i][j] * P.normal[i] for i in range(n)), _zero_like(P.normal[0]))
              for j in range(n)]
    offset = P.offset + sum((normal[j] * x[j] for j in range(n)), _zero_like(P.offset))
    return HyperplaneH(tuple(normal), offset)


def is_locally_two_step(spec: GroupSpec) -> bool:
    """True iff [e_i, [e_j, e_k]] = 0 for every basis triple."""
    n = spec.n
    for i in range(n):
        for j in range(n):
            for k in range(n):
                inner = _bracket_vec(spec, _basis(n, j), _basis(n, k))
                if any(_bracket_vec(spec, _basis(n, i), inner)):
                    return False
    return True


def angle_between(P: HyperplaneH, Q: HyperplaneH) -> float:
    """arccos |<n_P, n_Q>| of unit normals, in [0, pi/2]; accurate to ~1e-12."""
    u = np.array([float(c) for c in P.normal])
    v = np.array([float(c) for c in Q.normal])
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("zero normal")
    c = min(1.0, abs(float(u @ v)) / (nu * nv))
    return math.acos(c)


def _float_bch(spec: GroupSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = x + y
    for (i, j), row in spec._table.items():
        t = x[..., i] * y[..., j] - x[..., j] * y[..., i]
        for k, c in row.items():
            out[..., k] += 0.5 * float(c) * t
    return out


def float_norm(spec: GroupSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if spec.norm_kind == "koranyi":
        return ((x[..., 0] ** 2 + x[..., 1] ** 2) ** 2 + x[..., 2] ** 2) ** 0.25
    w = np.array([float(c) for c in spec.weights])
    return np.max(np.abs(x) ** (1.0 / w), axis=-1)


def conjugation_distortion(spec: GroupSpec, x: Sequence, eps, samples: int = 10_000,
                           seed: int = 0) -> float:
    """max |x u x^-1| over sampled u in the closed weighted-max ball B_eps(e).

    The box corners are always included, then `samples` uniform draws; a
    fixed seed gives nested sample sets across eps (the draws are scaled).
    """
    eps = float(eps)
    if eps <= 0 or samples < 1:
        raise ValueError("need eps > 0 and samples >= 1")
    n = spec.n
    w = np.array([float(c) for c in spec.weights])
    rng = np.random.default_rng(seed)
    unit = rng.uniform(-1.0, 1.0, size=(samples, n))
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    unit = np.vstack([corners, unit])
    if spec.norm_kind == "koranyi":
        unit = unit[float_norm(spec, unit) <= 1.0]
    u = unit * eps ** w
    xf = np.broadcast_to(np.array([float(c) for c in x]), u.shape)
    conj = _float_bch(spec, _float_bch(spec, xf.copy(), u), -xf)
    return float(np.max(float_norm(spec, conj)))


# -- Heisenberg matrix coordinates ---------------------------------------

def heisenberg_matrix_multiply(p: Sequence, q: Sequence) -> tuple:
    """(a,b,c)(x,y,z) = (a+x, b+y, c+z+ay) for upper unitriangular matrices."""
    a, b, c = p
    x, y, z = q
    return (a + x, b + y, c + z + a * y)


def matrix_to_exp(p: Sequence) -> GroupPoint:
    a, b, c = p
    return GroupPoint((a, b, c - HALF * a * b))


def exp_to_matrix(p: Sequence) -> tuple:
    a, b, c = p
    return (a, b, c + HALF * a * b)
