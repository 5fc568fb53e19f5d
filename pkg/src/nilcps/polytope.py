"""Exact H-polytopes: validation, vertices, edges, translates in 2-step groups."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import as_fraction, sign
from .group import GroupSpec, HyperplaneH, translation_matrix
from .lp import maximize, max_slack, minimize

__all__ = ["WindowPolytope", "solve_linear", "rank_of", "DegeneratePolytopeError"]


class DegeneratePolytopeError(ValueError):
    pass


def solve_linear(M: Sequence[Sequence], rhs: Sequence):
    """Exact Gaussian elimination; returns None when M is singular."""
    n = len(M)
    if n == 2 or n == 3:
        return _cramer(M, rhs)
    A = [list(M[i]) + [rhs[i]] for i in range(n)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c]), None)
        if p is None:
            return None
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [v / piv for v in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return [A[i][n] for i in range(n)]


def _det(M):
    if len(M) == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    (a, b, c), (d, e, f), (g, h, i) = M
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _cramer(M, rhs):
    # one inverse instead of n^2 divisions: field inverses are the costly part
    D = _det(M)
    if not D:
        return None
    inv = 1 / D
    out = []
    for k in range(len(M)):
        Mk = [list(row) for row in M]
        for r in range(len(M)):
            Mk[r][k] = rhs[r]
        out.append(_det(Mk) * inv)
    return out


def rank_of(rows: Sequence[Sequence]) -> int:
    A = [list(r) for r in rows]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    rk = 0
    for c in range(n):
        p = next((r for r in range(rk, m) if A[r][c]), None)
        if p is None:
            continue
        A[rk], A[p] = A[p], A[rk]
        piv = A[rk][c]
        for r in range(m):
            if r != rk and A[r][c]:
                f = A[r][c] / piv
                A[r] = [a - f * b for a, b in zip(A[r], A[rk])]
        rk += 1
        if rk == m:
            break
    return rk


def _dot(a, x):
    s = a[0] * x[0]
    for u, v in zip(a[1:], x[1:]):
        s = s + u * v
    return s


@dataclass(frozen=True, eq=False)
class WindowPolytope:
    """Bounded polytope {x : <a_i, x> <= b_i} with nonempty interior.

    Coefficients are exact (Fractions for windows; field elements are allowed
    for translated copies).  Duplicate half-spaces are rejected.
    """

    halfspaces: tuple

    def __post_init__(self):
        hs = []
        for a, b in self.halfspaces:
            a = tuple(as_fraction(v) if not hasattr(v, "field") else v for v in a)
            b = as_fraction(b) if not hasattr(b, "field") else b
            if not any(a):
                raise DegeneratePolytopeError("half-space with zero normal")
            hs.append((a, b))
        if not hs:
            raise DegeneratePolytopeError("no half-spaces")
        d = len(hs[0][0])
        if any(len(a) != d for a, _ in hs):
            raise DegeneratePolytopeError("mixed dimensions")
        object.__setattr__(self, "halfspaces", tuple(hs))
        A = [a for a, _ in hs]
        b = [v for _, v in hs]
        t, x = max_slack(A, b)
        if t is None or t <= 0:
            raise DegeneratePolytopeError("window has empty interior")
        object.__setattr__(self, "interior_point", tuple(x))
        lo, hi = [], []
        for k in range(d):
            c = [0] * d
            c[k] = 1
            up = maximize(c, A, b)
            dn = minimize(c, A, b)
            if up.status != "optimal" or dn.status != "optimal":
                raise DegeneratePolytopeError(f"window unbounded along coordinate {k}")
            lo.append(dn.value)
            hi.append(up.value)
        object.__setattr__(self, "bbox", (tuple(lo), tuple(hi)))
        canon = {HyperplaneH(a, v) for a, v in hs}
        if len(canon) != len(hs):
            raise DegeneratePolytopeError("repeated half-space")

    # -- basic views ---------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.halfspaces[0][0])

    @property
    def A(self) -> list:
        return [a for a, _ in self.halfspaces]

    @property
    def b(self) -> list:
        return [v for _, v in self.halfspaces]

    def __len__(self):
        return len(self.halfspaces)

    def face_plane(self, i: int) -> HyperplaneH:
        a, b = self.halfspaces[i]
        return HyperplaneH(a, b)

    def float_arrays(self):
        A = np.array([[float(v) for v in a] for a in self.A])
        b = np.array([float(v) for v in self.b])
        return A, b

    def contains(self, x, strict: bool = False) -> bool:
        for a, b in self.halfspaces:
            s = sign(_dot(a, x) - b)
            if s > 0 or (strict and s == 0):
                return False
        return True

    def on_boundary(self, x) -> bool:
        return self.contains(x) and not self.contains(x, strict=True)

    # -- combinatorics ---------------------------------------------------
    def vertices(self) -> list:
        """Exact vertices with their active facet sets."""
        if hasattr(self, "_vertices"):
            return self._vertices
        d = self.dim
        A, b = self.A, self.b
        found = {}
        for sub in itertools.combinations(range(len(A)), d):
            x = solve_linear([A[i] for i in sub], [b[i] for i in sub])
            if x is None or not self.contains(x):
                continue
            key = tuple(x)
            if key not in found:
                active = frozenset(i for i in range(len(A)) if not (_dot(A[i], x) - b[i]))
                found[key] = active
        verts = sorted(found.items(), key=lambda kv: tuple(float(v) for v in kv[0]))
        object.__setattr__(self, "_vertices", verts)
        return verts

    def edges(self) -> list:
        """Vertex index pairs joined by an edge (share a rank d-1 facet set)."""
        if hasattr(self, "_edges"):
            return self._edges
        verts = self.vertices()
        d = self.dim
        out = []
        for i, j in itertools.combinations(range(len(verts)), 2):
            common = verts[i][1] & verts[j][1]
            if len(common) >= d - 1 and rank_of([self.A[k] for k in common]) == d - 1:
                out.append((i, j))
        object.__setattr__(self, "_edges", out)
        return out

    # -- group translates ------------------------------------------------
    def left_translate(self, spec: GroupSpec, mu) -> tuple:
        """Half-space data (A', b') of mu * W = {x : A (mu^-1 * x) <= b}."""
        d = self.dim
        L = translation_matrix(spec, [-c for c in mu])   # x -> mu^-1 x + mu : I - ad/2
        A2, b2 = [], []
        for a, b in self.halfspaces:
            row = [sum((a[i] * L[i][j] for i in range(d)), a[0] * 0) for j in range(d)]
            A2.append(row)
            b2.append(b + _dot(a, mu))
        return A2, b2

    def right_translate(self, spec: GroupSpec, g) -> tuple:
        """Half-space data of W * g = {x : A (x * g^-1) <= b}."""
        d = self.dim
        # x * g^-1 = (I + 1/2 ad_{g}) applied as x + (-g) + 1/2[x, -g]
        # = (I - 1/2 ad_{-g})... computed through [x, h] = -[h, x]
        L = translation_matrix(spec, g)   # I + 1/2 ad_g : y -> y + 1/2[g, y]
        # [x, -g]/2 = [g, x]/2 so x * g^-1 = L x - g
        A2, b2 = [], []
        for a, b in self.halfspaces:
            row = [sum((a[i] * L[i][j] for i in range(d)), a[0] * 0) for j in range(d)]
            A2.append(row)
            b2.append(b + _dot(a, g))
        return A2, b2

    def translated(self, spec: GroupSpec, mu, side: str = "left") -> "WindowPolytope":
        A2, b2 = (self.left_translate if side == "left" else self.right_translate)(spec, mu)
        return WindowPolytope(tuple(zip(map(tuple, A2), b2)))
