"""Hyperplane arrangements restricted to a convex polytope B.

Regions are the connected components of open(B) minus the hyperplanes, and a
flat counts when it meets open(B).  Region counts come from two engines:

* recursive insertion, exact in any dimension (inserting H adds the regions
  of the arrangement induced on H);
* for d <= 3 and large arrangements, the Moebius-function formula
  r_B = sum over flats X meeting open(B) of |mu(X)|, with float candidate
  search and exact verification of every near-degenerate case.

The characteristic polynomial is the subset-sum oracle used to check both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import kernels
from .field import ExactScalar, as_fraction, sign
from .group import HyperplaneH
from .lp import strictly_feasible
from .polytope import WindowPolytope, rank_of, solve_linear

__all__ = [
    "Arrangement", "ConvexBody", "ArrangementCapError", "vertices_in_B", "count_regions_in_B",
    "characteristic_polynomial_wrt_B", "evaluate_polynomial", "flats_in_B", "IncidenceProfile",
    "incidence_profile", "check_beck_bounds", "BeckReport", "beck_family_check", "BeckFamilyResult",
    "schlafli_bound", "beck_constant", "BETA", "C2",
]

BETA = Fraction(5, 2) ** 3
C2 = Fraction(1, 8380416)

# tolerances for the float candidate search (inputs are normalised first)
_TOL = 1e-7


class ArrangementCapError(RuntimeError):
    pass


def _exact(v):
    return v if isinstance(v, ExactScalar) else as_fraction(v)


def _dot(a, x):
    s = a[0] * x[0]
    for u, v in zip(a[1:], x[1:]):
        s = s + u * v
    return s


@dataclass(frozen=True)
class Arrangement:
    """Distinct affine hyperplanes in R^d with optional family labels."""

    hyperplanes: tuple
    labels: tuple | None = None

    def __post_init__(self):
        hs = tuple(h if isinstance(h, HyperplaneH) else HyperplaneH(tuple(map(_exact, h[0])), _exact(h[1]))
                   for h in self.hyperplanes)
        object.__setattr__(self, "hyperplanes", hs)
        if len(set(hs)) != len(hs):
            raise ValueError("arrangement contains a repeated hyperplane")
        if hs and any(h.dim != hs[0].dim for h in hs):
            raise ValueError("hyperplanes of mixed dimension")
        if self.labels is not None:
            labels = tuple(int(v) for v in self.labels)
            if len(labels) != len(hs):
                raise ValueError("one family label per hyperplane")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def build(cls, hyperplanes, d: int | None = None, labels=None) -> "Arrangement":
        arr = cls(tuple(hyperplanes), labels)
        if d is not None:
            object.__setattr__(arr, "_d", d)
        return arr

    @classmethod
    def distinct(cls, hyperplanes) -> "Arrangement":
        """Drop repeated hyperplanes (keeping first occurrences)."""
        seen = {}
        for h in hyperplanes:
            h = h if isinstance(h, HyperplaneH) else HyperplaneH(tuple(map(_exact, h[0])), _exact(h[1]))
            seen.setdefault(h, None)
        return cls(tuple(seen))

    @property
    def d(self) -> int:
        if self.hyperplanes:
            return self.hyperplanes[0].dim
        if hasattr(self, "_d"):
            return self._d
        raise ValueError("empty arrangement without a declared dimension")

    def __len__(self):
        return len(self.hyperplanes)

    def family(self, f: int) -> list:
        return [h for h, l in zip(self.hyperplanes, self.labels) if l == f]

    def affine_image(self, M, t) -> "Arrangement":
        """Image under x -> M x + t (M invertible, exact)."""
        d = len(M)
        Minv = _inverse(M)
        out = []
        for h in self.hyperplanes:
            # <a, M^-1 (y - t)> = b  ->  <M^-T a, y> = b + <M^-T a, t>
            a2 = tuple(sum((h.normal[i] * Minv[i][j] for i in range(d)), h.normal[0] * 0) for j in range(d))
            out.append(HyperplaneH(a2, h.offset + _dot(a2, t)))
        return Arrangement(tuple(out), self.labels)


def _inverse(M):
    d = len(M)
    cols = []
    for j in range(d):
        e = [Fraction(int(i == j)) for i in range(d)]
        cols.append(solve_linear(M, e))
    return [[cols[j][i] for j in range(d)] for i in range(d)]


class ConvexBody:
    """Bounded polytope with nonempty interior, given by half-spaces a.x <= b."""

    def __init__(self, halfspaces):
        if isinstance(halfspaces, WindowPolytope):
            self.poly = halfspaces
        else:
            self.poly = WindowPolytope(tuple((tuple(a), b) for a, b in halfspaces))
        self.A = [tuple(a) for a in self.poly.A]
        self.b = list(self.poly.b)
        self.d = self.poly.dim
        self.interior_point = self.poly.interior_point
        self.Af, self.bf = self.poly.float_arrays()
        self._verts = None

    @classmethod
    def box(cls, lo: Sequence, hi: Sequence) -> "ConvexBody":
        d = len(lo)
        hs = []
        for i in range(d):
            e = [0] * d
            e[i] = 1
            hs.append((tuple(e), hi[i]))
            hs.append((tuple(-v for v in e), -lo[i]))
        return cls(hs)

    @property
    def halfspaces(self):
        return list(zip(self.A, self.b))

    def vertices(self) -> list:
        if self._verts is None:
            self._verts = [v for v, _ in self.poly.vertices()]
        return self._verts

    def vertices_float(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices()]).reshape(-1, self.d)

    def contains(self, x, strict: bool = False) -> bool:
        return self.poly.contains(x, strict)

    def affine_image(self, M, t) -> "ConvexBody":
        d = len(M)
        Minv = _inverse(M)
        hs = []
        for a, b in zip(self.A, self.b):
            a2 = tuple(sum((a[i] * Minv[i][j] for i in range(d)), a[0] * 0) for j in range(d))
            hs.append((a2, b + _dot(a2, t)))
        return ConvexBody(hs)


# ----------------------------------------------------------------------
# exact helpers
# ----------------------------------------------------------------------

def _meets_open(body_A, body_b, eq_A=(), eq_b=()) -> bool:
    """Does the affine subspace eq_A x = eq_b meet the open body?"""
    if not body_A:
        return True
    return strictly_feasible(list(body_A), list(body_b), list(eq_A), list(eq_b))


def _restrict(a, b, H):
    """Rewrite a.x (<=,=) b on H, eliminating H's pivot coordinate."""
    n, off = H
    p = next(i for i, c in enumerate(n) if c)
    f = a[p] / n[p]
    row = tuple(a[j] - f * n[j] for j in range(len(a)) if j != p)
    return row, b - f * off


def _canon(row, rhs):
    nz = next((c for c in row if c), None)
    if nz is None:
        return None
    return tuple(c / nz for c in row), rhs / nz


def _regions_rec(hyps: list, body: list, d: int, budget: list) -> int:
    budget[0] -= 1
    if budget[0] < 0:
        raise ArrangementCapError("recursive insertion exceeded its work cap")
    BA = [a for a, _ in body]
    Bb = [b for _, b in body]
    live = [h for h in hyps if _meets_open(BA, Bb, [h[0]], [h[1]])]
    if d == 1:
        return 1 + len(live)
    total = 1
    for idx, H in enumerate(live):
        sub_body = []
        for a, b in body:
            row, rhs = _restrict(a, b, H)
            if any(row):
                sub_body.append((row, rhs))
            elif sign(rhs) <= 0:
                break
        else:
            seen = {}
            for G in live[:idx]:
                row, rhs = _restrict(G[0], G[1], H)
                c = _canon(row, rhs)
                if c is not None:
                    seen.setdefault(c, None)
            total += _regions_rec(list(seen), sub_body, d - 1, budget)
    return total


def _as_pairs(arr: Arrangement) -> list:
    return [(h.normal, h.offset) for h in arr.hyperplanes]


# ----------------------------------------------------------------------
# vertices
# ----------------------------------------------------------------------

def vertices_in_B(arr: Arrangement, B: ConvexBody) -> list:
    """Vertices (intersections of d hyperplanes) in the closed body, with a(p)."""
    d = B.d
    hs = _as_pairs(arr)
    if len(hs) < d:
        return []
    if d <= 3 and len(hs) > 12:
        pts = _fast_points(arr, B, closed=True)
        return sorted(((p, len(s)) for p, s in pts.items()), key=lambda t: _sort_key(t[0]))
    found = {}
    for sub in itertools.combinations(range(len(hs)), d):
        x = solve_linear([hs[i][0] for i in sub], [hs[i][1] for i in sub])
        if x is None:
            continue
        x = tuple(x)
        if x in found or not B.contains(x):
            continue
        found[x] = sum(1 for a, b in hs if not (_dot(a, x) - b))
    return sorted(found.items(), key=lambda t: _sort_key(t[0]))


def _sort_key(p):
    return tuple(float(c) for c in p)


# ----------------------------------------------------------------------
# float candidates + exact verification (d <= 3)
# ----------------------------------------------------------------------

def _float_planes(hs):
    N = np.array([[float(c) for c in a] for a, _ in hs])
    off = np.array([float(b) for _, b in hs])
    s = np.linalg.norm(N, axis=1)
    return N / s[:, None], off / s


def _cluster(points: np.ndarray, tol: float) -> list:
    """Group rows closer than tol in max-norm (single linkage)."""
    if len(points) == 0:
        return []
    pairs = cKDTree(points).query_pairs(tol, p=np.inf, output_type="ndarray")
    n = len(points)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    order = np.argsort(lab, kind="stable")
    cuts = np.nonzero(np.diff(lab[order]))[0] + 1
    return np.split(order, cuts)


def _single_point(hs, members, triples, d):
    """{x: planes through x} when all candidate tuples meet in one exact point, else None."""
    x = None
    for g in triples:
        x = solve_linear([hs[int(i)][0] for i in g], [hs[int(i)][1] for i in g])
        if x is not None:
            break
    if x is None:
        return None
    x = tuple(x)
    through = frozenset(i for i in members if not (_dot(hs[i][0], x) - hs[i][1]))
    if all(int(i) in through for g in triples for i in g):
        return {x: through}
    return None


def _fast_points(arr: Arrangement, B: ConvexBody, closed: bool, exact: bool = True) -> dict:
    """Exact vertices of the arrangement in B mapped to the set of hyperplanes through them.

    With exact=False a simple vertex well inside B is keyed by its float
    image instead of being solved exactly; the margins already certify it.
    """
    d = B.d
    hs = _as_pairs(arr)
    N, off = _float_planes(hs)
    scale = float(np.abs(B.vertices_float()).max()) + 1.0
    tol = _TOL * scale
    bn = np.linalg.norm(B.Af, axis=1)
    C, e = B.Af / bn[:, None], B.bf / bn
    if d == 2:
        groups, pts, amb = kernels.pair_lines_in_box(N, off, C, e, tol)
    elif d == 3:
        groups, pts, amb = kernels.triple_points(N, off, C, e, tol)
    else:
        raise ValueError("fast vertex search needs d in {2, 3}")
    out = {}
    for cl in _cluster(pts, tol):
        members = sorted(set(int(i) for g in groups[cl] for i in g))
        near_b = bool(amb[cl].any())
        p = pts[cl].mean(axis=0)
        # every hyperplane passing near the cluster point is a candidate
        cand = np.nonzero(np.abs(N @ p - off) <= 10 * tol)[0]
        members = sorted(set(members) | set(int(i) for i in cand))
        if len(cl) == math.comb(len(members), d) and len(members) == d:
            # simple vertex: d hyperplanes, no other hyperplane nearby
            if not exact and not near_b:
                out[("float",) + tuple(float(c) for c in p)] = frozenset(members)
                continue
            x = tuple(solve_linear([hs[i][0] for i in members], [hs[i][1] for i in members]))
            through = frozenset(members)
            pts_exact = {x: through}
        else:
            pts_exact = _single_point(hs, members, groups[cl], d)
            if pts_exact is None:
                pts_exact = {}
                for sub in itertools.combinations(members, d):
                    x = solve_linear([hs[i][0] for i in sub], [hs[i][1] for i in sub])
                    if x is None:
                        continue
                    x = tuple(x)
                    if x not in pts_exact:
                        pts_exact[x] = frozenset(i for i in members if not (_dot(hs[i][0], x) - hs[i][1]))
        for x, through in pts_exact.items():
            if near_b or len(pts_exact) > 1:
                if not B.contains(x, strict=not closed):
                    continue
            out[x] = through
    return out


def _fast_live_planes(hs, B: ConvexBody):
    """Indices of hyperplanes meeting open(B) (float with exact fallback at vertices)."""
    V = B.vertices_float()
    N = np.array([[float(c) for c in a] for a, _ in hs]).reshape(-1, B.d)
    off = np.array([float(b) for _, b in hs])
    proj = N @ V.T
    lo, hi = proj.min(axis=1), proj.max(axis=1)
    tol = 1e-9 * (1 + np.abs(N).sum(axis=1) * (np.abs(V).max() + 1) + np.abs(off))
    live = (lo < off - tol) & (off + tol < hi)
    amb = ~live & (lo <= off + tol) & (off - tol <= hi)
    verts = B.vertices()
    for i in np.nonzero(amb)[0]:
        a, b = hs[i]
        vals = [_dot(a, v) - b for v in verts]
        live[i] = any(sign(v) < 0 for v in vals) and any(sign(v) > 0 for v in vals)
    return [int(i) for i in np.nonzero(live)[0]]


def _line_meets_open(n1, b1, n2, b2, B: ConvexBody) -> bool:
    return _meets_open(B.A, B.b, [n1, n2], [b1, b2])


def _fast_lines(hs, B: ConvexBody) -> list:
    """Lines (as sets of planes containing them) meeting open(B); d = 3."""
    N, off = _float_planes(hs)
    n = len(hs)
    if n < 2:
        return []
    i, j = np.triu_indices(n, 1)
    u = np.cross(N[i], N[j])
    un = np.linalg.norm(u, axis=1)
    ok = un > 1e-9
    i, j, u, un = i[ok], j[ok], u[ok], un[ok]
    u = u / un[:, None]
    # canonical sign: first significant component positive
    piv = np.argmax(np.abs(u) > 1e-6, axis=1)
    sgn = np.sign(u[np.arange(len(u)), piv])
    u = u * sgn[:, None]
    # point on the line closest to the origin
    rhs = np.stack([off[i], off[j]], axis=1)
    M = np.stack([N[i], N[j]], axis=1)                       # (P, 2, 3)
    G = np.einsum("pat,pbt->pab", M, M)
    lam = np.linalg.solve(G, rhs[..., None])[..., 0]
    x0 = np.einsum("pa,pat->pt", lam, M)
    # meets open(B)? clip t-range of x0 + t u against every facet
    C, e = B.Af, B.bf
    cu = u @ C.T
    cx = x0 @ C.T - e
    tol = 1e-9 * (1 + np.abs(x0).max(axis=1, initial=0))[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -cx / cu
    par = np.abs(cu) < 1e-12
    lo = np.where((cu < 0) & ~par, t, -np.inf).max(axis=1)
    hi = np.where((cu > 0) & ~par, t, np.inf).min(axis=1)
    par_bad = (par & (cx > -tol)).any(axis=1)
    par_amb = (par & (np.abs(cx) <= tol)).any(axis=1)
    width = hi - lo
    inside = (width > 1e-7) & ~par_bad
    amb = (np.abs(width) <= 1e-7) | par_amb
    key = np.concatenate([u, x0], axis=1)
    sel = inside | amb
    idx = np.nonzero(sel)[0]
    lines = []
    for cl in _cluster(key[idx], 1e-7 * (1 + np.abs(key).max(initial=0))):
        rows = idx[cl]
        planes = sorted(set(int(v) for v in i[rows]) | set(int(v) for v in j[rows]))
        if len(rows) == 1 and not amb[rows[0]]:
            lines.append(frozenset(planes))
            continue
        # exact: group the pairs by the exact line they span
        groups = _exact_line_groups(hs, [(int(i[r]), int(j[r])) for r in rows])
        for g in groups:
            a, b = g[0], g[1]
            if any(amb[r] for r in rows) and not _line_meets_open(hs[a][0], hs[a][1], hs[b][0], hs[b][1], B):
                continue
            lines.append(frozenset(g))
    return lines


def _exact_line_key(hs, a, b):
    n1, b1 = hs[a]
    n2, b2 = hs[b]
    u = (n1[1] * n2[2] - n1[2] * n2[1], n1[2] * n2[0] - n1[0] * n2[2], n1[0] * n2[1] - n1[1] * n2[0])
    p = next(k for k in range(3) if u[k])
    u = tuple(c / u[p] for c in u)
    # point with coordinate p = 0
    others = [k for k in range(3) if k != p]
    x = solve_linear([[n1[k] for k in others], [n2[k] for k in others]], [b1, b2])
    pt = [None] * 3
    pt[p] = u[0] * 0
    for k, v in zip(others, x):
        pt[k] = v
    return u, tuple(pt)


def _exact_line_groups(hs, pairs):
    groups = {}
    for a, b in pairs:
        k = _exact_line_key(hs, a, b)
        groups.setdefault(k, set()).update((a, b))
    return [sorted(v) for v in groups.values()]


def _cross(n1, n2):
    return (n1[1] * n2[2] - n1[2] * n2[1], n1[2] * n2[0] - n1[0] * n2[2],
            n1[0] * n2[1] - n1[1] * n2[0])


def _direction_classes(hs, planes) -> list:
    """Partition of the planes through one point by the lines they share."""
    reps = []    # (exact direction, float unit direction, plane set)
    for a, b in itertools.combinations(planes, 2):
        u = _cross(hs[a][0], hs[b][0])
        if not any(u):
            continue
        f = np.array([float(c) for c in u])
        f /= np.linalg.norm(f)
        for v, g, members in reps:
            # float prefilter, then an exact parallelism test (no divisions)
            if min(np.abs(f - g).max(), np.abs(f + g).max()) < 1e-6 and not any(_cross(u, v)):
                members.update((a, b))
                break
        else:
            reps.append((u, f, {a, b}))
    return [m for _, _, m in reps]


def _regions_fast(arr: Arrangement, B: ConvexBody) -> int:
    d = B.d
    hs = _as_pairs(arr)
    live = _fast_live_planes(hs, B) if hs else []
    hs = [hs[i] for i in live]
    sub = Arrangement(tuple(HyperplaneH(a, b) for a, b in hs))
    if d == 1:
        return 1 + len(hs)
    if d == 2:
        pts = _fast_points(sub, B, closed=False, exact=False) if len(hs) >= 2 else {}
        return 1 + len(hs) + sum(len(s) - 1 for s in pts.values())
    if d == 3:
        lines = _fast_lines(hs, B)
        total = 1 + len(hs) + sum(len(l) - 1 for l in lines)
        pts = _fast_points(sub, B, closed=False, exact=False) if len(hs) >= 3 else {}
        for x, through in pts.items():
            m_p = len(through)
            if m_p == 3:
                total += 1
                continue
            # lines through x: group pairs of planes through x by direction
            dirs = _direction_classes(hs, sorted(through))
            total += 1 - m_p + sum(len(s) - 1 for s in dirs)
        return total
    raise ValueError("fast path needs d <= 3")


def count_regions_in_B(arr: Arrangement, B: ConvexBody, method: str = "auto",
                       cap: int = 2_000_000) -> int:
    """Number of connected components of open(B) minus the arrangement."""
    if len(arr) and arr.d != B.d:
        raise ValueError("arrangement and body dimensions differ")
    if len(arr) == 0:
        return 1
    if method == "auto":
        method = "fast" if B.d <= 3 and len(arr) > 12 else "recursive"
    if method == "fast":
        return _regions_fast(arr, B)
    budget = [cap]
    return _regions_rec(_as_pairs(arr), list(zip(B.A, B.b)), B.d, budget)


# ----------------------------------------------------------------------
# characteristic polynomial and flats
# ----------------------------------------------------------------------

def characteristic_polynomial_wrt_B(arr: Arrangement, B: ConvexBody, cap: int = 20) -> list:
    """Coefficients c[k] of t^k in the sum over B-central subsets of (-1)^|S| t^dim(S)."""
    n = len(arr)
    d = B.d
    if n > cap:
        raise ArrangementCapError(f"{n} hyperplanes exceed the subset-sum cap {cap}")
    hs = _as_pairs(arr)
    coeffs = [0] * (d + 1)

    def dfs(start, eqA, eqb, size):
        rank = rank_of(eqA) if eqA else 0
        coeffs[d - rank] += -1 if size % 2 else 1
        for i in range(start, n):
            A2 = eqA + [hs[i][0]]
            b2 = eqb + [hs[i][1]]
            if _meets_open(B.A, B.b, A2, b2):
                dfs(i + 1, A2, b2, size + 1)

    dfs(0, [], [], 0)
    return coeffs


def evaluate_polynomial(coeffs: Sequence[int], t) -> int:
    return sum(c * t ** k for k, c in enumerate(coeffs))


def _rref_key(rows, rhs):
    """Canonical reduced row echelon form of [rows | rhs] (None if inconsistent)."""
    A = [list(r) + [v] for r, v in zip(rows, rhs)]
    m = len(A)
    n = len(A[0]) - 1 if A else 0
    rk = 0
    for c in range(n):
        p = next((r for r in range(rk, m) if A[r][c]), None)
        if p is None:
            continue
        A[rk], A[p] = A[p], A[rk]
        piv = A[rk][c]
        A[rk] = [v / piv for v in A[rk]]
        for r in range(m):
            if r != rk and A[r][c]:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[rk])]
        rk += 1
    if any(A[r][-1] for r in range(rk, m)):
        return None
    return tuple(tuple(row) for row in A[:rk])


def flats_in_B(arr: Arrangement, B: ConvexBody) -> dict:
    """|F_{k,B}| for k = 0..d: flats of dimension k meeting open(B) (ambient included)."""
    d = B.d
    hs = _as_pairs(arr)
    counts = {k: 0 for k in range(d + 1)}
    counts[d] = 1
    seen = set()
    for size in range(1, d + 1):
        for sub in itertools.combinations(range(len(hs)), size):
            rows = [hs[i][0] for i in sub]
            if rank_of(rows) != size:
                continue
            key = _rref_key(rows, [hs[i][1] for i in sub])
            if key is None or key in seen:
                continue
            seen.add(key)
            if _meets_open(B.A, B.b, rows, [hs[i][1] for i in sub]):
                counts[d - size] += 1
    return counts


# ----------------------------------------------------------------------
# incidences and Beck-type validators (d = 2)
# ----------------------------------------------------------------------

@dataclass
class IncidenceProfile:
    vertices: list            # (point, a(p))
    n: int
    t: dict = field(default_factory=dict)        # k -> |{p : a(p) >= k}|
    t_star: dict = field(default_factory=dict)   # k -> |{p : k <= a(p) < 2k}|

    def pair_count(self) -> int:
        return sum(math.comb(a, 2) for _, a in self.vertices)

    def incidences(self) -> int:
        return sum(a for _, a in self.vertices)


def incidence_profile(arr: Arrangement, B: ConvexBody | None = None) -> IncidenceProfile:
    """Vertex multiplicities and the tables t(., k), t*(., k) for k = 2..n."""
    if B is None:
        B = _enclosing_box(arr)
    verts = vertices_in_B(arr, B)
    n = len(arr)
    mult = [a for _, a in verts]
    t = {k: sum(1 for a in mult if a >= k) for k in range(2, n + 1)}
    ts = {k: sum(1 for a in mult if k <= a < 2 * k) for k in range(2, n + 1)}
    return IncidenceProfile(verts, n, t, ts)


def _enclosing_box(arr: Arrangement) -> ConvexBody:
    """A box containing every vertex of the arrangement."""
    d = arr.d
    m = Fraction(1)
    hs = _as_pairs(arr)
    for sub in itertools.combinations(range(len(hs)), d):
        x = solve_linear([hs[i][0] for i in sub], [hs[i][1] for i in sub])
        if x is not None:
            for c in x:
                m = max(m, abs(as_fraction(c)) if not isinstance(c, ExactScalar) else
                        Fraction(math.ceil(abs(float(c))) + 1))
    return ConvexBody.box([-m - 1] * d, [m + 1] * d)


@dataclass
class BeckReport:
    checks: list              # (name, k, value, bound, ok)

    @property
    def violations(self) -> list:
        return [c for c in self.checks if not c[4]]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_beck_bounds(profile: IncidenceProfile, n: int | None = None, beta=BETA) -> BeckReport:
    """Beck's t(n,k) bounds and the Szemeredi-Trotter bound t < beta n^2 / k^3."""
    n = profile.n if n is None else n
    checks = []
    for k in range(2, n + 1):
        t = profile.t.get(k, 0)
        bound = Fraction(n * (n - 1), k * (k - 1))
        checks.append(("pairs", k, t, bound, t <= bound))
        if k * k > 2 * n:
            bound = Fraction(2 * n, k)
            checks.append(("rich", k, t, bound, t < bound))
        if 3 <= k and k * k <= n:
            bound = Fraction(beta) * n * n / k ** 3
            checks.append(("szemeredi-trotter", k, t, bound, t < bound))
    return BeckReport(checks)


def beck_constant(d: int, k: int = 10, eps=1, delta=1) -> Fraction:
    """c_d from the induction recurrence, starting at c_2 = 1/8380416.

    c_d = C(d^k, d)^-1 * eps * c_{d-1} / d * delta^(d-1); eps and delta are
    not pinned down, so the defaults give the recurrence value only.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    c = C2
    for m in range(3, d + 1):
        c = Fraction(1, math.comb(m ** k, m)) * Fraction(eps) * c / m * Fraction(delta) ** (m - 1)
    return c


@dataclass
class BeckFamilyResult:
    vertex_count: int
    certified: bool
    bound: Fraction
    constant: Fraction
    violated: list
    exhaustive: bool


def beck_family_check(arr: Arrangement, B: ConvexBody, c=Fraction(1, 101), samples: int = 2000,
                      exhaustive_limit: int = 200_000, seed: int = 0) -> BeckFamilyResult:
    """Vertex count in B for d families of equal size, with the theorem's hypotheses checked.

    d = 2 follows the local dual of Beck's theorem: unless some point carries
    a(p) >= n/100 lines, there are at least c_2 n^2 vertices in B.  For d >= 3
    the induction needs, per family, no point where two or more of its
    hyperplanes meet with more than c|F_i| of them (0 < c < 1/100).
    """
    import random
    d = B.d
    c = as_fraction(c)
    if arr.labels is None:
        raise ValueError("beck_family_check needs family labels 1..d")
    fams = [[i for i, l in enumerate(arr.labels) if l == f] for f in range(1, d + 1)]
    if sorted(i for f in fams for i in f) != list(range(len(arr))):
        raise ValueError("labels must be 1..d")
    hs = _as_pairs(arr)
    n = len(arr)
    violated = []
    if d >= 3 and not 0 < c < Fraction(1, 100):
        violated.append("concurrency constant c must lie in (0, 1/100)")
    if len(set(len(f) for f in fams)) != 1:
        violated.append("families must have equal size n/d")
    total = math.prod(len(f) for f in fams)
    exhaustive = total <= exhaustive_limit
    if exhaustive:
        tuples = itertools.product(*fams)
    else:
        rng = random.Random(seed)
        tuples = (tuple(rng.choice(f) for f in fams) for _ in range(samples))
    for tup in tuples:
        x = solve_linear([hs[i][0] for i in tup], [hs[i][1] for i in tup])
        if x is None or not B.contains(tuple(x)):
            violated.append(f"cross-family tuple {tup} does not meet B in a single point")
            break
    verts = vertices_in_B(arr, B)
    if d == 2:
        worst = max((a for _, a in verts), default=0)
        if 100 * worst >= n:
            violated.append(f"a point of B lies on {worst} >= n/100 lines (first case of the dual Beck theorem)")
    elif not any("concurrency" in v for v in violated):
        for x, _ in verts:
            for f in fams:
                a = sum(1 for i in f if not (_dot(hs[i][0], x) - hs[i][1]))
                if a >= 2 and a > c * len(f):
                    violated.append(f"{a} hyperplanes of one family meet at {tuple(map(str, x))} "
                                    f"(more than c*|F_i|)")
                    break
            else:
                continue
            break
    const = beck_constant(d)
    bound = const * n ** d
    count = len(verts)
    return BeckFamilyResult(count, not violated and count >= bound, bound, const, violated, exhaustive)


def schlafli_bound(n: int, d: int) -> int:
    """sum_{i=0}^{d} C(n, i): the most regions n hyperplanes can cut R^d into."""
    if n < 0 or d < 0:
        raise ValueError("n and d must be non-negative")
    return sum(math.comb(n, i) for i in range(d + 1))
