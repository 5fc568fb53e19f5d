"""Cut-and-project schemes with Galois-embedded lattices.

A lattice point is an integer array c of shape (n_G, rank): chart coordinate
i of the G-part is sum_s c[i, s] * basis[s] and H chart coordinate j is the
Galois conjugate sigma_j of G chart coordinate src_j.  Group operations act on
these integer arrays directly, so products and inverses are exact.

Enumeration runs layer by layer in float with a safety margin; any candidate
whose float classification lies within the margin of a boundary is decided
with exact field arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .charts import Chart, Module
from .field import Field, as_fraction, sign
from .group import (GroupPoint, GroupSpec, ball_volume, inverse, norm_less,
                    translation_matrix)
from .lp import is_feasible, strictly_feasible
from .polytope import WindowPolytope, rank_of

__all__ = [
    "SchemeSpec", "LatticePoint", "LatticeBatch", "GammaRegularityError", "EnumerationCapError",
    "enumerate_lattice", "enumerate_batch", "star_map", "model_set", "model_set_batch",
    "window_shift_membership", "ww_inverse_contains", "slab", "slab_batch", "displacements",
    "slab_of", "growth_ratio", "check_flc", "FLCResult", "density_certificate", "density_cover",
]


class GammaRegularityError(ValueError):
    """A projected lattice point lies on the boundary of the window."""

    def __init__(self, point):
        super().__init__(f"lattice point with H-part on the window boundary: {point}")
        self.point = point


class EnumerationCapError(RuntimeError):
    pass


def _fl(x) -> float:
    return float(x)


class SchemeSpec:
    """G, H, a Z-module lattice in chart coordinates, and a polytopal window.

    embedding[j] = (src, mask): H chart coordinate j is conj(mask) of G
    chart coordinate src.  Validation checks that the chart laws match the
    exponential product, that the lattice is closed under the group law,
    that the star map is a homomorphism, and that each chart layer embeds the
    module as a full lattice.
    """

    def __init__(self, name: str, field: Field, module: Module, g_spec: GroupSpec,
                 h_spec: GroupSpec, g_chart: Chart, h_chart: Chart,
                 embedding: Sequence, window: WindowPolytope, cap: int = 50_000_000):
        self.name = name
        self.field = field
        self.module = module
        self.g_spec = g_spec
        self.h_spec = h_spec
        self.g_chart = g_chart
        self.h_chart = h_chart
        self.embedding = tuple((int(s), int(m)) for s, m in embedding)
        self.window = window
        self.cap = int(cap)
        self._validate()
        self.density = density_certificate(self)
        if self.density == "not dense":
            raise ValueError("the lattice projects to a non-dense subgroup of H (not a cut-and-project scheme)")
        self._prepare()

    # -- validation ------------------------------------------------------
    def _validate(self):
        nG, nH = self.g_spec.n, self.h_spec.n
        if len(self.embedding) != nH:
            raise ValueError("embedding must list one (source, automorphism) per H coordinate")
        if self.window.dim != nH:
            raise ValueError("window dimension differs from dim H")
        self.g_chart.check_against(self.g_spec)
        self.h_chart.check_against(self.h_spec)
        srcs = [s for s, _ in self.embedding]
        if srcs != sorted(srcs) or any(not 0 <= s < nG for s in srcs):
            raise ValueError("H coordinates must be sourced in G-coordinate order")
        for s, m in self.embedding:
            if m == 0:
                raise ValueError("the identity automorphism cannot feed H (the lattice would not embed)")
        for k, i, j, _ in self.h_chart.E:
            if not (self.embedding[i][0] < self.embedding[k][0] and self.embedding[j][0] < self.embedding[k][0]):
                raise ValueError("H chart correction must read earlier layers")
        for k, i, j, _ in self.g_chart.E:
            if not (i < k and j < k):
                raise ValueError("G chart correction must read earlier layers")
        self.layer_h = [[j for j, (s, _) in enumerate(self.embedding) if s == i] for i in range(nG)]
        for i, js in enumerate(self.layer_h):
            if 1 + len(js) != self.module.rank:
                raise ValueError(
                    f"G coordinate {i} feeds {len(js)} H coordinates; a rank-{self.module.rank} "
                    f"module needs {self.module.rank - 1} for a lattice")
            rows = [[b.conj(0) for b in self.module.basis]] + \
                   [[b.conj(self.embedding[j][1]) for b in self.module.basis] for j in js]
            if rank_of([list(row) for row in rows]) != self.module.rank:
                raise ValueError(f"layer {i} does not embed the module as a lattice")
        # integer tensor of the chart law on coefficient arrays
        T = self.module.mult_table()
        r = self.module.rank
        terms = {}
        for k, i, j, c in self.g_chart.Q:
            for s in range(r):
                for t in range(r):
                    if T[s][t] is None:
                        raise ValueError("module is not closed under the products the group law needs")
                    for u in range(r):
                        v = c * T[s][t][u]
                        if v:
                            key = (k, u, i, s, j, t)
                            terms[key] = terms.get(key, 0) + v
        if any(Fraction(v).denominator != 1 for v in terms.values()):
            raise ValueError("lattice not closed: chart law has non-integral coefficients on the module")
        self.qterms = np.array([key + (int(v),) for key, v in sorted(terms.items()) if v],
                               dtype=np.int64).reshape(-1, 7)
        # star map is a homomorphism on generator pairs
        for i1, s1, i2, s2 in itertools.product(range(nG), range(r), range(nG), range(r)):
            x = np.zeros((nG, r), np.int64)
            y = np.zeros((nG, r), np.int64)
            x[i1, s1] = 1
            y[i2, s2] = 1
            hx, hy = self.h_chart_exact(x), self.h_chart_exact(y)
            prod = self.mul_coeffs(x[None], y[None])[0]
            if tuple(self.h_chart.multiply(hx, hy)) != tuple(self.h_chart_exact(prod)):
                raise ValueError("star map is not a homomorphism for this embedding")
            if tuple(self.g_chart.multiply(self.g_chart_exact(x), self.g_chart_exact(y))) != \
                    tuple(self.g_chart_exact(prod)):
                raise ValueError("integer chart law disagrees with the field computation")

    def _prepare(self):
        self.g_basis = np.array([_fl(b) for b in self.module.basis])
        self.h_rows = np.array([[_fl(b.conj(m)) for b in self.module.basis] for _, m in self.embedding])
        self.gE = [(k, i, j, float(c)) for k, i, j, c in self.g_chart.E]
        self.hE = [(k, i, j, float(c)) for k, i, j, c in self.h_chart.E]
        self.scale = max(1.0, float(np.abs(self.g_basis).max()), float(np.abs(self.h_rows).max()))
        self.Wf_A, self.Wf_b = self.window.float_arrays()
        # bracket arrays (i, j, k, c) of G for float kernels
        self.g_br = [(i, j, k, float(c)) for i, j, row in self.g_spec.brackets for k, c in row]
        self.h_br = [(i, j, k, float(c)) for i, j, row in self.h_spec.brackets for k, c in row]

    # -- exact conversions -------------------------------------------------
    def g_chart_exact(self, c) -> tuple:
        return tuple(self.module.element(c[i]) for i in range(self.g_spec.n))

    def h_chart_exact(self, c) -> tuple:
        return tuple(self.module.element(c[s]).conj(m) for s, m in self.embedding)

    def g_exact(self, c) -> GroupPoint:
        return GroupPoint(self.g_chart.to_exp(self.g_chart_exact(c)))

    def h_exact(self, c) -> GroupPoint:
        return GroupPoint(self.h_chart.to_exp(self.h_chart_exact(c)))

    def point(self, c) -> "LatticePoint":
        c = np.asarray(c, dtype=np.int64)
        return LatticePoint(self.g_exact(c), self.h_exact(c), tuple(map(tuple, c.tolist())))

    # -- float conversions ---------------------------------------------
    def float_coords(self, C):
        """(G exp, H exp) float coordinates for an (M, n_G, rank) coefficient array."""
        C = np.asarray(C, dtype=np.float64)
        gch = C @ self.g_basis
        hch = np.stack([C[:, s, :] @ self.h_rows[j] for j, (s, _) in enumerate(self.embedding)], axis=1) \
            if len(self.embedding) else np.zeros((C.shape[0], 0))
        g = gch.copy()
        for k, i, j, c in self.gE:
            g[:, k] += c * gch[:, i] * gch[:, j]
        h = hch.copy()
        for k, i, j, c in self.hE:
            h[:, k] += c * hch[:, i] * hch[:, j]
        return g, h

    def delta_for(self, C, h=None):
        """Per-row float margin for H-coordinates computed from coefficients C.

        Each chart coordinate is a sum of rank terms of size |c| * scale; the
        quadratic chart corrections multiply such an error by |h|.
        """
        C = np.asarray(C)
        if C.size == 0:
            return np.zeros(len(C))
        m = np.abs(C.reshape(len(C), -1)).max(axis=1).astype(float)
        s = 1.0 + m * self.scale
        hm = 1.0 + (np.abs(h).max(axis=1) if h is not None and len(h) else 0.0)
        return 1e-11 + 4e-15 * s * hm

    # -- integer group law -----------------------------------------------
    def mul_coeffs(self, X, Y):
        X = np.asarray(X, dtype=np.int64)
        Y = np.asarray(Y, dtype=np.int64)
        X, Y = np.broadcast_arrays(X, Y)
        out = X + Y
        for k, u, i, s, j, t, v in self.qterms:
            out[:, k, u] += v * X[:, i, s] * Y[:, j, t]
        return out

    def inv_coeffs(self, X):
        X = np.asarray(X, dtype=np.int64)
        out = -X
        for k, u, i, s, j, t, v in self.qterms:
            out[:, k, u] += v * X[:, i, s] * X[:, j, t]
        return out

    def __repr__(self):
        return f"SchemeSpec({self.name!r}, {self.field}, G dim {self.g_spec.n}, H dim {self.h_spec.n})"


def _field_det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    total = None
    for j in range(n):
        if not M[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _field_det(minor)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    return total if total is not None else M[0][0] * 0


def density_certificate(scheme: SchemeSpec) -> str:
    """Exact density test for the projection of the lattice to H.

    A subgroup of a connected nilpotent group is dense iff its image in the
    abelianisation is, and there the layers decouple.  A layer with k H
    coordinates over a rank-(k+1) module has image Z^(k+1) A in R^k; it is
    dense iff the row space of A holds no real multiple of a rational vector,
    i.e. iff the maximal minors of A are linearly independent over Q.
    Returns "dense", "not dense" or "undecided" (layers of other shapes).
    """
    derived = {k for _, _, row in scheme.h_spec.brackets for k, _ in row}
    verdict = "dense"
    basis = scheme.module.basis
    m = len(basis)
    for src in range(scheme.g_spec.n):
        js = [j for j, (s, _) in enumerate(scheme.embedding) if s == src and j not in derived]
        if not js:
            continue
        A = [[b.conj(scheme.embedding[j][1]) for b in basis] for j in js]
        if len(js) != m - 1:
            verdict = "undecided"
            continue
        minors = [_field_det([row[:i] + row[i + 1:] for row in A]) for i in range(m)]
        if rank_of([list(x.coeffs) for x in minors]) < m:
            return "not dense"
    return verdict


def density_cover(scheme: SchemeSpec, R, eps) -> float:
    """Heuristic: fraction of eps-cells inside the window hit by tau of |lambda| < R."""
    R, eps = as_fraction(R), float(eps)
    batch = model_set_batch(scheme, R)
    lo, hi = scheme.window.bbox
    lo = np.array([float(v) for v in lo])
    hi = np.array([float(v) for v in hi])
    n = np.maximum(1, np.floor((hi - lo) / eps).astype(int))
    axes = [lo[k] + (np.arange(n[k]) + 0.5) * (hi[k] - lo[k]) / n[k] for k in range(len(n))]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(n))
    half = (hi - lo) / n / 2
    A, b = scheme.Wf_A, scheme.Wf_b
    # cells entirely inside the window
    inside = np.all(centres @ A.T + np.abs(A) @ half < b, axis=1)
    if not inside.any():
        return 1.0
    idx = np.floor((batch.h - lo) / (2 * half)).astype(int)
    flat = np.ravel_multi_index(np.clip(idx, 0, n - 1).T, n) if len(idx) else np.zeros(0, int)
    hit = np.zeros(int(np.prod(n)), bool)
    hit[flat] = True
    return float(hit[inside].mean())


@dataclass(frozen=True)
class LatticePoint:
    g_part: GroupPoint
    h_part: GroupPoint
    coeffs: tuple


@dataclass
class LatticeBatch:
    """Coefficient arrays plus float coordinates; sorted lexicographically."""

    scheme: SchemeSpec
    coeffs: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __len__(self):
        return self.coeffs.shape[0]

    def points(self) -> list:
        return [self.scheme.point(c) for c in self.coeffs]

    def subset(self, mask) -> "LatticeBatch":
        return LatticeBatch(self.scheme, self.coeffs[mask], self.g[mask], self.h[mask])


# ----------------------------------------------------------------------
# enumeration
# ----------------------------------------------------------------------

class GBound:
    """|exp_k| < base**weight, exactly (weight p/q: |x|^q < base^p)."""

    def __init__(self, base, weight):
        self.base = as_fraction(base)
        self.weight = as_fraction(weight)
        self.value = float(self.base) ** float(self.weight)

    def holds(self, x) -> bool:
        p, q = self.weight.numerator, self.weight.denominator
        return sign(abs(x) ** q - self.base ** p) < 0


def _ball_bounds(spec: GroupSpec, r) -> list:
    return [GBound(r, w) for w in spec.weights]


def _expand(counts):
    """Parent index and offset within parent for ragged ranges."""
    counts = np.maximum(counts, 0)
    parent = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    offs = np.arange(int(counts.sum())) - np.repeat(starts, counts)
    return parent, offs


def _slice_range(Mf, P, lo, hi, t):
    """Range of coordinate t over {x : lo <= Mf x <= hi, x[:t] = P} (float).

    The slice is a polytope in the r - t free coordinates; its extreme values
    of x_t sit at vertices, i.e. where r - t constraint rows are tight.
    Returns (min, max) per prefix; max < min when the slice is empty.
    """
    K, r = lo.shape
    f = r - t
    rest = P @ Mf[:, :t].T                       # (K, r)
    L, U = lo - rest, hi - rest
    Mfree = Mf[:, t:]
    scale = 1e-9 * (1 + np.abs(L).max(axis=1) + np.abs(U).max(axis=1))
    vmin = np.full(K, np.inf)
    vmax = np.full(K, -np.inf)
    for rows in itertools.combinations(range(r), f):
        S = Mfree[list(rows)]
        if abs(np.linalg.det(S)) < 1e-12:
            continue
        Sinv = np.linalg.inv(S)
        for sides in itertools.product((0, 1), repeat=f):
            rhs = np.stack([U[:, j] if sd else L[:, j] for j, sd in zip(rows, sides)], axis=1)
            x = rhs @ Sinv.T                     # (K, f)
            y = x @ Mfree.T
            feas = np.all((y >= L - scale[:, None]) & (y <= U + scale[:, None]), axis=1)
            v = x[:, 0]
            vmin = np.where(feas, np.minimum(vmin, v), vmin)
            vmax = np.where(feas, np.maximum(vmax, v), vmax)
    return vmin, vmax


def _module_points(Mf, lo, hi, delta, cap):
    """Integer vectors c with lo_j - delta <= (Mf c)_j <= hi_j + delta, per row.

    Mf is r x r; lo, hi are (K, r).  Returns (parent, C).
    """
    K, r = lo.shape
    Minv = np.linalg.inv(Mf)
    lo = lo - delta
    hi = hi + delta
    parent = np.arange(K)
    C = np.zeros((K, 0), np.int64)
    for t in range(r - 1):
        if t == 0:
            a = Minv[t][None, :] * lo[parent]
            b = Minv[t][None, :] * hi[parent]
            fmin, fmax = np.minimum(a, b).sum(axis=1), np.maximum(a, b).sum(axis=1)
        else:
            fmin, fmax = _slice_range(Mf, C, lo[parent], hi[parent], t)
        ok = fmax >= fmin
        cmin = np.where(ok, np.floor(np.where(ok, fmin, 0)) - 1, 0).astype(np.int64)
        cmax = np.where(ok, np.ceil(np.where(ok, fmax, 0)) + 1, -1).astype(np.int64)
        cnt = cmax - cmin + 1
        if cnt.sum() > cap:
            raise EnumerationCapError(f"enumeration would visit {int(cnt.sum())} candidates (cap {cap})")
        p2, off = _expand(cnt)
        C = np.concatenate([C[p2], (cmin[p2] + off)[:, None]], axis=1)
        parent = parent[p2]
    # last coefficient: intersect every constraint row
    part = C @ Mf[:, :r - 1].T if r > 1 else np.zeros((len(parent), r))
    last = Mf[:, r - 1]
    cmin = np.full(len(parent), -np.inf)
    cmax = np.full(len(parent), np.inf)
    for j in range(r):
        if abs(last[j]) < 1e-15:
            ok = (part[:, j] >= lo[parent, j]) & (part[:, j] <= hi[parent, j])
            cmax = np.where(ok, cmax, -np.inf)
            continue
        u = (lo[parent, j] - part[:, j]) / last[j]
        v = (hi[parent, j] - part[:, j]) / last[j]
        cmin = np.maximum(cmin, np.minimum(u, v))
        cmax = np.minimum(cmax, np.maximum(u, v))
    good = cmax >= cmin
    lo_i = np.zeros(len(parent), np.int64)
    hi_i = np.full(len(parent), -1, np.int64)
    lo_i[good] = np.ceil(cmin[good]).astype(np.int64)
    hi_i[good] = np.floor(cmax[good]).astype(np.int64)
    cnt = hi_i - lo_i + 1
    if cnt.clip(0).sum() > cap:
        raise EnumerationCapError(f"enumeration would produce {int(cnt.clip(0).sum())} candidates (cap {cap})")
    p2, off = _expand(cnt)
    C = np.concatenate([C[p2], (lo_i[p2] + off)[:, None]], axis=1)
    return parent[p2], C


def _layer_offsets(E, chart_vals, k, K):
    off = np.zeros(K)
    for kk, i, j, c in E:
        if kk == k:
            off += c * chart_vals[:, i] * chart_vals[:, j]
    return off


def enumerate_prefix(scheme: SchemeSpec, g_bounds: list, h_lo, h_hi, layers: int):
    """Enumerate the first `layers` chart coordinates.

    Returns (C, gch, hch) with C of shape (K, layers, rank) and float chart
    values of the G and H coordinates fixed so far.  G constraints are open
    and decided exactly near their boundary; the H box is only a prefilter.
    """
    r = scheme.module.rank
    nG = scheme.g_spec.n
    C = np.zeros((1, 0, r), np.int64)
    gch = np.zeros((1, nG))
    hch = np.zeros((1, scheme.h_spec.n))
    for i in range(layers):
        K = C.shape[0]
        if K == 0:
            break
        js = scheme.layer_h[i]
        offG = _layer_offsets(scheme.gE, gch, i, K)
        offH = [_layer_offsets(scheme.hE, hch, j, K) for j in js]
        Mf = np.array([scheme.g_basis] + [scheme.h_rows[j] for j in js])
        g = g_bounds[i].value
        lo = np.stack([-g - offG] + [float(h_lo[j]) - o for j, o in zip(js, offH)], axis=1)
        hi = np.stack([g - offG] + [float(h_hi[j]) - o for j, o in zip(js, offH)], axis=1)
        mag = float(np.abs(lo).max() + np.abs(hi).max()) if K else 1.0
        delta = 1e-11 + 4e-15 * (1 + mag) ** 2
        parent, cnew = _module_points(Mf, lo, hi, delta, scheme.cap)
        gv = cnew @ scheme.g_basis + offG[parent]
        out = np.abs(gv) >= g + delta
        amb = ~out & (np.abs(gv) > g - delta)
        keep = ~out
        if amb.any():
            for idx in np.nonzero(amb)[0]:
                full = np.concatenate([C[parent[idx]], cnew[idx][None, :]], axis=0)
                pad = np.zeros((nG, r), np.int64)
                pad[:i + 1] = full
                ex = scheme.g_chart.to_exp(scheme.g_chart_exact(pad))[i]
                keep[idx] = g_bounds[i].holds(ex)
        parent, cnew = parent[keep], cnew[keep]
        C = np.concatenate([C[parent], cnew[:, None, :]], axis=1)
        gch = gch[parent]
        gch[:, i] = cnew @ scheme.g_basis
        hch = hch[parent]
        for j in js:
            hch[:, j] = cnew @ scheme.h_rows[j]
    return C, gch, hch


def _h_box_of(region) -> tuple:
    if isinstance(region, WindowPolytope):
        return region.bbox
    return region


def _region_filter(scheme, C, h, region: WindowPolytope, strict: bool, regular_check: bool):
    """Exact-with-filter test of H-parts against a polytope."""
    if len(C) == 0:
        return np.zeros(0, bool)
    A, b = region.float_arrays()
    v = h @ A.T - b
    delta = scheme.delta_for(C, h)[:, None]
    out = (v > delta).any(axis=1)
    near = (v >= -delta).any(axis=1) & ~out
    keep = ~out
    for idx in np.nonzero(near)[0]:
        hx = scheme.h_exact(C[idx])
        inside = region.contains(hx, strict=strict)
        if strict and regular_check and region.contains(hx) and not inside:
            raise GammaRegularityError(scheme.point(C[idx]))
        keep[idx] = inside
    return keep


def _finish(scheme, C, g_bounds, h_box, region, strict, regular_check, norm_check):
    """Attach the last layer, then G-norm and H-region filters."""
    C = np.asarray(C, dtype=np.int64)
    if len(C) == 0:
        return LatticeBatch(scheme, C.reshape(0, scheme.g_spec.n, scheme.module.rank),
                            np.zeros((0, scheme.g_spec.n)), np.zeros((0, scheme.h_spec.n)))
    g, h = scheme.float_coords(C)
    keep = np.ones(len(C), bool)
    lo, hi = h_box
    delta = scheme.delta_for(C, h)
    for j in range(scheme.h_spec.n):
        keep &= (h[:, j] >= float(lo[j]) - delta) & (h[:, j] <= float(hi[j]) + delta)
    C, g, h = C[keep], g[keep], h[keep]
    if norm_check and scheme.g_spec.norm_kind == "koranyi":
        r = g_bounds[0].base
        nrm = ((g[:, 0] ** 2 + g[:, 1] ** 2) ** 2 + g[:, 2] ** 2) ** 0.25
        ok = nrm < float(r) - 1e-9
        amb = ~ok & (nrm <= float(r) + 1e-9)
        for idx in np.nonzero(amb)[0]:
            ok[idx] = norm_less(scheme.g_spec, scheme.g_exact(C[idx]), r)
        C, g, h = C[ok], g[ok], h[ok]
    if region is not None:
        keep = _region_filter(scheme, C, h, region, strict, regular_check)
        C, g, h = C[keep], g[keep], h[keep]
    order = np.lexsort(C.reshape(len(C), -1).T[::-1]) if len(C) else np.zeros(0, np.int64)
    return LatticeBatch(scheme, C[order], g[order], h[order])


def enumerate_batch(scheme: SchemeSpec, g_bounds: list, region=None, h_box=None,
                    strict: bool = False, regular_check: bool = False) -> LatticeBatch:
    """All lattice points with |exp_k(g)| < g_bounds[k] and H-part in region."""
    if h_box is None:
        h_box = _h_box_of(region)
    lo, hi = h_box
    C, _, _ = enumerate_prefix(scheme, g_bounds, lo, hi, scheme.g_spec.n)
    return _finish(scheme, C, g_bounds, h_box, region, strict, regular_check, True)


def enumerate_lattice(scheme: SchemeSpec, r_G, region_H: WindowPolytope) -> list:
    """Lattice points with |g_part| < r_G and h_part in the closed region."""
    r_G = as_fraction(r_G)
    if r_G <= 0:
        raise ValueError("r_G must be positive")
    return enumerate_batch(scheme, _ball_bounds(scheme.g_spec, r_G), region_H).points()


# ----------------------------------------------------------------------
# star map, model sets, windows
# ----------------------------------------------------------------------

def _coeffs_of_g(scheme: SchemeSpec, lam) -> np.ndarray:
    chart = scheme.g_chart.from_exp([scheme.field.coerce(c) for c in lam])
    rows = []
    for v in chart:
        c = scheme.module.integer_coords(v)
        if c is None:
            raise ValueError(f"{lam} is not a projected lattice point")
        rows.append(c)
    return np.array(rows, dtype=np.int64)


def star_map(scheme: SchemeSpec, lam) -> GroupPoint:
    """tau(lambda): conjugate the chart coordinates, return H exponential coordinates."""
    return scheme.h_exact(_coeffs_of_g(scheme, lam))


def model_set_batch(scheme: SchemeSpec, R, g_bounds=None) -> LatticeBatch:
    """Lattice points with |g| < R and star in the open window (exact)."""
    if g_bounds is None:
        R = as_fraction(R)
        if R <= 0:
            raise ValueError("R must be positive")
        g_bounds = _ball_bounds(scheme.g_spec, R)
    return enumerate_batch(scheme, g_bounds, scheme.window, strict=True, regular_check=True)


def model_set(scheme: SchemeSpec, R) -> list:
    b = model_set_batch(scheme, R)
    return [scheme.g_exact(c) for c in b.coeffs]


def _open_contains(A, b, x) -> bool:
    for a, v in zip(A, b):
        s = sum((p * q for p, q in zip(a, x)), a[0] * 0) - v
        if sign(s) >= 0:
            return False
    return True


def window_shift_membership(scheme: SchemeSpec, mu, lam) -> bool:
    """tau(lambda) in mu^-1 * open(W), decided exactly.

    mu^-1 W = {x : A (mu * x) <= b} and mu * x = (I + ad_mu / 2) x + mu.
    """
    t = star_map(scheme, lam)
    A, b = scheme.window.left_translate(scheme.h_spec, inverse(mu))
    return _open_contains(A, b, t)


def ww_inverse_contains(scheme: SchemeSpec, mu_H, exact: bool = True,
                        interior: bool = False) -> bool:
    """(mu * W) meets W, via exact LP feasibility on both half-space systems.

    With interior=True the open windows are used instead (mu in open(W) open(W)^-1).
    """
    W = scheme.window
    A2, b2 = W.left_translate(scheme.h_spec, mu_H)
    if not exact:
        res = _ww_prefilter(scheme, np.array([[float(c) for c in mu_H]]))[0]
        if res[0] != 0:
            return res[0] > 0
    if interior:
        return strictly_feasible(list(W.A) + A2, list(W.b) + b2)
    return is_feasible(list(W.A) + A2, list(W.b) + b2, n=W.dim)


def _cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _window_geometry(scheme):
    """Float and exact vertices plus distinct edge directions of W."""
    if not hasattr(scheme, "_wgeo"):
        W = scheme.window
        verts = [v for v, _ in W.vertices()]
        dirs = []
        if W.dim == 3:
            for i, j in W.edges():
                e = tuple(verts[j][k] - verts[i][k] for k in range(3))
                if not any(_cross(e, f) == (0, 0, 0) for f in dirs):
                    dirs.append(e)
        fl = lambda rows, d: np.array([[float(v) for v in r] for r in rows]).reshape(-1, d)
        A, _ = W.float_arrays()
        scheme._wgeo = (verts, dirs, fl(verts, W.dim), fl(dirs, 3), A)
    return scheme._wgeo


def _float_translates(scheme, mus_f):
    """Matrices of x -> mu * x for float mu (rows of mus_f)."""
    d = scheme.h_spec.n
    K = len(mus_f)
    L = np.repeat(np.eye(d)[None], K, axis=0)
    for i, j, k, c in scheme.h_br:
        L[:, k, j] += 0.5 * c * mus_f[:, i]
        L[:, k, i] -= 0.5 * c * mus_f[:, j]
    return L


def _ww_prefilter(scheme, mus_f):
    """Float separating-axis gaps for mu W against W (dimension <= 3).

    Returns (state, gaps, tol): state +1 certainly in W W^-1 (interiors meet),
    -1 certainly disjoint, 0 undecided.  gaps holds per-axis values for the
    undecided rows only.
    """
    d = scheme.window.dim
    K = len(mus_f)
    if d > 3:
        return np.zeros(K, np.int64), np.zeros((K, 0)), 0.0
    _, _, V, E, A = _window_geometry(scheme)
    L = _float_translates(scheme, mus_f)
    TV = np.einsum("kab,vb->kva", L, V) + mus_f[:, None, :]
    TN = np.einsum("na,kab->knb", A, np.linalg.inv(L))
    TE = np.einsum("kab,eb->kea", L, E) if d == 3 else np.zeros((K, 0, 3))
    EE = E if d == 3 else np.zeros((0, 3))
    gap = kernels.sat_gap(V, TV, A, TN, EE, TE)
    tol = 1e-9 * (1.0 + float(np.abs(mus_f).max()) ** 2) if K else 1e-9
    state = np.zeros(K, np.int64)
    state[gap > tol] = -1
    state[gap < -tol] = 1
    und = np.nonzero(state == 0)[0]
    gaps = kernels.sat_axis_gaps(V, TV[und], A, TN[und], EE, TE[und]) if len(und) else np.zeros((0, 0))
    return state, gaps, tol


class _ExactTranslate:
    """Lazily evaluated exact data of mu W used by the separating-axis test."""

    def __init__(self, scheme, mu):
        W = scheme.window
        self.d = W.dim
        self.mu = mu
        self.zero = mu[0] * 0
        self.A = W.A
        self.verts, self.dirs, self.Vf, self.Ef, self.Af = _window_geometry(scheme)
        self.L = translation_matrix(scheme.h_spec, mu)
        self.Linv = translation_matrix(scheme.h_spec, [-c for c in mu])
        self.Lf = np.array([[float(v) for v in row] for row in self.L])
        self.Linvf = np.array([[float(v) for v in row] for row in self.Linv])
        self.TVf = self.Vf @ self.Lf.T + np.array([float(c) for c in mu])
        self._tv = {}
        self.n_axes = 2 * len(self.A) + len(self.dirs) ** 2

    def tvert(self, v):
        if v not in self._tv:
            x, d, L = self.verts[v], self.d, self.L
            self._tv[v] = tuple(sum((L[k][j] * x[j] for j in range(d)), self.zero) + self.mu[k]
                                for k in range(d))
        return self._tv[v]

    def axis(self, idx):
        m, d = len(self.A), self.d
        if idx < m:
            return tuple(self.A[idx]), self.Af[idx]
        if idx < 2 * m:
            a = self.A[idx - m]
            ex = tuple(sum((a[i] * self.Linv[i][j] for i in range(d)), self.zero) for j in range(d))
            return ex, self.Af[idx - m] @ self.Linvf
        q = idx - 2 * m
        nd = len(self.dirs)
        e, f = self.dirs[q // nd], self.dirs[q % nd]
        tf = tuple(sum((self.L[k][j] * f[j] for j in range(3)), self.zero) for k in range(3))
        return _cross(e, tf), np.cross(self.Ef[q // nd], self.Lf @ self.Ef[q % nd])

    def gap_sign(self, idx, tol) -> int:
        """Exact sign of the separation along one axis."""
        ax, axf = self.axis(idx)
        if not any(ax):
            return -1
        scale = tol * (1.0 + float(np.abs(axf).sum()))

        def extreme(fl, big, translated):
            target = fl.max() if big else fl.min()
            cand = np.nonzero(np.abs(fl - target) <= scale)[0]
            pts = [self.tvert(int(c)) if translated else self.verts[int(c)] for c in cand]
            xs = [sum((a * x for a, x in zip(ax, p)), self.zero) for p in pts]
            return max(xs) if big else min(xs)

        pf = self.Vf @ axf
        qf = self.TVf @ axf
        g1 = extreme(qf, False, True) - extreme(pf, True, False)
        g2 = extreme(pf, False, False) - extreme(qf, True, True)
        return max(sign(g1), sign(g2))


def _ww_exact_sat(scheme, mu, interior: bool, axis_gaps=None, tol=1e-9) -> bool:
    """Exact separating-axis test for mu W against W (dimension <= 3).

    The facet normals of the difference body W - mu W are among the facet
    normals of both polytopes and, in 3D, the cross products of edge
    directions; so these axes decide both closed and open intersection.
    With float axis_gaps only the axes within tol of zero are evaluated
    exactly, and on each axis only the vertices near the float extremes.
    """
    t = _ExactTranslate(scheme, mu)
    for idx in range(t.n_axes):
        if axis_gaps is not None:
            g = axis_gaps[idx]
            if not np.isnan(g) and g < -tol:
                continue
        s = t.gap_sign(idx, tol)
        if s > 0 or (interior and s == 0):
            return False
    return True


def _ww_box(scheme) -> tuple:
    """Coordinate box containing W W^-1 (interval arithmetic)."""
    lo, hi = scheme.window.bbox
    d = len(lo)
    m = [max(abs(a), abs(b)) for a, b in zip(lo, hi)]
    out_lo, out_hi = [], []
    for k in range(d):
        extra = Fraction(0)
        for i, j, row in scheme.h_spec.brackets:
            for kk, c in row:
                if kk == k:
                    extra += abs(Fraction(c)) / 2 * 2 * m[i] * m[j]
        out_lo.append(lo[k] - hi[k] - extra)
        out_hi.append(hi[k] - lo[k] + extra)
    return tuple(out_lo), tuple(out_hi)


def slab_batch(scheme: SchemeSpec, r, interior: bool = False) -> LatticeBatch:
    """Lattice points with |gamma_G| < r and gamma_H in W W^-1.

    interior=True keeps only gamma_H in open(W) open(W)^-1: translates that
    merely touch W never separate points of the open window.
    """
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    box = _ww_box(scheme)
    cand = enumerate_batch(scheme, _ball_bounds(scheme.g_spec, r), None, h_box=box)
    if len(cand) == 0:
        return cand
    state, gaps, tol = _ww_prefilter(scheme, cand.h)
    for row, idx in enumerate(np.nonzero(state == 0)[0]):
        mu = scheme.h_exact(cand.coeffs[idx])
        if scheme.window.dim <= 3:
            ok = _ww_exact_sat(scheme, mu, interior, gaps[row], tol)
        else:
            ok = ww_inverse_contains(scheme, mu, interior=interior)
        state[idx] = 1 if ok else -1
    return cand.subset(state > 0)


def slab(scheme: SchemeSpec, r, interior: bool = False) -> list:
    """The r-slab S_r as exact H points (sorted, distinct, contains identity)."""
    b = slab_batch(scheme, r, interior)
    return [scheme.h_exact(c) for c in b.coeffs]


def _lam_coeffs(scheme, lam):
    if isinstance(lam, LatticePoint):
        return np.array(lam.coeffs, dtype=np.int64)
    if isinstance(lam, np.ndarray) and lam.dtype.kind == "i":
        return lam
    return _coeffs_of_g(scheme, lam)


def _require_in_model_set(scheme, c):
    if not scheme.window.contains(scheme.h_exact(c), strict=True):
        raise ValueError("point is not in the model set")


def displacements(scheme: SchemeSpec, lam, r) -> list:
    """mu in Gamma_G with |mu| < r and mu * lambda in the model set."""
    c = _lam_coeffs(scheme, lam)
    _require_in_model_set(scheme, c)
    t = scheme.h_exact(c)
    # tau(mu) must lie in open(W) tau(lambda)^-1, a right translate of W
    A2, b2 = scheme.window.right_translate(scheme.h_spec, inverse(t))
    region = WindowPolytope(tuple(zip(map(tuple, A2), b2)))
    cand = enumerate_batch(scheme, _ball_bounds(scheme.g_spec, as_fraction(r)), region)
    out = []
    for mc in cand.coeffs:
        prod = scheme.mul_coeffs(mc[None], c[None])[0]
        if scheme.window.contains(scheme.h_exact(prod), strict=True):
            out.append(scheme.g_exact(mc))
    return out


def slab_of(scheme: SchemeSpec, lam, r, slab_points: LatticeBatch | None = None):
    """Split S_r by whether gamma^-1 is a displacement of lambda.

    gamma^-1 in Disp(lambda) iff tau(lambda) in tau(gamma) open(W).
    Returns (inside, outside) lists of exact H points.
    """
    c = _lam_coeffs(scheme, lam)
    _require_in_model_set(scheme, c)
    t = scheme.h_exact(c)
    if slab_points is None:
        slab_points = slab_batch(scheme, r)
    ins, outs = [], []
    for gc in slab_points.coeffs:
        mu = scheme.h_exact(gc)
        A, b = scheme.window.left_translate(scheme.h_spec, mu)
        (ins if _open_contains(A, b, t) else outs).append(mu)
    return ins, outs


def growth_ratio(scheme: SchemeSpec, r, region_H: WindowPolytope | None) -> Fraction:
    """|Gamma cap (B_r x region)| / vol(B_r)."""
    r = as_fraction(r)
    if region_H is None:
        return Fraction(0)
    n = len(enumerate_batch(scheme, _ball_bounds(scheme.g_spec, r), region_H))
    return Fraction(n) / ball_volume(scheme.g_spec, r)


@dataclass(frozen=True)
class FLCResult:
    count: int
    saturated: bool
    count_doubled: int


def check_flc(scheme: SchemeSpec, R_window, r) -> FLCResult:
    """Distinct B_r(e) cap Lambda lambda^-1 over lambda in B_R, R vs 2R."""
    from .complexity import patch_census
    R_window, r = as_fraction(R_window), as_fraction(r)
    if R_window < r:
        raise ValueError("R_window must be at least r")
    a = patch_census(scheme, r, R_window).count
    b = patch_census(scheme, r, 2 * R_window).count
    return FLCResult(a, a == b, b)
