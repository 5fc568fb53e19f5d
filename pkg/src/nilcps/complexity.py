"""Patches, the complexity function, acceptance domains and region bounds.

The census counts r-equivalence classes through sign vectors: the class of
lambda is determined by which translates tau(gamma) open(W), gamma in the open
r-slab, contain tau(lambda).  This is the acceptance-domain description of a
patch, and it is cross-checked against patches computed directly from
neighbour lists (check_lemma_equiv).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .arrangements import Arrangement, ArrangementCapError, ConvexBody, count_regions_in_B
from .field import as_fraction, sign
from .group import (GroupPoint, GroupSpec, HyperplaneH, _exact_power, abelian, bch_multiply,
                    conjugation_distortion, inverse, norm_less, translation_matrix)
from .lp import is_feasible, lexmin_point, maximize
from .polytope import DegeneratePolytopeError, WindowPolytope, rank_of, solve_linear
from .scheme import (EnumerationCapError, GammaRegularityError, LatticeBatch, SchemeSpec, _ball_bounds,
                     _lam_coeffs, _layer_offsets, _open_contains, _region_filter,
                     _require_in_model_set, displacements, enumerate_batch, enumerate_prefix,
                     model_set_batch, slab_batch, slab_of, ww_inverse_contains)

__all__ = [
    "PatchClassKey", "InsufficientRadiusError", "patch", "patch_class_key", "TranslateStack",
    "CensusResult", "patch_census", "complexity_census", "census_report", "patch_keys",
    "check_lemma_equiv", "AcceptanceDomain", "acceptance_domain", "check_domain_tiling",
    "BallH", "WindowParameters", "window_parameters", "cuts_fully", "cuts_all_round",
    "GoodPair", "GoodPairError", "good_pair_search", "verify_good_pair", "u_i_of_r",
    "upper_bound_regions", "upper_bound_arrangement", "LowerBound", "lower_bound_regions",
    "exponent_fit",
]


class InsufficientRadiusError(ValueError):
    """The enumerated point set does not reach far enough to contain a patch."""


def _dot(a, x):
    s = a[0] * x[0]
    for u, v in zip(a[1:], x[1:]):
        s = s + u * v
    return s


def _kappa(spec: GroupSpec) -> float:
    """|x y| < kappa (|x| + |y|) for the weighted-max norm of a 2-step group."""
    s = 0.0
    for k in range(spec.n):
        tot = sum(abs(float(c)) for _, _, row in spec.brackets for kk, c in row if kk == k)
        s = max(s, tot / 2)
    return max(1.0, math.sqrt(s))


# ----------------------------------------------------------------------
# patches
# ----------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class PatchClassKey:
    """Sorted integer chart coefficients of the points of P_r(lambda) lambda^-1.

    Lattice coefficients determine the exact coordinates uniquely, so two
    keys are equal iff the translated patches are equal as sets.
    """

    vectors: tuple

    def __post_init__(self):
        object.__setattr__(self, "vectors", tuple(sorted(tuple(int(c) for c in v) for v in self.vectors)))

    def __len__(self):
        return len(self.vectors)

    def contains_identity(self) -> bool:
        return any(not any(v) for v in self.vectors)

    def points(self, scheme: SchemeSpec) -> list:
        shape = (scheme.g_spec.n, scheme.module.rank)
        return [scheme.g_exact(np.array(v, dtype=np.int64).reshape(shape)) for v in self.vectors]


def _patch_coeffs(scheme, c, r):
    """Coefficient arrays of P_r(lambda) lambda^-1 (exact enumeration)."""
    disp = displacements(scheme, c, r)
    return [np.asarray(_lam_coeffs(scheme, g)).reshape(-1) for g in disp]


def patch(scheme: SchemeSpec, lam, r, points=None, enum_radius=None) -> set:
    """P_r(lambda) = {x in Lambda : |x lambda^-1| < r}.

    Without `points` the displacements are enumerated exactly.  With a
    precomputed list of model-set points (all of Lambda within enum_radius)
    the patch is filtered from it, and the call fails if that radius is too
    small to contain the whole patch.
    """
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    c = _lam_coeffs(scheme, lam)
    _require_in_model_set(scheme, c)
    lam_g = scheme.g_exact(c)
    if points is None:
        return {bch_multiply(scheme.g_spec, g, lam_g) for g in displacements(scheme, c, r)}
    if enum_radius is None:
        raise ValueError("enum_radius is required with a point list")
    norm = max(abs(float(x)) ** (1 / float(w)) for x, w in zip(lam_g, scheme.g_spec.weights))
    if _kappa(scheme.g_spec) * (norm + float(r)) >= float(enum_radius):
        raise InsufficientRadiusError(
            f"enumeration radius {enum_radius} cannot contain the {r}-patch of a point of norm {norm:.4g}")
    inv = inverse(lam_g)
    return {x for x in points if norm_less(scheme.g_spec, bch_multiply(scheme.g_spec, x, inv), r)}


def patch_class_key(scheme: SchemeSpec, lam, r) -> PatchClassKey:
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    c = _lam_coeffs(scheme, lam)
    _require_in_model_set(scheme, c)
    return PatchClassKey(tuple(tuple(v) for v in _patch_coeffs(scheme, c, r)))


def patch_keys(scheme: SchemeSpec, r, R) -> tuple:
    """Patch keys of every lambda in Lambda with |lambda| < R, from neighbour lists.

    Returns (coeffs of the query points, list of PatchClassKey).  Needs the
    weighted-max norm (the neighbour kernel works with coordinate bounds).
    """
    r, R = as_fraction(r), as_fraction(R)
    spec = scheme.g_spec
    if spec.norm_kind != "weighted-max":
        raise ValueError("batched patches need the weighted-max norm")
    R_out = Fraction(_kappa(spec) * (float(R) + float(r)) + 1).limit_denominator(64)
    batch = model_set_batch(scheme, R_out)
    C = batch.coeffs
    qb = _ball_bounds(spec, R)
    qmask = np.ones(len(C), bool)
    delta = 1e-9
    for k, gb in enumerate(qb):
        v = np.abs(batch.g[:, k])
        amb = (v > gb.value - delta) & (v < gb.value + delta)
        qmask &= v < gb.value
        for idx in np.nonzero(amb)[0]:
            qmask[idx] = all(b.holds(x) for b, x in zip(qb, scheme.g_exact(C[idx])))
    queries = np.nonzero(qmask)[0]
    r_pow = np.array([float(r) ** float(w) for w in spec.weights])
    ptr, idx, flag = kernels.neighbor_lists(batch.g, queries, r_pow, scheme.g_br, float(r_pow[0]), delta)
    keys = []
    inv_all = scheme.inv_coeffs(C[queries])
    for t, q in enumerate(queries):
        js = idx[ptr[t]:ptr[t + 1]]
        fl = flag[ptr[t]:ptr[t + 1]]
        gam = scheme.mul_coeffs(C[js], inv_all[t][None])
        keep = np.ones(len(js), bool)
        for u in np.nonzero(fl)[0]:
            keep[u] = norm_less(spec, scheme.g_exact(gam[u]), r)
        gam = gam[keep].reshape(int(keep.sum()), -1)
        keys.append(PatchClassKey(tuple(map(tuple, gam.tolist()))))
    return C[queries], keys


# ----------------------------------------------------------------------
# sign vectors against slab translates
# ----------------------------------------------------------------------

def _pack(mask, nw: int) -> np.ndarray:
    pad = np.zeros(nw * 64, bool)
    pad[:len(mask)] = mask
    w = np.arange(64, dtype=np.uint64)
    return (pad.reshape(nw, 64).astype(np.uint64) << w).sum(axis=1, dtype=np.uint64)


def _unpack(bits, K: int) -> np.ndarray:
    w = np.arange(64, dtype=np.uint64)
    return (((bits[:, None] >> w) & np.uint64(1)).astype(bool)).reshape(-1)[:K]


class TranslateStack:
    """The translates tau(gamma) W for gamma in a slab, exact and in float.

    Translate k contains t in its interior iff A[k] t < b[k] componentwise.
    """

    def __init__(self, scheme: SchemeSpec, coeffs: np.ndarray):
        self.scheme = scheme
        self.coeffs = np.asarray(coeffs, dtype=np.int64)
        W = scheme.window
        self.mus = [scheme.h_exact(c) for c in self.coeffs]
        self.exact = [W.left_translate(scheme.h_spec, mu) for mu in self.mus]
        K, N, d = len(self.mus), len(W), W.dim
        self.K = K
        self.A = np.array([[[float(v) for v in row] for row in A] for A, _ in self.exact]).reshape(K, N, d)
        self.b = np.array([[float(v) for v in b] for _, b in self.exact]).reshape(K, N)
        ident = np.nonzero(~self.coeffs.reshape(K, -1).any(axis=1))[0]
        if not len(ident):
            raise ValueError("slab does not contain the identity")
        self.k_id = int(ident[0])
        self.nw = kernels.bits_words(K)
        mag = 1.0 + (float(np.abs(self.A).max()) + float(np.abs(self.b).max()) if K else 0.0)
        self.delta = 1e-9 * mag

    @classmethod
    def open_slab(cls, scheme: SchemeSpec, r) -> "TranslateStack":
        return cls(scheme, slab_batch(scheme, r, interior=True).coeffs)

    def memberships(self, t, tf, closed: bool = False) -> np.ndarray:
        """Exact membership of t in every translate (open, or closed if asked)."""
        v = self.A @ np.asarray(tf, dtype=float) - self.b
        out = (v > self.delta).any(axis=1)
        res = (v < -self.delta).all(axis=1)
        for k in np.nonzero(~out & ~res)[0]:
            A, b = self.exact[k]
            ok = True
            for a, bb in zip(A, b):
                s = sign(_dot(a, t) - bb)
                if s > 0 or (s == 0 and not closed):
                    ok = False
                    break
            res[k] = ok
        return res

    def exact_bits(self, t, tf) -> np.ndarray:
        return _pack(self.memberships(t, tf), self.nw)

    def bits_of(self, C: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Sign vectors (packed) for model-set points with coefficients C and float H coords h."""
        if len(C) == 0:
            return np.zeros((0, self.nw), np.uint64)
        bits, amb = kernels.sign_bits(h, self.A, self.b, self.delta)
        for idx in np.nonzero(amb)[0]:
            bits[idx] = self.exact_bits(self.scheme.h_exact(C[idx]), h[idx])
        return bits

    def displacement_coeffs(self, bits) -> list:
        """Coefficients of gamma^-1 for the translates whose bit is set."""
        ks = np.nonzero(_unpack(np.asarray(bits, dtype=np.uint64), self.K))[0]
        inv = self.scheme.inv_coeffs(self.coeffs[ks])
        return [tuple(v) for v in inv.reshape(len(ks), -1).tolist()]


# ----------------------------------------------------------------------
# census
# ----------------------------------------------------------------------

@dataclass
class CensusResult:
    r: Fraction
    R: Fraction
    count: int
    points: int
    exact_points: int
    method: str
    keys: np.ndarray = field(repr=False, default=None)


def _sweep_applicable(scheme: SchemeSpec) -> bool:
    d = scheme.h_spec.n
    return (scheme.module.rank == 2 and scheme.g_spec.norm_kind == "weighted-max"
            and scheme.layer_h[-1] == [d - 1])


def _census_generic(scheme, stack, R):
    batch = model_set_batch(scheme, R)
    bits = stack.bits_of(batch.coeffs, batch.h)
    n_exact = 0
    return bits, len(batch), n_exact


def _census_sweep(scheme, stack, R, amb_cap=2_000_000):
    spec = scheme.g_spec
    nG, d = spec.n, scheme.h_spec.n
    W = scheme.window
    lo, hi = W.bbox
    g_bounds = _ball_bounds(spec, R)
    C, gch, hch = enumerate_prefix(scheme, g_bounds, lo, hi, nG - 1)
    K = len(C)
    hexp = hch.copy()
    for k, i, j, c in scheme.hE:
        if k < d - 1:
            hexp[:, k] += c * hch[:, i] * hch[:, j]
    tpre = hexp[:, :d - 1]
    last = nG - 1
    offG = _layer_offsets(scheme.gE, gch, last, K)
    offH = _layer_offsets(scheme.hE, hch, d - 1, K)
    g = g_bounds[last].value
    blk = np.stack([-g - offG, g - offG, float(lo[d - 1]) - offH, float(hi[d - 1]) - offH, offH], axis=1)
    mg, mh = scheme.g_basis, scheme.h_rows[d - 1]
    # coefficients grow like R^w; their float images carry error ~1e-16 of that
    delta = 1e-10 + 1e-14 * float(R) ** float(spec.weights[-1])
    rows, amb_pts, n_amb, bad, npts = kernels.sweep_census(tpre, blk, stack.A, stack.b, mg, mh, delta,
                                                           k_id=stack.k_id, amb_cap=amb_cap)
    if n_amb > amb_cap:
        raise EnumerationCapError(f"{n_amb} near-boundary points exceed the exact-resolution cap {amb_cap}")
    extra = []
    n_exact = 0
    gb = g_bounds[last]
    for q, c0, c1 in amb_pts[:n_amb]:
        full = np.concatenate([C[q], np.array([[c0, c1]], dtype=np.int64)], axis=0)
        if not gb.holds(scheme.g_exact(full)[last]):
            continue
        t = scheme.h_exact(full)
        if not W.contains(t, strict=True):
            if W.contains(t):
                raise GammaRegularityError(scheme.point(full))
            continue
        _, hf = scheme.float_coords(full[None])
        extra.append(stack.exact_bits(t, hf[0]))
        n_exact += 1
    # blocks with a translate face parallel to the sweep direction and nearly
    # through the prefix point: enumerate them and treat them generically
    for q in np.nonzero(bad)[0]:
        g0, g1, h0, h1, _ = blk[q]
        M = np.array([[mg[0], mg[1]], [mh[0], mh[1]]])
        Minv = np.linalg.inv(M)
        corners = np.array([[a, b] for a in (g0, g1) for b in (h0, h1)]) @ Minv.T
        c0r = range(int(math.floor(corners[:, 0].min())) - 1, int(math.ceil(corners[:, 0].max())) + 2)
        c1r = range(int(math.floor(corners[:, 1].min())) - 1, int(math.ceil(corners[:, 1].max())) + 2)
        cand = np.array([[a, b] for a in c0r for b in c1r], dtype=np.int64).reshape(-1, 2)
        gv = cand @ mg
        hv = cand @ mh
        sel = (gv > g0 - delta) & (gv < g1 + delta) & (hv >= h0 - delta) & (hv <= h1 + delta)
        cand = cand[sel]
        full = np.concatenate([np.repeat(C[q][None], len(cand), axis=0), cand[:, None, :]], axis=1)
        keep = np.array([gb.holds(scheme.g_exact(f)[last]) for f in full], dtype=bool)
        full = full[keep]
        if not len(full):
            continue
        _, hf = scheme.float_coords(full)
        ok = _region_filter(scheme, full, hf, W, True, True)
        full, hf = full[ok], hf[ok]
        if len(full):
            extra.extend(stack.bits_of(full, hf))
            n_exact += len(full)
    if extra:
        rows = np.vstack([rows.reshape(-1, stack.nw), np.array(extra, dtype=np.uint64).reshape(-1, stack.nw)])
    return rows, npts + n_exact, n_exact


def patch_census(scheme: SchemeSpec, r, R, method: str = "auto", stack: TranslateStack | None = None,
                 keep_keys: bool = False) -> CensusResult:
    """Number of distinct r-patch classes among lambda in Lambda with |lambda| < R.

    method "sweep" runs the compiled sweep (rank-2 modules whose last G
    coordinate feeds the last H coordinate), "generic" enumerates the model
    set and evaluates sign vectors, "patch" builds patches from neighbour
    lists.  All three count the same classes.
    """
    r, R = as_fraction(r), as_fraction(R)
    if r <= 0 or R <= 0:
        raise ValueError("r and R must be positive")
    if method == "auto":
        method = "sweep" if _sweep_applicable(scheme) else "generic"
    if method == "patch":
        _, keys = patch_keys(scheme, r, R)
        return CensusResult(r, R, len(set(keys)), len(keys), 0, method, None)
    if stack is None:
        stack = TranslateStack.open_slab(scheme, r)
    if method == "sweep":
        if not _sweep_applicable(scheme):
            raise ValueError("the sweep census does not apply to this scheme")
        rows, npts, n_exact = _census_sweep(scheme, stack, R)
    elif method == "generic":
        rows, npts, n_exact = _census_generic(scheme, stack, R)
    else:
        raise ValueError(f"unknown census method {method!r}")
    rows = np.asarray(rows, dtype=np.uint64).reshape(-1, stack.nw)
    if len(rows):
        # every class contains the window bit
        win = (rows[:, stack.k_id >> 6] >> np.uint64(stack.k_id & 63)) & np.uint64(1)
        rows = rows[win.astype(bool)]
    uniq = np.unique(rows, axis=0) if len(rows) else rows
    return CensusResult(r, R, len(uniq), npts, n_exact, method, uniq if keep_keys else None)


@dataclass
class CensusReport:
    p_hat: int
    saturated: bool
    p_doubled: int
    R: Fraction
    slab_open: int


def census_report(scheme: SchemeSpec, r, R_sample, method: str = "auto") -> CensusReport:
    r, R = as_fraction(r), as_fraction(R_sample)
    if R <= r:
        raise ValueError("R_sample must exceed r")
    stack = TranslateStack.open_slab(scheme, r)
    a = patch_census(scheme, r, R, method, stack).count
    b = patch_census(scheme, r, 2 * R, method, stack).count
    return CensusReport(a, a == b, b, R, stack.K)


def complexity_census(scheme: SchemeSpec, r, R_sample, method: str = "auto") -> tuple:
    """(p_hat, saturated): classes among |lambda| < R_sample, stable when R doubles."""
    rep = census_report(scheme, r, R_sample, method)
    return rep.p_hat, rep.saturated


@dataclass
class EquivCheck:
    points: int
    classes: int
    partition_mismatches: int
    set_mismatches: int


def check_lemma_equiv(scheme: SchemeSpec, r, R) -> EquivCheck:
    """Patch keys (neighbour lists) against sign vectors over the open slab.

    Two checks: the partitions of the sample agree, and the displacements
    read off each sign vector are exactly the patch.
    """
    Cq, pkeys = patch_keys(scheme, r, R)
    stack = TranslateStack.open_slab(scheme, r)
    _, h = scheme.float_coords(Cq)
    bits = stack.bits_of(Cq, h)
    fwd, back = {}, {}
    part_bad = 0
    set_bad = 0
    for key, row in zip(pkeys, bits):
        sk = row.tobytes()
        if fwd.setdefault(key, sk) != sk or back.setdefault(sk, key) != key:
            part_bad += 1
        if PatchClassKey(tuple(stack.displacement_coeffs(row))) != key:
            set_bad += 1
    return EquivCheck(len(pkeys), len(fwd), part_bad, set_bad)


# ----------------------------------------------------------------------
# acceptance domains
# ----------------------------------------------------------------------

@dataclass
class AcceptanceDomain:
    """open(mu W) for mu in positive, complement of mu W for mu in negative."""

    positive_translates: list
    negative_translates: list
    witness: GroupPoint

    def contains(self, scheme: SchemeSpec, t) -> bool:
        W = scheme.window
        for mu in self.positive_translates:
            A, b = W.left_translate(scheme.h_spec, mu)
            if not _open_contains(A, b, t):
                return False
        for mu in self.negative_translates:
            A, b = W.left_translate(scheme.h_spec, mu)
            if all(sign(_dot(a, t) - bb) <= 0 for a, bb in zip(A, b)):
                return False
        return True


def acceptance_domain(scheme: SchemeSpec, lam, r, slab_points: LatticeBatch | None = None) -> AcceptanceDomain:
    c = _lam_coeffs(scheme, lam)
    ins, outs = slab_of(scheme, c, r, slab_points)
    dom = AcceptanceDomain(ins, outs, scheme.h_exact(c))
    ident = GroupPoint(scheme.h_exact(c)[0] * 0 for _ in range(scheme.h_spec.n))
    if ident not in ins or not dom.contains(scheme, dom.witness):
        raise AssertionError("witness is not in its own acceptance domain")
    return dom


@dataclass
class TilingCheck:
    points: int
    domains: int
    not_exactly_one: int
    witness_failures: int


def check_domain_tiling(scheme: SchemeSpec, r, R, max_domains: int = 400) -> TilingCheck:
    """Each projected point of Lambda in B_R lies in exactly one acceptance domain.

    Domains are built exactly from one representative per class (up to
    max_domains classes; the points of the remaining classes are skipped).
    Point memberships use the closed-slab translates with exact resolution
    near boundaries.
    """
    r, R = as_fraction(r), as_fraction(R)
    sb = slab_batch(scheme, r)
    stack = TranslateStack(scheme, sb.coeffs)
    batch = model_set_batch(scheme, R)
    in_open, in_closed = [], []
    for c, hf in zip(batch.coeffs, batch.h):
        t = scheme.h_exact(c)
        in_open.append(stack.memberships(t, hf).tobytes())
        in_closed.append(stack.memberships(t, hf, closed=True).tobytes())
    # one representative per open-membership pattern
    reps = {}
    for i, key in enumerate(in_open):
        if key not in reps and len(reps) < max_domains:
            reps[key] = i
    doms = {}
    witness_bad = 0
    for key, i in reps.items():
        try:
            dom = acceptance_domain(scheme, batch.coeffs[i], r, sb)
        except AssertionError:
            witness_bad += 1
            continue
        pos = {tuple(mu) for mu in dom.positive_translates}
        mask = np.array([tuple(mu) in pos for mu in stack.mus], dtype=bool)
        doms[mask.tobytes()] = dom
    bad = 0
    checked = 0
    for ko, kc in zip(in_open, in_closed):
        if ko not in reps:
            continue
        checked += 1
        # t lies in domain D iff its open memberships are D's positives and
        # it avoids the closed translates of D's negatives
        hits = 1 if (ko in doms and kc == ko) else 0
        if hits != 1:
            bad += 1
    return TilingCheck(checked, len(doms), bad, witness_bad)


# ----------------------------------------------------------------------
# balls and window parameters
# ----------------------------------------------------------------------

def _corners(d: int):
    return list(itertools.product((-1, 1), repeat=d))


@dataclass(frozen=True)
class BallH:
    """Closed weighted-max ball {u * c : |u_k| <= rho^w_k} as a polytope."""

    spec: GroupSpec
    center: tuple
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "radius", as_fraction(self.radius))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.spec.norm_kind != "weighted-max":
            raise ValueError("polytope balls need the weighted-max norm")

    def extents(self) -> list:
        return [_exact_power(self.radius, w) for w in self.spec.weights]

    def halfspaces(self) -> list:
        # x c^-1 = (I + ad_c / 2) x - c
        L = translation_matrix(self.spec, self.center)
        hs = []
        for k, e in enumerate(self.extents()):
            row = tuple(L[k])
            hs.append((row, e + self.center[k]))
            hs.append((tuple(-v for v in row), e - self.center[k]))
        return hs

    def polytope(self) -> WindowPolytope:
        return WindowPolytope(tuple(self.halfspaces()))

    def body(self) -> ConvexBody:
        return ConvexBody(self.halfspaces())

    def vertices(self) -> list:
        ext = self.extents()
        return [bch_multiply(self.spec, [s * e for s, e in zip(sg, ext)], self.center)
                for sg in _corners(self.spec.n)]

    def contains(self, x, strict: bool = True) -> bool:
        y = bch_multiply(self.spec, x, inverse(self.center))
        for v, e in zip(y, self.extents()):
            s = sign(abs(v) - e)
            if s > 0 or (strict and s == 0):
                return False
        return True


def _ball_rows(spec, A, b, rho, skip=None):
    """Linear constraints on c such that the closed ball B_rho(c) lies in {A x <= b}."""
    ext = [_exact_power(as_fraction(rho), w) for w in spec.weights]
    rows, rhs = [], []
    for sg in _corners(spec.n):
        v = [s * e for s, e in zip(sg, ext)]
        L = translation_matrix(spec, v)     # v * c = (I + ad_v / 2) c + v
        for idx, (a, bb) in enumerate(zip(A, b)):
            if idx == skip:
                continue
            rows.append([sum((a[i] * L[i][j] for i in range(spec.n)), Fraction(0)) for j in range(spec.n)])
            rhs.append(bb - _dot(a, v))
    return rows, rhs


def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational with the smallest denominator in [lo, hi] (lo > 0)."""
    if lo == hi:
        return lo
    a = math.floor(lo)
    if a + 1 <= hi:
        return Fraction(math.ceil(lo)) if math.ceil(lo) <= hi else Fraction(a + 1)
    if lo == a:
        return Fraction(a)
    return a + 1 / _simplest_between(1 / (hi - a), 1 / (lo - a))


def _max_radius(spec, A, b, eq=None, skip=None, tol=Fraction(1, 2 ** 40), hi0=None):
    """Largest rho with a centre c (on the plane eq, if given) and B_rho(c) inside.

    Joint LP for abelian groups with unit weights; otherwise bisection with an
    exact feasibility LP, then a snap to the simplest rational in the final
    bracket when it is feasible.  Returns (rho, bracket_hi, centre).
    """
    n = spec.n
    eqA = [list(eq[0])] if eq else []
    eqb = [eq[1]] if eq else []

    def feasible(rho):
        rows, rhs = _ball_rows(spec, A, b, rho, skip)
        return is_feasible(rows, rhs, eqA, eqb, n=n)

    if spec.is_abelian and all(w == 1 for w in spec.weights):
        rows, rhs = [], []
        for sg in _corners(n):
            for idx, (a, bb) in enumerate(zip(A, b)):
                if idx == skip:
                    continue
                rows.append(list(a) + [_dot(a, sg)])
                rhs.append(bb)
        rows.append([0] * n + [-1])
        rhs.append(0)
        res = maximize([0] * n + [1], rows, rhs, [r + [0] for r in eqA], eqb)
        if res.status != "optimal":
            raise DegeneratePolytopeError("no inscribed ball")
        lo = hi = res.value
    else:
        lo = Fraction(0)
        hi = hi0 if hi0 is not None else Fraction(1)
        while feasible(hi):
            lo, hi = hi, 2 * hi
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        snap = _simplest_between(lo, hi)
        if snap > lo and feasible(snap):
            lo = snap
        if lo == 0:
            raise DegeneratePolytopeError("no inscribed ball")
    rows, rhs = _ball_rows(spec, A, b, lo, skip)
    c = lexmin_point(rows, rhs, eqA, eqb)
    return lo, hi, tuple(c)


def _root_upper(q: Fraction, n: int, bits: int = 48) -> Fraction:
    """Rational u >= q^(1/n) within 2^-bits, exact when q is a perfect power."""
    if n == 1:
        return q
    num, den = q.numerator, q.denominator
    rn, rd = _iroot(num, n), _iroot(den, n)
    if rn ** n == num and rd ** n == den:
        return Fraction(rn, rd)
    s = 1 << bits
    x = num * s ** n // den
    m = _iroot(x, n)
    return Fraction(m + 1, s)


def _iroot(x: int, n: int) -> int:
    """floor(x^(1/n)) for x >= 0."""
    if x < 2:
        return x
    m = int(round(x ** (1.0 / n))) if x < 2 ** 1000 else 1 << (x.bit_length() // n)
    while m ** n > x:
        m -= 1
    while (m + 1) ** n <= x:
        m += 1
    return m


@dataclass
class WindowParameters:
    """Centre, inner/outer radius, face sizes and face centres of a window.

    I_W and F_i are certified lower bounds (the ball of that radius fits);
    the true suprema lie in the recorded brackets.  O_W is a certified upper
    bound, exact when the root is rational.
    """

    c_W: tuple
    I_W: Fraction
    O_W: Fraction
    F_W: Fraction
    F: list
    p: list
    brackets: dict

    def ball(self, spec: GroupSpec, rho) -> BallH:
        return BallH(spec, self.c_W, rho)


def window_parameters(window, spec: GroupSpec | None = None) -> WindowParameters:
    """Window parameters under the weighted-max quasi-norm (right-invariant balls)."""
    if isinstance(window, SchemeSpec):
        spec = window.h_spec if spec is None else spec
        window = window.window
    if spec is None:
        spec = abelian(window.dim, "weighted-max")
    if spec.norm_kind != "weighted-max":
        spec = spec.with_norm("weighted-max")
    A, b = window.A, window.b
    I_W, I_hi, c_W = _max_radius(spec, A, b)
    cinv = inverse(c_W)
    O_W = Fraction(0)
    for v, _ in window.vertices():
        y = bch_multiply(spec, v, cinv)
        for x, w in zip(y, spec.weights):
            ax = abs(as_fraction(x))
            if w.denominator != 1:
                raise ValueError("outer radius needs integer weights")
            O_W = max(O_W, _root_upper(ax, int(w)))
    F, F_hi = [], []
    for i, (a, bb) in enumerate(zip(A, b)):
        lo, hi, _ = _max_radius(spec, A, b, eq=(a, bb), skip=i)
        F.append(lo)
        F_hi.append(hi)
    F_W = min(F)
    p = []
    for i, (a, bb) in enumerate(zip(A, b)):
        rows, rhs = _ball_rows(spec, A, b, F_W, skip=i)
        p.append(tuple(lexmin_point(rows, rhs, [list(a)], [bb])))
    return WindowParameters(c_W, I_W, O_W, F_W, F, p,
                            {"I_W": (I_W, I_hi), "F": list(zip(F, F_hi))})


# ----------------------------------------------------------------------
# cuts
# ----------------------------------------------------------------------

def _max_over(obj, A_ub, b_ub, A_eq=(), b_eq=()):
    res = maximize(list(obj), A_ub, b_ub, A_eq, b_eq)
    return res


def cuts_fully(scheme: SchemeSpec, s, i: int, B: BallH) -> bool:
    """(s faces_i W) cap B = (s P_i) cap B, and it is nonempty (closed B)."""
    A, b = scheme.window.left_translate(scheme.h_spec, s)
    BA = [list(a) for a, _ in B.halfspaces()]
    Bb = [v for _, v in B.halfspaces()]
    eqA, eqb = [list(A[i])], [b[i]]
    if not is_feasible(BA, Bb, eqA, eqb, n=len(A[i])):
        return False
    for j in range(len(A)):
        if j == i:
            continue
        res = maximize(list(A[j]), BA, Bb, eqA, eqb)
        if res.status != "optimal" or sign(res.value - b[j]) > 0:
            return False
    return True


def cuts_all_round(scheme: SchemeSpec, s, i: int, B: BallH) -> bool:
    """Full cut, and also (s P_i^+) cap B = (s W) cap B (closed B)."""
    if not cuts_fully(scheme, s, i, B):
        return False
    A, b = scheme.window.left_translate(scheme.h_spec, s)
    BA = [list(a) for a, _ in B.halfspaces()] + [list(A[i])]
    Bb = [v for _, v in B.halfspaces()] + [b[i]]
    for j in range(len(A)):
        if j == i:
            continue
        res = maximize(list(A[j]), BA, Bb)
        if res.status != "optimal" or sign(res.value - b[j]) > 0:
            return False
    return True


# ----------------------------------------------------------------------
# good pairs
# ----------------------------------------------------------------------

class GoodPairError(RuntimeError):
    pass


@dataclass
class GoodPair:
    k: Fraction
    h: Fraction
    params: WindowParameters
    checks: dict


def _random_box_points(spec, rho, m, rng):
    ext = [_exact_power(as_fraction(rho), w) for w in spec.weights]
    pts = [tuple(s * e for s, e in zip(sg, ext)) for sg in _corners(spec.n)]
    for _ in range(m):
        pts.append(tuple(Fraction(rng.randint(-1000, 1000), 1000) * e for e in ext))
    return pts


def _check_iii(spec, params, h, samples, seed):
    rng = np.random.default_rng(seed)
    n = spec.n
    w = np.array([float(x) for x in spec.weights])
    O = float(params.O_W)
    unit = np.vstack([np.array(_corners(n), float), rng.uniform(-1, 1, size=(16, n))])
    per = max(1, samples // len(unit))
    worst = 0.0
    for u in unit:
        a = [float(x) for x in u * O ** w]
        worst = max(worst, conjugation_distortion(spec, a, 2 * float(h), samples=per, seed=seed))
    return worst <= float(params.F_W), worst


def verify_good_pair(scheme: SchemeSpec, k, h, params: WindowParameters | None = None,
                     samples: int = 10_000, s_samples: int = 8, seed: int = 0) -> dict:
    """Evaluate conditions i)-iv); returns {name: (ok, detail)} in order."""
    spec = scheme.h_spec
    params = window_parameters(scheme) if params is None else params
    k, h = as_fraction(k), as_fraction(h)
    out = {}
    out["i"] = (0 < k < h, f"k={k}, h={h}")
    out["ii"] = (h < params.I_W, f"I_W >= {params.I_W}")
    if not (out["i"][0] and out["ii"][0]):
        return out
    ok, worst = _check_iii(spec, params, h, samples, seed)
    out["iii"] = (ok, f"max sampled |a x a^-1| = {worst:.6g} vs F_W = {float(params.F_W):.6g}")
    if not ok:
        return out
    rng = random.Random(seed)
    B = BallH(spec, params.c_W, h)
    bad = None
    for i, p in enumerate(params.p):
        s0 = bch_multiply(spec, params.c_W, inverse(p))
        for u in _random_box_points(spec, k, s_samples, rng):
            s = bch_multiply(spec, u, s0)
            if not cuts_all_round(scheme, s, i, B):
                bad = (i, s)
                break
        if bad:
            break
    out["iv"] = (bad is None, "all sampled cuts all-round" if bad is None else f"face {bad[0]} at s={bad[1]}")
    return out


def good_pair_search(scheme: SchemeSpec, params: WindowParameters | None = None, samples: int = 10_000,
                     s_samples: int = 8, seed: int = 0, max_halvings: int = 30) -> GoodPair:
    """Halve (k, h) from (I_W/4, I_W/2) until conditions i)-iv) hold."""
    params = window_parameters(scheme) if params is None else params
    k, h = params.I_W / 4, params.I_W / 2
    last = None
    for _ in range(max_halvings):
        checks = verify_good_pair(scheme, k, h, params, samples, s_samples, seed)
        failed = [name for name, (ok, _) in checks.items() if not ok]
        if not failed and len(checks) == 4:
            return GoodPair(k, h, params, checks)
        last = (failed[0], checks[failed[0]][1])
        k, h = k / 2, h / 2
    raise GoodPairError(f"no good pair after {max_halvings} halvings; condition {last[0]} fails: {last[1]}")


def u_i_of_r(scheme: SchemeSpec, i: int, r, good_pair: GoodPair, check_slab: bool = True) -> list:
    """Projections of lattice points in B_r(e) x U_i, U_i = B_k(c_W p_i^-1) (open)."""
    spec = scheme.h_spec
    params = good_pair.params
    s0 = bch_multiply(spec, params.c_W, inverse(params.p[i]))
    U = BallH(spec, s0, good_pair.k)
    batch = enumerate_batch(scheme, _ball_bounds(scheme.g_spec, as_fraction(r)), U.polytope(), strict=True)
    pts = [scheme.h_exact(c) for c in batch.coeffs]
    if check_slab:
        for mu in pts:
            if not ww_inverse_contains(scheme, mu):
                raise AssertionError(f"U_i(r) point {mu} is not in the slab")
    return pts


# ----------------------------------------------------------------------
# region bounds
# ----------------------------------------------------------------------

def upper_bound_arrangement(scheme: SchemeSpec, r, slab_points: LatticeBatch | None = None) -> Arrangement:
    """Hyperplanes mu P_i for mu in the (closed) r-slab and every face i."""
    if slab_points is None:
        slab_points = slab_batch(scheme, r)
    W = scheme.window
    hs = []
    for c in slab_points.coeffs:
        A, b = W.left_translate(scheme.h_spec, scheme.h_exact(c))
        hs.extend(HyperplaneH(tuple(a), v) for a, v in zip(A, b))
    return Arrangement.distinct(hs) if hs else Arrangement.build((), d=W.dim)


def upper_bound_regions(scheme: SchemeSpec, r, slab_points: LatticeBatch | None = None,
                        cap: int = 20_000) -> int:
    """Regions of open(W) cut by the hyperplanes through all faces of all slab translates."""
    arr = upper_bound_arrangement(scheme, r, slab_points)
    if len(arr) > cap:
        raise ArrangementCapError(f"{len(arr)} hyperplanes exceed the cap {cap}")
    return count_regions_in_B(arr, ConvexBody(scheme.window))


@dataclass
class LowerBound:
    count: int
    certified: bool
    violations: list
    family_sizes: list


def _independent_faces(A, d):
    for sub in itertools.combinations(range(len(A)), d):
        if rank_of([A[i] for i in sub]) == d:
            return sub
    raise ValueError("window normals do not span H")


def _max_concurrency(planes: list, d: int, cap: int = 200_000) -> int:
    """Largest number of the planes through one point of H."""
    n = len(planes)
    if n == 0:
        return 0
    best = 1
    if math.comb(n, min(d, n)) > cap:
        raise ArrangementCapError("family too large for the concurrency check")
    for size in range(2, d + 1):
        seen = set()
        for sub in itertools.combinations(range(n), size):
            rows = [planes[i].normal for i in sub]
            if rank_of(rows) != size:
                continue
            sol_rows = rows + []
            # points (or flats) common to the subset; count all planes containing it
            key = None
            if size == d:
                x = solve_linear(rows, [planes[i].offset for i in sub])
                key = tuple(x)
                if key in seen:
                    continue
                seen.add(key)
                m = sum(1 for P in planes if not P.evaluate(x))
            else:
                m = sum(1 for P in planes
                        if rank_of(sol_rows + [P.normal]) == size
                        and _same_flat(sol_rows, [planes[i].offset for i in sub], P))
            best = max(best, m)
    return best


def _same_flat(rows, offs, P) -> bool:
    """Does the flat {rows x = offs} lie in P (given P's normal is in the row span)?"""
    x = _particular(rows, offs)
    return x is not None and not P.evaluate(x)


def _particular(rows, offs):
    d = len(rows[0])
    m = len(rows)
    for cols in itertools.combinations(range(d), m):
        sub = [[r[c] for c in cols] for r in rows]
        y = solve_linear(sub, offs)
        if y is not None:
            x = [Fraction(0)] * d
            for c, v in zip(cols, y):
                x[c] = v
            return x
    return None


def lower_bound_regions(scheme: SchemeSpec, r, good_pair: GoodPair, c=Fraction(1, 101)) -> LowerBound:
    """Regions of open(B_h(c_W)) cut by s P_i, s in U_i(r), with the combinatorial checks.

    (a) d-tuples of planes from d families with independent normals meet in
    one point of B_h(c_W); (b) where two or more planes of family i meet in
    a point, at most c |U_i(r)| of them do.  A violation leaves the count valid as a region
    count but marks it as not certified.
    """
    c = as_fraction(c)
    spec = scheme.h_spec
    d = spec.n
    W = scheme.window
    B = BallH(spec, good_pair.params.c_W, good_pair.h)
    body = B.body()
    fams = []
    for i in range(len(W)):
        planes = []
        for s in u_i_of_r(scheme, i, r, good_pair):
            A, b = W.left_translate(spec, s)
            planes.append(HyperplaneH(tuple(A[i]), b[i]))
        fams.append(planes)
    violations = []
    if c >= Fraction(1, 100):
        violations.append("concentration constant c must be below 1/100")
    idx = _independent_faces(W.A, d)
    for tup in itertools.product(*[fams[i] for i in idx]):
        x = solve_linear([P.normal for P in tup], [P.offset for P in tup])
        if x is None or not body.contains(tuple(x), strict=True):
            violations.append(f"(a) planes from faces {idx} do not meet in a point of the ball")
            break
    for i, planes in enumerate(fams):
        m = _max_concurrency(planes, d)
        if m >= 2 and m > c * len(planes):
            violations.append(f"(b) face {i}: {m} of {len(planes)} planes share a point (c = {c})")
    hs = Arrangement.distinct([P for f in fams for P in f]) if any(fams) else Arrangement.build((), d=d)
    count = count_regions_in_B(hs, body)
    return LowerBound(count, not violations, violations, [len(f) for f in fams])


# ----------------------------------------------------------------------
# fits
# ----------------------------------------------------------------------

def exponent_fit(points: Sequence) -> tuple:
    """Least squares of log(count) on log(r): (slope, intercept, rms residual)."""
    pts = [(float(r), float(v)) for r, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(r <= 0 or v <= 0 for r, v in pts):
        raise ValueError("radii and counts must be positive")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    M = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(M, y, rcond=None)
    res = y - (slope * x + icpt)
    return float(slope), float(icpt), float(np.sqrt(np.mean(res ** 2)))
