"""Float prefilter kernels, compiled with numba when available.

Every kernel here is a *filter*: it classifies cases as certainly true,
certainly false, or ambiguous (within `delta` of a boundary), and callers
settle the ambiguous ones with exact arithmetic.  Each kernel has a numba
version and a vectorised numpy version with identical outputs.

Set NILCPS_BACKEND=numpy to force the numpy path (numba is also skipped
when it cannot be imported).
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["BACKEND", "use_numba", "sign_bits", "sat_gap", "sweep_census",
           "neighbor_lists", "bits_words", "triple_points", "pair_lines_in_box"]


def _want_numba() -> bool:
    if os.environ.get("NILCPS_BACKEND", "numba").lower() == "numpy":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:  # pragma: no cover
        return False
    return True


BACKEND = "numba" if _want_numba() else "numpy"


def use_numba() -> bool:
    return BACKEND == "numba"


if BACKEND == "numba":
    from numba import njit
else:  # pragma: no cover - exercised via subprocess tests
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def bits_words(k: int) -> int:
    return max(1, (k + 63) // 64)


# ----------------------------------------------------------------------
# sign vectors of points against a stack of translated windows
# ----------------------------------------------------------------------

@njit(cache=True)
def _sign_bits_nb(T, A, b, delta):
    M = T.shape[0]
    K = A.shape[0]
    N = A.shape[1]
    d = A.shape[2]
    nw = (K + 63) // 64
    bits = np.zeros((M, nw), np.uint64)
    amb = np.zeros(M, np.bool_)
    for m in range(M):
        for k in range(K):
            inside = True
            near = False
            for j in range(N):
                v = -b[k, j]
                for t in range(d):
                    v += A[k, j, t] * T[m, t]
                if v > delta:
                    inside = False
                    break
                if v >= -delta:
                    near = True
            if inside and near:
                amb[m] = True
            if inside:
                bits[m, k >> 6] |= np.uint64(1) << np.uint64(k & 63)
    return bits, amb


def _sign_bits_np(T, A, b, delta, chunk=4096):
    M = T.shape[0]
    K = A.shape[0]
    nw = bits_words(K)
    bits = np.zeros((M, nw), np.uint64)
    amb = np.zeros(M, bool)
    weights = (np.uint64(1) << (np.arange(64, dtype=np.uint64)))
    for s in range(0, M, chunk):
        Tc = T[s:s + chunk]
        v = np.einsum("kjt,mt->mkj", A, Tc) - b[None, :, :]
        out = (v > delta).any(axis=2)
        inside = ~out
        near = (v >= -delta).any(axis=2)
        # ambiguity only matters when no constraint is clearly violated
        amb[s:s + chunk] = (near & inside).any(axis=1)
        pad = nw * 64 - K
        ins = np.concatenate([inside, np.zeros((inside.shape[0], pad), bool)], axis=1)
        ins = ins.reshape(ins.shape[0], nw, 64).astype(np.uint64)
        bits[s:s + chunk] = (ins * weights).sum(axis=2, dtype=np.uint64)
    return bits, amb


def sign_bits(T, A, b, delta):
    """Bit k of row m is set iff A[k] T[m] < b[k] componentwise.

    `amb[m]` flags rows where some translate is not clearly violated yet has
    a constraint within delta of equality; those rows need exact treatment.
    """
    T = np.ascontiguousarray(T, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if BACKEND == "numba":
        return _sign_bits_nb(T, A, b, float(delta))
    return _sign_bits_np(T, A, b, float(delta))


# ----------------------------------------------------------------------
# separating-axis gap between W and translates mu * W (d <= 3)
# ----------------------------------------------------------------------

@njit(cache=True)
def _sat_gap_nb(V, TV, axesW, TN, E, TE, d):
    K = TV.shape[0]
    out = np.empty(K)
    nV = V.shape[0]
    nE = E.shape[0]
    for k in range(K):
        best = -1e300
        # candidate axes: W normals, translated normals, edge cross products
        nax = axesW.shape[0] + TN.shape[1] + (nE * nE if d == 3 else 0)
        for a in range(nax):
            ax = np.zeros(3)
            if a < axesW.shape[0]:
                for t in range(d):
                    ax[t] = axesW[a, t]
            elif a < axesW.shape[0] + TN.shape[1]:
                q = a - axesW.shape[0]
                for t in range(d):
                    ax[t] = TN[k, q, t]
            else:
                q = a - axesW.shape[0] - TN.shape[1]
                e1 = E[q // nE]
                e2 = TE[k, q % nE]
                ax[0] = e1[1] * e2[2] - e1[2] * e2[1]
                ax[1] = e1[2] * e2[0] - e1[0] * e2[2]
                ax[2] = e1[0] * e2[1] - e1[1] * e2[0]
            nrm = 0.0
            for t in range(d):
                nrm += ax[t] * ax[t]
            nrm = math.sqrt(nrm)
            if nrm < 1e-12:
                continue
            lo1 = 1e300
            hi1 = -1e300
            lo2 = 1e300
            hi2 = -1e300
            for v in range(nV):
                p = 0.0
                q2 = 0.0
                for t in range(d):
                    p += ax[t] * V[v, t]
                    q2 += ax[t] * TV[k, v, t]
                lo1 = min(lo1, p)
                hi1 = max(hi1, p)
                lo2 = min(lo2, q2)
                hi2 = max(hi2, q2)
            g = max(lo2 - hi1, lo1 - hi2) / nrm
            if g > best:
                best = g
        out[k] = best
    return out


def sat_axis_gaps(V, TV, axesW, TN, E, TE):
    """Per-axis normalised gaps, shape (K, n_axes); NaN for vanishing axes.

    Axis order: W normals, translated normals, then E[i] x TE[j] row-major.
    """
    d = V.shape[1]
    K = TV.shape[0]
    axes = [np.broadcast_to(axesW[None, :, :], (K,) + axesW.shape), TN]
    if d == 3 and len(E):
        axes.append(np.cross(E[None, :, None, :], TE[:, None, :, :]).reshape(K, -1, 3))
    ax = np.concatenate(axes, axis=1)
    nrm = np.linalg.norm(ax, axis=2)
    p1 = np.einsum("kat,vt->kav", ax, V)
    p2 = np.einsum("kat,kvt->kav", ax, TV)
    g = np.maximum(p2.min(axis=2) - p1.max(axis=2), p1.min(axis=2) - p2.max(axis=2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(nrm > 1e-12, g / np.where(nrm > 0, nrm, 1), np.nan)


def _sat_gap_np(V, TV, axesW, TN, E, TE, d):
    K = TV.shape[0]
    axes = [np.broadcast_to(axesW[None, :, :], (K,) + axesW.shape), TN]
    if d == 3 and len(E):
        cr = np.cross(E[None, :, None, :], TE[:, None, :, :]).reshape(K, -1, 3)
        axes.append(cr)
    ax = np.concatenate(axes, axis=1)
    nrm = np.linalg.norm(ax, axis=2)
    p1 = np.einsum("kat,vt->kav", ax, V)
    p2 = np.einsum("kat,kvt->kav", ax, TV)
    g = np.maximum(p2.min(axis=2) - p1.max(axis=2), p1.min(axis=2) - p2.max(axis=2))
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(nrm > 1e-12, g / np.where(nrm > 0, nrm, 1), -1e300)
    return g.max(axis=1)


def sat_gap(V, TV, axesW, TN, E, TE):
    """Largest separating gap between polytope W and each translate.

    Positive: disjoint.  Negative: the candidate axes all overlap, which for
    convex polytopes in dimension <= 3 means they intersect.
    """
    d = V.shape[1]
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (V, TV, axesW, TN, E, TE)]
    if d == 3 and args[4].shape[0] == 0:
        args[4] = np.zeros((0, 3))
        args[5] = np.zeros((TV.shape[0], 0, 3))
    if BACKEND == "numba":
        return _sat_gap_nb(*args, d)
    return _sat_gap_np(*args, d)


# ----------------------------------------------------------------------
# census sweep: last chart coordinate drawn from a rank-2 module
# ----------------------------------------------------------------------

@njit(cache=True)
def _table_insert(table, used, bits, count):
    cap = table.shape[0]
    nw = table.shape[1]
    h = np.uint64(1469598103934665603)
    for w in range(nw):
        h = (h ^ bits[w]) * np.uint64(1099511628211)
        h = h ^ (h >> np.uint64(29))
    idx = np.int64(h % np.uint64(cap))
    while used[idx]:
        same = True
        for w in range(nw):
            if table[idx, w] != bits[w]:
                same = False
                break
        if same:
            return count, False
        idx = (idx + 1) % cap
    used[idx] = True
    for w in range(nw):
        table[idx, w] = bits[w]
    return count + 1, True


@njit(cache=True)
def _sweep_nb(tpre, blk, A, b, k_id, mg, mh, Minv, delta, cap_pts, amb_cap):
    """See sweep_census; numba body."""
    nblk = tpre.shape[0]
    K = A.shape[0]
    N = A.shape[1]
    d = A.shape[2]
    nw = (K + 63) // 64
    cap = 1 << 12
    table = np.zeros((cap, nw), np.uint64)
    used = np.zeros(cap, np.bool_)
    count = 0
    ev = np.empty(2 * K)
    evk = np.empty(2 * K, np.int64)
    lo_k = np.empty(K)
    hi_k = np.empty(K)
    live = np.empty(K, np.bool_)
    bits = np.zeros(nw, np.uint64)
    hit = np.zeros(2 * K + 1, np.bool_)
    amb_pts = np.zeros((amb_cap, 3), np.int64)
    n_amb = 0
    bad_blocks = np.zeros(nblk, np.bool_)
    npts = 0
    for q in range(nblk):
        # per translate: interval of z (last H coordinate) where inside
        block_bad = False
        ne = 0
        for k in range(K):
            lo = -1e300
            hi = 1e300
            ok = True
            for j in range(N):
                c0 = -b[k, j]
                for t in range(d - 1):
                    c0 += A[k, j, t] * tpre[q, t]
                cz = A[k, j, d - 1]
                if abs(cz) < 1e-14:
                    if c0 > delta:
                        ok = False
                        break
                    if c0 >= -delta:
                        block_bad = True
                else:
                    r = -c0 / cz
                    if cz > 0:
                        hi = min(hi, r)
                    else:
                        lo = max(lo, r)
            if ok and lo < hi:
                live[k] = True
                lo_k[k] = lo
                hi_k[k] = hi
                ev[ne] = lo
                evk[ne] = k
                ne += 1
                ev[ne] = hi
                evk[ne] = k
                ne += 1
            else:
                live[k] = False
        if block_bad:
            bad_blocks[q] = True
            continue
        order = np.argsort(ev[:ne])
        se = ev[:ne][order]
        for s in range(ne + 1):
            hit[s] = False
        # lattice values m = c0*mg0 + c1*mg1 in (g0, g1); star in [h0, h1]
        g0 = blk[q, 0]
        g1 = blk[q, 1]
        h0 = blk[q, 2]
        h1 = blk[q, 3]
        zoff = blk[q, 4]
        # c1 range from the inverse map (both intervals)
        lo1 = min(Minv[1, 0] * g0, Minv[1, 0] * g1) + min(Minv[1, 1] * h0, Minv[1, 1] * h1)
        hi1 = max(Minv[1, 0] * g0, Minv[1, 0] * g1) + max(Minv[1, 1] * h0, Minv[1, 1] * h1)
        for c1 in range(int(math.floor(lo1)) - 1, int(math.ceil(hi1)) + 2):
            # c0 from the H interval: mh0*c0 + mh1*c1 in [h0, h1]
            a0 = (h0 - mh[1] * c1) / mh[0]
            a1 = (h1 - mh[1] * c1) / mh[0]
            if a0 > a1:
                a0, a1 = a1, a0
            for c0 in range(int(math.floor(a0)) - 1, int(math.ceil(a1)) + 2):
                gv = mg[0] * c0 + mg[1] * c1
                if gv <= g0 - delta or gv >= g1 + delta:
                    continue
                hv = mh[0] * c0 + mh[1] * c1
                if hv < h0 - delta or hv > h1 + delta:
                    continue
                z = hv + zoff
                pos = np.searchsorted(se, z)
                near = (gv <= g0 + delta) or (gv >= g1 - delta)
                if pos > 0 and z - se[pos - 1] <= delta:
                    near = True
                if pos < ne and se[pos] - z <= delta:
                    near = True
                if near:
                    if n_amb < amb_cap:
                        amb_pts[n_amb, 0] = q
                        amb_pts[n_amb, 1] = c0
                        amb_pts[n_amb, 2] = c1
                    n_amb += 1
                    continue
                hit[pos] = True
                npts += 1
        for w in range(nw):
            bits[w] = 0
        for s in range(ne + 1):
            if s > 0:
                k = evk[order[s - 1]]
                bits[k >> 6] ^= np.uint64(1) << np.uint64(k & 63)
            if not hit[s]:
                continue
            if not (bits[k_id >> 6] >> np.uint64(k_id & 63)) & np.uint64(1):
                continue
            if 2 * (count + 1) > table.shape[0]:
                # grow the open-addressing table
                old = table[used]
                table = np.zeros((table.shape[0] * 2, nw), np.uint64)
                used = np.zeros(table.shape[0], np.bool_)
                c2 = 0
                for r in range(old.shape[0]):
                    c2, _ = _table_insert(table, used, old[r], c2)
                count = c2
            count, _ = _table_insert(table, used, bits, count)
    return table[used], amb_pts, n_amb, bad_blocks, npts


def _sweep_np(tpre, blk, A, b, k_id, mg, mh, Minv, delta, cap_pts, amb_cap):
    nblk = tpre.shape[0]
    K, N, d = A.shape
    nw = bits_words(K)
    found = set()
    amb = []
    bad = np.zeros(nblk, bool)
    npts = 0
    words = np.arange(K) >> 6
    masks = np.uint64(1) << (np.arange(K) & 63).astype(np.uint64)
    for q in range(nblk):
        c0 = np.einsum("kjt,t->kj", A[:, :, :d - 1], tpre[q]) - b
        cz = A[:, :, d - 1]
        flat = np.abs(cz) < 1e-14
        viol = flat & (c0 > delta)
        if (flat & (c0 >= -delta) & (c0 <= delta)).any():
            bad[q] = True
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(flat, np.nan, -c0 / np.where(flat, 1.0, cz))
        hi = np.where(cz > 0, r, np.inf)
        lo = np.where(cz < 0, r, -np.inf)
        hi = np.nanmin(np.where(flat, np.inf, hi), axis=1)
        lo = np.nanmax(np.where(flat, -np.inf, lo), axis=1)
        live = ~viol.any(axis=1) & (lo < hi)
        ks = np.nonzero(live)[0]
        ev = np.concatenate([lo[ks], hi[ks]])
        evk = np.concatenate([ks, ks])
        order = np.argsort(ev, kind="stable")
        se = ev[order]
        g0, g1, h0, h1, zoff = blk[q]
        l1 = min(Minv[1, 0] * g0, Minv[1, 0] * g1) + min(Minv[1, 1] * h0, Minv[1, 1] * h1)
        u1 = max(Minv[1, 0] * g0, Minv[1, 0] * g1) + max(Minv[1, 1] * h0, Minv[1, 1] * h1)
        c1 = np.arange(int(math.floor(l1)) - 1, int(math.ceil(u1)) + 2)
        a0 = (h0 - mh[1] * c1) / mh[0]
        a1 = (h1 - mh[1] * c1) / mh[0]
        lo0 = np.floor(np.minimum(a0, a1)).astype(np.int64) - 1
        hi0 = np.ceil(np.maximum(a0, a1)).astype(np.int64) + 1
        cnt = hi0 - lo0 + 1
        C1 = np.repeat(c1, cnt)
        C0 = np.repeat(lo0, cnt) + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
        gv = mg[0] * C0 + mg[1] * C1
        hv = mh[0] * C0 + mh[1] * C1
        keep = (gv > g0 - delta) & (gv < g1 + delta) & (hv >= h0 - delta) & (hv <= h1 + delta)
        C0, C1, gv, hv = C0[keep], C1[keep], gv[keep], hv[keep]
        z = hv + zoff
        pos = np.searchsorted(se, z)
        near = (gv <= g0 + delta) | (gv >= g1 - delta)
        prev = se[np.maximum(pos - 1, 0)] if len(se) else np.zeros_like(z)
        nxt = se[np.minimum(pos, len(se) - 1)] if len(se) else np.zeros_like(z)
        if len(se):
            near |= (pos > 0) & (z - prev <= delta)
            near |= (pos < len(se)) & (nxt - z <= delta)
        for c0v, c1v in zip(C0[near], C1[near]):
            amb.append((q, int(c0v), int(c1v)))
        hits = np.unique(pos[~near])
        npts += int((~near).sum())
        if not len(hits):
            continue
        tog = np.zeros((len(se) + 1, nw), np.uint64)
        if len(se):
            kk = evk[order]
            np.bitwise_xor.at(tog, (np.arange(1, len(se) + 1), words[kk]), masks[kk])
        cum = np.bitwise_xor.accumulate(tog, axis=0)
        for h in hits:
            if (int(cum[h][k_id >> 6]) >> (k_id & 63)) & 1:
                found.add(cum[h].tobytes())
    table = np.array([np.frombuffer(x, dtype=np.uint64) for x in sorted(found)]).reshape(-1, nw)
    amb_arr = np.array(amb, dtype=np.int64).reshape(-1, 3)
    return table, amb_arr[:amb_cap], len(amb), bad, npts


def sweep_census(tpre, blk, A, b, mg, mh, delta, k_id=0, amb_cap=100000):
    """Distinct sign vectors of lattice points, one block per chart prefix.

    Block q fixes every H coordinate except the last one (values in
    tpre[q]); the last chart coordinate runs over module elements
    m = c0*mg[0] + c1*mg[1] with m in the open interval (blk[q,0], blk[q,1])
    and star value in [blk[q,2], blk[q,3]]; the last H coordinate is
    star + blk[q,4].  Translate k contains the point iff A[k] t < b[k];
    only sign vectors with bit k_id (the window itself) are kept.

    Returns (distinct bit rows, ambiguous points (q, c0, c1), number of
    ambiguous points, blocks needing exact treatment, points counted).
    """
    M = np.array([[mg[0], mg[1]], [mh[0], mh[1]]], dtype=np.float64)
    Minv = np.linalg.inv(M)
    args = (np.ascontiguousarray(tpre, dtype=np.float64), np.ascontiguousarray(blk, dtype=np.float64),
            np.ascontiguousarray(A, dtype=np.float64), np.ascontiguousarray(b, dtype=np.float64), int(k_id),
            np.asarray(mg, dtype=np.float64), np.asarray(mh, dtype=np.float64), Minv, float(delta), 0,
            int(amb_cap))
    if BACKEND == "numba":
        return _sweep_nb(*args)
    return _sweep_np(*args)


# ----------------------------------------------------------------------
# neighbours within a group ball (patches)
# ----------------------------------------------------------------------

@njit(cache=True)
def _neighbors_nb(G, queries, order, keys, cell, r_pow, br, r, delta):
    # G: (M, n) exp coords; grid on the first two coordinates (or first one)
    n = G.shape[1]
    nq = queries.shape[0]
    ptr = np.zeros(nq + 1, np.int64)
    buf = np.empty(1024, np.int64)
    fbuf = np.empty(1024, np.int64)
    nb = 0
    inv = np.empty(n)
    y = np.empty(n)
    for qi in range(nq):
        q = queries[qi]
        for t in range(n):
            inv[t] = -G[q, t]
        c0 = int(math.floor(G[q, 0] / cell))
        lo_key = c0 - 1
        hi_key = c0 + 1
        a = np.searchsorted(keys, lo_key)
        bb = np.searchsorted(keys, hi_key + 1)
        for idx in range(a, bb):
            j = order[idx]
            # y = g_j * g_q^-1
            for t in range(n):
                y[t] = G[j, t] + inv[t]
            for e in range(br.shape[0]):
                i1 = int(br[e, 0])
                i2 = int(br[e, 1])
                k = int(br[e, 2])
                y[k] += 0.5 * br[e, 3] * (G[j, i1] * inv[i2] - G[j, i2] * inv[i1])
            state = 0  # 0 inside, 1 ambiguous, 2 outside
            for t in range(n):
                v = abs(y[t]) - r_pow[t]
                if v > delta:
                    state = 2
                    break
                if v >= -delta:
                    state = 1
            if state == 2:
                continue
            if nb >= buf.shape[0]:
                nbuf = np.empty(buf.shape[0] * 2, np.int64)
                nbuf[:nb] = buf[:nb]
                buf = nbuf
                nf = np.empty(fbuf.shape[0] * 2, np.int64)
                nf[:nb] = fbuf[:nb]
                fbuf = nf
            buf[nb] = j
            fbuf[nb] = state
            nb += 1
        ptr[qi + 1] = nb
    return ptr, buf[:nb].copy(), fbuf[:nb].copy()


def _neighbors_np(G, queries, order, keys, cell, r_pow, br, r, delta):
    ptr = [0]
    idxs = []
    flags = []
    for q in queries:
        c0 = int(math.floor(G[q, 0] / cell))
        a = np.searchsorted(keys, c0 - 1)
        bb = np.searchsorted(keys, c0 + 2)
        js = order[a:bb]
        inv = -G[q]
        y = G[js] + inv
        for i1, i2, k, c in br:
            i1, i2, k = int(i1), int(i2), int(k)
            y[:, k] += 0.5 * c * (G[js, i1] * inv[i2] - G[js, i2] * inv[i1])
        v = np.abs(y) - r_pow
        out = (v > delta).any(axis=1)
        amb = ((v >= -delta).any(axis=1)) & ~out
        sel = ~out
        idxs.append(js[sel])
        flags.append(amb[sel].astype(np.int64))
        ptr.append(ptr[-1] + int(sel.sum()))
    return (np.array(ptr, dtype=np.int64),
            np.concatenate(idxs) if idxs else np.zeros(0, np.int64),
            np.concatenate(flags) if flags else np.zeros(0, np.int64))


def neighbor_lists(G, queries, r_pow, brackets, r_cell, delta):
    """For each query q, indices j with |g_j g_q^-1| < r in the weighted-max norm.

    r_pow[t] = r**weight[t].  Candidates are found by bucketing on the first
    coordinate with cells of width r_cell >= the first-coordinate radius.
    Returns CSR (ptr, idx, flag) where flag 1 marks a near-boundary pair.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    keys_all = np.floor(G[:, 0] / r_cell).astype(np.int64)
    order = np.argsort(keys_all, kind="stable")
    keys = keys_all[order]
    br = np.ascontiguousarray(np.array(brackets, dtype=np.float64).reshape(-1, 4))
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    r_pow = np.ascontiguousarray(r_pow, dtype=np.float64)
    if BACKEND == "numba":
        return _neighbors_nb(G, queries, order, keys, float(r_cell), r_pow, br, 0.0, float(delta))
    return _neighbors_np(G, queries, order, keys, float(r_cell), r_pow, br, 0.0, float(delta))


# ----------------------------------------------------------------------
# arrangement candidates
# ----------------------------------------------------------------------

@njit(cache=True)
def _triples_nb(Nrm, off, C, e, delta):
    n = Nrm.shape[0]
    cap = 1024
    tri = np.empty((cap, 3), np.int64)
    pts = np.empty((cap, 3))
    amb = np.empty(cap, np.bool_)
    cnt = 0
    M = np.empty((3, 3))
    rhs = np.empty(3)
    for i in range(n):
        for j in range(i + 1, n):
            cx = Nrm[i, 1] * Nrm[j, 2] - Nrm[i, 2] * Nrm[j, 1]
            cy = Nrm[i, 2] * Nrm[j, 0] - Nrm[i, 0] * Nrm[j, 2]
            cz = Nrm[i, 0] * Nrm[j, 1] - Nrm[i, 1] * Nrm[j, 0]
            if abs(cx) + abs(cy) + abs(cz) < 1e-12:
                continue
            for k in range(j + 1, n):
                det = cx * Nrm[k, 0] + cy * Nrm[k, 1] + cz * Nrm[k, 2]
                if abs(det) < 1e-12:
                    continue
                for t in range(3):
                    M[0, t] = Nrm[i, t]
                    M[1, t] = Nrm[j, t]
                    M[2, t] = Nrm[k, t]
                rhs[0] = off[i]
                rhs[1] = off[j]
                rhs[2] = off[k]
                x = np.linalg.solve(M, rhs)
                state = 0
                for h in range(C.shape[0]):
                    v = C[h, 0] * x[0] + C[h, 1] * x[1] + C[h, 2] * x[2] - e[h]
                    if v > delta:
                        state = 2
                        break
                    if v >= -delta:
                        state = 1
                if state == 2:
                    continue
                if cnt == cap:
                    cap *= 2
                    t2 = np.empty((cap, 3), np.int64)
                    t2[:cnt] = tri[:cnt]
                    tri = t2
                    p2 = np.empty((cap, 3))
                    p2[:cnt] = pts[:cnt]
                    pts = p2
                    a2 = np.empty(cap, np.bool_)
                    a2[:cnt] = amb[:cnt]
                    amb = a2
                tri[cnt, 0] = i
                tri[cnt, 1] = j
                tri[cnt, 2] = k
                for t in range(3):
                    pts[cnt, t] = x[t]
                amb[cnt] = state == 1
                cnt += 1
    return tri[:cnt].copy(), pts[:cnt].copy(), amb[:cnt].copy()


def _triples_np(Nrm, off, C, e, delta):
    n = Nrm.shape[0]
    tris, ptss, ambs = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            cr = np.cross(Nrm[i], Nrm[j])
            if np.abs(cr).sum() < 1e-12:
                continue
            ks = np.arange(j + 1, n)
            det = Nrm[ks] @ cr
            ks = ks[np.abs(det) >= 1e-12]
            if not len(ks):
                continue
            M = np.empty((len(ks), 3, 3))
            M[:, 0] = Nrm[i]
            M[:, 1] = Nrm[j]
            M[:, 2] = Nrm[ks]
            rhs = np.empty((len(ks), 3))
            rhs[:, 0] = off[i]
            rhs[:, 1] = off[j]
            rhs[:, 2] = off[ks]
            x = np.linalg.solve(M, rhs[..., None])[..., 0]
            v = x @ C.T - e
            out = (v > delta).any(axis=1)
            amb = (v >= -delta).any(axis=1) & ~out
            sel = ~out
            if sel.any():
                t = np.empty((int(sel.sum()), 3), np.int64)
                t[:, 0] = i
                t[:, 1] = j
                t[:, 2] = ks[sel]
                tris.append(t)
                ptss.append(x[sel])
                ambs.append(amb[sel])
    if not tris:
        return np.zeros((0, 3), np.int64), np.zeros((0, 3)), np.zeros(0, bool)
    return np.concatenate(tris), np.concatenate(ptss), np.concatenate(ambs)


def triple_points(Nrm, off, C, e, delta):
    """All triples i<j<k of planes meeting in a point of {C x <= e} (3D).

    Points clearly outside are dropped; `amb` marks points within delta of
    the boundary of the body.
    """
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (Nrm, off, C, e)]
    if BACKEND == "numba":
        return _triples_nb(*args, float(delta))
    return _triples_np(*args, float(delta))


@njit(cache=True)
def _pairs2d_nb(Nrm, off, C, e, delta):
    n = Nrm.shape[0]
    cap = 1024
    pr = np.empty((cap, 2), np.int64)
    pts = np.empty((cap, 2))
    amb = np.empty(cap, np.bool_)
    cnt = 0
    for i in range(n):
        for j in range(i + 1, n):
            det = Nrm[i, 0] * Nrm[j, 1] - Nrm[i, 1] * Nrm[j, 0]
            if abs(det) < 1e-12:
                continue
            x0 = (off[i] * Nrm[j, 1] - Nrm[i, 1] * off[j]) / det
            x1 = (Nrm[i, 0] * off[j] - off[i] * Nrm[j, 0]) / det
            state = 0
            for h in range(C.shape[0]):
                v = C[h, 0] * x0 + C[h, 1] * x1 - e[h]
                if v > delta:
                    state = 2
                    break
                if v >= -delta:
                    state = 1
            if state == 2:
                continue
            if cnt == cap:
                cap *= 2
                p2 = np.empty((cap, 2), np.int64)
                p2[:cnt] = pr[:cnt]
                pr = p2
                q2 = np.empty((cap, 2))
                q2[:cnt] = pts[:cnt]
                pts = q2
                a2 = np.empty(cap, np.bool_)
                a2[:cnt] = amb[:cnt]
                amb = a2
            pr[cnt, 0] = i
            pr[cnt, 1] = j
            pts[cnt, 0] = x0
            pts[cnt, 1] = x1
            amb[cnt] = state == 1
            cnt += 1
    return pr[:cnt].copy(), pts[:cnt].copy(), amb[:cnt].copy()


def _pairs2d_np(Nrm, off, C, e, delta):
    n = Nrm.shape[0]
    i, j = np.triu_indices(n, 1)
    det = Nrm[i, 0] * Nrm[j, 1] - Nrm[i, 1] * Nrm[j, 0]
    ok = np.abs(det) >= 1e-12
    i, j, det = i[ok], j[ok], det[ok]
    x0 = (off[i] * Nrm[j, 1] - Nrm[i, 1] * off[j]) / det
    x1 = (Nrm[i, 0] * off[j] - off[i] * Nrm[j, 0]) / det
    x = np.stack([x0, x1], axis=1)
    v = x @ C.T - e
    out = (v > delta).any(axis=1)
    amb = (v >= -delta).any(axis=1) & ~out
    sel = ~out
    return np.stack([i[sel], j[sel]], axis=1).astype(np.int64), x[sel], amb[sel]


def pair_lines_in_box(Nrm, off, C, e, delta):
    """2D analogue of triple_points: pairs of lines crossing inside the body."""
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (Nrm, off, C, e)]
    if BACKEND == "numba":
        return _pairs2d_nb(*args, float(delta))
    return _pairs2d_np(*args, float(delta))
