"""Exact linear programming over an ordered field (Fractions or ExactScalars).

Dense two-phase tableau simplex with Bland's rule, so it terminates without
any tolerance.  Problems here are tiny (a handful of variables), which keeps
the exact arithmetic affordable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = ["LPResult", "maximize", "minimize", "is_feasible", "max_slack",
           "strictly_feasible", "lexmin_point"]


@dataclass(frozen=True)
class LPResult:
    status: str          # "optimal", "infeasible" or "unbounded"
    x: tuple | None = None
    value: object = None


def _z(v):
    return v * 0


def _pivot(T, basis, row, col):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    pr = T[row]
    for i, r in enumerate(T):
        if i != row:
            f = r[col]
            if f:
                T[i] = [a - f * b for a, b in zip(r, pr)]
    basis[row] = col


def _simplex(T, basis, ncols, allowed):
    """Maximise the objective held in the last row (as -c) over the tableau."""
    m = len(T) - 1
    while True:
        obj = T[m]
        col = -1
        for j in range(ncols):
            if allowed[j] and obj[j] < 0:
                col = j
                break
        if col < 0:
            return "optimal"
        row = -1
        best = None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[row]):
                    best, row = ratio, i
        if row < 0:
            return "unbounded"
        _pivot(T, basis, row, col)


def maximize(c: Sequence, A_ub: Sequence = (), b_ub: Sequence = (),
             A_eq: Sequence = (), b_eq: Sequence = (), nonneg: Sequence | None = None) -> LPResult:
    """max c.x s.t. A_ub x <= b_ub, A_eq x = b_eq.

    Variables are free unless `nonneg[j]` is true.  Free variables are split
    into positive and negative parts.
    """
    n = len(c)
    if nonneg is None:
        nonneg = [False] * n
    sample = next((v for v in list(c) + [v for r in A_ub for v in r] + list(b_ub) if v), Fraction(0))
    zero = _z(sample) if not isinstance(sample, int) else Fraction(0)
    # column map: variable j -> (pos col, neg col or None)
    cols = []
    k = 0
    for j in range(n):
        if nonneg[j]:
            cols.append((k, None))
            k += 1
        else:
            cols.append((k, k + 1))
            k += 2
    nx = k
    rows = [(list(a), b, True) for a, b in zip(A_ub, b_ub)] + \
           [(list(a), b, False) for a, b in zip(A_eq, b_eq)]
    m = len(rows)
    nslack = sum(1 for r in rows if r[2])
    ncols = nx + nslack + m  # structural, slack, artificial
    T = []
    basis = []
    s = 0
    for i, (a, b, ub) in enumerate(rows):
        line = [zero] * (ncols + 1)
        for j in range(n):
            p, q = cols[j]
            line[p] = zero + a[j]
            if q is not None:
                line[q] = zero - a[j]
        if ub:
            line[nx + s] = zero + 1
            s += 1
        line[-1] = zero + b
        if line[-1] < 0:
            line = [-v for v in line]
        line[nx + nslack + i] = zero + 1
        T.append(line)
        basis.append(nx + nslack + i)
    # phase 1: maximise -sum(artificials)
    obj = [zero] * (ncols + 1)
    for i in range(m):
        obj = [o - v for o, v in zip(obj, T[i])]
    for i in range(m):
        obj[nx + nslack + i] = zero
    T.append(obj)
    allowed = [True] * ncols
    _simplex(T, basis, ncols, allowed)
    if T[m][-1] < 0:
        return LPResult("infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= nx + nslack:
            for j in range(nx + nslack):
                if T[i][j]:
                    _pivot(T, basis, i, j)
                    break
    for j in range(nx + nslack, ncols):
        allowed[j] = False
    # phase 2 objective row: -c expressed in the current basis
    obj = [zero] * (ncols + 1)
    for j in range(n):
        p, q = cols[j]
        obj[p] = zero - c[j]
        if q is not None:
            obj[q] = zero + c[j]
    for i in range(m):
        bcol = basis[i]
        f = obj[bcol]
        if f and bcol < nx + nslack:
            obj = [o - f * v for o, v in zip(obj, T[i])]
    T[m] = obj
    status = _simplex(T, basis, ncols, allowed)
    if status == "unbounded":
        return LPResult("unbounded")
    vals = [zero] * ncols
    for i in range(m):
        vals[basis[i]] = T[i][-1]
    x = []
    for j in range(n):
        p, q = cols[j]
        x.append(vals[p] - (vals[q] if q is not None else zero))
    value = sum((cj * xj for cj, xj in zip(c, x)), zero)
    return LPResult("optimal", tuple(x), value)


def minimize(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), nonneg=None) -> LPResult:
    res = maximize([-v for v in c], A_ub, b_ub, A_eq, b_eq, nonneg)
    if res.status != "optimal":
        return res
    return LPResult("optimal", res.x, -res.value)


def is_feasible(A_ub, b_ub, A_eq=(), b_eq=(), n: int | None = None) -> bool:
    if n is None:
        n = len(A_ub[0]) if len(A_ub) else len(A_eq[0])
    return maximize([0] * n, A_ub, b_ub, A_eq, b_eq).status == "optimal"


def max_slack(A_ub, b_ub, A_eq=(), b_eq=(), cap=1):
    """max t s.t. A_ub x + t <= b_ub, A_eq x = b_eq, t <= cap.

    Returns (t, x) or (None, None) when even t = -inf is infeasible, which can
    only happen through the equalities.
    """
    n = len(A_ub[0]) if len(A_ub) else len(A_eq[0])
    A = [list(r) + [1] for r in A_ub] + [[0] * n + [1]]
    b = list(b_ub) + [cap]
    E = [list(r) + [0] for r in A_eq]
    res = maximize([0] * n + [1], A, b, E, list(b_eq))
    if res.status != "optimal":
        return None, None
    return res.value, res.x[:n]


def strictly_feasible(A_ub, b_ub, A_eq=(), b_eq=()) -> bool:
    """Is there x with A_ub x < b_ub (all strict) and A_eq x = b_eq?"""
    t, _ = max_slack(A_ub, b_ub, A_eq, b_eq)
    return t is not None and t > 0


def lexmin_point(A_ub, b_ub, A_eq=(), b_eq=()):
    """Lexicographically smallest point of a bounded nonempty polytope."""
    n = len(A_ub[0]) if len(A_ub) else len(A_eq[0])
    A_eq = [list(r) for r in A_eq]
    b_eq = list(b_eq)
    x = None
    for j in range(n):
        c = [0] * n
        c[j] = 1
        res = minimize(c, A_ub, b_ub, A_eq, b_eq)
        if res.status != "optimal":
            raise ValueError(f"lexicographic minimum failed: {res.status}")
        A_eq.append(c)
        b_eq.append(res.value)
        x = res.x
    return x
