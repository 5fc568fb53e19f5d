"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines appear in the terminal summary) or directly:
    python tests/test_acceptance.py [N ...]
"""

import filecmp
import os
import random
import sys
import tempfile
import time
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
sys.path.insert(0, os.path.dirname(__file__))

from _gen import random_arrangement, random_box  # noqa: E402

from nilcps.arrangements import (C2, Arrangement, beck_family_check, characteristic_polynomial_wrt_B,  # noqa: E402
                                 check_beck_bounds, count_regions_in_B, evaluate_polynomial,
                                 incidence_profile, schlafli_bound)
from nilcps.cli import (Budget, _random_lines, bundled_path, grid_family, resolve_scheme_path,  # noqa: E402
                        run_suite, saturated_census)
from nilcps.complexity import (TranslateStack, check_domain_tiling, check_lemma_equiv, exponent_fit,  # noqa: E402
                               good_pair_search, lower_bound_regions, upper_bound_regions)
from nilcps.group import (GroupPoint, abelian, ball_volume, bch_multiply, dilate, filiform,  # noqa: E402
                          heisenberg, inverse, is_locally_two_step)
from nilcps.io import load_experiment, load_scheme  # noqa: E402
from nilcps.scheme import check_flc, slab_batch  # noqa: E402

RESULTS = {}
_SCHEMES = {}


def scheme(name):
    if name not in _SCHEMES:
        _SCHEMES[name] = load_scheme(resolve_scheme_path(name))
    return _SCHEMES[name]


def experiment(name):
    cfg = load_experiment(bundled_path("experiments", name + ".yaml"))
    cfg.scheme = resolve_scheme_path(name.split("-slab")[0])
    return cfg


# ----------------------------------------------------------------------
# criteria
# ----------------------------------------------------------------------

def criterion_1():
    """Group law: associativity, identity, inverse, dilation homomorphism, 10^4 cases each."""
    rng = random.Random(1)
    t0 = time.perf_counter()

    def q():
        return Fraction(rng.randint(-99, 99), rng.randint(1, 30))

    bad = 0
    specs = [abelian(1), abelian(2), abelian(3), heisenberg()]
    for spec in specs:
        n = spec.n
        e = GroupPoint([Fraction(0)] * n)
        for _ in range(10_000):
            x, y, z = (GroupPoint(q() for _ in range(n)) for _ in range(3))
            r = Fraction(rng.randint(1, 40), rng.randint(1, 40))
            xy = bch_multiply(spec, x, y)
            bad += bch_multiply(spec, xy, z) != bch_multiply(spec, x, bch_multiply(spec, y, z))
            bad += bch_multiply(spec, x, e) != x or bch_multiply(spec, e, x) != x
            bad += bch_multiply(spec, x, inverse(x)) != e or bch_multiply(spec, inverse(x), x) != e
            bad += dilate(spec, r, xy) != bch_multiply(spec, dilate(spec, r, x), dilate(spec, r, y))
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 30, f"{bad} failures over 4 specs x 4 laws x 10^4 cases, {dt:.1f} s"


def criterion_2():
    """Non-crookedness classifier."""
    t0 = time.perf_counter()
    got = {"heisenberg": is_locally_two_step(heisenberg()),
           **{f"R^{n}": is_locally_two_step(abelian(n)) for n in (1, 2, 3)},
           "filiform-4": is_locally_two_step(filiform(4))}
    dt = time.perf_counter() - t0
    want = {"heisenberg": True, "R^1": True, "R^2": True, "R^3": True, "filiform-4": False}
    txt = ", ".join(f"{k}: {'non-crooked' if v else 'crooked'}" for k, v in got.items())
    return got == want and dt < 1, f"{txt} ({dt * 1000:.0f} ms)"


SLAB_BAND = (Fraction(1, 10), Fraction(10))     # fixed before measuring


def criterion_3():
    """Slab growth for HxH: slope of log |S_r| on r in [2, 10] is 4 +- 0.5."""
    s = scheme("hxh")
    t0 = time.perf_counter()
    pts, ratios = [], []
    for r in range(2, 11):
        n = len(slab_batch(s, r))
        pts.append((r, n))
        ratios.append(Fraction(n) / ball_volume(s.g_spec, r))
    dt = time.perf_counter() - t0
    slope = exponent_fit(pts)[0]
    in_band = all(SLAB_BAND[0] <= x <= SLAB_BAND[1] for x in ratios)
    ok = abs(slope - 4) <= 0.5 and in_band and dt < 600
    return ok, (f"slope {slope:.3f} (homdim 4), ratio in [{float(min(ratios)):.3f}, {float(max(ratios)):.3f}] "
                f"within [1/10, 10], {dt:.0f} s")


def _census_series(name):
    cfg = experiment(name)
    s = scheme(name)
    rows = []
    for r in cfg.r_grid:
        sched = [R for R in cfg.sample_radius if R > r]
        p, sat, R = saturated_census(s, r, sched, TranslateStack.open_slab(s, r))
        rows.append((r, p, sat))
    return rows


def criterion_4():
    """Abelian exponents: (R, R) slope 1 +- 0.15; (R, R^2) slope 2 +- 0.3; saturated rows over a decade."""
    t0 = time.perf_counter()
    out, ok = [], True
    for name, target, tol in (("silver-1x1", 1, 0.15), ("planar-1x2", 2, 0.3)):
        rows = _census_series(name)
        pts = [(r, p) for r, p, sat in rows if sat]
        span = max(r for r, _ in pts) / min(r for r, _ in pts) if pts else 0
        slope = exponent_fit(pts)[0] if len(pts) >= 3 else float("nan")
        good = len(pts) == len(rows) and span >= 10 and abs(slope - target) <= tol
        ok &= good
        out.append(f"{name}: slope {slope:.3f} (target {target} +- {tol}) over r in "
                   f"[{min(r for r, _ in pts)}, {max(r for r, _ in pts)}], counts {[p for _, p in pts]}")
    dt = time.perf_counter() - t0
    return ok and dt < 900, "; ".join(out) + f"; {dt:.0f} s"


def criterion_5():
    """HxH desk check: lower <= census <= upper <= Schlafli, strictly increasing in r."""
    s = scheme("hxh")
    cfg = experiment("hxh")
    gp = good_pair_search(s, seed=cfg.seed)
    N, d = len(s.window), s.h_spec.n
    rows, why = [], []
    for r in cfg.r_grid:
        slab = slab_batch(s, r)
        p, sat, R = saturated_census(s, r, cfg.sample_radius, TranslateStack.open_slab(s, r))
        lb = lower_bound_regions(s, r, gp)
        ub = upper_bound_regions(s, r, slab)
        sb = schlafli_bound(len(slab) * N, d)
        if not sat:
            why.append(f"census unsaturated at r={r}")
        if not lb.certified:
            why.append(f"lower bound uncertified at r={r}")
        if not lb.count <= p <= ub <= sb:
            why.append(f"chain broken at r={r}")
        rows.append((r, lb.count, p, sat, ub, sb))
    for k, label in ((1, "lower bound"), (2, "census"), (4, "upper bound"), (5, "Schlafli bound")):
        vals = [row[k] for row in rows]
        if not all(a < b for a, b in zip(vals, vals[1:])):
            why.append(f"{label} not strictly increasing {vals}")
    txt = "; ".join(f"r={r}: {lo} <= {p}{'' if sat else ' (unsaturated)'} <= {ub} <= {sb}"
                    for r, lo, p, sat, ub, sb in rows)
    return not why, txt + ("; failing: " + ", ".join(why) if why else "")


def criterion_6():
    """Patch-key partition equals slab partition; each point in exactly one acceptance domain."""
    cases = [("hxh", Fraction(3, 2), 8), ("hxh", 2, 8), ("hxh", Fraction(5, 2), 8),
             ("silver-1x1", 8, 256), ("silver-1x1", 32, 256), ("fibonacci", 8, 256),
             ("planar-1x2", 4, 512), ("planar-1x2", 8, 512)]
    bad, pts = 0, 0
    for name, r, R in cases:
        s = scheme(name)
        eq = check_lemma_equiv(s, r, R)
        til = check_domain_tiling(s, r, R)
        bad += eq.partition_mismatches + eq.set_mismatches + til.not_exactly_one + til.witness_failures
        pts += eq.points
    return bad == 0, f"{bad} mismatches over {len(cases)} censuses ({pts} points)"


def criterion_7():
    """Region oracle on 100 instances per d <= 3 (n <= 8); Schlafli on 10^3 larger instances."""
    rng = random.Random(7)
    t0 = time.perf_counter()
    bad = 0
    for d in (1, 2, 3):
        for _ in range(100):
            arr = random_arrangement(rng, d, rng.randint(1, 8))
            B = random_box(rng, d)
            chi = characteristic_polynomial_wrt_B(arr, B)
            bad += count_regions_in_B(arr, B) != (-1) ** d * evaluate_polynomial(chi, -1)
    t_oracle = time.perf_counter() - t0
    over = 0
    for _ in range(1000):
        d = rng.choice((2, 3))
        arr = random_arrangement(rng, d, rng.randint(9, 40))
        over += count_regions_in_B(arr, random_box(rng, d, 12)) > schlafli_bound(len(arr), d)
    return bad == 0 and over == 0 and t_oracle < 120, \
        f"{bad} oracle mismatches in 300 instances ({t_oracle:.0f} s), {over} Schlafli violations in 1000"


def criterion_8():
    """Beck/Szemeredi-Trotter: zero violations on 10^3 arrangements (n <= 40); grid certified."""
    rng = random.Random(8)
    t0 = time.perf_counter()
    viol = 0
    for _ in range(1000):
        arr = Arrangement.build(_random_lines(rng, rng.randint(3, 40)), 2)
        viol += len(check_beck_bounds(incidence_profile(arr)).violations)
    m = 101
    res = beck_family_check(*grid_family(m))
    dt = time.perf_counter() - t0
    ok = viol == 0 and res.certified and res.vertex_count == m * m and m * m >= C2 * (2 * m) ** 2 and dt < 300
    return ok, f"{viol} violations; grid m={m}: {res.vertex_count} vertices, certified={res.certified}; {dt:.0f} s"


FLC_CASES = {"fibonacci": ((4, 8, 16), 256), "silver-1x1": ((8, 16, 32), 1024),
             "planar-1x2": ((2, 4, 8), 16384), "hxh": ((Fraction(3, 2), 2, Fraction(5, 2)), 64)}


def criterion_9():
    """FLC: patch counts stable when R_window doubles, all bundled schemes, three r each."""
    out, ok = [], True
    for name, (rs, R) in FLC_CASES.items():
        counts = []
        for r in rs:
            res = check_flc(scheme(name), R, r)
            ok &= res.saturated
            counts.append(f"{res.count}{'' if res.saturated else '->' + str(res.count_doubled)}")
        out.append(f"{name} {'/'.join(counts)}")
    return ok, ", ".join(out)


def criterion_10():
    """Two runs of the bundled suite with the same seed give byte-identical CSVs."""
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        ra = run_suite(a, seed=0, budget=Budget())
        rb = run_suite(b, seed=0, budget=Budget())
        names = sorted(os.listdir(a))
        same = names == sorted(os.listdir(b))
        _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        ok = same and not mismatch and not errors and not ra.partial and not rb.partial
        return ok, f"{len(names)} CSVs compared, {len(mismatch) + len(errors)} differ"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


def record(k):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[k]()
    line = f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {detail}  [{time.perf_counter() - t0:.0f} s]"
    RESULTS[k] = line
    print(line)
    return ok, detail


@pytest.mark.parametrize("k", list(CRITERIA))
def test_criterion(k):
    ok, detail = record(k)
    assert ok, detail


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or list(CRITERIA)
    fails = sum(not record(k)[0] for k in chosen)
    sys.exit(1 if fails else 0)
