"""Command line: generate, complexity, slab, regions, beck-check, fit (and suite).

Exit codes: 0 ok, 2 validation error, 3 cap or wall-clock budget exceeded
(partial results are still written and flagged).  Progress goes to stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .arrangements import (Arrangement, ArrangementCapError, ConvexBody, beck_family_check,
                           characteristic_polynomial_wrt_B, check_beck_bounds, count_regions_in_B,
                           evaluate_polynomial, flats_in_B, incidence_profile, schlafli_bound)
from .complexity import (GoodPairError, InsufficientRadiusError, TranslateStack, exponent_fit,
                         good_pair_search, lower_bound_regions, patch_census, upper_bound_regions)
from .group import HyperplaneH, ball_volume
from .io import (ConfigError, ExperimentConfig, SchemaVersionError, decimal, load_experiment,
                 load_scheme, parse_rational, read_arrangement, read_body, read_csv, write_csv)
from .scheme import EnumerationCapError, model_set_batch, slab_batch

log = logging.getLogger("nilcps")

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3


class BudgetExceeded(RuntimeError):
    pass


class Budget:
    """Wall-clock budget checked between units of work."""

    def __init__(self, seconds=None):
        self.seconds = seconds
        self.start = time.monotonic()

    def check(self, what: str = ""):
        if self.seconds is not None and time.monotonic() - self.start > self.seconds:
            raise BudgetExceeded(f"budget of {self.seconds} s exhausted{' before ' + what if what else ''}")


@dataclass
class Outcome:
    """What a command produced: files written and whether it stopped early."""
    paths: list = field(default_factory=list)
    partial: str | None = None
    failed: list = field(default_factory=list)

    @property
    def code(self) -> int:
        return EXIT_CAP if self.partial else EXIT_OK


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------

def bundled_path(kind: str, name: str) -> str:
    return str(resources.files("nilcps").joinpath("data", kind, name))


def resolve_scheme_path(name: str) -> str:
    if os.path.exists(name):
        return name
    cand = bundled_path("schemes", name if name.endswith(".yaml") else name + ".yaml")
    if os.path.exists(cand):
        return cand
    raise ConfigError(f"no scheme file or bundled scheme named {name!r}")


def bundled_schemes() -> list:
    d = resources.files("nilcps").joinpath("data", "schemes")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".yaml"))


def _ms(t0, timing: bool):
    return str(int(round((time.perf_counter() - t0) * 1000))) if timing else None


def _out_path(config: ExperimentConfig, stem: str) -> str:
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, stem + ".csv")


def _schedule(config: ExperimentConfig, r: Fraction) -> list:
    """R_sample values tried for radius r (each is compared with 2R)."""
    if config.sample_radius:
        sched = [R for R in config.sample_radius if R > r]
        if not sched:
            raise ConfigError(f"no sample radius exceeds r = {r}")
        return sched
    R0 = max(Fraction(16), 4 * r)
    return [R0 * 2 ** k for k in range(4)]


# ----------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------

def cmd_generate(config: ExperimentConfig, budget: Budget | None = None, timing: bool = False) -> Outcome:
    """Model set points with |lambda| < R: exact coefficients and decimal coordinates."""
    scheme = load_scheme(config.scheme)
    R = config.sample_radius[0] if config.sample_radius else Fraction(16)
    log.info("generate: %s, R = %s", scheme.name, R)
    batch = model_set_batch(scheme, R)
    nG, rank = scheme.g_spec.n, scheme.module.rank
    header = [f"c{i}_{s}" for i in range(nG) for s in range(rank)] + \
             [f"g{i}" for i in range(nG)] + [f"h{j}" for j in range(scheme.h_spec.n)]
    rows = []
    for c, g, h in zip(batch.coeffs, batch.g, batch.h):
        rows.append([int(v) for v in c.reshape(-1)] + [decimal(v) for v in g] + [decimal(v) for v in h])
    footer = [f"scheme={scheme.name} R={R} points={len(rows)} density={scheme.density}"]
    if nG == 1 and len(rows) > 1:
        # gap census: distinct differences of consecutive points, exact in the module
        order = sorted(range(len(batch)), key=lambda k: batch.g[k, 0])
        gaps = {tuple((batch.coeffs[b] - batch.coeffs[a]).reshape(-1))
                for a, b in zip(order, order[1:])}
        footer.append(f"gaps={len(gaps)}")
    path = _out_path(config, f"{scheme.name}-model-set")
    write_csv(path, "model-set", header, rows, footer)
    return Outcome([path])


# ----------------------------------------------------------------------
# slab
# ----------------------------------------------------------------------

def cmd_slab(config: ExperimentConfig, budget: Budget | None = None, timing: bool = False) -> Outcome:
    """|S_r| against the ball volume; slope of log |S_r| is homdim(G)."""
    budget = budget or Budget()
    scheme = load_scheme(config.scheme)
    rows, pts, out = [], [], Outcome()
    try:
        for r in config.r_grid:
            budget.check(f"r = {r}")
            t0 = time.perf_counter()
            n = len(slab_batch(scheme, r))
            vol = ball_volume(scheme.g_spec, r)
            log.info("slab: r = %s, |S_r| = %d", r, n)
            rows.append([str(r), n, decimal(vol), decimal(Fraction(n) / vol), _ms(t0, timing)])
            pts.append((r, n))
    except (BudgetExceeded, EnumerationCapError) as e:
        out.partial = str(e)
    footer = [f"predicted_slope={scheme.g_spec.homdim}"]
    footer.append(_fit_line([p for p in pts if p[1] > 0]))
    if out.partial:
        footer.append(f"partial: {out.partial}")
    path = _out_path(config, f"{scheme.name}-slab")
    write_csv(path, "slab", ["r", "slab_size", "ball_volume", "ratio", "wall_time_ms"], rows, footer)
    out.paths.append(path)
    return out


def _fit_line(points) -> str:
    if len(points) < 3:
        return "fit: n/a (fewer than 3 usable rows)"
    slope, icpt, rms = exponent_fit(points)
    return f"fit: slope={slope:.6f} intercept={icpt:.6f} rms={rms:.6f}"


# ----------------------------------------------------------------------
# complexity
# ----------------------------------------------------------------------

def saturated_census(scheme, r, schedule, stack=None, budget: Budget | None = None, method="auto"):
    """First R in the schedule with count(R) == count(2R); else the last, flagged.

    Returns (count, saturated, R).
    """
    stack = stack or TranslateStack.open_slab(scheme, r)
    cache = {}

    def count(R):
        if R not in cache:
            if budget:
                budget.check(f"census r = {r}, R = {R}")
            cache[R] = patch_census(scheme, r, R, method, stack).count
            log.info("  census r = %s, R = %s: %d", r, R, cache[R])
        return cache[R]

    for R in schedule:
        a, b = count(R), count(2 * R)
        if a == b:
            return a, True, R
    return b, False, 2 * schedule[-1]


CENSUS_HEADER = ["r", "sample_radius", "p_hat", "saturated", "lower_bound", "lower_certified",
                 "upper_bound", "slab_size", "schlafli", "wall_time_ms"]


def cmd_complexity(config: ExperimentConfig, budget: Budget | None = None, timing: bool = False,
                   bounds: bool = True, method: str = "auto") -> Outcome:
    """Per-r census with region bounds, plus a log-log fit over saturated rows."""
    budget = budget or Budget()
    scheme = load_scheme(config.scheme)
    out = Outcome()
    N = len(scheme.window)
    d = scheme.h_spec.n
    good = None
    notes = []
    if bounds:
        try:
            budget.check("good pair search")
            log.info("complexity: %s, searching a good pair", scheme.name)
            good = good_pair_search(scheme, seed=config.seed)
            notes.append(f"good_pair: k={good.k} h={good.h}")
        except GoodPairError as e:
            notes.append(f"good_pair: none ({e})")
        except BudgetExceeded as e:
            out.partial = str(e)
    rows, pts = [], []
    for r in config.r_grid:
        if out.partial:
            break
        try:
            budget.check(f"r = {r}")
            t0 = time.perf_counter()
            slab = slab_batch(scheme, r)
            stack = TranslateStack.open_slab(scheme, r)
            p, sat, R = saturated_census(scheme, r, _schedule(config, r), stack, budget, method)
            lower = cert = upper = None
            if bounds:
                budget.check(f"bounds at r = {r}")
                if good is not None:
                    lb = lower_bound_regions(scheme, r, good)
                    lower, cert = lb.count, int(lb.certified)
                try:
                    upper = upper_bound_regions(scheme, r, slab, cap=config.cap)
                except ArrangementCapError as e:
                    out.failed.append(f"upper bound at r = {r}: {e}")
            rows.append([str(r), str(R), p, int(sat), lower, cert, upper, len(slab),
                         schlafli_bound(len(slab) * N, d), _ms(t0, timing)])
            log.info("complexity: r = %s, p_hat = %d (%s)", r, p, "saturated" if sat else "UNSATURATED")
            if sat and p > 0:
                pts.append((r, p))
        except (BudgetExceeded, EnumerationCapError) as e:
            out.partial = str(e)
        except InsufficientRadiusError as e:
            out.failed.append(str(e))
    footer = notes + [f"predicted_exponent={scheme.g_spec.homdim * d}", _fit_line(pts)]
    unsat = [row[0] for row in rows if not row[3]]
    if unsat:
        footer.append("unsaturated rows (p_hat is a lower bound only): r = " + ", ".join(unsat))
    footer += [f"omitted: {f}" for f in out.failed]
    if out.partial:
        footer.append(f"partial: {out.partial}")
    path = _out_path(config, f"{scheme.name}-complexity")
    write_csv(path, "census", CENSUS_HEADER, rows, footer)
    out.paths.append(path)
    if out.failed and not out.partial:
        out.partial = "; ".join(out.failed)
    return out


# ----------------------------------------------------------------------
# regions
# ----------------------------------------------------------------------

def _poly_text(coeffs) -> str:
    terms = [(k, c) for k, c in enumerate(coeffs) if c][::-1]
    if not terms:
        return "0"
    out = ""
    for k, c in terms:
        mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
        mag = str(abs(c)) if (abs(c) != 1 or k == 0) else ""
        sep = " " if mag and mono else ""
        out += (" - " if c < 0 else " + ") + mag + sep + mono
    return out[3:] if out.startswith(" + ") else "-" + out[3:]


def cmd_regions(arr_path: str, body_path: str | None, cap: int = 20, out_path: str | None = None) -> tuple:
    """Region count, flats, characteristic polynomial and the oracle comparison.

    Returns (report lines, exit code).
    """
    arr = read_arrangement(arr_path)
    d = arr.d
    B = read_body(body_path) if body_path else None
    if B is None:
        from .arrangements import _enclosing_box
        B = _enclosing_box(arr) if len(arr) else ConvexBody.box([-1] * d, [1] * d)
    if B.d != d:
        raise ConfigError("body and arrangement dimensions differ", body_path or "<body>")
    lines = [f"dimension: {d}", f"hyperplanes: {len(arr)}"]
    regions = count_regions_in_B(arr, B)
    lines.append(f"regions: {regions}")
    flats = flats_in_B(arr, B)
    lines.append("flats: " + " ".join(f"dim{k}={flats[k]}" for k in sorted(flats)))
    sb = schlafli_bound(len(arr), d)
    lines.append(f"schlafli_bound: {sb} ({'ok' if regions <= sb else 'VIOLATED'})")
    code = EXIT_OK
    if len(arr) <= cap:
        chi = characteristic_polynomial_wrt_B(arr, B, cap=cap)
        val = (-1) ** d * evaluate_polynomial(chi, -1)
        lines.append("characteristic_polynomial: " + _poly_text(chi))
        lines.append(f"oracle: {'pass' if val == regions else 'FAIL'} ((-1)^d chi(-1) = {val})")
    else:
        lines.append(f"characteristic_polynomial: omitted ({len(arr)} hyperplanes exceed cap {cap})")
        lines.append("oracle: omitted")
        code = EXIT_CAP
    if out_path:
        rows = [[ln.split(":", 1)[0], ln.split(":", 1)[1].strip()] for ln in lines]
        write_csv(out_path, "regions", ["item", "value"], rows)
    return lines, code


# ----------------------------------------------------------------------
# beck-check
# ----------------------------------------------------------------------

def _random_lines(rng: random.Random, n: int) -> list:
    """Random lines with small integer data; a few forced pencils create rich points."""
    lines = set()
    while len(lines) < n:
        if rng.random() < 0.3:
            # line through a shared lattice point
            px, py = rng.randint(-3, 3), rng.randint(-3, 3)
            a, b = rng.randint(-4, 4), rng.randint(-4, 4)
            if a == 0 and b == 0:
                continue
            c = a * px + b * py
        else:
            a, b, c = rng.randint(-5, 5), rng.randint(-5, 5), rng.randint(-9, 9)
            if a == 0 and b == 0:
                continue
        g = math.gcd(math.gcd(a, b), c)
        a, b, c = a // g, b // g, c // g
        if a < 0 or (a == 0 and b < 0):
            a, b, c = -a, -b, -c
        lines.add((a, b, c))
    return [HyperplaneH((a, b), c) for a, b, c in sorted(lines)]


def grid_family(m: int):
    hs = [HyperplaneH((1, 0), i) for i in range(m)] + [HyperplaneH((0, 1), i) for i in range(m)]
    return Arrangement.build(hs, 2, labels=[1] * m + [2] * m), ConvexBody.box([-1, -1], [m, m])


def pencil_family(m: int):
    """Two families of lines all through the origin."""
    hs = [HyperplaneH((1, k), 0) for k in range(m)] + [HyperplaneH((k, -1), 0) for k in range(1, m + 1)]
    return Arrangement.build(hs, 2, labels=[1] * m + [2] * m), ConvexBody.box([-1, -1], [1, 1])


def cmd_beck_check(config: ExperimentConfig, instances: int = 1000, max_lines: int = 40,
                   grid_m: int = 101, budget: Budget | None = None, timing: bool = False) -> Outcome:
    """Randomised campaign for the incidence bounds plus two family instances."""
    budget = budget or Budget()
    rng = random.Random(config.seed)
    out = Outcome()
    worst = {}
    done = viol = 0
    try:
        for k in range(instances):
            budget.check(f"instance {k}")
            n = rng.randint(3, max_lines)
            arr = Arrangement.build(_random_lines(rng, n), 2)
            rep = check_beck_bounds(incidence_profile(arr))
            for name, kk, val, bound, ok in rep.checks:
                ratio = Fraction(val) / bound if bound else Fraction(0)
                if name not in worst or ratio > worst[name][0]:
                    worst[name] = (ratio, n, kk)
                viol += not ok
            done += 1
            if (k + 1) % 100 == 0:
                log.info("beck-check: %d instances, %d violations", k + 1, viol)
    except BudgetExceeded as e:
        out.partial = str(e)
    rows = [["campaign", "instances", done, ""], ["campaign", "violations", viol, ""]]
    for name in sorted(worst):
        ratio, n, kk = worst[name]
        rows.append(["max_ratio", name, decimal(ratio, 6), f"n={n} k={kk}"])
    for label, (arr, B) in (("grid", grid_family(grid_m)), ("pencil", pencil_family(6))):
        res = beck_family_check(arr, B)
        rows.append([label, "vertices", res.vertex_count, f"bound={decimal(res.bound, 6)}"])
        rows.append([label, "certified", int(res.certified), "; ".join(res.violated)])
    footer = [f"partial: {out.partial}"] if out.partial else []
    path = _out_path(config, "beck-check")
    write_csv(path, "beck", ["section", "item", "value", "detail"], rows, footer)
    out.paths.append(path)
    return out


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------

def cmd_fit(csv_path: str, column: str | None = None) -> list:
    """Log-log slope of a census or slab CSV (census: saturated rows only)."""
    kind, header, rows, footer = read_csv(csv_path)
    col = column or {"census": "p_hat", "slab": "slab_size"}.get(kind)
    if col is None or col not in header:
        raise ConfigError(f"cannot fit column {col!r} of a {kind!r} file", csv_path)
    ri, ci = header.index("r"), header.index(col)
    si = header.index("saturated") if kind == "census" else None
    pts = []
    for row in rows:
        if si is not None and row[si] != "1":
            continue
        if row[ci] and int(row[ci]) > 0:
            pts.append((Fraction(row[ri]), int(row[ci])))
    lines = [_fit_line(pts)]
    lines += [f for f in footer if f.startswith("predicted")]
    return lines


# ----------------------------------------------------------------------
# bundled suite
# ----------------------------------------------------------------------

SUITE = [
    ("generate", "fibonacci", {"sample_radius": [Fraction(50)]}),
    ("generate", "silver-1x1", {"sample_radius": [Fraction(50)]}),
    ("generate", "planar-1x2", {"sample_radius": [Fraction(8)]}),
    ("generate", "hxh", {"sample_radius": [Fraction(3)]}),
    ("complexity", "fibonacci", {}),
    ("complexity", "silver-1x1", {}),
    ("complexity", "planar-1x2", {}),
    ("slab", "hxh", {"r_grid": [Fraction(k) for k in range(2, 6)]}),
]


def run_suite(out: str, seed: int = 0, instances: int = 1000, budget: Budget | None = None) -> Outcome:
    """The bundled experiments: model sets, abelian censuses, a slab series,
    the region fixtures and the incidence campaign.  Everything lands in out/."""
    budget = budget or Budget()
    total = Outcome()
    for cmd, name, over in SUITE:
        exp = bundled_path("experiments", name + ".yaml")
        cfg = load_experiment(exp) if os.path.exists(exp) else ExperimentConfig(resolve_scheme_path(name))
        cfg.scheme = resolve_scheme_path(name)
        for k, v in over.items():
            setattr(cfg, k, v)
        cfg.seed, cfg.out = seed, out
        log.info("suite: %s %s", cmd, name)
        fn = {"generate": cmd_generate, "complexity": cmd_complexity, "slab": cmd_slab}[cmd]
        res = fn(cfg, budget)
        total.paths += res.paths
        total.partial = total.partial or res.partial
    adir = resources.files("nilcps").joinpath("data", "arrangements")
    box = str(adir.joinpath("box.txt"))
    for name in ("empty", "three-lines", "pencil"):
        path = os.path.join(out, f"regions-{name}.csv")
        cmd_regions(str(adir.joinpath(name + ".txt")), box, out_path=path)
        total.paths.append(path)
    res = cmd_beck_check(ExperimentConfig(scheme="", seed=seed, out=out), instances, budget=budget)
    total.paths += res.paths
    total.partial = total.partial or res.partial
    return total


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def _config_from_args(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_experiment(args.config)
    else:
        if not getattr(args, "scheme", None):
            raise ConfigError("either --config or --scheme is required")
        cfg = ExperimentConfig(scheme=resolve_scheme_path(args.scheme))
    if getattr(args, "scheme", None) and args.config:
        cfg.scheme = resolve_scheme_path(args.scheme)
    elif cfg.scheme and not os.path.exists(cfg.scheme):
        cfg.scheme = resolve_scheme_path(os.path.basename(cfg.scheme))
    if getattr(args, "r_grid", None):
        cfg.r_grid = [parse_rational(t, "--r-grid") for t in args.r_grid.split(",") if t.strip()]
    if getattr(args, "sample_radius", None):
        cfg.sample_radius = [parse_rational(t, "--sample-radius") for t in args.sample_radius.split(",")
                             if t.strip()]
    if getattr(args, "cap", None) is not None:
        cfg.cap = args.cap
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out = args.out
    ExperimentConfig.__post_init__(cfg)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilcps", description=__doc__.splitlines()[0])
    p.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--config", help="experiment YAML (flags override it)")
        sp.add_argument("--scheme", help="scheme YAML path or bundled name (" + ", ".join(bundled_schemes()) + ")")
        if grid:
            sp.add_argument("--r-grid", help="comma separated radii, e.g. 3/2,2,5/2")
        sp.add_argument("--sample-radius", help="R_sample schedule, comma separated")
        sp.add_argument("--cap", type=int, help="hyperplane cap for region counts")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--budget-seconds", type=float)
        sp.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")

    common(sub.add_parser("generate", help="model set CSV"), grid=False)
    sp = sub.add_parser("complexity", help="census with region bounds")
    common(sp)
    sp.add_argument("--no-bounds", action="store_true", help="census only")
    sp.add_argument("--method", default="auto", choices=["auto", "sweep", "generic", "patch"])
    common(sub.add_parser("slab", help="slab sizes and growth"))
    sp = sub.add_parser("regions", help="regions of an arrangement in a body")
    sp.add_argument("arrangement")
    sp.add_argument("body", nargs="?")
    sp.add_argument("--cap", type=int, default=20, help="largest arrangement for the subset-sum oracle")
    sp.add_argument("--out", help="CSV report path")
    sp = sub.add_parser("beck-check", help="incidence bound campaign")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", type=int, default=1000)
    sp.add_argument("--max-lines", type=int, default=40)
    sp.add_argument("--grid-m", type=int, default=101)
    sp.add_argument("--out", default=".")
    sp.add_argument("--budget-seconds", type=float)
    sp = sub.add_parser("suite", help="run the bundled experiment suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", type=int, default=1000, help="beck-check campaign size")
    sp.add_argument("--out", default="suite-out")
    sp.add_argument("--budget-seconds", type=float)
    sp = sub.add_parser("fit", help="log-log slope of a census or slab CSV")
    sp.add_argument("csv")
    sp.add_argument("--column")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "regions":
            lines, code = cmd_regions(args.arrangement, args.body, args.cap, args.out)
            print("\n".join(lines))
            return code
        if args.command == "fit":
            print("\n".join(cmd_fit(args.csv, args.column)))
            return EXIT_OK
        budget = Budget(getattr(args, "budget_seconds", None))
        if args.command == "suite":
            out = run_suite(args.out, args.seed, args.instances, budget)
        elif args.command == "beck-check":
            cfg = ExperimentConfig(scheme="", seed=args.seed, out=args.out)
            out = cmd_beck_check(cfg, args.instances, args.max_lines, args.grid_m, budget)
        else:
            cfg = _config_from_args(args)
            timing = args.timing
            if args.command == "generate":
                out = cmd_generate(cfg, budget, timing)
            elif args.command == "slab":
                out = cmd_slab(cfg, budget, timing)
            else:
                out = cmd_complexity(cfg, budget, timing, not args.no_bounds, args.method)
        for path in out.paths:
            print(path)
        if out.partial:
            print(f"partial: {out.partial}", file=sys.stderr)
        return out.code
    except (ConfigError, SchemaVersionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (EnumerationCapError, ArrangementCapError, BudgetExceeded) as e:
        print(f"cap: {e}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
