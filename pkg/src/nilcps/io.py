"""Config files, arrangement files and versioned CSV output.

Configs are YAML with exact rationals written as "p/q" strings (field
elements as "1/2 + 3*sqrt2").  Floats are rejected: exactness lives in the
inputs.  Every error carries the file name and line of the offending node.
"""

from __future__ import annotations

import csv
import io as _io
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import yaml

from .arrangements import Arrangement, ConvexBody
from .charts import CHARTS, Module, parse_field_element
from .field import Field
from .group import GroupSpec, HyperplaneH
from .polytope import DegeneratePolytopeError, WindowPolytope

__all__ = [
    "ConfigError", "SchemaVersionError", "load_scheme", "loads_scheme", "scheme_from_mapping", "ExperimentConfig",
    "load_experiment", "parse_rational", "parse_halfspace", "read_arrangement", "write_arrangement",
    "read_body", "format_arrangement", "parse_arrangement", "write_csv", "read_csv", "decimal",
    "CSV_VERSION",
]

CSV_VERSION = 1
_CSV_MAGIC = "# nilcps-csv"


class ConfigError(ValueError):
    """Validation failure tied to a place in an input file."""

    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class SchemaVersionError(ValueError):
    pass


# ----------------------------------------------------------------------
# YAML with line numbers
# ----------------------------------------------------------------------

class _Map(dict):
    line = None
    key_lines: dict = {}


class _Seq(list):
    line = None
    item_lines: list = []


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    out = _Map()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for knode, vnode in node.value:
        k = loader.construct_object(knode, deep=True)
        if k in out:
            raise ConfigError(f"duplicate key {k!r}", node.start_mark.name, knode.start_mark.line + 1)
        out[k] = loader.construct_object(vnode, deep=True)
        out.key_lines[k] = vnode.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = _Seq(loader.construct_object(v, deep=True) for v in node.value)
    out.line = node.start_mark.line + 1
    out.item_lines = [v.start_mark.line + 1 for v in node.value]
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def _load_yaml(text: str, source: str):
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigError(f"YAML syntax: {e.problem}", source, line) from None
    if not isinstance(data, _Map):
        raise ConfigError("top level must be a mapping", source, 1)
    return data


class _Ctx:
    """Error helper bound to one file."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, msg, line=None):
        raise ConfigError(msg, self.source, line)

    def get(self, m: _Map, key, required=True, default=None):
        if key not in m:
            if required:
                self.fail(f"missing key {key!r}", m.line)
            return default
        return m[key]

    def line_of(self, m, key):
        if isinstance(m, _Map):
            return m.key_lines.get(key, m.line)
        if isinstance(m, _Seq):
            return m.item_lines[key] if key < len(m.item_lines) else m.line
        return None

    def check_keys(self, m: _Map, allowed):
        for k in m:
            if k not in allowed:
                self.fail(f"unknown key {k!r} (expected one of {', '.join(sorted(allowed))})",
                          m.key_lines.get(k, m.line))


def parse_rational(v, what: str = "value", ctx: _Ctx | None = None, line=None) -> Fraction:
    """Exact rational from an int or a "p/q" string; floats are refused."""
    ctx = ctx or _Ctx("<value>")
    if isinstance(v, bool):
        ctx.fail(f"{what}: expected a rational, got a boolean", line)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        ctx.fail(f"{what}: {v!r} is a float; write exact rationals as \"p/q\" strings", line)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            pass
    ctx.fail(f"{what}: cannot read {v!r} as a rational", line)


def _int(v, what, ctx, line, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        ctx.fail(f"{what}: expected an integer, got {v!r}", line)
    if lo is not None and v < lo:
        ctx.fail(f"{what}: must be at least {lo}", line)
    return v


# ----------------------------------------------------------------------
# half-spaces "a1 ... ad | b"
# ----------------------------------------------------------------------

def parse_halfspace(text: str, d: int | None = None, ctx: _Ctx | None = None, line=None) -> tuple:
    ctx = ctx or _Ctx("<halfspace>")
    if not isinstance(text, str) or text.count("|") != 1:
        ctx.fail(f"half-space must read \"a1 ... ad | b\", got {text!r}", line)
    lhs, rhs = text.split("|")
    a = tuple(parse_rational(t, "coefficient", ctx, line) for t in lhs.split())
    if d is not None and len(a) != d:
        ctx.fail(f"half-space has {len(a)} coefficients, expected {d}", line)
    if not a:
        ctx.fail("half-space has no coefficients", line)
    b = parse_rational(rhs.strip(), "offset", ctx, line)
    return a, b


def _fmt_halfspace(a, b) -> str:
    return " ".join(str(Fraction(v)) for v in a) + " | " + str(Fraction(b))


def parse_arrangement(text: str, source: str = "<arrangement>") -> tuple:
    """(d, [(a, b), ...]) from the arrangement file format.

    First non-comment line: the dimension.  Then one "a1 ... ad | b" per line.
    """
    ctx = _Ctx(source)
    d = None
    rows = []
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if d is None:
            try:
                d = int(s)
            except ValueError:
                ctx.fail(f"first line must be the dimension, got {s!r}", no)
            if d < 1:
                ctx.fail("dimension must be positive", no)
            continue
        a, b = parse_halfspace(s, d, ctx, no)
        if not any(a):
            ctx.fail("hyperplane with zero normal", no)
        rows.append((a, b))
    if d is None:
        ctx.fail("empty file: no dimension line", 1)
    return d, rows


def format_arrangement(d: int, rows: Sequence) -> str:
    return f"{d}\n" + "".join(_fmt_halfspace(a, b) + "\n" for a, b in rows)


def read_arrangement(path: str) -> Arrangement:
    with open(path, encoding="utf-8") as f:
        d, rows = parse_arrangement(f.read(), path)
    return Arrangement.build([HyperplaneH(a, b) for a, b in rows], d=d)


def write_arrangement(path: str, arr: Arrangement) -> None:
    rows = [(P.normal, P.offset) for P in arr.hyperplanes]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_arrangement(arr.d, rows))


def read_body(path: str) -> ConvexBody:
    """A convex polytope in the same syntax: each line a half-space a.x <= b."""
    with open(path, encoding="utf-8") as f:
        d, rows = parse_arrangement(f.read(), path)
    try:
        return ConvexBody(WindowPolytope(tuple(rows)))
    except DegeneratePolytopeError as e:
        raise ConfigError(f"body: {e}", path) from None


# ----------------------------------------------------------------------
# scheme configs
# ----------------------------------------------------------------------

_SCHEME_KEYS = {"name", "field", "module", "G", "H", "charts", "embedding", "window", "cap"}


def _group(m, ctx: _Ctx, label: str) -> GroupSpec:
    if not isinstance(m, _Map):
        ctx.fail(f"{label} must be a mapping", None)
    ctx.check_keys(m, {"dimension", "weights", "brackets", "norm"})
    n = _int(ctx.get(m, "dimension"), f"{label}.dimension", ctx, ctx.line_of(m, "dimension"), 1)
    ws = ctx.get(m, "weights")
    if not isinstance(ws, _Seq) or len(ws) != n:
        ctx.fail(f"{label}.weights must list {n} rationals", ctx.line_of(m, "weights"))
    w = [parse_rational(v, f"{label}.weights", ctx, ctx.line_of(ws, k)) for k, v in enumerate(ws)]
    br = ctx.get(m, "brackets", required=False, default=_Seq())
    triples = []
    for k, t in enumerate(br):
        line = ctx.line_of(br, k)
        if not isinstance(t, list) or len(t) != 4:
            ctx.fail(f"{label}.brackets entries are [i, j, k, coefficient]", line)
        i, j, kk = (_int(x, f"{label}.brackets index", ctx, line, 0) for x in t[:3])
        triples.append((i, j, kk, parse_rational(t[3], f"{label}.brackets coefficient", ctx, line)))
    norm = ctx.get(m, "norm", required=False, default="weighted-max")
    try:
        return GroupSpec(n, tuple(w), tuple(triples), norm)
    except ValueError as e:
        ctx.fail(f"{label}: {e}", m.line)


def scheme_from_mapping(m: _Map, source: str = "<scheme>"):
    from .scheme import SchemeSpec
    ctx = _Ctx(source)
    ctx.check_keys(m, _SCHEME_KEYS)
    name = str(ctx.get(m, "name"))
    fm = ctx.get(m, "field")
    if not isinstance(fm, _Map) or "D" not in fm:
        ctx.fail("field must be a mapping with key D (one radicand or a list)", ctx.line_of(m, "field"))
    ctx.check_keys(fm, {"D"})
    D = fm["D"]
    gens = list(D) if isinstance(D, list) else [D]
    gens = [_int(g, "field.D", ctx, ctx.line_of(fm, "D"), 2) for g in gens]
    try:
        K = Field(tuple(gens))
    except ValueError as e:
        ctx.fail(f"field: {e}", ctx.line_of(fm, "D"))
    basis = ctx.get(m, "module")
    if not isinstance(basis, _Seq) or not basis:
        ctx.fail("module must list basis elements", ctx.line_of(m, "module"))
    elems = []
    for k, b in enumerate(basis):
        try:
            elems.append(parse_field_element(b if isinstance(b, str) else str(parse_rational(
                b, "module", ctx, ctx.line_of(basis, k))), K))
        except ValueError as e:
            ctx.fail(f"module: {e}", ctx.line_of(basis, k))
    try:
        M = Module(K, elems)
    except ValueError as e:
        ctx.fail(f"module: {e}", ctx.line_of(m, "module"))
    g_spec = _group(ctx.get(m, "G"), ctx, "G")
    h_spec = _group(ctx.get(m, "H"), ctx, "H")
    ch = ctx.get(m, "charts", required=False, default=_Map())
    charts = {}
    for side, spec in (("G", g_spec), ("H", h_spec)):
        cname = ch.get(side, "exp") if isinstance(ch, dict) else "exp"
        if cname not in CHARTS:
            ctx.fail(f"unknown chart {cname!r} (known: {', '.join(sorted(CHARTS))})", ctx.line_of(ch, side))
        try:
            charts[side] = CHARTS[cname](spec)
        except ValueError as e:
            ctx.fail(f"chart {cname!r}: {e}", ctx.line_of(ch, side))
    emb = ctx.get(m, "embedding")
    if not isinstance(emb, _Seq):
        ctx.fail("embedding must list one entry per H coordinate", ctx.line_of(m, "embedding"))
    pairs = []
    for k, e in enumerate(emb):
        line = ctx.line_of(emb, k)
        if not isinstance(e, _Map):
            ctx.fail("embedding entries are {source: i, conjugate: [radicands]}", line)
        ctx.check_keys(e, {"source", "conjugate"})
        src = _int(ctx.get(e, "source"), "embedding.source", ctx, line, 0)
        flips = ctx.get(e, "conjugate")
        flips = list(flips) if isinstance(flips, list) else [flips]
        try:
            mask = K.conj_mask(flips)
        except ValueError:
            ctx.fail(f"embedding.conjugate: {flips} are not generators of the field", line)
        pairs.append((src, mask))
    ws = ctx.get(m, "window")
    if not isinstance(ws, _Seq) or not ws:
        ctx.fail("window must list half-spaces \"a1 ... ad | b\"", ctx.line_of(m, "window"))
    hs = [parse_halfspace(t, h_spec.n, ctx, ctx.line_of(ws, k)) for k, t in enumerate(ws)]
    try:
        W = WindowPolytope(tuple(hs))
    except DegeneratePolytopeError as e:
        ctx.fail(f"window: {e}", ctx.line_of(m, "window"))
    cap = _int(ctx.get(m, "cap", required=False, default=50_000_000), "cap", ctx, ctx.line_of(m, "cap"), 1)
    try:
        return SchemeSpec(name, K, M, g_spec, h_spec, charts["G"], charts["H"], pairs, W, cap=cap)
    except ValueError as e:
        ctx.fail(f"scheme: {e}", m.line)


def loads_scheme(text: str, source: str = "<string>"):
    return scheme_from_mapping(_load_yaml(text, source), source)


def load_scheme(path: str):
    with open(path, encoding="utf-8") as f:
        return loads_scheme(f.read(), path)


# ----------------------------------------------------------------------
# experiment configs
# ----------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    scheme: str
    r_grid: list = field(default_factory=list)
    sample_radius: list = field(default_factory=list)     # R_sample schedule
    cap: int = 20_000
    seed: int = 0
    out: str = "."

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.r_grid, self.r_grid[1:])):
            raise ConfigError("r_grid must be strictly increasing")
        if any(r <= 0 for r in self.r_grid):
            raise ConfigError("r_grid entries must be positive")
        if any(b <= a for a, b in zip(self.sample_radius, self.sample_radius[1:])):
            raise ConfigError("sample_radius schedule must be strictly increasing")
        if self.cap <= 0:
            raise ConfigError("cap must be positive")


def _rational_list(v, what, ctx, line) -> list:
    if isinstance(v, str) and "," in v:
        v = [t for t in v.split(",") if t.strip()]
    if not isinstance(v, list):
        v = [v]
    return [parse_rational(x, what, ctx, line) for x in v]


def load_experiment(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        m = _load_yaml(f.read(), path)
    ctx = _Ctx(path)
    ctx.check_keys(m, {"scheme", "r_grid", "sample_radius", "cap", "seed", "out"})
    base = os.path.dirname(os.path.abspath(path))
    scheme = ctx.get(m, "scheme")
    if not isinstance(scheme, str):
        ctx.fail("scheme must be a file path", ctx.line_of(m, "scheme"))
    if not os.path.isabs(scheme):
        scheme = os.path.join(base, scheme)
    kw = {"scheme": scheme}
    if "r_grid" in m:
        kw["r_grid"] = _rational_list(m["r_grid"], "r_grid", ctx, ctx.line_of(m, "r_grid"))
    if "sample_radius" in m:
        kw["sample_radius"] = _rational_list(m["sample_radius"], "sample_radius", ctx,
                                             ctx.line_of(m, "sample_radius"))
    if "cap" in m:
        kw["cap"] = _int(m["cap"], "cap", ctx, ctx.line_of(m, "cap"), 1)
    if "seed" in m:
        kw["seed"] = _int(m["seed"], "seed", ctx, ctx.line_of(m, "seed"), 0)
    if "out" in m:
        out = str(m["out"])
        kw["out"] = out if os.path.isabs(out) else os.path.join(base, out)
    try:
        return ExperimentConfig(**kw)
    except ConfigError as e:
        raise ConfigError(str(e).split(": ", 1)[1], path, m.line) from None


# ----------------------------------------------------------------------
# versioned CSV
# ----------------------------------------------------------------------

def decimal(x, digits: int = 12) -> str:
    """Presentation-only decimal rendering."""
    return format(float(x), f".{digits}g")


def write_csv(path: str | None, kind: str, header: Sequence[str], rows: Sequence[Sequence],
              footer: Sequence[str] = ()) -> str:
    """Write (or just render, when path is None) a CSV with a schema line and footer comments."""
    buf = _io.StringIO()
    buf.write(f"{_CSV_MAGIC} v{CSV_VERSION} kind={kind}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    for line in footer:
        buf.write(f"# {line}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


def read_csv(path: str) -> tuple:
    """(kind, header, rows, footer); rejects files without a known schema line."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith(_CSV_MAGIC):
        raise SchemaVersionError(f"{path}: missing schema line")
    parts = lines[0][len(_CSV_MAGIC):].split()
    if not parts or parts[0] != f"v{CSV_VERSION}":
        raise SchemaVersionError(f"{path}: unknown schema version {parts[0] if parts else '?'}")
    kind = next((p[5:] for p in parts[1:] if p.startswith("kind=")), "")
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    footer = [ln[2:] for ln in lines[1:] if ln.startswith("#")]
    rows = list(csv.reader(body))
    if not rows:
        raise SchemaVersionError(f"{path}: no header row")
    return kind, rows[0], rows[1:], footer
