import os
from fractions import Fraction

import pytest

from nilcps.io import (ConfigError, SchemaVersionError, format_arrangement, load_experiment, loads_scheme,
                       parse_arrangement, parse_rational, read_arrangement, read_csv, write_arrangement,
                       write_csv)

SILVER = """\
name: silver-1x1
field: {D: 2}
module: ["1", "sqrt2"]
G: {dimension: 1, weights: [1]}
H: {dimension: 1, weights: [1]}
embedding:
  - {source: 0, conjugate: [2]}
window:
  - "1 | 4/7"
  - "-1 | 3/7"
"""


def test_scheme_text_loads():
    s = loads_scheme(SILVER)
    assert s.name == "silver-1x1" and s.density == "dense"


def test_parse_rational():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational(5) == 5
    for bad in (0.5, True, "x/2"):
        with pytest.raises(ConfigError):
            parse_rational(bad)


@pytest.mark.parametrize("old,new,line", [
    ('  - "-1 | 3/7"', '  - "-1 | 3/7 | 1"', 10),     # malformed half-space
    ('  - "-1 | 3/7"', '  - "1 | -3/7"', 9),           # empty interior: 1 < x < -3/7
    ("H: {dimension: 1, weights: [1]}", "H: {dimension: 1, weights: [1], colour: 3}", 5),
    ("field: {D: 2}", "field: {D: 4}", 2),             # 4 is not squarefree
])
def test_line_precise_diagnostics(old, new, line):
    text = SILVER.replace(old, new)
    with pytest.raises(ConfigError) as e:
        loads_scheme(text, "cfg.yaml")
    assert e.value.source == "cfg.yaml"
    assert e.value.line is not None and abs(e.value.line - line) <= 1, str(e.value)


def test_duplicate_keys_rejected():
    with pytest.raises(ConfigError):
        loads_scheme(SILVER + "name: again\n")


def test_experiment_config(tmp_path):
    (tmp_path / "s.yaml").write_text(SILVER)
    (tmp_path / "e.yaml").write_text("scheme: s.yaml\nr_grid: [1, 3/2, 2]\nseed: 4\n")
    cfg = load_experiment(str(tmp_path / "e.yaml"))
    assert cfg.r_grid == [1, Fraction(3, 2), 2] and cfg.seed == 4
    assert os.path.samefile(cfg.scheme, tmp_path / "s.yaml")
    (tmp_path / "bad.yaml").write_text("scheme: s.yaml\nr_grid: [2, 1]\n")
    with pytest.raises(ConfigError):
        load_experiment(str(tmp_path / "bad.yaml"))
    (tmp_path / "bad2.yaml").write_text("scheme: s.yaml\ncap: 0\n")
    with pytest.raises(ConfigError):
        load_experiment(str(tmp_path / "bad2.yaml"))


def test_arrangement_round_trip(tmp_path, arrangement_dir):
    for name in ("three-lines", "empty", "pencil", "box"):
        arr = read_arrangement(os.path.join(arrangement_dir, name + ".txt"))
        out = tmp_path / (name + ".txt")
        write_arrangement(str(out), arr)
        text = out.read_text()
        d, rows = parse_arrangement(text)
        assert format_arrangement(d, rows) == text
        write_arrangement(str(out), read_arrangement(str(out)))
        assert out.read_text() == text


def test_arrangement_parse_errors():
    with pytest.raises(ConfigError) as e:
        parse_arrangement("2\n1 0 | 1\n1 | 2\n", "a.txt")
    assert e.value.line == 3
    with pytest.raises(ConfigError):
        parse_arrangement("2\n0 0 | 1\n")
    with pytest.raises(ConfigError):
        parse_arrangement("# nothing\n")


def test_csv_versioning(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(str(p), "census", ["r", "p"], [[1, 2], [2, None]], ["note"])
    kind, header, rows, footer = read_csv(str(p))
    assert kind == "census" and header == ["r", "p"] and rows == [["1", "2"], ["2", ""]]
    assert footer == ["note"]
    p.write_text(p.read_text().replace("v1", "v9", 1))
    with pytest.raises(SchemaVersionError):
        read_csv(str(p))
    p.write_text("r,p\n1,2\n")
    with pytest.raises(SchemaVersionError):
        read_csv(str(p))
