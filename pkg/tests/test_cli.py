import os

import pytest

from nilcps.cli import EXIT_CAP, EXIT_INVALID, EXIT_OK, main
from nilcps.io import read_csv


def run(capsys, *argv):
    code = main(["-q", *argv])
    out, err = capsys.readouterr()
    return code, out, err


def fixture(arrangement_dir, name):
    return os.path.join(arrangement_dir, name + ".txt")


@pytest.mark.parametrize("name,regions", [("three-lines", 7), ("empty", 1), ("pencil", 10)])
def test_regions(capsys, arrangement_dir, name, regions):
    code, out, _ = run(capsys, "regions", fixture(arrangement_dir, name), fixture(arrangement_dir, "box"))
    assert code == EXIT_OK
    assert f"regions: {regions}" in out and "oracle: pass" in out and "(ok)" in out


def test_regions_cap_gives_partial_report(capsys, arrangement_dir):
    code, out, _ = run(capsys, "regions", fixture(arrangement_dir, "pencil"), fixture(arrangement_dir, "box"),
                       "--cap", "3")
    assert code == EXIT_CAP
    assert "regions: 10" in out and "omitted" in out


def test_bad_input_exit_2(capsys, tmp_path, arrangement_dir):
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n1 0 | 1\n1 2 3 | 4\n")
    code, _, err = run(capsys, "regions", str(bad))
    assert code == EXIT_INVALID and "bad.txt:3" in err
    code, _, err = run(capsys, "generate", "--scheme", "no-such-scheme")
    assert code == EXIT_INVALID
    code, _, err = run(capsys, "slab", "--scheme", "hxh", "--r-grid", "3,2")
    assert code == EXIT_INVALID and "increasing" in err


def test_empty_window_is_validation_error(capsys, tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text('name: x\nfield: {D: 5}\nmodule: ["1", "1/2 + 1/2*sqrt5"]\n'
                   'G: {dimension: 1, weights: [1]}\nH: {dimension: 1, weights: [1]}\n'
                   'embedding:\n  - {source: 0, conjugate: [5]}\nwindow: ["1 | 0", "-1 | 0"]\n')
    code, _, err = run(capsys, "generate", "--scheme", str(cfg), "--out", str(tmp_path))
    assert code == EXIT_INVALID and "s.yaml" in err


def test_generate_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        code, _, _ = run(capsys, "generate", "--scheme", "fibonacci", "--sample-radius", "50", "--out", str(d))
        assert code == EXIT_OK
        outs.append((d / "fibonacci-model-set.csv").read_bytes())
    assert outs[0] == outs[1]
    kind, header, rows, footer = read_csv(str(tmp_path / "0" / "fibonacci-model-set.csv"))
    assert kind == "model-set" and len(rows) > 20 and "gaps=2" in footer


def test_complexity_and_fit(capsys, tmp_path):
    code, _, _ = run(capsys, "complexity", "--scheme", "silver-1x1", "--r-grid", "4,8,16,32",
                     "--sample-radius", "1024", "--out", str(tmp_path))
    assert code == EXIT_OK
    path = tmp_path / "silver-1x1-complexity.csv"
    kind, header, rows, footer = read_csv(str(path))
    assert kind == "census" and [r[0] for r in rows] == ["4", "8", "16", "32"]
    assert all(r[header.index("saturated")] == "1" for r in rows)
    assert "predicted_exponent=1" in footer
    code, out, _ = run(capsys, "fit", str(path))
    assert code == EXIT_OK and "slope=" in out


def test_unsaturated_rows_flagged(capsys, tmp_path):
    # R = 2r is far too small to saturate: the row must say so
    code, _, _ = run(capsys, "complexity", "--scheme", "silver-1x1", "--r-grid", "64", "--sample-radius", "65",
                     "--no-bounds", "--out", str(tmp_path))
    kind, header, rows, footer = read_csv(str(tmp_path / "silver-1x1-complexity.csv"))
    assert rows[0][header.index("saturated")] == "0"
    assert any(f.startswith("unsaturated rows") for f in footer)


def test_hxh_predicted_exponent(capsys, tmp_path):
    code, _, _ = run(capsys, "complexity", "--scheme", "hxh", "--r-grid", "3/2", "--sample-radius", "8",
                     "--no-bounds", "--out", str(tmp_path))
    assert code == EXIT_OK
    _, _, rows, footer = read_csv(str(tmp_path / "hxh-sqrt2-complexity.csv"))
    assert "predicted_exponent=12" in footer and rows[0][2] == "1"


def test_budget_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "slab", "--scheme", "hxh", "--r-grid", "2,3,4", "--budget-seconds", "0",
                       "--out", str(tmp_path))
    assert code == EXIT_CAP and "budget" in err
    _, _, rows, footer = read_csv(str(tmp_path / "hxh-sqrt2-slab.csv"))
    assert rows == [] and any(f.startswith("partial") for f in footer)


def test_beck_check(capsys, tmp_path):
    code, _, _ = run(capsys, "beck-check", "--instances", "30", "--grid-m", "101", "--out", str(tmp_path))
    assert code == EXIT_OK
    _, _, rows, _ = read_csv(str(tmp_path / "beck-check.csv"))
    table = {(r[0], r[1]): r for r in rows}
    assert table[("campaign", "violations")][2] == "0"
    assert table[("grid", "vertices")][2] == str(101 ** 2) and table[("grid", "certified")][2] == "1"
    assert table[("pencil", "certified")][2] == "0" and "dual Beck" in table[("pencil", "certified")][3]
