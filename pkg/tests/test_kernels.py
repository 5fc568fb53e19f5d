import json
import os
import subprocess
import sys

import pytest

SRC = os.path.join(os.path.dirname(__file__), "..", "src")

PROBE = r"""
import json, random, sys
sys.path.insert(0, sys.argv[1])
from nilcps import kernels
from nilcps.cli import resolve_scheme_path
from nilcps.io import load_scheme
from nilcps.complexity import patch_census, upper_bound_regions, check_lemma_equiv
from nilcps.scheme import slab_batch
out = {"backend": kernels.BACKEND}
hxh = load_scheme(resolve_scheme_path("hxh"))
silver = load_scheme(resolve_scheme_path("silver-1x1"))
planar = load_scheme(resolve_scheme_path("planar-1x2"))
out["slab"] = [len(slab_batch(hxh, r)) for r in (2, 3)]
out["census"] = [patch_census(hxh, 2, 16).count, patch_census(hxh, 2, 16, "generic").count,
                 patch_census(silver, 16, 512).count, patch_census(planar, 8, 4096).count]
out["upper"] = [upper_bound_regions(hxh, 2), upper_bound_regions(silver, 16)]
eq = check_lemma_equiv(hxh, 2, 8)
out["equiv"] = [eq.points, eq.classes]
print(json.dumps(out))
"""


def run(backend):
    env = dict(os.environ, NILCPS_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", PROBE, SRC], env=env, capture_output=True, text=True,
                         timeout=900)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


def test_backends_agree():
    pytest.importorskip("numba")
    a, b = run("numba"), run("numpy")
    assert a.pop("backend") == "numba" and b.pop("backend") == "numpy"
    assert a == b
