"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import).
Every workload is run once to warm up (JIT compilation, caches), then
timed as the best of --repeat runs.  Results must agree between backends.

    python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
SRC = os.path.join(HERE, "..", "src")

WORKER = r"""
import json, sys, time
sys.path.insert(0, sys.argv[1])
repeat = int(sys.argv[2])
import numpy as np
from fractions import Fraction
from nilcps import kernels
from nilcps.cli import resolve_scheme_path
from nilcps.io import load_scheme
from nilcps.complexity import TranslateStack, patch_census, upper_bound_regions
from nilcps.scheme import slab_batch

hxh = load_scheme(resolve_scheme_path("hxh"))
planar = load_scheme(resolve_scheme_path("planar-1x2"))
stack = TranslateStack.open_slab(hxh, Fraction(5, 2))
rng = np.random.default_rng(0)
T = rng.uniform(-1, 1, size=(200_000, 3))
A = rng.normal(size=(384, 6, 3))
b = rng.uniform(0.5, 1, size=(384, 6))

work = {
    "sign_bits 200k x 384": lambda: sum(int(w).bit_count() for w in kernels.sign_bits(T, A, b, 1e-9)[0].ravel()),
    "hxh census r=5/2 R=64": lambda: patch_census(hxh, Fraction(5, 2), 64, "auto", stack).count,
    "hxh census r=2 R=32 generic": lambda: patch_census(hxh, 2, 32, "generic").count,
    "planar census r=16 R=65536": lambda: patch_census(planar, 16, 65536).count,
    "hxh slab r=6": lambda: len(slab_batch(hxh, 6)),
    "hxh upper bound r=2": lambda: upper_bound_regions(hxh, 2),
}
out = {"backend": kernels.BACKEND, "rows": []}
for name, fn in work.items():
    t0 = time.perf_counter(); val = fn(); warm = time.perf_counter() - t0
    best = min((lambda t: (fn(), time.perf_counter() - t)[1])(time.perf_counter()) for _ in range(repeat))
    out["rows"].append([name, val, warm, best])
print(json.dumps(out))
"""


def run(backend, repeat):
    env = dict(os.environ, NILCPS_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORKER, SRC, str(repeat)], env=env,
                         capture_output=True, text=True)
    if res.returncode:
        sys.exit(f"{backend} worker failed:\n{res.stderr}")
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    nb, npy = run("numba", args.repeat), run("numpy", args.repeat)
    if nb["backend"] != "numba":
        print("numba is not importable; only the numpy backend ran", file=sys.stderr)
    print(f"{'workload':32s} {'result':>9s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'numba 1st':>10s}")
    for (name, v1, w1, b1), (_, v2, _, b2) in zip(nb["rows"], npy["rows"]):
        flag = "" if v1 == v2 else "  RESULTS DIFFER"
        print(f"{name:32s} {v1:>9} {b1:9.3f} {b2:9.3f} {b2 / b1:7.1f}x {w1:10.3f}{flag}")


if __name__ == "__main__":
    main()
