from fractions import Fraction

import numpy as np
import pytest

from nilcps.group import bch_multiply, inverse
from nilcps.io import ConfigError, loads_scheme
from nilcps.scheme import (check_flc, density_certificate, density_cover, displacements, model_set,
                           model_set_batch, slab, slab_batch, slab_of, star_map, window_shift_membership,
                           ww_inverse_contains)

OLD_PLANAR = """\
name: old-planar
field: {D: [2, 3]}
module: ["1", "sqrt2", "sqrt3"]
G: {dimension: 1, weights: [1]}
H: {dimension: 2, weights: [1, 1]}
embedding:
  - {source: 0, conjugate: [2]}
  - {source: 0, conjugate: [3]}
window: ["1 0 | 5/7", "0 1 | 5/7", "-1 0 | 4/7", "0 -1 | 4/7"]
"""


@pytest.mark.parametrize("name", ["fibonacci", "silver-1x1", "planar-1x2", "hxh"])
def test_bundled_schemes_are_dense(schemes, name):
    s = schemes(name)
    assert density_certificate(s) == "dense"


def test_non_dense_module_rejected():
    # Z + Z sqrt2 + Z sqrt3 maps to a non-dense subgroup of R^2 under these conjugations
    with pytest.raises(ConfigError, match="non-dense"):
        loads_scheme(OLD_PLANAR)


def test_density_cover_grows(schemes):
    s = schemes("planar-1x2")
    assert density_cover(s, 1024, 0.1) < density_cover(s, 16384, 0.1) == 1.0


def test_fibonacci_model_set(schemes):
    s = schemes("fibonacci")
    pts = model_set(s, 50)
    g = sorted(float(p[0]) for p in pts)
    gaps = {round(b - a, 9) for a, b in zip(g, g[1:])}
    assert len(gaps) == 2                    # two tile lengths
    assert abs(max(gaps) / min(gaps) - (1 + 5 ** 0.5) / 2) < 1e-9
    for p in pts[:20]:
        assert s.window.contains(star_map(s, p), strict=True)


def test_model_set_is_sorted_and_deterministic(schemes):
    s = schemes("silver-1x1")
    a, b = model_set_batch(s, 40), model_set_batch(s, 40)
    assert np.array_equal(a.coeffs, b.coeffs)
    keys = [tuple(c.reshape(-1)) for c in a.coeffs]
    assert keys == sorted(keys)


def test_window_shift_lemma(schemes):
    # mu lambda in Lambda  iff  tau(lambda) in tau(mu)^-1 open(W)
    s = schemes("hxh")
    lam = model_set(s, Fraction(3, 2))
    for x in lam[:6]:
        for y in lam[:6]:
            mu = bch_multiply(s.g_spec, y, inverse(x))
            assert window_shift_membership(s, star_map(s, mu), x)


def test_slab_and_displacements(schemes):
    s = schemes("silver-1x1")
    r = 8
    S = slab(s, r)
    zero = tuple(Fraction(0) for _ in range(s.h_spec.n))
    assert zero in S
    for mu in S:
        assert ww_inverse_contains(s, mu)
    lam = model_set(s, 10)[3]
    ins, outs = slab_of(s, lam, r)
    assert len(ins) + len(outs) == len(S)
    assert len(displacements(s, lam, r)) == len(ins)
    assert len(slab_batch(s, r, interior=True)) <= len(S)


def test_flc_saturates_small(schemes):
    res = check_flc(schemes("silver-1x1"), 256, 8)
    assert res.saturated and res.count == 5
