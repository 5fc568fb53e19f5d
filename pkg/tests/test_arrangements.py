import os
import random
from fractions import Fraction

import pytest
from _gen import random_arrangement, random_box

from nilcps.arrangements import (Arrangement, ArrangementCapError, ConvexBody, beck_constant,
                                 beck_family_check, characteristic_polynomial_wrt_B, check_beck_bounds,
                                 count_regions_in_B, evaluate_polynomial, flats_in_B, incidence_profile,
                                 schlafli_bound, vertices_in_B)
from nilcps.cli import grid_family, pencil_family
from nilcps.group import HyperplaneH
from nilcps.io import read_arrangement, read_body


def fixture(arrangement_dir, name):
    return (read_arrangement(os.path.join(arrangement_dir, name + ".txt")),
            read_body(os.path.join(arrangement_dir, "box.txt")))


@pytest.mark.parametrize("name,regions", [("three-lines", 7), ("empty", 1), ("pencil", 10)])
def test_fixtures(arrangement_dir, name, regions):
    arr, B = fixture(arrangement_dir, name)
    assert count_regions_in_B(arr, B) == regions
    chi = characteristic_polynomial_wrt_B(arr, B)
    assert (-1) ** B.d * evaluate_polynomial(chi, -1) == regions


def test_schlafli_values():
    assert [schlafli_bound(n, 2) for n in range(5)] == [1, 2, 4, 7, 11]
    assert schlafli_bound(4, 3) == 15
    assert schlafli_bound(2, 5) == 4


@pytest.mark.parametrize("d", [1, 2, 3])
def test_oracle_small(d):
    rng = random.Random(100 + d)
    for _ in range(15):
        arr = random_arrangement(rng, d, rng.randint(1, 6))
        B = random_box(rng, d)
        r = count_regions_in_B(arr, B)
        assert r == (-1) ** d * evaluate_polynomial(characteristic_polynomial_wrt_B(arr, B), -1)
        assert r <= schlafli_bound(len(arr), d)


@pytest.mark.parametrize("d", [2, 3])
def test_fast_matches_recursive(d):
    rng = random.Random(5 * d)
    for _ in range(6):
        arr = random_arrangement(rng, d, rng.randint(13, 22))
        B = random_box(rng, d, 5)
        assert count_regions_in_B(arr, B, "fast") == count_regions_in_B(arr, B, "recursive")


def test_affine_invariance():
    rng = random.Random(3)
    M = [[Fraction(2), Fraction(1), Fraction(0)], [Fraction(0), Fraction(1), Fraction(-1)],
         [Fraction(1), Fraction(0), Fraction(3)]]
    t = [Fraction(1, 2), Fraction(-3), Fraction(5, 7)]
    for _ in range(5):
        arr = random_arrangement(rng, 3, 7)
        B = random_box(rng, 3)
        assert count_regions_in_B(arr, B) == count_regions_in_B(arr.affine_image(M, t), B.affine_image(M, t))


def test_stanley_signs_generic():
    # lines in general position inside a big box: coefficients alternate in sign
    hs = [HyperplaneH((Fraction(1), Fraction(k)), Fraction(k * k)) for k in range(5)]
    arr = Arrangement.build(hs, 2)
    B = ConvexBody.box([-200, -200], [200, 200])
    chi = characteristic_polynomial_wrt_B(arr, B)
    for k, c in enumerate(chi):
        assert c == 0 or (-1) ** (2 - k) * c > 0
    assert flats_in_B(arr, B) == {0: 10, 1: 5, 2: 1}


def test_cap_is_enforced():
    rng = random.Random(1)
    arr = random_arrangement(rng, 2, 25)
    with pytest.raises(ArrangementCapError):
        characteristic_polynomial_wrt_B(arr, ConvexBody.box([-9, -9], [9, 9]), cap=20)


def test_incidences():
    rng = random.Random(11)
    for _ in range(30):
        arr = random_arrangement(rng, 2, rng.randint(3, 20), degenerate=0.5)
        prof = incidence_profile(arr)
        n = len(arr)
        assert prof.pair_count() <= n * (n - 1) // 2
        assert check_beck_bounds(prof).ok
    # pencil: one point on every line
    arr, B = pencil_family(5)
    prof = incidence_profile(arr, B)
    assert [a for _, a in prof.vertices] == [10]


def test_vertices_closed_body():
    hs = [HyperplaneH((Fraction(1), Fraction(0)), Fraction(1)), HyperplaneH((Fraction(0), Fraction(1)), Fraction(1))]
    arr = Arrangement.build(hs, 2)
    assert len(vertices_in_B(arr, ConvexBody.box([0, 0], [1, 1]))) == 1


def test_beck_families():
    small = beck_family_check(*grid_family(6))
    assert small.vertex_count == 36 and not small.certified and small.violated
    pen = beck_family_check(*pencil_family(6))
    assert not pen.certified and "dual Beck" in pen.violated[0]
    assert beck_constant(2) == Fraction(1, 8380416)
    assert 0 < beck_constant(3) < beck_constant(2)
