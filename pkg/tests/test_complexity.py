from fractions import Fraction

import pytest

from nilcps.complexity import (InsufficientRadiusError, TranslateStack, check_domain_tiling,
                               check_lemma_equiv, complexity_census, exponent_fit, good_pair_search,
                               lower_bound_regions, patch, patch_census, patch_class_key,
                               upper_bound_regions, window_parameters)
from nilcps.scheme import model_set, model_set_batch


def brute_census(s, r, R):
    """Distinct patch classes straight from the definition (exact displacements)."""
    return len({patch_class_key(s, c, r) for c in model_set_batch(s, R).coeffs})


@pytest.mark.parametrize("name,r,R", [("silver-1x1", 8, 64), ("fibonacci", 5, 40),
                                      ("planar-1x2", 4, 64), ("hxh", Fraction(3, 2), 5)])
def test_census_matches_definition(schemes, name, r, R):
    s = schemes(name)
    for method in ("auto", "generic"):
        assert patch_census(s, r, R, method).count == brute_census(s, r, R)


def test_patch_from_point_list(schemes):
    s = schemes("silver-1x1")
    pts = model_set(s, 60)
    lam = model_set_batch(s, 10).coeffs[2]
    assert patch(s, lam, 6) == patch(s, lam, 6, points=pts, enum_radius=60)
    with pytest.raises(InsufficientRadiusError):
        patch(s, lam, 6, points=pts, enum_radius=8)


@pytest.mark.parametrize("name,r,R", [("silver-1x1", 8, 128), ("planar-1x2", 4, 256),
                                      ("hxh", 2, 8)])
def test_lemma_equiv_and_tiling(schemes, name, r, R):
    s = schemes(name)
    eq = check_lemma_equiv(s, r, R)
    assert eq.points > 0 and eq.partition_mismatches == 0 and eq.set_mismatches == 0
    til = check_domain_tiling(s, r, R)
    assert til.points > 0 and til.not_exactly_one == 0 and til.witness_failures == 0


def test_census_report(schemes):
    s = schemes("fibonacci")
    p, sat = complexity_census(s, 8, 256)
    assert sat and p == brute_census(s, 8, 256)


def test_window_parameters_interval(schemes):
    wp = window_parameters(schemes("silver-1x1"))
    assert wp.c_W == (Fraction(1, 14),) and wp.I_W == Fraction(1, 2) and wp.O_W == Fraction(1, 2)


def test_bound_chain_silver(schemes):
    s = schemes("silver-1x1")
    gp = good_pair_search(s)
    for r in (8, 16, 32):
        p = patch_census(s, r, 2048).count
        lb = lower_bound_regions(s, r, gp)
        assert lb.certified and lb.count <= p <= upper_bound_regions(s, r)


def test_translate_stack_contains_identity(schemes):
    s = schemes("hxh")
    st = TranslateStack.open_slab(s, 2)
    assert st.K == 5                  # open slab at r = 2


def test_exponent_fit_exact_power():
    slope, icpt, rms = exponent_fit([(r, 3 * r ** 2) for r in (1, 2, 4, 8)])
    assert slope == pytest.approx(2) and rms < 1e-12
    with pytest.raises(ValueError):
        exponent_fit([(1, 1), (2, 2)])
