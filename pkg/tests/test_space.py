from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import increment, words
from vershik_lab import examples
from vershik_lab.space import (OUTSIDE, UNRESOLVED, ClopenSet, OutsideDomain, Point, Resolved,
                               apply, check_partial_homeo, format_word, identity_map,
                               image_clopen, parse_word, pullback_union_max, table_map)

SPACE = examples.binary_space(8)
LEVEL = 4


def cell_sets(level=LEVEL):
    return st.sets(st.sampled_from(words(level)))


def test_word_text_round_trip():
    assert format_word(()) == "*"
    assert parse_word("*") == ()
    assert parse_word(format_word(("t1", "t", "p"))) == ("t1", "t", "p")
    assert parse_word("1.0.1") == (1, 0, 1)


def test_clopen_canonical_merges_siblings():
    A = ClopenSet(SPACE, [(0, 0), (0, 1), (1,)])
    assert A.is_full()
    assert ClopenSet(SPACE, [(0, 1, 1), (0, 1)]).cells == frozenset([(0, 1)])


@given(cell_sets(), cell_sets())
def test_boolean_algebra_matches_cell_sets(a, b):
    A, B = ClopenSet(SPACE, a), ClopenSet(SPACE, b)
    assert (A | B).at_level(LEVEL) == a | b
    assert (A & B).at_level(LEVEL) == a & b
    assert (A - B).at_level(LEVEL) == a - b
    assert A.complement().at_level(LEVEL) == set(words(LEVEL)) - a
    assert A.issubset(B) == (a <= b)
    assert A.isdisjoint(B) == (not a & b)


@given(cell_sets())
def test_canonical_form_is_unique(a):
    A = ClopenSet(SPACE, a)
    assert ClopenSet(SPACE, A.at_level(LEVEL + 2)) == A


def test_apply_odometer_on_zero_point():
    phi = examples.odometer_system(depth_bound=8).phi
    x = Point(SPACE, (), (0,))
    assert apply(phi, x, 3).word(3) == (1, 0, 0)


def test_apply_identity():
    x = Point(SPACE, (1, 0), (1, 1, 0))
    assert apply(identity_map(SPACE), x, 6).word(6) == x.word(6)


def test_apply_outside_domain():
    phi = examples.odometer_system(depth_bound=8).phi
    with pytest.raises(OutsideDomain):
        apply(phi, Point(SPACE, (), (1,)))


def test_nonsemisat_phi1_singleton():
    N = examples.nonsemisat_nested()
    x = examples.ns_point(N.space, 2, 1)
    assert examples.ns_decode_point(apply(N.get(1), x)) == (1, 2)


@given(st.integers(-40, 40), st.integers(1, 6), st.integers(0, 3))
def test_translation_agrees_with_rational_arithmetic(num, n, den_exp):
    r = Fraction(num, 2 * den_exp + 1)
    phi = examples.translation_map(SPACE, n)
    x = examples.from_rational(SPACE, r)
    assert examples.to_rational(apply(phi, x)) == r + n


def test_image_of_cylinder_under_odometer():
    phi = examples.odometer_system(depth_bound=8).phi
    assert image_clopen(phi, ClopenSet(SPACE, [(0,)])) == ClopenSet(SPACE, [(1,)])
    assert image_clopen(phi, ClopenSet.empty(SPACE)).is_empty()


def test_image_by_brute_force_on_depth_two_cells():
    # at the depth bound the X_max cell 1^8 is dropped, so its image 0^8 is missing
    phi = examples.odometer_system(depth_bound=8).phi
    for a in [{(0, 0)}, {(0, 1), (1, 0)}, {(1, 0), (1, 1)}, set(words(2))]:
        got = image_clopen(phi, ClopenSet(SPACE, a)).at_level(8)
        assert got == {increment(w) for w in words(8) if w[:2] in a and any(b == 0 for b in w)}


def test_pullback_with_xmax():
    S = examples.odometer_system(depth_bound=8)
    Z = pullback_union_max(S.phi, ClopenSet(SPACE, [(0,)]), ClopenSet(SPACE, S.xmax_cells(8)))
    assert Z == ClopenSet(SPACE, [(1,)])
    full = pullback_union_max(S.phi, ClopenSet.full(SPACE), ClopenSet(SPACE, S.xmax_cells(8)))
    assert full.is_full()


def test_pullback_with_xmax_at_zero():
    S = examples.odometer_system(Point(SPACE, (), (0,)), depth_bound=8)
    xmax = ClopenSet(SPACE, S.xmax_cells(8))
    Z = pullback_union_max(S.phi, ClopenSet(SPACE, [(1,)]), xmax)
    assert Z == ClopenSet(SPACE, [(0,)])
    assert xmax.issubset(Z)


def test_table_map_markers():
    space = examples.binary_space(2)
    phi = table_map(space, {1: {(0,): Resolved((1,)), (1,): UNRESOLVED},
                            2: {(1, 0): Resolved((0, 1)), (1, 1): UNRESOLVED}})
    assert phi.cell_image((0,)) == Resolved((1,))
    assert phi.cell_image((1,)) is UNRESOLVED
    assert phi.cell_image((0, 0)) is OUTSIDE
    assert phi.xmax_cells(2) == frozenset([(1, 1)])
    assert phi.inverse_cell_image((1,)) == Resolved((0,))


@pytest.mark.parametrize("name", ["odometer_system", "nonsemisat_bratteli", "broken_system"])
def test_builtin_maps_are_partial_homeos(name):
    S = examples.build(name, depth_bound=8)
    assert check_partial_homeo(S.phi, 7) == []
