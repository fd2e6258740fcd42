from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from vershik_lab import bratteli, examples, nested, pds, versik
from vershik_lab.space import Point, apply, check_partial_homeo


def test_build_dyadic_depth_three():
    B = examples.build("dyadic_diagram", depth=3)
    assert len(versik.enumerate_paths(B, 3)) == 8


def test_odometer_extremes_with_all_ones_base():
    space = examples.binary_space(8)
    S = examples.build("odometer_system", x=Point(space, (), (1,)), depth_bound=8)
    for L in range(1, 9):
        assert S.xmax_cells(L) == frozenset([(1,) * L])
        assert S.xmin_cells(L) == frozenset([(0,) * L])


def test_odometer_min_is_image_of_max():
    space = examples.binary_space(8)
    x = examples.from_rational(space, Fraction(1, 3))
    S = examples.odometer_system(x, depth_bound=8)
    image = examples.from_rational(space, Fraction(1, 3) + 1)
    assert S.xmin_cells(8) == frozenset([image.word(8)])


def test_two_limit_phi2_limit_point():
    N = examples.build("nonsemisat_nested")
    y = apply(N.get(2), examples.ns_point(N.space, 0, 1))
    assert examples.ns_decode_point(y) == (0, 2)


def test_two_limit_phi1_pairs():
    # odd m keeps i, even m swaps the row
    N = examples.nonsemisat_nested()
    for k in range(1, 5):
        for i in (1, 2):
            x = examples.ns_point(N.space, 2 * k - 1, i)
            assert examples.ns_decode_point(apply(N.get(1), x)) == (2 * k, i)
        x = examples.ns_point(N.space, 2 * k, 1)
        assert examples.ns_decode_point(apply(N.get(1), x)) == (2 * k - 1, 2)
        x = examples.ns_point(N.space, 2 * k, 2)
        assert examples.ns_decode_point(apply(N.get(1), x)) == (2 * k + 1, 1)


def test_two_limit_system_extremes(two_limits):
    L = 6
    top = examples.ns_point(two_limits.space, 0, 2).word(L)
    assert two_limits.xmax_cells(L) == frozenset([top])
    assert examples.ns_word(1, 1, L) in two_limits.xmin_cells(L)


def test_unknown_name():
    with pytest.raises(examples.UnknownName):
        examples.build("no_such_thing")


@given(st.integers(-200, 200), st.integers(0, 20))
def test_rational_round_trip(num, k):
    space = examples.binary_space(16)
    r = Fraction(num, 2 * k + 1)
    assert examples.to_rational(examples.from_rational(space, r)) == r


@given(st.integers(0, 255))
def test_word_value_round_trip(v):
    assert examples.word_value(examples.value_word(v, 8)) == v


@pytest.mark.parametrize("name", sorted(examples.CATALOG))
def test_every_builtin_validates(name):
    kind = examples.KINDS[name]
    if kind == "diagram":
        assert bratteli.validate(examples.build(name)) == []
    elif kind == "system":
        S = examples.build(name, depth_bound=8)
        assert check_partial_homeo(S.phi, 6) == []
    elif kind == "nested":
        N = examples.build(name, depth_bound=10)
        got = nested.validate_nested(N, depth=4)
        assert (got != []) == (name == "broken_nest")
    else:
        assert examples.build(name, depth_bound=6).validate() == []


def test_builtin_systems_have_no_periodic_points():
    for S in examples.builtin_systems(8).values():
        assert pds.detect_periodic(S) is None
