from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import increment, words
from vershik_lab import bratteli, examples, versik
from vershik_lab.bratteli import Edge, OrderedBratteliDiagram, OrderedDiagram, Stationary
from vershik_lab.space import Point, apply, check_partial_homeo
from vershik_lab.versik import (NEED_DEEPER, NOT_COFINAL, PathPoint, TailMax, TailMin,
                                TailPeriodic, counting_cocycle, enumerate_paths, predecessor,
                                rank_in_fiber, successor, successor_point)

DYADIC = examples.dyadic_diagram(4)
TWO_MAX = examples.two_max_diagram()


def random_path(B, rng, depth):
    paths = enumerate_paths(B, depth)
    return paths[int(rng.integers(len(paths)))]


def test_successor_is_binary_increment_at_depth_3():
    assert successor(DYADIC, (1, 1, 0)) == (0, 0, 1)
    for w in words(3):
        got = successor(DYADIC, w)
        assert (got if got is not NEED_DEEPER else None) == increment(w)


def test_successor_of_minimal_non_maximal_path():
    p = versik.minimal_path(TWO_MAX, "a", 3)
    k = next(n for n in range(1, 4) if not TWO_MAX.edge_level(n).is_max(p[n - 1]))
    nxt = successor(TWO_MAX, p)
    E = TWO_MAX.edge_level(k)
    assert nxt[k - 1] == E.next_in_fiber(p[k - 1])
    assert nxt[k:] == p[k:]
    assert versik.is_minimal(TWO_MAX, nxt[:k - 1])
    assert rank_in_fiber(TWO_MAX, nxt) == 1


def test_all_maximal_needs_deeper():
    assert successor(DYADIC, (1, 1, 1, 1)) is NEED_DEEPER
    for v in TWO_MAX.vertices(4):
        assert successor(TWO_MAX, versik.maximal_path(TWO_MAX, v, 4)) is NEED_DEEPER


def test_predecessor():
    assert predecessor(DYADIC, (0, 0, 1)) == (1, 1, 0)
    assert predecessor(DYADIC, (0, 0, 0)) is NEED_DEEPER


@given(st.integers(0, 10 ** 6))
def test_predecessor_inverts_successor(seed):
    rng = np.random.default_rng(seed)
    B = bratteli.random_diagram(rng, depth=5, max_fiber=3)
    p = random_path(B, rng, 5)
    s = successor(B, p)
    if s is not NEED_DEEPER:
        assert predecessor(B, s) == p


def test_rank_in_fiber_values():
    assert rank_in_fiber(DYADIC, (0, 0, 0)) == 0
    assert rank_in_fiber(DYADIC, (1, 1, 0)) == 3
    assert rank_in_fiber(DYADIC, (1, 1, 1)) == 7


@given(st.integers(0, 10 ** 6))
def test_rank_matches_successor_iteration(seed):
    rng = np.random.default_rng(seed)
    B = bratteli.random_diagram(rng, depth=4, max_fiber=3)
    for v in B.vertices(4):
        p, steps = versik.minimal_path(B, v, 4), 0
        while p is not NEED_DEEPER:
            assert rank_in_fiber(B, p) == steps
            p, steps = successor(B, p), steps + 1
        assert steps == B.path_counts(4)[v]


def test_successor_point_keeps_tail():
    x = PathPoint(DYADIC, (0,), TailMax())
    y = successor_point(x)
    assert y.prefix == (1,) and y.tail == TailMax()


def test_successor_point_from_minimal_point():
    x = PathPoint(TWO_MAX, (), TailMin())
    y = successor_point(x, 3)
    assert rank_in_fiber(TWO_MAX, y.edges(3)) == 1
    assert y.edges(6)[3:] == x.edges(6)[3:]


def test_successor_point_on_maximal_point_raises():
    with pytest.raises(versik.MaximalPoint):
        successor_point(PathPoint(DYADIC, (), TailMax()))


@given(st.integers(-50, 50), st.integers(0, 3))
def test_successor_point_is_odometer(num, k):
    space = versik.path_space(DYADIC, 12)
    r = Fraction(num, 2 * k + 1)
    x = examples.from_rational(space, r)
    if x == Point(space, (), (1,)):
        return
    phi = versik.versik_map(DYADIC, space)
    assert examples.to_rational(apply(phi, x)) == r + 1


def test_counting_cocycle_values():
    x = PathPoint(DYADIC, (0, 0, 0), TailMin())
    y = PathPoint(DYADIC, (1, 1, 0), TailMin())
    assert counting_cocycle(x, y, 3) == 3
    assert counting_cocycle(y, x, 3) == -3
    assert counting_cocycle(x, x, 3) == 0
    assert counting_cocycle(x, PathPoint(DYADIC, (1, 1, 0), TailMax()), 3) is NOT_COFINAL


def test_counting_cocycle_matches_orbit_walk():
    # 000 -> 100 -> 010 -> 110
    walk = [(0, 0, 0)]
    while len(walk) < 4:
        walk.append(successor(DYADIC, walk[-1]))
    assert walk[-1] == (1, 1, 0)


@given(st.integers(0, 10 ** 6))
def test_cocycle_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    B = TWO_MAX
    p, q = random_path(B, rng, 5), random_path(B, rng, 5)
    x, y = PathPoint(B, p, TailMin()), PathPoint(B, q, TailMin())
    a, b = counting_cocycle(x, y, 5), counting_cocycle(y, x, 5)
    if a is NOT_COFINAL:
        assert b is NOT_COFINAL
    else:
        assert a == -b


def test_enumerate_paths_counts():
    assert len(enumerate_paths(DYADIC, 3)) == 8
    assert len(enumerate_paths(TWO_MAX, 1)) == len(TWO_MAX.edge_level(1).edges)
    single = OrderedBratteliDiagram(
        [("o",), ("v",), ("v",)],
        [OrderedDiagram(("o",), ("v",), [Edge("o", "v", 0)]),
         OrderedDiagram(("v",), ("v",), [Edge("v", "v", 0)])], Stationary(1))
    assert len(enumerate_paths(single, 5)) == 1


def test_periodic_tail():
    x = PathPoint(DYADIC, (), TailPeriodic((1, 0)))
    assert x.edges(5) == (1, 0, 1, 0, 1)
    assert x.to_point(versik.path_space(DYADIC, 8)).word(5) == (1, 0, 1, 0, 1)


def test_path_text_round_trip():
    for p in enumerate_paths(TWO_MAX, 3):
        assert versik.parse_path(TWO_MAX, versik.format_path(TWO_MAX, p)) == p
    assert versik.parse_tail("per(1,0)") == TailPeriodic((1, 0))


def test_versik_maps_are_partial_homeos():
    for B in (DYADIC, TWO_MAX):
        S = versik.versik_system(B, 6)
        assert check_partial_homeo(S.phi, 6) == []


def test_covering_from_minimal_cylinder():
    from vershik_lab.pds import Satisfied
    got = versik.check_orbit_cofinality(examples.dyadic_diagram(3), [(0, 0, 0)], depth=3)
    assert isinstance(got, Satisfied) and got.steps == 7
    assert versik.check_orbit_cofinality(examples.dyadic_diagram(3), [()], depth=3).steps == 0
    back = versik.check_orbit_cofinality(examples.dyadic_diagram(3), [(1, 1, 1)], depth=3,
                                         backward=True)
    assert back.steps == 7
