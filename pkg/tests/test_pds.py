import pytest
from hypothesis import given, strategies as st

from conftest import words
from vershik_lab import examples, pds
from vershik_lab.pds import (BratteliSystem, FailedUpTo, PreconditionFailed, Satisfied, Witness,
                             axiom_equivalence_probe, check_axiom_backward, check_axiom_forward,
                             detect_periodic)
from vershik_lab.space import ClopenSet, identity_map, table_space


def modular_cover_steps(cells, level):
    """Least N with {u + n : u in U, 0 <= n <= N} = Z / 2^level."""
    values = {examples.word_value(c) for c in cells}
    size = 1 << level
    for n in range(size):
        if len({(u + k) % size for u in values for k in range(n + 1)}) == size:
            return n
    raise AssertionError("unreachable")


def test_odometer_forward_cylinder(odometer):
    S = odometer
    assert check_axiom_forward(S, ClopenSet(S.space, [(0,)])) == Satisfied(1, 1)
    assert check_axiom_forward(S, S.full()) == Satisfied(0, 1)


def test_odometer_backward_cylinder(odometer):
    S = odometer
    assert check_axiom_backward(S, ClopenSet(S.space, [(1,)])) == Satisfied(1, 1)
    assert check_axiom_backward(S, S.full()).steps == 0


def test_precondition(odometer):
    with pytest.raises(PreconditionFailed):
        check_axiom_forward(odometer, ClopenSet(odometer.space, [(1,)]))


@given(st.sets(st.sampled_from(words(3))))
def test_forward_steps_match_modular_oracle(extra):
    S = examples.odometer_system(depth_bound=8)
    cells = extra | {(0, 0, 0)}
    got = check_axiom_forward(S, ClopenSet(S.space, cells), depth=3)
    assert got.steps == modular_cover_steps(cells, 3)


def test_broken_system_fails_both_ways():
    S = examples.broken_system(depth_bound=8)
    U = S.xmin(2).union(ClopenSet(S.space, [(0, 1)]))
    V = S.xmax(2)
    f = check_axiom_forward(S, U)
    b = check_axiom_backward(S, V)
    assert isinstance(f, FailedUpTo) and isinstance(b, FailedUpTo)
    assert check_axiom_forward(S, U, bound=1000).stalled_at is not None


def test_probe_odometer_agrees(odometer):
    rep = axiom_equivalence_probe(odometer, levels=(1, 2, 3), samples=20)
    assert rep.agree and rep.count() >= 20
    assert all(f and b for _, _, _, f, b in rep.samples)


def test_probe_two_limits_agrees(two_limits):
    rep = axiom_equivalence_probe(two_limits, levels=(1, 2, 3))
    assert rep.agree
    assert all(f and b for _, _, _, f, b in rep.samples)


def test_probe_broken_agrees_on_failure():
    rep = axiom_equivalence_probe(examples.broken_system(8), levels=(2,))
    assert rep.agree
    assert not all(f for _, _, _, f, _ in rep.samples)


def test_full_sets_trivially_agree(odometer):
    assert check_axiom_forward(odometer, odometer.full()) and check_axiom_backward(
        odometer, odometer.full())


def test_no_periodic_points_in_odometer(odometer):
    assert detect_periodic(odometer, depth=8) is None


def test_no_periodic_points_for_removed_point_map(dh):
    assert detect_periodic(BratteliSystem(dh.space, dh.get(1)), depth=8) is None


def test_fixed_point_on_one_cell_space():
    space = table_space([[("a",)]], tail_rules={"a": ("a",)})
    S = BratteliSystem(space, identity_map(space))
    w = detect_periodic(S)
    assert isinstance(w, Witness) and (w.cell, w.period) == (("a",), 1)


def test_fixed_point_mutant():
    w = detect_periodic(examples.fixed_point_system())
    assert w.period == 1 and w.level == 1
    assert "period=1" in pds.describe(w)
