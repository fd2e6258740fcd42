from fractions import Fraction

import pytest

from vershik_lab import examples, nested, versik
from vershik_lab.examples import dh_point, ones_then_zeros
from vershik_lab.nested import (Admits, ConjugacyWitness, ContinuousUpTo, Discontinuity,
                                FailsWithWitness, Found, Inequivalent, LemmaSatisfied,
                                LemmaViolations, NestedSequence, NotFound)
from vershik_lab.space import ClopenSet, Point, apply, identity_map


def k_of(x):
    """Offset k with x = x_k = 0^inf + k."""
    return examples.to_rational(x)


def test_removed_point_sets():
    assert examples.dh_excluded(1) == [-2, -1, 0]
    assert examples.dh_excluded(2) == [-3, 0]
    assert examples.dh_excluded(5) == [-6, -4, -3, -2, 0]


def test_removed_point_nest_is_nested(dh):
    assert nested.validate_nested(dh, depth=6) == []


def test_identity_must_be_phi_zero(dh):
    space = dh.space
    N = NestedSequence(space, {0: examples.translation_map(space, 1), 1: identity_map(space)})
    got = nested.validate_nested(N, depth=3, window=1)
    assert any(v.n == 0 and v.m == 0 for v in got)


def test_broken_nest_first_violation():
    got = nested.validate_nested(examples.broken_nest(), depth=4)
    assert (got[0].n, got[0].m) == (1, 1)


def test_extreme_sets_of_removed_point_nest(dh):
    L = 10
    assert dh.xmax_cells(L) == frozenset([dh_point(dh, 0).word(L)])
    assert dh.xmin_cells(L) == frozenset([dh_point(dh, -1).word(L)])


def test_phi_of_x_minus_one(dh):
    y, k = nested.phi_point(dh, dh_point(dh, -1))
    assert k == 2 and k_of(y) == 1


def test_phi_on_dom_phi1(dh):
    for n in range(2, 8):
        x = ones_then_zeros(dh.space, n)
        y, k = nested.phi_point(dh, x)
        assert k == 1 and y == apply(dh.get(1), x)
    x = dh_point(dh, 5)
    assert nested.phi(dh, x) == dh_point(dh, 6)


def test_maximal_point_has_no_phi(dh):
    with pytest.raises(nested.MaximalPoint):
        nested.phi_point(dh, dh_point(dh, 0))


def test_cocycle_values(dh):
    for n in range(2, 8):
        x = ones_then_zeros(dh.space, n)
        assert nested.counting_cocycle_nested(dh, x, apply(dh.get(2), x), 4) == 2
    x = dh_point(dh, -1)
    assert nested.counting_cocycle_nested(dh, x, apply(dh.get(2), x), 4) == 1
    assert nested.counting_cocycle_nested(dh, x, x, 4) == 0


def test_lemma_on_restriction(dh):
    found = nested.check_afnest(dh, ClopenSet(dh.space, [(1, 1, 1)]),
                                ClopenSet(dh.space, [(0, 0, 0)]))
    got = nested.check_lemma_conditions(found.restricted, depth=5)
    assert isinstance(got, LemmaSatisfied) and got.M == found.M


def test_lemma_fails_on_full_nest(dh):
    got = nested.check_lemma_conditions(dh)
    assert isinstance(got, LemmaViolations) and 3 in got.conditions()


def test_lemma_on_empty_nest(dh):
    assert nested.check_lemma_conditions(NestedSequence(dh.space, {})) == LemmaSatisfied(1)


def test_afnest_found_at_three(dh):
    got = nested.check_afnest(dh, ClopenSet(dh.space, [(1, 1, 1)]),
                              ClopenSet(dh.space, [(0, 0, 0)]))
    assert isinstance(got, Found) and got.level == 3
    assert got.Y == ClopenSet(dh.space, [(1, 1, 1)]) and got.Z == ClopenSet(dh.space, [(0, 0, 0)])


def test_afnest_domains_are_cylinders_missing_removed_points(dh):
    got = nested.check_afnest(dh, ClopenSet(dh.space, [(1, 1, 1)]),
                              ClopenSet(dh.space, [(0, 0, 0)]))
    for n, D in got.domains.items():
        for c in D:
            assert not any(from_k.word(3) == c for from_k in
                           (dh_point(dh, k) for k in examples.dh_excluded(n)))
            img = examples.value_word(examples.word_value(c) + n, 3)
            assert c != (0, 0, 0) and img != (1, 1, 1)


def test_afnest_whole_space_is_degenerate(dh):
    got = nested.check_afnest(dh, ClopenSet.full(dh.space), ClopenSet.full(dh.space))
    assert got and got.level == 1


def test_full_odometer_has_no_af_restriction():
    N = examples.full_odometer_nest()
    got = nested.check_afnest(N, ClopenSet.full(N.space), ClopenSet.full(N.space))
    assert isinstance(got, NotFound) and len(got.reasons) == 4


def test_discontinuity_witness(dh):
    got = nested.continuity_diagnostic(dh)
    assert isinstance(got, Discontinuity)
    w = got.witness
    assert w.values == (2, 1) and w.n == 2
    assert dh_point(dh, -1).word(w.level) == w.cell
    assert all(ones_then_zeros(dh.space, n).word(w.level) == w.cell for n in range(w.level, 12))
    assert nested.replay_discontinuity(dh, w)


def test_odometer_powers_are_continuous():
    assert isinstance(nested.continuity_diagnostic(examples.odometer_powers(), depth=8),
                      ContinuousUpTo)


def test_single_map_is_continuous(odometer):
    N = NestedSequence(odometer.space, {1: odometer.phi})
    assert isinstance(nested.continuity_diagnostic(N), ContinuousUpTo)


def test_two_limit_semisaturation_witness():
    N = examples.nonsemisat_nested()
    got = nested.semisaturation_check(N)
    assert isinstance(got, FailsWithWitness)
    assert got.separation_level == 1
    assert sorted(got.image_cells) == [("t1",), ("t2",)]
    # both chains descend into the cell of (0,1)
    limit = examples.ns_point(N.space, 0, 1)
    for chain in got.chains:
        assert all(c is None or c[:L] == limit.word(L)
                   for L, c in enumerate(chain, start=1))


def test_two_limit_phi2_on_limit_point():
    N = examples.build("nonsemisat_nested")
    x = examples.ns_point(N.space, 0, 1)
    assert examples.ns_decode_point(apply(N.get(2), x)) == (0, 2)


def test_removed_point_nest_admits(dh):
    assert isinstance(nested.semisaturation_check(dh), Admits)


def test_clopen_domain_admits_trivially():
    space = examples.binary_space(12)
    N = NestedSequence(space, {1: examples.translation_map(space, 1)})
    assert nested.semisaturation_check(N) == Admits({})


def test_self_conjugacy_is_identity(dh):
    got = nested.nested_conjugate_bounded(dh, dh, depth=4)
    assert isinstance(got, ConjugacyWitness)
    assert all(all(c == d for c, d in psi.items()) for psi in got.maps)


def test_shifted_base_point_is_conjugate(dh):
    space = dh.space
    other = examples.dh_nested(base=examples.from_rational(space, Fraction(5)))
    got = nested.nested_conjugate_bounded(dh, other, depth=5)
    assert isinstance(got, ConjugacyWitness)
    assert nested.check_conjugacy_witness(dh, other, got) == []


def test_two_maximal_points_are_inequivalent(dh):
    S = versik.versik_system(examples.two_max_diagram(), 12)
    N = NestedSequence(S.space, {1: S.phi}, rule="power", horizon=8)
    got = nested.nested_conjugate_bounded(dh, N)
    assert isinstance(got, Inequivalent) and "1 versus 2" in got.certificate


def test_relations_agree_on_two_limit_space(two_limits):
    N1 = examples.nonsemisat_nested(horizon=12, depth_bound=12)
    N2 = NestedSequence(two_limits.space, {1: two_limits.phi}, rule="power", horizon=20)
    points = [examples.ns_point(two_limits.space, m, i) for m in range(9) for i in (1, 2)]
    same, bad = nested.relation_mismatch(N1, N2, points, 20, 8)
    assert same and bad == []


def test_relation_mismatch_detects_difference(dh):
    points = [dh_point(dh, k) for k in range(-3, 4)]
    shorter = NestedSequence(dh.space, {1: dh.get(1)})
    same, bad = nested.relation_mismatch(dh, shorter, points, 4, 3)
    assert not same
