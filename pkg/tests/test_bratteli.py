import itertools

import numpy as np
from hypothesis import given, strategies as st

from vershik_lab import bratteli, examples, kr, versik
from vershik_lab.bratteli import (Edge, OrderedBratteliDiagram, OrderedDiagram, compose,
                                  order_equivalent_bounded, order_isomorphic, replay_witness,
                                  telescope, validate)

DYADIC = examples.dyadic_diagram()
TWO_MAX = examples.two_max_diagram()
E2 = DYADIC.edge_level(2)


def brute_force_isomorphic(D1, D2):
    """Try every source and range bijection; edges are matched fiber by fiber in order."""
    if len(D1.edges) != len(D2.edges):
        return False
    if len(D1.sources) != len(D2.sources) or len(D1.ranges) != len(D2.ranges):
        return False
    for sp in itertools.permutations(D2.sources):
        alpha = dict(zip(D1.sources, sp))
        for rp in itertools.permutations(D2.ranges):
            beta = dict(zip(D1.ranges, rp))
            if all([alpha[D1.edges[a].source] for a in D1.fiber(w)]
                   == [D2.edges[b].source for b in D2.fiber(beta[w])] for w in D1.ranges):
                return True
    return False


@st.composite
def small_levels(draw):
    rng = np.random.default_rng(draw(st.integers(0, 10 ** 6)))
    B = bratteli.random_diagram(rng, depth=2, max_vertices=3, max_fiber=3)
    return B.edge_level(2)


def test_dyadic_is_valid():
    assert validate(DYADIC) == []
    assert validate(TWO_MAX) == []


def test_isolated_source_is_a_surjectivity_violation():
    D = OrderedDiagram(("a", "b"), ("c",), [Edge("a", "c", 0)])
    B = OrderedBratteliDiagram([("o",), ("a", "b"), ("c",)],
                               [OrderedDiagram(("o",), ("a", "b"),
                                               [Edge("o", "a", 0), Edge("o", "b", 0)]), D])
    got = validate(B)
    assert [(v.level, v.invariant) for v in got] == [(2, "surjectivity")]


def test_duplicate_order_is_a_fiber_violation():
    D = OrderedDiagram(("o",), ("v",), [Edge("o", "v", 0), Edge("o", "v", 0)])
    got = validate(OrderedBratteliDiagram([("o",), ("v",)], [D]))
    assert [v.invariant for v in got] == ["fiber-order"]


def test_compose_dyadic_order():
    C = compose(E2, E2)
    assert len(C.edges) == 4
    for e in C.edges:
        i, j = e.parts
        assert e.order == 2 * E2.edges[j].order + E2.edges[i].order


def test_compose_matches_successor_order_on_depth_two_paths():
    # the k-th depth-2 path in successor order is the edge of order k in E_1 E_2
    C = bratteli.compose_range(DYADIC, 0, 2)
    by_order = {e.order: e.parts for e in C.edges}
    assert [by_order[k] for k in range(4)] == versik.enumerate_paths(DYADIC, 2)


def test_compose_with_single_edge_level():
    one = OrderedDiagram(("v",), ("v",), [Edge("v", "v", 0)])
    assert order_isomorphic(compose(E2, one), E2, fix_vertices=True) is not None


def test_compose_of_extracted_levels_is_its_telescope():
    S = examples.nonsemisat_bratteli(depth_bound=10)
    B = kr.extract_diagram(kr.build_stages(S, 4), S)
    T = telescope(B, [2, 4])
    assert order_isomorphic(compose(B.edge_level(1), B.edge_level(2)), T.edge_level(1),
                            fix_vertices=True) is not None


def test_telescope_every_level_is_identity():
    T = telescope(TWO_MAX, [1, 2, 3, 4])
    for n in range(1, 5):
        assert order_isomorphic(T.edge_level(n), TWO_MAX.edge_level(n), fix_vertices=True)


def test_dyadic_by_pairs():
    T = telescope(DYADIC, [2, 4, 6])
    assert [len(T.edge_level(n).edges) for n in (1, 2, 3)] == [4, 4, 4]


@given(st.integers(0, 10 ** 6), st.data())
def test_telescope_is_functorial(seed, data):
    B = bratteli.random_diagram(np.random.default_rng(seed), depth=6, max_fiber=2)
    outer = sorted(data.draw(st.sets(st.integers(1, 6), min_size=2)))
    inner = sorted(data.draw(st.sets(st.integers(1, len(outer)), min_size=1)))
    twice = telescope(telescope(B, outer), inner)
    once = telescope(B, [outer[i - 1] for i in inner])
    for n in range(1, len(inner) + 1):
        assert order_isomorphic(twice.edge_level(n), once.edge_level(n), fix_vertices=True)


def test_self_isomorphism_is_identity():
    w = order_isomorphic(E2, E2)
    assert w["range_map"] == {"v": "v"} and w["source_map"] == {"v": "v"}
    assert w["edge_map"] == {0: 0, 1: 1}


def test_relabeled_copy_is_isomorphic():
    D = TWO_MAX.edge_level(2)
    copy = D.relabel({"a": "x", "b": "y"}, {"a": "p", "b": "q"})
    w = order_isomorphic(D, copy)
    assert w is not None and brute_force_isomorphic(D, copy)


def test_fiber_sizes_differ():
    three = OrderedDiagram(("v",), ("v",), [Edge("v", "v", k) for k in range(3)])
    assert order_isomorphic(E2, three) is None


@given(small_levels(), st.integers(0, 10 ** 6))
def test_isomorphism_agrees_with_brute_force(D, seed):
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        sp = dict(zip(D.sources, rng.permutation(list(D.sources))))
        rp = dict(zip(D.ranges, rng.permutation(list(D.ranges))))
        other = D.relabel(sp, rp)
    else:
        other = bratteli.random_diagram(rng, depth=2, max_vertices=3, max_fiber=3).edge_level(2)
    assert (order_isomorphic(D, other) is not None) == brute_force_isomorphic(D, other)


def test_telescope_is_order_equivalent():
    B = bratteli.random_diagram(np.random.default_rng(3), depth=9)
    T = telescope(B, [2, 3, 6, 8])
    v = order_equivalent_bounded(B, T, 4)
    assert v.status == "Equivalent"
    assert replay_witness(B, T, v.witness, 4) == []


def _reverse_asymmetric_fiber(D):
    """Reverse one fiber whose source sequence is not a palindrome, else None."""
    for w in D.ranges:
        srcs = [D.edges[i].source for i in D.fiber(w)]
        if srcs != srcs[::-1]:
            k = len(srcs) - 1
            edges = [Edge(e.source, e.range, k - e.order if e.range == w else e.order)
                     for e in D.edges]
            return OrderedDiagram(D.sources, D.ranges, edges)
    return None


def test_corrupted_witness_fails_replay():
    B = bratteli.random_diagram(np.random.default_rng(5), depth=8, max_fiber=3)
    T = telescope(B, [2, 4, 6, 8])
    v = order_equivalent_bounded(B, T, 4)
    corrupted = 0
    for n, D in v.witness["E_prime"].items():
        bad = _reverse_asymmetric_fiber(D)
        if bad is None:
            continue
        w = dict(v.witness, E_prime=dict(v.witness["E_prime"]))
        w["E_prime"][n] = bad
        assert replay_witness(B, T, w, 4)
        corrupted += 1
    assert corrupted


def test_inequivalent_by_maximal_path_count():
    v = order_equivalent_bounded(DYADIC, TWO_MAX, 4)
    assert v.status == "Inequivalent"
    assert "1 versus 2" in v.certificate


def test_unknown_at_tiny_bound():
    A = bratteli.random_diagram(np.random.default_rng(11), depth=4, max_vertices=3)
    B = bratteli.random_diagram(np.random.default_rng(12), depth=4, max_vertices=3)
    assert order_equivalent_bounded(A, B, 1).status in ("Unknown", "Equivalent")
    assert order_equivalent_bounded(DYADIC, examples.dyadic_diagram(3), 1).status == "Equivalent"


def _max_prefixes(B, n):
    return {versik.maximal_path(B, v, 2 * n)[:n] for v in B.vertices(2 * n)}


def test_extreme_path_counts_match_prefix_oracle():
    for B, count in ((DYADIC, 1), (TWO_MAX, 2)):
        assert bratteli.extreme_path_count(B, "max") == count
        assert len(_max_prefixes(B, 6)) == count


def test_dot_export():
    text = bratteli.to_dot(DYADIC, 2)
    assert text.startswith('digraph "dyadic"')
    assert '"0:o" -> "1:v" [label="1"];' in text


@given(st.integers(0, 10 ** 6), st.booleans())
def test_random_diagrams_are_valid(seed, stationary):
    B = bratteli.random_diagram(np.random.default_rng(seed), depth=5, stationary=stationary)
    assert validate(B) == []
