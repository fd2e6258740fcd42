"""Built-in instances: 2-adic odometers and their nests, the two-limit-point space, diagrams.

Binary words are little-endian: the first symbol is the 1s digit, so the
odometer adds 1 with carry to the right.  Eventually periodic points are
2-adic integers with odd denominators, which keeps the point maps exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .bratteli import Edge, OrderedBratteliDiagram, OrderedDiagram, Stationary
from .nested import NestedSequence
from .pds import BratteliSystem
from .space import (OUTSIDE, UNRESOLVED, PartialHomeo, Point, Resolved, SymbolicSpace,
                    empty_map, identity_map)


class UnknownName(KeyError):
    pass


# ---------------------------------------------------------------- 2-adic arithmetic

def binary_space(depth_bound: int = 16) -> SymbolicSpace:
    return SymbolicSpace((0, 1), lambda w: (0, 1), depth_bound=depth_bound,
                         tail_rules={"zeros": (0,), "ones": (1,)}, name="binary")


def to_rational(x: Point) -> Fraction:
    a = sum(b << i for i, b in enumerate(x.prefix))
    C = sum(b << i for i, b in enumerate(x.cycle))
    return a + Fraction(2 ** len(x.prefix) * C, 1 - 2 ** len(x.cycle))


def from_rational(space: SymbolicSpace, r) -> Point:
    r = Fraction(r)
    if r.denominator % 2 == 0:
        raise ValueError("not a 2-adic integer")
    digits, seen = [], {}
    while r not in seen:
        seen[r] = len(digits)
        d = r.numerator % 2
        digits.append(d)
        r = (r - d) / 2
    i = seen[r]
    return Point(space, digits[:i], digits[i:])


def word_value(word) -> int:
    return sum(b << i for i, b in enumerate(word))


def value_word(v: int, level: int) -> tuple:
    v %= 1 << level
    return tuple((v >> i) & 1 for i in range(level))


def translation_map(space: SymbolicSpace, n: int, excluded=(), name=None) -> PartialHomeo:
    """y -> y + n on the complement of the finite set ``excluded`` (2-adic rationals)."""
    excluded = frozenset(Fraction(e) for e in excluded)
    images = frozenset(e + n for e in excluded)
    cache = {}

    def marked(points, level):
        key = (points is excluded, level)
        got = cache.get(key)
        if got is None:
            got = frozenset(from_rational(space, p).word(level) for p in points)
            cache[key] = got
        return got

    def fwd(cell):
        if not cell:
            return UNRESOLVED if excluded else Resolved(())
        if cell in marked(excluded, len(cell)):
            return UNRESOLVED
        return Resolved(value_word(word_value(cell) + n, len(cell)))

    def bwd(cell):
        if not cell:
            return UNRESOLVED if images else Resolved(())
        if cell in marked(images, len(cell)):
            return UNRESOLVED
        return Resolved(value_word(word_value(cell) - n, len(cell)))

    def xmax(level):
        return marked(excluded, level) if level else ()

    def xmin(level):
        return marked(images, level) if level else ()

    return PartialHomeo(
        space, fwd, bwd, xmax=xmax, xmin=xmin,
        point_map=lambda x: from_rational(space, to_rational(x) + n),
        point_inverse=lambda y: from_rational(space, to_rational(y) - n),
        in_domain=lambda x: to_rational(x) not in excluded,
        in_range=lambda y: to_rational(y) not in images,
        name=name or f"shift{n:+d}")


def odometer_system(x: Point | None = None, depth_bound: int = 16) -> BratteliSystem:
    """The odometer restricted to X minus {x}; X_max = {x}, X_min = {x + 1}."""
    space = binary_space(depth_bound)
    x = Point(space, (), (1,)) if x is None else Point(space, x.prefix, x.cycle)
    phi = translation_map(space, 1, [to_rational(x)], name="odometer")
    return BratteliSystem(space, phi, name="odometer")


def odometer_point(space: SymbolicSpace, k: int) -> Point:
    """x_k = 0^inf + k."""
    return from_rational(space, k)


# ---------------------------------------------------------------- the dh nest

def dh_excluded(n: int) -> list:
    """Offsets k with x_k removed from dom phi_n (n >= 1)."""
    if n == 1:
        return [-2, -1, 0]
    if n == 2:
        return [-3, 0]
    return [k for k in range(-n - 1, 1) if k not in (-n, -1)]


def dh_nested(base: Point | None = None, horizon: int = 24, depth_bound: int = 16) -> NestedSequence:
    """phi_n = phi^n off the finite sets {x_k} of ``dh_excluded``, x_k = base + k."""
    space = binary_space(depth_bound)
    b = Fraction(0) if base is None else to_rational(base)

    def rule(n):
        return translation_map(space, n, [b + k for k in dh_excluded(n)], name=f"phi_{n}")

    special = [from_rational(space, b + k) for k in (-1, 0, 1, -2)]
    return NestedSequence(space, {}, rule=rule, horizon=horizon,
                          special_points=special, name="dh")


def dh_point(N: NestedSequence, k: int) -> Point:
    """x_k for the nest's base point (x_-1 is the first special point)."""
    return from_rational(N.space, to_rational(N.special_points[0]) + 1 + k)


def ones_then_zeros(space: SymbolicSpace, n: int) -> Point:
    """1^n 0^inf."""
    return Point(space, (1,) * n, (0,))


def odometer_powers(x: Point | None = None, horizon: int = 16, depth_bound: int = 16) -> NestedSequence:
    """phi_n = phi^n for the odometer with X_max = {x}."""
    S = odometer_system(x, depth_bound)
    return NestedSequence(S.space, {1: S.phi}, rule="power", horizon=horizon,
                          special_points=[], name="odometer-powers")


def full_odometer_nest(horizon: int = 12, depth_bound: int = 16) -> NestedSequence:
    """phi_n = phi^n for the full odometer: every domain is all of X, so no AF restriction exists."""
    space = binary_space(depth_bound)
    return NestedSequence(space, {}, rule=lambda n: translation_map(space, n),
                          horizon=horizon, name="full-odometer")


def broken_nest(depth_bound: int = 16) -> NestedSequence:
    """Odometer powers with phi_2 emptied, so phi_1 o phi_1 escapes phi_2."""
    N = odometer_powers(depth_bound=depth_bound, horizon=6)
    N.maps[2] = empty_map(N.space, "phi_2")
    N.name = "broken-nest"
    return N


# ---------------------------------------------------------------- the two-limit-point space

# Points (1/m, i) and (0, i), i = 1, 2.  Level-1 symbols p1, p2 hold (1, i);
# t1, t2 hold the rest.  Below a t-word, p splits off the next singleton.

def _ns_children(word):
    if not word:
        return ("p1", "p2", "t1", "t2")
    if word[-1] in ("p1", "p2", "p", "s"):
        return ("s",)
    return ("p", "t")


def nonsemisat_space(depth_bound: int = 16) -> SymbolicSpace:
    return SymbolicSpace(("p1", "p2", "t1", "t2"), _ns_children, depth_bound=depth_bound,
                         tail_rules={"singleton": ("s",), "tail": ("t",)}, name="two-limits")


def ns_point(space: SymbolicSpace, m: int, i: int) -> Point:
    """(1/m, i); m = 0 gives the limit point (0, i)."""
    if m == 0:
        return Point(space, (f"t{i}",), ("t",))
    if m == 1:
        return Point(space, (f"p{i}",), ("s",))
    return Point(space, (f"t{i}",) + ("t",) * (m - 2) + ("p",), ("s",))


def ns_decode(word) -> tuple:
    """(m, i) of the singleton a cell isolates, or (None, i) for a tail cell."""
    head = word[0]
    i = int(head[1])
    if head[0] == "p":
        return 1, i
    for k, s in enumerate(word[1:], start=2):
        if s == "p":
            return k, i
    return None, i


def ns_decode_point(x: Point) -> tuple:
    m, i = ns_decode(x.prefix + x.cycle)
    return (0 if m is None else m), i


def ns_word(m: int, i: int, level: int) -> tuple:
    return ns_point(_NS_ANY, m, i).word(level)


_NS_ANY = nonsemisat_space(1)


def _singleton_map(space, f: Callable, finv: Callable, tail_fwd: dict, tail_bwd: dict,
                   name: str) -> PartialHomeo:
    """Map on singletons by f, on tail cells by the given dicts {i: Resolved target index | marker}.

    ``f`` returns None outside the domain; a singleton whose image is isolated
    only deeper than the current level is UNRESOLVED.
    """

    def side(g, tails):
        def cell_map(cell):
            if not cell:
                return UNRESOLVED
            m, i = ns_decode(cell)
            L = len(cell)
            if m is None:
                r = tails.get(i, UNRESOLVED)
                return Resolved(ns_word(0, r, L)) if isinstance(r, int) else r
            got = g(m, i)
            if got is None:
                return OUTSIDE
            m2, i2 = got
            if m2 > L:
                return UNRESOLVED
            return Resolved(ns_word(m2, i2, L))
        return cell_map

    def point(g, tails):
        def pm(x):
            m, i = ns_decode_point(x)
            if m == 0:
                return ns_point(space, 0, tails[i])
            return ns_point(space, *g(m, i))

        def dom(x):
            m, i = ns_decode_point(x)
            if m == 0:
                return isinstance(tails.get(i), int)
            return g(m, i) is not None
        return pm, dom

    def unresolved_tails(tails):
        def cells(level):
            if level == 0:
                return ()
            return [ns_word(0, i, level) for i in (1, 2) if not isinstance(tails.get(i), int)]
        return cells

    pm, dom = point(f, tail_fwd)
    pi, ran = point(finv, tail_bwd)
    return PartialHomeo(space, side(f, tail_fwd), side(finv, tail_bwd),
                        xmax=unresolved_tails(tail_fwd), xmin=_with_gaps(unresolved_tails(tail_bwd), finv),
                        point_map=pm, point_inverse=pi, in_domain=dom, in_range=ran, name=name)


def _with_gaps(tails_fn, finv):
    """X_min cells: unresolved tails plus singletons outside the range."""
    def cells(level):
        out = list(tails_fn(level))
        for m in range(1, level + 1):
            for i in (1, 2):
                if finv(m, i) is None:
                    out.append(ns_word(m, i, level))
        return out
    return cells


def _phi1(m, i):
    if m % 2:
        return m + 1, i
    return (m - 1, 2) if i == 1 else (m + 1, 1)


def _phi1_inv(m, i):
    if m % 2 == 0:
        return m - 1, i
    if i == 2:
        return m + 1, 1
    return None if m == 1 else (m - 1, 2)


def _phi2(m, i):
    return _phi1(*_phi1(m, i))


def _phi2_inv(m, i):
    got = _phi1_inv(m, i)
    return None if got is None else _phi1_inv(*got)


def nonsemisat_nested(horizon: int = 16, depth_bound: int = 16) -> NestedSequence:
    """phi_1 on the singletons, phi_2 = phi_1^2 plus (0,1) -> (0,2), then odd and even powers."""
    space = nonsemisat_space(depth_bound)
    phi1 = _singleton_map(space, _phi1, _phi1_inv, {}, {}, "phi_1")
    phi2 = _singleton_map(space, _phi2, _phi2_inv, {1: 2}, {2: 1}, "phi_2")
    special = [ns_point(space, 0, 1), ns_point(space, 0, 2)]
    return NestedSequence(space, {1: phi1, 2: phi2}, rule="parity-power", horizon=horizon,
                          special_points=special, name="two-limits")


def _psi(m, i):
    return (m, 2) if i == 1 else (m + 1, 1)


def _psi_inv(m, i):
    if i == 2:
        return m, 1
    return None if m == 1 else (m - 1, 2)


def nonsemisat_bratteli(depth_bound: int = 16) -> BratteliSystem:
    """(1/n,1) -> (1/n,2) -> (1/(n+1),1) and (0,1) -> (0,2); X_max = {(0,2)}."""
    space = nonsemisat_space(depth_bound)
    phi = _singleton_map(space, _psi, _psi_inv, {1: 2}, {2: 1}, "phi")
    return BratteliSystem(space, phi, name="two-limits-system")


# ---------------------------------------------------------------- diagrams and mutants

def dyadic_diagram(depth: int = 2) -> OrderedBratteliDiagram:
    """One vertex per level, two edges ordered 0 < 1, stationary."""
    depth = max(depth, 2)
    levels = [("o",)] + [("v",)] * depth
    edge_levels = [OrderedDiagram(("o",), ("v",), [Edge("o", "v", 0), Edge("o", "v", 1)])]
    for _ in range(depth - 1):
        edge_levels.append(OrderedDiagram(("v",), ("v",), [Edge("v", "v", 0), Edge("v", "v", 1)]))
    return OrderedBratteliDiagram(levels, edge_levels, Stationary(1), name="dyadic")


def two_max_diagram() -> OrderedBratteliDiagram:
    """Two vertices, full bipartite edges; maximal edges keep the vertex, so two maximal paths."""
    V = ("a", "b")
    first = OrderedDiagram(("o",), V, [Edge("o", "a", 0), Edge("o", "b", 0)])
    step = OrderedDiagram(V, V, [Edge("b", "a", 0), Edge("a", "a", 1),
                                 Edge("a", "b", 0), Edge("b", "b", 1)])
    return OrderedBratteliDiagram([("o",), V, V], [first, step], Stationary(1), name="two-max")


def fixed_point_system(depth_bound: int = 8) -> BratteliSystem:
    """Identity on the binary space: every cell is a fixed point."""
    space = binary_space(depth_bound)
    return BratteliSystem(space, identity_map(space, "id"), name="fixed-point")


def broken_system(depth_bound: int = 12) -> BratteliSystem:
    """Odometer on [0] (as a copy of the binary space) and the identity on [1]."""
    space = binary_space(depth_bound)
    inner = binary_space(depth_bound)
    odo = translation_map(inner, 1, [-1])

    def lift(fn):
        def f(cell):
            if not cell:
                return UNRESOLVED
            if cell[0] == 1:
                return Resolved(cell)
            if len(cell) == 1:
                return UNRESOLVED
            r = fn(cell[1:])
            return Resolved((0,) + r.cell) if isinstance(r, Resolved) else r
        return f

    def xm(fn):
        def cells(level):
            return [(0,) + c for c in fn(level - 1)] if level > 1 else [(0,)]
        return cells

    phi = PartialHomeo(space, lift(odo.cell_image), lift(odo.inverse_cell_image),
                       xmax=xm(odo.xmax_cells), xmin=xm(odo.xmin_cells), name="broken")
    return BratteliSystem(space, phi, name="broken")


# ---------------------------------------------------------------- catalog

CATALOG = {
    "odometer_system": odometer_system,
    "dh_nested": dh_nested,
    "nonsemisat_space": nonsemisat_space,
    "nonsemisat_nested": nonsemisat_nested,
    "nonsemisat_bratteli": nonsemisat_bratteli,
    "dyadic_diagram": dyadic_diagram,
    "two_max_diagram": two_max_diagram,
    "odometer_powers": odometer_powers,
    "full_odometer_nest": full_odometer_nest,
    "broken_nest": broken_nest,
    "fixed_point_system": fixed_point_system,
    "broken_system": broken_system,
}

KINDS = {
    "odometer_system": "system", "nonsemisat_bratteli": "system",
    "fixed_point_system": "system", "broken_system": "system",
    "dh_nested": "nested", "nonsemisat_nested": "nested", "odometer_powers": "nested",
    "full_odometer_nest": "nested", "broken_nest": "nested",
    "dyadic_diagram": "diagram", "two_max_diagram": "diagram",
    "nonsemisat_space": "space",
}

DESCRIPTIONS = {
    "odometer_system": "2-adic odometer with X_max = {x} (default x = 1^inf)",
    "dh_nested": "nest of odometer powers with removed points x_k; discontinuous cocycle",
    "nonsemisat_space": "points (1/n, i) and their two limits (0, i)",
    "nonsemisat_nested": "nest on the two-limit space without a semi-saturation",
    "nonsemisat_bratteli": "Bratteli system on the two-limit space with the same orbits",
    "dyadic_diagram": "stationary diagram, one vertex, two edges",
    "two_max_diagram": "stationary diagram with two maximal and two minimal paths",
    "odometer_powers": "phi_n = phi^n for the odometer system",
    "full_odometer_nest": "powers of the full odometer; no AF restriction exists",
    "broken_nest": "odometer powers with phi_2 emptied (not nested)",
    "fixed_point_system": "identity map: has periodic points, not a Bratteli system",
    "broken_system": "odometer on [0] beside the identity on [1]",
}


def builtin_systems(depth_bound: int = 12) -> dict:
    """Built-in Bratteli systems (the mutants excluded)."""
    from .versik import versik_system
    return {
        "odometer": odometer_system(depth_bound=depth_bound),
        "two-limits": nonsemisat_bratteli(depth_bound=depth_bound),
        "vershik(dyadic)": versik_system(dyadic_diagram(), depth_bound),
        "vershik(two-max)": versik_system(two_max_diagram(), depth_bound),
    }


def build(name: str, **params):
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise UnknownName(name) from None
    return ctor(**params)
