"""Nested sequences of partial homeomorphisms.

A nest is a family phi_n (n in Z) with phi_0 = id, phi_-n = phi_n^-1 and
graph(phi_n o phi_m) contained in graph(phi_n+m).  Maps are stored for a
window of n and produced by a rule beyond it.  The Phi map sends x to
phi_k(x) for the least k >= 1 with x in dom phi_k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from .space import (OUTSIDE, UNRESOLVED, ClopenSet, OutsideDomain, PartialHomeo, Point,
                    Resolved, ResolutionExhausted, SymbolicSpace, apply, cell_key,
                    empty_map, format_word, identity_map, in_domain)


class MaximalPoint(ValueError):
    pass


class NotDense(ValueError):
    pass


class _NotCofinal:
    def __repr__(self):
        return "NotCofinal"

    def __bool__(self):
        return False


NOT_COFINAL = _NotCofinal()


class NestedSequence:
    """phi_n for 1 <= n <= horizon; negative indices are inverses.

    ``rule`` fills indices missing from ``maps``: ``"empty"`` (or
    ``"window"``) gives the empty map, ``"power"`` gives phi_1^n,
    ``"parity-power"`` gives phi_1^n for odd n and phi_2^(n/2) for even n,
    and a callable ``rule(n)`` returns the map itself.
    """

    def __init__(self, space: SymbolicSpace, maps: dict, rule="empty", horizon: int = 16,
                 special_points=(), name: str = "nest"):
        self.space = space
        self.maps = dict(maps)
        self.rule = rule
        self.horizon = int(horizon)
        self.special_points = list(special_points)
        self.name = name
        self._cache = {}
        self._powers = {}
        self._xmax = {}
        self._xmin = {}

    def __repr__(self):
        return f"NestedSequence({self.name!r}, horizon={self.horizon})"

    def get(self, n: int) -> PartialHomeo:
        got = self._cache.get(n)
        if got is not None:
            return got
        if n == 0:
            got = self.maps.get(0) or identity_map(self.space, "phi_0")
        elif n in self.maps:
            got = self.maps[n]
        elif n < 0:
            got = self.get(-n).inverse()
        else:
            got = self._by_rule(n)
        self._cache[n] = got
        return got

    def _by_rule(self, n: int) -> PartialHomeo:
        rule = self.rule
        if callable(rule):
            return rule(n)
        if rule in ("empty", "window"):
            return empty_map(self.space, f"phi_{n}")
        if rule == "power":
            return self.power(n)
        if rule == "parity-power":
            if n % 2:
                return self.power(n)
            return self.get(2).compose(self.get(n - 2), name=f"phi_{n}")
        raise ValueError(f"unknown rule {rule!r}")

    def power(self, n: int) -> PartialHomeo:
        """phi_1 composed with itself n times."""
        got = self._powers.get(n)
        if got is None:
            got = self.get(1) if n == 1 else self.get(1).compose(self.power(n - 1),
                                                                 name=f"phi_1^{n}")
            self._powers[n] = got
        return got

    def indices(self, horizon: Optional[int] = None):
        H = self.horizon if horizon is None else horizon
        return range(1, H + 1)

    def xmax_cells(self, level: int) -> frozenset:
        """Cells meeting X minus dom phi_n for every 1 <= n <= horizon."""
        got = self._xmax.get(level)
        if got is None:
            got = _common_complement(self, level, 1)
            self._xmax[level] = got
        return got

    def xmin_cells(self, level: int) -> frozenset:
        got = self._xmin.get(level)
        if got is None:
            got = _common_complement(self, level, -1)
            self._xmin[level] = got
        return got


def complement_cells(phi: PartialHomeo, level: int) -> frozenset:
    """Cells at ``level`` meeting the complement of dom phi."""
    out = set(phi.xmax_cells(level))
    for c in phi.space.cells(level):
        if phi.cell_image(c) is OUTSIDE:
            out.add(c)
    return frozenset(out)


def _common_complement(N, level, sign):
    cells = set(N.space.cells(level))
    for n in N.indices():
        cells &= complement_cells(N.get(sign * n), level)
        if not cells:
            break
    return frozenset(cells)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class NestViolation:
    n: int
    m: int
    cell: tuple
    detail: str

    def __str__(self):
        return f"(n={self.n}, m={self.m}) at {format_word(self.cell)}: {self.detail}"


def validate_nested(N: NestedSequence, depth: int = 6, window: int = 3) -> list:
    """Cell-exact checks of phi_0 = id, phi_-n = phi_n^-1 and graph nesting."""
    out = []
    space = N.space
    depth = min(depth, space.depth_bound)
    phi0 = N.get(0)
    for level in range(1, depth + 1):
        for c in space.cells(level):
            if phi0.cell_image(c) != Resolved(c):
                out.append(NestViolation(0, 0, c, "phi_0 is not the identity"))
                break
    idx = sorted(range(-window, window + 1), key=lambda n: (abs(n), n < 0))
    for level in range(1, depth + 1):
        cells = space.cells(level)
        for n in range(1, window + 1):
            f, g = N.get(n), N.get(-n)
            for c in cells:
                r = f.cell_image(c)
                if isinstance(r, Resolved):
                    back = g.cell_image(r.cell)
                    if isinstance(back, Resolved) and back.cell != c or back is OUTSIDE:
                        out.append(NestViolation(n, -n, c, "phi_-n does not invert phi_n"))
        for n, m in itertools.product(idx, idx):
            if n + m < -window or n + m > window:
                continue
            fm, fn, fnm = N.get(m), N.get(n), N.get(n + m)
            for c in cells:
                r1 = fm.cell_image(c)
                if not isinstance(r1, Resolved):
                    continue
                r2 = fn.cell_image(r1.cell)
                if not isinstance(r2, Resolved):
                    continue
                r3 = fnm.cell_image(c)
                if r3 is OUTSIDE or (isinstance(r3, Resolved) and r3.cell != r2.cell):
                    out.append(NestViolation(n, m, c,
                                             f"phi_{n} o phi_{m} maps the cell to "
                                             f"{format_word(r2.cell)}, phi_{n + m} does not"))
    return _dedupe(out)


def _dedupe(violations):
    seen = set()
    out = []
    for v in violations:
        key = (v.n, v.m, v.detail.split(" maps")[0])
        if key in seen:
            continue
        seen.add(key)
        out.append(v)
    return out


# ---------------------------------------------------------------- the Phi map

def phi_cell(N: NestedSequence, cell, horizon: Optional[int] = None):
    """(k, image) when the whole cell uses the same least k, else UNRESOLVED or OUTSIDE."""
    for n in N.indices(horizon):
        r = N.get(n).cell_image(cell)
        if isinstance(r, Resolved):
            return (n, r.cell)
        if r is not OUTSIDE:
            return UNRESOLVED
    return OUTSIDE


def phi_inverse_cell(N: NestedSequence, cell, horizon: Optional[int] = None):
    for n in N.indices(horizon):
        r = N.get(-n).cell_image(cell)
        if isinstance(r, Resolved):
            return (n, r.cell)
        if r is not OUTSIDE:
            return UNRESOLVED
    return OUTSIDE


class PhiMap:
    """Memoized cell-level Phi with the minimal index recorded per cell."""

    def __init__(self, N: NestedSequence, horizon: Optional[int] = None):
        self.N = N
        self.horizon = horizon
        self.memo = {}
        self.inverse_memo = {}

    def __call__(self, cell):
        got = self.memo.get(cell)
        if got is None:
            got = phi_cell(self.N, cell, self.horizon)
            self.memo[cell] = got
        return got

    def inverse(self, cell):
        got = self.inverse_memo.get(cell)
        if got is None:
            got = phi_inverse_cell(self.N, cell, self.horizon)
            self.inverse_memo[cell] = got
        return got

    def as_partial_homeo(self) -> PartialHomeo:
        def wrap(fn):
            def f(cell):
                r = fn(cell)
                return Resolved(r[1]) if isinstance(r, tuple) else r
            return f
        return PartialHomeo(self.N.space, wrap(self), wrap(self.inverse),
                            xmax=self.N.xmax_cells, xmin=self.N.xmin_cells,
                            name=f"Phi({self.N.name})")


def phi_point(N: NestedSequence, x: Point, depth: Optional[int] = None):
    """(Phi(x), k) with k the least n >= 1 such that x is in dom phi_n."""
    for n in N.indices():
        f = N.get(n)
        if in_domain(f, x, depth):
            return apply(f, x, depth), n
    raise MaximalPoint(f"{x} lies in no dom phi_n up to n = {N.horizon}")


def phi_inverse_point(N: NestedSequence, y: Point, depth: Optional[int] = None):
    for n in N.indices():
        f = N.get(-n)
        if in_domain(f, y, depth):
            return apply(f, y, depth), n
    raise MaximalPoint(f"{y} lies in no dom phi_-n up to n = {N.horizon}")


def phi(N: NestedSequence, x: Point, depth: Optional[int] = None) -> Point:
    return phi_point(N, x, depth)[0]


def counting_cocycle_nested(N: NestedSequence, x: Point, y: Point, depth: int):
    """Signed number of Phi steps from x to y, searched up to ``depth`` steps each way."""
    if x == y:
        return 0
    cur = x
    for s in range(1, depth + 1):
        try:
            cur, _ = phi_point(N, cur)
        except (MaximalPoint, OutsideDomain):
            break
        if cur == y:
            return s
    cur = x
    for s in range(1, depth + 1):
        try:
            cur, _ = phi_inverse_point(N, cur)
        except (MaximalPoint, OutsideDomain):
            break
        if cur == y:
            return -s
    return NOT_COFINAL


# ---------------------------------------------------------------- Lemma conditions

@dataclass
class LemmaSatisfied:
    M: int

    def __bool__(self):
        return True


@dataclass
class LemmaViolations:
    violations: list

    def __bool__(self):
        return False

    def conditions(self) -> set:
        return {c for c, _ in self.violations}


def _partial_cells(phi: PartialHomeo, level: int) -> list:
    """Cells where phi is unresolved because the cell straddles the domain boundary."""
    xm = phi.xmax_cells(level)
    return [c for c in phi.space.cells(level)
            if c in xm and not isinstance(phi.cell_image(c), Resolved)
            and phi.cell_image(c) is not OUTSIDE]


def _domain_empty(phi: PartialHomeo) -> bool:
    return all(phi.cell_image(c) is OUTSIDE for c in phi.space.cells(1))


def check_lemma_conditions(N: NestedSequence, depth: int = 6,
                           horizon: Optional[int] = None):
    """(1) X_max, X_min clopen, (2) domains clopen, (3) domains vanish from some M on.

    Clopen-ness is judged by stability of the canonical cell approximations
    over the last three levels up to ``depth``; vanishing is checked up to
    the horizon.
    """
    H = N.horizon if horizon is None else horizon
    depth = min(depth, N.space.depth_bound)
    levels = [L for L in (depth - 2, depth - 1, depth) if L >= 1]
    out = []
    for label, getter in (("X_max", N.xmax_cells), ("X_min", N.xmin_cells)):
        forms = {ClopenSet(N.space, getter(L)) for L in levels}
        if len(forms) > 1:
            out.append((1, f"{label} approximations keep shrinking up to level {depth}"))
    M = None
    for n in range(1, H + 1):
        for sign in (1, -1):
            f = N.get(sign * n)
            partial = _partial_cells(f, depth)
            if partial:
                out.append((2, f"dom phi_{sign * n} splits cell {format_word(partial[0])} "
                               f"at level {depth}"))
                break
        else:
            continue
        break
    for n in range(H, 0, -1):
        if not (_domain_empty(N.get(n)) and _domain_empty(N.get(-n))):
            M = n + 1
            break
    else:
        M = 1
    if M > H:
        out.append((3, f"dom phi_n is nonempty for every n up to {H}"))
    if out:
        return LemmaViolations(out)
    return LemmaSatisfied(M)


# ---------------------------------------------------------------- AF criterion

@dataclass
class Found:
    Y: ClopenSet
    Z: ClopenSet
    restricted: NestedSequence
    level: int
    M: int
    domains: dict

    def __bool__(self):
        return True


@dataclass
class NotFound:
    reasons: list

    def __bool__(self):
        return False


def _restricted_map(N: NestedSequence, n: int, k: int, D: set, partial: set = frozenset()):
    """phi_n cut down to the union of level-k cells in D (plus straddling cells in ``partial``)."""
    f, g = N.get(n), N.get(-n)
    space = N.space
    images = {}
    for c in D:
        r = f.cell_image(c)
        images[r.cell] = c
    allowed = set(D) | set(partial)

    def fwd(cell):
        if len(cell) >= k:
            a = cell[:k]
            if a in D or a in partial:
                return f.cell_image(cell)
            return OUTSIDE
        below = space.descendants(cell, k)
        hit = [b for b in below if b in allowed]
        if not hit:
            return OUTSIDE
        if len(hit) == len(below) and not partial:
            r = f.cell_image(cell)
            if isinstance(r, Resolved):
                return r
        return UNRESOLVED

    def bwd(cell):
        if len(cell) >= k:
            a = cell[:k]
            if a in images:
                return g.cell_image(cell)
            if partial:
                r = g.cell_image(a)
                if not isinstance(r, Resolved) and r is not OUTSIDE:
                    return g.cell_image(cell) if not isinstance(g.cell_image(cell), Resolved) \
                        or g.cell_image(cell).cell[:k] in allowed else OUTSIDE
            return OUTSIDE
        below = space.descendants(cell, k)
        hit = [b for b in below if b in images]
        if not hit:
            return OUTSIDE
        if len(hit) == len(below) and not partial:
            r = g.cell_image(cell)
            if isinstance(r, Resolved):
                return r
        return UNRESOLVED

    def xmax(level):
        if level >= k:
            return [c for c in space.cells(level) if c[:k] in partial]
        return [c for c in space.cells(level) if fwd(c) is UNRESOLVED]

    def xmin(level):
        if level >= k:
            return []
        return [c for c in space.cells(level) if bwd(c) is UNRESOLVED]

    kw = {}
    if f.point_map is not None and f.in_domain is not None and not partial:
        def dom(x):
            return x.word(k) in D and f.in_domain(x)

        def ran(y):
            return y.word(k) in images and g.in_domain(y)
        kw = dict(point_map=f.point_map, point_inverse=g.point_map, in_domain=dom, in_range=ran)
    return PartialHomeo(space, fwd, bwd, xmax=xmax, xmin=xmin, name=f"phi~_{n}", **kw)


def restrict(N: NestedSequence, Y: ClopenSet, Z: ClopenSet, k: int,
             horizon: Optional[int] = None, mode: str = "cells"):
    """Restricted nest on D_n = level-k cells C with C in X minus Z and phi_n(C) in X minus Y.

    ``mode="cells"`` keeps only cells on which phi_n resolves; ``"literal"``
    also keeps cells that straddle the boundary of dom phi_n.
    """
    H = N.horizon if horizon is None else horizon
    space = N.space
    maps, domains = {}, {}
    for n in range(1, H + 1):
        f = N.get(n)
        D, partial = set(), set()
        for c in space.cells(k):
            if Z.meets_cell(c):
                continue
            r = f.cell_image(c)
            if isinstance(r, Resolved):
                if not Y.meets_cell(r.cell):
                    D.add(c)
            elif r is not OUTSIDE and mode == "literal":
                partial.add(c)
        domains[n] = frozenset(D | partial)
        maps[n] = _restricted_map(N, n, k, D, partial)
    R = NestedSequence(space, maps, rule="empty", horizon=H,
                       special_points=N.special_points, name=f"{N.name}~")
    return R, domains


def check_phi_structure(R: NestedSequence, level: int, M: int) -> list:
    """Bijectivity of the level cell map of Phi and coverage by backward orbits of X_max."""
    problems = []
    P = PhiMap(R)
    xmax, xmin = R.xmax_cells(level), R.xmin_cells(level)
    cells = R.space.cells(level)
    image = {}
    for c in cells:
        if c in xmax:
            continue
        r = P(c)
        if not isinstance(r, tuple):
            problems.append(f"Phi unresolved on {format_word(c)}")
            continue
        if r[1] in image:
            problems.append(f"Phi not injective: {format_word(c)} and {format_word(image[r[1]])}")
        image[r[1]] = c
    expected = {c for c in cells if c not in xmin}
    if set(image) != expected and not problems:
        problems.append("Phi is not onto the complement of X_min")
    for c in cells:
        cur = c
        for _ in range(max(M, 1) + len(cells)):
            if cur in xmax:
                break
            r = P(cur)
            if not isinstance(r, tuple):
                break
            cur = r[1]
        if cur not in xmax:
            problems.append(f"cell {format_word(c)} never reaches X_max")
            break
    return problems


def check_afnest(N: NestedSequence, U: ClopenSet, V: ClopenSet, search_depth: int = 4,
                 horizon: Optional[int] = None, mode: str = "cells"):
    """Search Y, Z (cell unions, smallest first) making the restricted nest satisfy the Lemma."""
    reasons = []
    for k in range(1, search_depth + 1):
        Y = ClopenSet(N.space, N.xmin_cells(k))
        Z = ClopenSet(N.space, N.xmax_cells(k))
        if not Y.issubset(U) or not Z.issubset(V):
            reasons.append((k, "approximations at this level do not fit inside U, V"))
            continue
        R, domains = restrict(N, Y, Z, k, horizon, mode)
        lemma = check_lemma_conditions(R, depth=k + 2)
        if not lemma:
            reasons.append((k, "; ".join(d for _, d in lemma.violations)))
            continue
        nest = validate_nested(R, depth=k + 1, window=2)
        if nest:
            reasons.append((k, f"restriction is not nested: {nest[0]}"))
            continue
        problems = check_phi_structure(R, k, lemma.M)
        if problems:
            reasons.append((k, problems[0]))
            continue
        return Found(Y, Z, R, k, lemma.M, domains)
    return NotFound(reasons)


# ---------------------------------------------------------------- cocycle continuity

@dataclass
class DiscontinuityWitness:
    level: int
    cell: tuple
    n: int
    image: tuple
    values: tuple
    points: tuple


@dataclass
class Discontinuity:
    witnesses: list

    @property
    def witness(self) -> DiscontinuityWitness:
        return self.witnesses[0]

    def __bool__(self):
        return False


@dataclass
class ContinuousUpTo:
    depth: int

    def __bool__(self):
        return True


def representatives(N: NestedSequence, cell) -> list:
    """Tail-rule completions of the cell, then declared special points inside it."""
    out = []
    for cycle in N.space.tail_rules.values():
        p = Point(N.space, cell, cycle)
        if N.space.is_cell(p.word(len(cell) + 2 * len(cycle))) and p not in out:
            out.append(p)
    for sp in N.special_points:
        if sp.word(len(cell)) == tuple(cell) and sp not in out:
            out.append(sp)
    return out


def _ordered_cells(N, level):
    cells = sorted(N.space.cells(level), key=cell_key)
    first = []
    for sp in N.special_points:
        c = sp.word(level)
        if c in cells and c not in first:
            first.append(c)
    return first + [c for c in cells if c not in first]


def cocycle_on_graph(N: NestedSequence, x: Point, n: int):
    y = apply(N.get(n), x)
    return counting_cocycle_nested(N, x, y, abs(n) + 1), y


def continuity_diagnostic(N: NestedSequence, depth: int = 6, nmax: int = 4):
    """Look for a cell on which phi_n resolves but d(x, phi_n x) is not constant.

    Smaller n is searched first, then coarser levels; within a level, cells
    holding the declared special points come first.
    """
    depth = min(depth, N.space.depth_bound)
    for n in range(1, nmax + 1):
        for level in range(1, depth + 1):
            found = []
            for c in _ordered_cells(N, level):
                r = N.get(n).cell_image(c)
                if not isinstance(r, Resolved):
                    continue
                vals, pts = [], []
                for x in representatives(N, c):
                    v, _ = cocycle_on_graph(N, x, n)
                    if v is NOT_COFINAL or v in vals:
                        continue
                    vals.append(v)
                    pts.append(x)
                if len(vals) > 1:
                    found.append(DiscontinuityWitness(level, c, n, r.cell,
                                                      tuple(vals[:2]), tuple(pts[:2])))
            if found:
                return Discontinuity(found)
    return ContinuousUpTo(depth)


def replay_discontinuity(N: NestedSequence, w: DiscontinuityWitness) -> bool:
    """Recompute both values from the witness points alone."""
    vals = []
    for x in w.points:
        if x.word(w.level) != tuple(w.cell):
            return False
        v, _ = cocycle_on_graph(N, x, w.n)
        vals.append(v)
    return tuple(vals) == tuple(w.values) and vals[0] != vals[1]


# ---------------------------------------------------------------- semi-saturation

@dataclass
class Admits:
    extension: dict

    def __bool__(self):
        return True


@dataclass
class FailsWithWitness:
    cell: tuple
    level: int
    separation_level: int
    image_cells: tuple
    chains: tuple
    direction: int = 1

    def __bool__(self):
        return False


@dataclass
class UnknownUpTo:
    depth: int
    open_cells: list = field(default_factory=list)

    def __bool__(self):
        return False


def _resolved_descendants(phi, cell, level):
    out = []
    for d in phi.space.descendants(cell, level):
        r = phi.cell_image(d)
        if isinstance(r, Resolved):
            out.append((d, r.cell))
    return out


def _candidates(N, level, sign, H):
    f1 = N.get(sign)
    out = []
    for c in N.space.cells(level):
        r = f1.cell_image(c)
        if isinstance(r, Resolved) or r is OUTSIDE:
            continue
        if any(isinstance(N.get(sign * n).cell_image(c), Resolved) for n in range(2, H + 1)):
            out.append(c)
    return out


def _check_dense(N, depth, extra, H):
    f1 = N.get(1)
    bound = N.space.depth_bound
    for level in range(1, depth + 1):
        for c in N.space.cells(level):
            if any(isinstance(N.get(n).cell_image(c), Resolved) for n in range(1, H + 1)):
                if not _resolved_descendants(f1, c, min(level + extra, bound)):
                    raise NotDense(f"dom phi_1 misses cell {format_word(c)}")


def semisaturation_check(N: NestedSequence, depth: int = 6, extra: int = 3,
                         horizon: Optional[int] = None):
    """Whether phi_1 extends continuously (both ways) to the union of the domains.

    A candidate cell lies where phi_1 does not resolve but some phi_n does.
    Its phi_1-resolved subcells ``extra`` levels deeper are mapped; if their
    images spread over two cells of some fixed level all the way down to
    ``depth``, the limit cannot exist and a witness is returned.  If at
    ``depth`` every candidate contracts into a single cell of that level, the
    extension table is returned.
    """
    H = min(N.horizon, 8) if horizon is None else horizon
    depth = min(depth, N.space.depth_bound - extra)
    _check_dense(N, depth, extra, H)
    table = {}
    open_cells = []
    for sign in (1, -1):
        f1 = N.get(sign)
        for c in sorted(_candidates(N, depth, sign, H), key=cell_key):
            pairs = _resolved_descendants(f1, c, depth + extra)
            images = [img for _, img in pairs]
            if not images:
                open_cells.append(c)
                continue
            sep = None
            for ell in range(1, depth + 1):
                if len({img[:ell] for img in images}) > 1:
                    sep = ell
                    break
            if sep is None:
                table[(sign, c)] = images[0][:depth]
                continue
            heads = sorted({img[:sep] for img in images}, key=cell_key)[:2]
            chains = []
            for head in heads:
                chain = []
                for L in range(1, depth + 1):
                    anc = c[:L]
                    hits = [d for d, img in _resolved_descendants(f1, anc, L + extra)
                            if img[:sep] == head]
                    chain.append(sorted(hits, key=cell_key)[-1] if hits else None)
                chains.append(tuple(chain))
            return FailsWithWitness(c, depth, sep, tuple(heads), tuple(chains), sign)
    if open_cells:
        return UnknownUpTo(depth, open_cells)
    return Admits(table)


# ---------------------------------------------------------------- conjugacy

@dataclass
class ConjugacyWitness:
    maps: list

    def __bool__(self):
        return True


@dataclass
class Inequivalent:
    certificate: str

    def __bool__(self):
        return False


@dataclass
class Unknown:
    reason: str

    def __bool__(self):
        return False


def xmax_count(N: NestedSequence, depth: int) -> Optional[int]:
    """Number of X_max cells once it is stable over the last three levels."""
    counts = [len(N.xmax_cells(L)) for L in range(max(1, depth - 2), depth + 1)]
    return counts[-1] if len(set(counts)) == 1 else None


def _cell_data(N, level, P):
    data = {}
    for c in N.space.cells(level):
        f, b = P(c), P.inverse(c)
        data[c] = (f, b, c in N.xmax_cells(level), c in N.xmin_cells(level))
    return data


def _kind(r):
    if isinstance(r, tuple):
        return "R"
    return "U" if r is UNRESOLVED else "O"


def nested_conjugate_bounded(N1: NestedSequence, N2: NestedSequence, depth: int = 5,
                             budget: int = 200_000):
    """Refinement-compatible cell bijections psi with psi Phi = Phi' psi, level by level."""
    c1, c2 = xmax_count(N1, depth), xmax_count(N2, depth)
    if c1 is not None and c2 is not None and c1 != c2:
        return Inequivalent(f"|X_max| = {c1} versus {c2}")
    depth = min(depth, N1.space.depth_bound, N2.space.depth_bound)
    P1, P2 = PhiMap(N1), PhiMap(N2)
    nodes = [0]

    def complete_level(level, prev):
        d1 = _cell_data(N1, level, P1)
        d2 = _cell_data(N2, level, P2)
        if len(d1) != len(d2):
            return
        cells = sorted(d1, key=cell_key)
        psi, used = {}, set()

        def assign(C, D, trail):
            stack = [(C, D)]
            while stack:
                C, D = stack.pop()
                if C in psi:
                    if psi[C] != D:
                        return False
                    continue
                if D in used or D not in d2:
                    return False
                if level > 1 and D[:-1] != prev[C[:-1]]:
                    return False
                a, b = d1[C], d2[D]
                if a[2] != b[2] or a[3] != b[3]:
                    return False
                if _kind(a[0]) != _kind(b[0]) or _kind(a[1]) != _kind(b[1]):
                    return False
                psi[C] = D
                used.add(D)
                trail.append(C)
                if isinstance(a[0], tuple):
                    stack.append((a[0][1], b[0][1]))
                if isinstance(a[1], tuple):
                    stack.append((a[1][1], b[1][1]))
            return True

        def undo(trail):
            for C in trail:
                used.discard(psi.pop(C))

        def search(i):
            nodes[0] += 1
            if nodes[0] > budget:
                return
            while i < len(cells) and cells[i] in psi:
                i += 1
            if i == len(cells):
                yield dict(psi)
                return
            C = cells[i]
            cands = (N2.space.children(prev[C[:-1]]) if level > 1 else N2.space.cells(1))
            for D in sorted(cands, key=cell_key):
                trail = []
                if assign(C, D, trail):
                    yield from search(i + 1)
                undo(trail)

        yield from search(0)

    def descend(level, prev, acc):
        if level > depth:
            return acc
        for psi in complete_level(level, prev):
            got = descend(level + 1, psi, acc + [psi])
            if got is not None:
                return got
            if nodes[0] > budget:
                return None
        return None

    got = descend(1, {(): ()}, [])
    if got is not None:
        return ConjugacyWitness(got)
    if nodes[0] > budget:
        return Unknown(f"search budget of {budget} nodes exhausted")
    return Unknown(f"no cell-level conjugacy up to level {depth}")


def check_conjugacy_witness(N1, N2, witness: ConjugacyWitness) -> list:
    problems = []
    P1, P2 = PhiMap(N1), PhiMap(N2)
    for level, psi in enumerate(witness.maps, start=1):
        if len(set(psi.values())) != len(psi):
            problems.append(f"level {level}: not injective")
        for C, D in psi.items():
            a, b = P1(C), P2(D)
            if _kind(a) != _kind(b) or (isinstance(a, tuple) and psi.get(a[1]) != b[1]):
                problems.append(f"level {level}: Phi does not commute at {format_word(C)}")
                break
    return problems


# ---------------------------------------------------------------- relations

def relation_pairs(maps_by_n: Callable[[int], PartialHomeo], points: list, H: int) -> set:
    """Index pairs (a, b) with points[b] = f_n(points[a]) for some |n| <= H."""
    index = {p: i for i, p in enumerate(points)}
    out = set()
    for a, x in enumerate(points):
        out.add((a, a))
        for n in range(-H, H + 1):
            if n == 0:
                continue
            f = maps_by_n(n)
            if f.in_domain is None or not f.in_domain(x):
                continue
            y = f.point_map(x)
            b = index.get(y)
            if b is not None:
                out.add((a, b))
    return out


def cell_graph(pairs: set, points: list, level: int) -> set:
    return {(points[a].word(level), points[b].word(level)) for a, b in pairs}


def relation_mismatch(N1: NestedSequence, N2: NestedSequence, points: list, H: int,
                      max_level: int) -> tuple:
    """Compare the orbit relations of two nests on a finite point window.

    Returns (pairs agree, levels at which the projected cell graphs differ).
    """
    p1 = relation_pairs(N1.get, points, H)
    p2 = relation_pairs(N2.get, points, H)
    bad = [L for L in range(1, max_level + 1)
           if cell_graph(p1, points, L) != cell_graph(p2, points, L)]
    return p1 == p2, bad
