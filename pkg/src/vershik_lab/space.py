"""Finitely presented zero-dimensional compact spaces.

A space is a finitely branching tree of cells: a level-n cell is a word of n
symbols, its parent is the word with the last symbol dropped, and the cells of
one level partition the space.  Levels are generated on demand by a
``children`` callable, so infinite presentations (Cantor space, path spaces of
stationary diagrams) cost nothing until a level is touched.

Points are eventually periodic symbol sequences (a prefix followed by a
repeated cycle), or truncated points whose symbols are only known up to a
finite depth.  Partial homeomorphisms are cell-functional: they answer, for a
single cell, whether its image is a single cell of the same level, whether the
cell lies outside the domain, or whether a finer cell is needed.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Hashable, Iterable, Sequence

Word = tuple


class SpaceError(ValueError):
    pass


class EmptySpaceError(SpaceError):
    pass


class ResolutionExhausted(RuntimeError):
    """A cell image stayed unresolved down to the depth bound."""

    def __init__(self, message, cell=None, depth=None):
        super().__init__(message)
        self.cell = cell
        self.depth = depth


class OutsideDomain(ValueError):
    pass


def symbol_key(symbol):
    if isinstance(symbol, int):
        return (0, symbol, "")
    return (1, 0, str(symbol))


def cell_key(word):
    """Sort key for cells: shorter words first, then symbolwise."""
    return (len(word), tuple(symbol_key(s) for s in word))


def format_word(word) -> str:
    if not word:
        return "*"
    return ".".join(str(s) for s in word)


def parse_symbol(token: str):
    if token.lstrip("-").isdigit():
        return int(token)
    return token


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "*"):
        return ()
    return tuple(parse_symbol(t) for t in text.split("."))


class SymbolicSpace:
    """Refining sequence of finite partitions given by a children function.

    ``roots`` are the symbols of the level-1 cells and ``children(word)``
    returns the symbols that may follow ``word``.  ``tail_rules`` maps a rule
    name to a symbol cycle; a point built with that rule repeats the cycle
    forever after its prefix.
    """

    def __init__(self, roots, children: Callable[[Word], Iterable[Hashable]],
                 depth_bound: int = 16, tail_rules=None, name: str = "space"):
        roots = tuple(roots)
        if not roots:
            raise EmptySpaceError("level-1 partition must be nonempty")
        if depth_bound < 1:
            raise SpaceError("depth_bound must be positive")
        self.roots = roots
        self._children_fn = children
        self.depth_bound = int(depth_bound)
        self.tail_rules = dict(tail_rules or {})
        self.name = name
        self._child_cache = {(): roots}
        self._level_cache = {0: ((),)}

    def __repr__(self):
        return f"SymbolicSpace({self.name!r}, depth_bound={self.depth_bound})"

    def child_symbols(self, word: Word) -> tuple:
        word = tuple(word)
        got = self._child_cache.get(word)
        if got is None:
            got = tuple(self._children_fn(word))
            self._child_cache[word] = got
        return got

    def children(self, word: Word) -> list:
        word = tuple(word)
        return [word + (s,) for s in self.child_symbols(word)]

    def is_cell(self, word) -> bool:
        word = tuple(word)
        for i in range(len(word)):
            if word[i] not in self.child_symbols(word[:i]):
                return False
        return True

    def cells(self, level: int) -> tuple:
        """All cells of a level, in tree order."""
        if level < 0:
            raise SpaceError("negative level")
        got = self._level_cache.get(level)
        if got is not None:
            return got
        prev = self.cells(level - 1)
        out = []
        for w in prev:
            out.extend(self.children(w))
        got = tuple(out)
        self._level_cache[level] = got
        return got

    def count(self, level: int) -> int:
        return len(self.cells(level))

    def descendants(self, word: Word, level: int) -> list:
        word = tuple(word)
        if len(word) > level:
            raise SpaceError("cell is deeper than the requested level")
        frontier = [word]
        for _ in range(level - len(word)):
            nxt = []
            for w in frontier:
                nxt.extend(self.children(w))
            frontier = nxt
        return frontier

    def validate(self, depth: int | None = None) -> list:
        """Check the presentation down to ``depth``; returns problems found."""
        depth = min(depth or self.depth_bound, self.depth_bound)
        problems = []
        for level in range(depth):
            for w in self.cells(level):
                kids = self.child_symbols(w)
                if not kids:
                    problems.append(f"cell {format_word(w)} at level {level} has no children")
                elif len(set(kids)) != len(kids):
                    problems.append(f"cell {format_word(w)} repeats a child symbol")
        for name, cycle in self.tail_rules.items():
            if not cycle:
                problems.append(f"tail rule {name} has an empty cycle")
        return problems

    def point(self, prefix=(), tail=None) -> "Point":
        """Build a point from a prefix and a tail rule name or symbol cycle."""
        if isinstance(tail, str):
            if tail not in self.tail_rules:
                raise SpaceError(f"unknown tail rule {tail!r}")
            tail = self.tail_rules[tail]
        return Point(self, prefix, tail)


def _canonical_tail(prefix: tuple, cycle: tuple):
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and cycle[:d] * (n // d) == cycle:
            cycle = cycle[:d]
            break
    while prefix and prefix[-1] == cycle[-1]:
        prefix = prefix[:-1]
        cycle = (cycle[-1],) + cycle[:-1]
    return prefix, cycle


class Point:
    """A point given by a prefix and an optional repeating cycle.

    Without a cycle the point is truncated: only its first ``len(prefix)``
    symbols are known, and asking for a deeper cell raises
    ResolutionExhausted.
    """

    __slots__ = ("space", "prefix", "cycle")

    def __init__(self, space: SymbolicSpace, prefix=(), cycle=None):
        prefix = tuple(prefix)
        if cycle is not None:
            cycle = tuple(cycle)
            if not cycle:
                raise SpaceError("tail cycle must be nonempty")
            prefix, cycle = _canonical_tail(prefix, cycle)
        self.space = space
        self.prefix = prefix
        self.cycle = cycle

    @property
    def exact(self) -> bool:
        return self.cycle is not None

    def symbol(self, level: int):
        """Symbol at a level (levels start at 1)."""
        i = level - 1
        if i < len(self.prefix):
            return self.prefix[i]
        if self.cycle is None:
            raise ResolutionExhausted(
                f"point known only to depth {len(self.prefix)}", depth=level)
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def word(self, depth: int) -> Word:
        if depth <= len(self.prefix):
            return self.prefix[:depth]
        return self.prefix + tuple(self.symbol(k) for k in range(len(self.prefix) + 1, depth + 1))

    def cell_at(self, level: int) -> Word:
        return self.word(level)

    @property
    def known_depth(self):
        return None if self.cycle is not None else len(self.prefix)

    def check(self, depth: int | None = None) -> bool:
        depth = depth or self.space.depth_bound
        if self.cycle is None:
            depth = min(depth, len(self.prefix))
        return self.space.is_cell(self.word(depth))

    def agrees(self, other: "Point", depth: int) -> bool:
        return self.word(depth) == other.word(depth)

    def same(self, other: "Point", depth: int | None = None) -> bool:
        """Equality: exact when both points have cycles, else up to the known depth."""
        if self.cycle is not None and other.cycle is not None:
            return self.prefix == other.prefix and self.cycle == other.cycle
        limit = min(d for d in (self.known_depth, other.known_depth) if d is not None)
        if depth is not None:
            limit = min(limit, depth)
        return self.word(limit) == other.word(limit)

    def truncate(self, depth: int) -> "Point":
        return Point(self.space, self.word(depth), None)

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.prefix == other.prefix and self.cycle == other.cycle

    def __hash__(self):
        return hash((self.prefix, self.cycle))

    def __repr__(self):
        if self.cycle is None:
            return f"Point({format_word(self.prefix)}|?)"
        return f"Point({format_word(self.prefix)}|({format_word(self.cycle)}))"

    def to_text(self) -> str:
        head = format_word(self.prefix)
        if self.cycle is None:
            return head + "|?"
        return head + "|" + format_word(self.cycle)


def parse_point(space: SymbolicSpace, text: str) -> Point:
    """Parse ``prefix|cycle`` (cycle ``?`` for a truncated point, or a tail rule name)."""
    if "|" not in text:
        return Point(space, parse_word(text), None)
    head, tail = text.split("|", 1)
    tail = tail.strip()
    if tail == "?":
        return Point(space, parse_word(head), None)
    if tail in space.tail_rules:
        return Point(space, parse_word(head), space.tail_rules[tail])
    return Point(space, parse_word(head), parse_word(tail))


class ClopenSet:
    """Finite union of cells, kept in canonical form.

    Canonical form is an antichain of cells (no cell contains another) in
    which no complete family of siblings remains unmerged.  The whole space
    is the single empty word.
    """

    __slots__ = ("space", "cells", "_prefixes")

    def __init__(self, space: SymbolicSpace, cells: Iterable = (), canonical: bool = False):
        self.space = space
        cells = frozenset(tuple(c) for c in cells)
        if not canonical:
            cells = _canonicalize(space, _antichain(cells))
        self.cells = cells
        self._prefixes = None

    @classmethod
    def full(cls, space):
        return cls(space, [()], canonical=True)

    @classmethod
    def empty(cls, space):
        return cls(space, [], canonical=True)

    @property
    def level(self) -> int:
        return max((len(c) for c in self.cells), default=0)

    def sorted_cells(self) -> list:
        return sorted(self.cells, key=cell_key)

    def __iter__(self):
        return iter(self.sorted_cells())

    def __len__(self):
        return len(self.cells)

    def __bool__(self):
        return bool(self.cells)

    def is_empty(self) -> bool:
        return not self.cells

    def is_full(self) -> bool:
        return self.cells == frozenset([()])

    def __eq__(self, other):
        if not isinstance(other, ClopenSet):
            return NotImplemented
        return self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        inner = ", ".join(format_word(c) for c in self.sorted_cells())
        return "{" + inner + "}"

    def _prefix_set(self):
        if self._prefixes is None:
            pre = set()
            for c in self.cells:
                for i in range(len(c)):
                    pre.add(c[:i])
            self._prefixes = pre
        return self._prefixes

    def contains_cell(self, word) -> bool:
        word = tuple(word)
        cells = self.cells
        for i in range(len(word) + 1):
            if word[:i] in cells:
                return True
        return False

    def meets_cell(self, word) -> bool:
        word = tuple(word)
        return self.contains_cell(word) or word in self._prefix_set()

    def contains_point(self, x: Point) -> bool:
        depth = self.level
        return self.contains_cell(x.word(depth))

    def at_level(self, level: int) -> frozenset:
        out = set()
        for c in self.cells:
            if len(c) > level:
                raise SpaceError(
                    f"cell {format_word(c)} is finer than level {level}")
            out.update(self.space.descendants(c, level))
        return frozenset(out)

    def union(self, other: "ClopenSet") -> "ClopenSet":
        if not other.cells:
            return self
        if not self.cells:
            return other
        return ClopenSet(self.space, self.cells | other.cells)

    def intersection(self, other: "ClopenSet") -> "ClopenSet":
        keep = [a for a in self.cells if other.contains_cell(a)]
        keep += [b for b in other.cells if self.contains_cell(b)]
        return ClopenSet(self.space, keep)

    def difference(self, other: "ClopenSet") -> "ClopenSet":
        if not other.cells:
            return self
        out = []
        other_pre = other._prefix_set()
        stack = list(self.cells)
        while stack:
            a = stack.pop()
            if other.contains_cell(a):
                continue
            if a in other_pre:
                stack.extend(self.space.children(a))
            else:
                out.append(a)
        return ClopenSet(self.space, out)

    def complement(self) -> "ClopenSet":
        return ClopenSet.full(self.space).difference(self)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "ClopenSet") -> bool:
        return all(other.contains_cell(a) for a in self.cells) if self.cells else True

    def isdisjoint(self, other: "ClopenSet") -> bool:
        return not any(other.meets_cell(a) for a in self.cells)

    __le__ = issubset

    def to_text(self) -> str:
        if not self.cells:
            return "{}"
        return " ".join(format_word(c) for c in self.sorted_cells())


def _antichain(cells: frozenset) -> frozenset:
    out = []
    for c in cells:
        if not any(c[:i] in cells for i in range(len(c))):
            out.append(c)
    return frozenset(out)


def _canonicalize(space: SymbolicSpace, cells: frozenset) -> frozenset:
    by_len = defaultdict(set)
    for c in cells:
        by_len[len(c)].add(c)
    top = max(by_len, default=0)
    for length in range(top, 0, -1):
        level_cells = by_len.get(length)
        if not level_cells:
            continue
        groups = defaultdict(set)
        for c in level_cells:
            groups[c[:-1]].add(c[-1])
        for parent, syms in groups.items():
            kids = space.child_symbols(parent)
            if len(syms) == len(kids) and syms.issuperset(kids):
                for s in syms:
                    level_cells.discard(parent + (s,))
                by_len[length - 1].add(parent)
    out = set()
    for group in by_len.values():
        out.update(group)
    return frozenset(out)


def clopen(space: SymbolicSpace, cells: Iterable) -> ClopenSet:
    """Build a canonical ClopenSet from words or dotted-word strings."""
    words = [parse_word(c) if isinstance(c, str) else tuple(c) for c in cells]
    return ClopenSet(space, words)


class Resolved:
    __slots__ = ("cell",)

    def __init__(self, cell):
        self.cell = tuple(cell)

    def __eq__(self, other):
        return isinstance(other, Resolved) and other.cell == self.cell

    def __hash__(self):
        return hash(("resolved", self.cell))

    def __repr__(self):
        return f"Resolved({format_word(self.cell)})"


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


UNRESOLVED = _Marker("UNRESOLVED")
OUTSIDE = _Marker("OUTSIDE")


def _no_cells(level):
    return frozenset()


class PartialHomeo:
    """Partial homeomorphism of a SymbolicSpace given cell by cell.

    ``forward(cell)`` and ``backward(cell)`` return Resolved(image cell of the
    same level), UNRESOLVED or OUTSIDE.  Resolved means the whole cell lies in
    the domain and is mapped onto the image cell.  ``xmax(level)`` lists the
    level cells approximating the complement of the domain; at the depth
    bound, cells in that list are treated as negligible instead of raising
    ResolutionExhausted.  ``xmin`` plays the same role for the range.

    ``point_map``/``point_inverse`` optionally evaluate the map exactly on
    eventually periodic points, and ``in_domain``/``in_range`` decide exact
    membership; both fall back to cell resolution when absent.
    """

    def __init__(self, space: SymbolicSpace, forward, backward=None, *,
                 xmax=None, xmin=None, point_map=None, point_inverse=None,
                 in_domain=None, in_range=None, name: str = "phi"):
        self.space = space
        self._forward = forward
        self._backward = backward
        self._xmax = xmax or _no_cells
        self._xmin = xmin or _no_cells
        self.point_map = point_map
        self.point_inverse = point_inverse
        self.in_domain = in_domain
        self.in_range = in_range
        self.name = name
        self._fcache = {}
        self._bcache = {}
        self._xmax_cache = {}
        self._xmin_cache = {}

    def __repr__(self):
        return f"PartialHomeo({self.name!r})"

    def cell_image(self, cell):
        cell = tuple(cell)
        got = self._fcache.get(cell)
        if got is None:
            got = self._forward(cell)
            self._fcache[cell] = got
        return got

    def inverse_cell_image(self, cell):
        if self._backward is None:
            raise NotImplementedError(f"{self.name} has no inverse cell map")
        cell = tuple(cell)
        got = self._bcache.get(cell)
        if got is None:
            got = self._backward(cell)
            self._bcache[cell] = got
        return got

    def xmax_cells(self, level: int) -> frozenset:
        got = self._xmax_cache.get(level)
        if got is None:
            got = frozenset(tuple(c) for c in self._xmax(level))
            self._xmax_cache[level] = got
        return got

    def xmin_cells(self, level: int) -> frozenset:
        got = self._xmin_cache.get(level)
        if got is None:
            got = frozenset(tuple(c) for c in self._xmin(level))
            self._xmin_cache[level] = got
        return got

    def inverse(self) -> "PartialHomeo":
        inv = PartialHomeo(self.space, self._backward, self._forward,
                           xmax=self._xmin, xmin=self._xmax,
                           point_map=self.point_inverse, point_inverse=self.point_map,
                           in_domain=self.in_range, in_range=self.in_domain,
                           name=self.name + "^-1")
        inv._fcache = self._bcache
        inv._bcache = self._fcache
        return inv

    def compose(self, first: "PartialHomeo", name=None) -> "PartialHomeo":
        """The map ``self after first``."""
        second = self

        def fwd(cell):
            r = first.cell_image(cell)
            if r is OUTSIDE:
                return OUTSIDE
            if r is UNRESOLVED:
                return UNRESOLVED
            r2 = second.cell_image(r.cell)
            if r2 is OUTSIDE:
                return OUTSIDE
            return r2

        def bwd(cell):
            r = second.inverse_cell_image(cell)
            if r is OUTSIDE:
                return OUTSIDE
            if r is UNRESOLVED:
                return UNRESOLVED
            r2 = first.inverse_cell_image(r.cell)
            if r2 is OUTSIDE:
                return OUTSIDE
            return r2

        def xmax(level):
            out = set(first.xmax_cells(level))
            for c in second.xmax_cells(level):
                r = first.inverse_cell_image(c) if first._backward else UNRESOLVED
                if isinstance(r, Resolved):
                    out.add(r.cell)
            return out

        def xmin(level):
            out = set(second.xmin_cells(level))
            for c in first.xmin_cells(level):
                r = second.cell_image(c)
                if isinstance(r, Resolved):
                    out.add(r.cell)
            return out

        pm = pi = dom = ran = None
        if first.point_map and second.point_map and first.in_domain and second.in_domain:
            def pm(x):
                return second.point_map(first.point_map(x))

            def dom(x):
                return first.in_domain(x) and second.in_domain(first.point_map(x))
        if first.point_inverse and second.point_inverse and first.in_range and second.in_range:
            def pi(y):
                return first.point_inverse(second.point_inverse(y))

            def ran(y):
                return second.in_range(y) and first.in_range(second.point_inverse(y))
        return PartialHomeo(self.space, fwd, bwd, xmax=xmax, xmin=xmin,
                            point_map=pm, point_inverse=pi, in_domain=dom, in_range=ran,
                            name=name or f"{second.name}.{first.name}")


def identity_map(space: SymbolicSpace, name="id") -> PartialHomeo:
    return PartialHomeo(space, Resolved, Resolved,
                        point_map=lambda x: x, point_inverse=lambda x: x,
                        in_domain=lambda x: True, in_range=lambda x: True, name=name)


def empty_map(space: SymbolicSpace, name="empty") -> PartialHomeo:
    def out(cell):
        return OUTSIDE if cell else UNRESOLVED

    def everything(level):
        return space.cells(level)
    return PartialHomeo(space, out, out, xmax=everything, xmin=everything,
                        point_map=None, point_inverse=None,
                        in_domain=lambda x: False, in_range=lambda x: False, name=name)


def _bound(phi: PartialHomeo, depth):
    return phi.space.depth_bound if depth is None else min(depth, phi.space.depth_bound)


def image_pieces(phi: PartialHomeo, cell, depth: int | None = None,
                 negligible_from: int | None = None, drop_at_bound: bool = False) -> list:
    """Image cells of ``cell`` minus the domain complement, refined as needed.

    Unresolved cells in the X_max approximation are dropped once their level
    reaches ``negligible_from`` (default: the depth bound); other unresolved
    cells are refined down to the bound, where they raise
    ResolutionExhausted unless ``drop_at_bound`` is set.  Dropping gives an
    under-approximation of the image.
    """
    bound = _bound(phi, depth)
    neg = bound if negligible_from is None else negligible_from
    out = []
    stack = [tuple(cell)]
    while stack:
        c = stack.pop()
        r = phi.cell_image(c) if c else UNRESOLVED
        if isinstance(r, Resolved):
            out.append(r.cell)
            continue
        if r is OUTSIDE:
            continue
        if len(c) >= neg and c in phi.xmax_cells(len(c)):
            continue
        if len(c) >= bound:
            if drop_at_bound:
                continue
            raise ResolutionExhausted(
                f"{phi.name}: cell {format_word(c)} unresolved at depth {bound}",
                cell=c, depth=bound)
        stack.extend(phi.space.children(c))
    return out


def image_clopen(phi: PartialHomeo, A: ClopenSet, depth: int | None = None,
                 negligible_from: int | None = None, drop_at_bound: bool = False) -> ClopenSet:
    """phi(A minus X_max) as a canonical clopen set."""
    pieces = []
    for c in A.cells:
        pieces.extend(image_pieces(phi, c, depth, negligible_from, drop_at_bound))
    return ClopenSet(phi.space, pieces)


def preimage_clopen(phi: PartialHomeo, A: ClopenSet, depth: int | None = None,
                    negligible_from: int | None = None) -> ClopenSet:
    return image_clopen(phi.inverse(), A, depth, negligible_from)


def pullback_union_max(phi: PartialHomeo, Y: ClopenSet, Xmax: ClopenSet | None = None,
                       depth: int | None = None) -> ClopenSet:
    """Z = phi^-1(Y) together with the X_max approximation, as a finite cell union."""
    bound = _bound(phi, depth)
    if Xmax is None:
        Xmax = ClopenSet(phi.space, phi.xmax_cells(bound))
    return preimage_clopen(phi, Y, bound).union(Xmax)


def in_domain(phi: PartialHomeo, x: Point, depth: int | None = None) -> bool:
    """Decide x in dom(phi): exactly when possible, else by cell resolution."""
    if phi.in_domain is not None and x.exact:
        return bool(phi.in_domain(x))
    bound = _bound(phi, depth)
    if x.known_depth is not None:
        bound = min(bound, x.known_depth)
    for level in range(1, bound + 1):
        r = phi.cell_image(x.cell_at(level))
        if isinstance(r, Resolved):
            return True
        if r is OUTSIDE:
            return False
    if x.cell_at(bound) in phi.xmax_cells(bound):
        return False
    raise ResolutionExhausted(f"{phi.name}: membership of {x} unresolved at depth {bound}",
                              depth=bound)


def apply(phi: PartialHomeo, x: Point, target_depth: int | None = None) -> Point:
    """phi(x), exact when the map can evaluate points, else resolved to target_depth."""
    space = phi.space
    target = space.depth_bound if target_depth is None else target_depth
    if target > space.depth_bound:
        raise SpaceError("target_depth exceeds the space depth bound")
    if phi.point_map is not None and x.exact:
        if phi.in_domain is not None and not phi.in_domain(x):
            raise OutsideDomain(f"{x} is outside dom {phi.name}")
        return phi.point_map(x)
    bound = space.depth_bound
    if x.known_depth is not None:
        bound = min(bound, x.known_depth)
    for level in range(1, bound + 1):
        r = phi.cell_image(x.cell_at(level))
        if r is OUTSIDE:
            raise OutsideDomain(f"{x} is outside dom {phi.name}")
        if isinstance(r, Resolved):
            depth = max(level, min(target, bound))
            image = r.cell
            for deeper in range(level + 1, depth + 1):
                r2 = phi.cell_image(x.cell_at(deeper))
                if not isinstance(r2, Resolved) or r2.cell[:len(image)] != image:
                    raise SpaceError(f"{phi.name}: resolution is not monotone at level {deeper}")
                image = r2.cell
            return Point(space, image, None)
    if x.cell_at(bound) in phi.xmax_cells(bound):
        raise OutsideDomain(f"{x} lies in the X_max approximation of {phi.name}")
    raise ResolutionExhausted(f"{phi.name}: image of {x} unresolved at depth {bound}",
                              depth=bound)


def check_partial_homeo(phi: PartialHomeo, depth: int) -> list:
    """Invariant checks on all cells down to ``depth``; returns problems found."""
    problems = []
    space = phi.space
    depth = min(depth, space.depth_bound)
    for level in range(1, depth + 1):
        images = {}
        for c in space.cells(level):
            r = phi.cell_image(c)
            if isinstance(r, Resolved):
                if len(r.cell) != level:
                    problems.append(f"{format_word(c)}: image at wrong level")
                    continue
                if r.cell in images:
                    problems.append(f"cells {format_word(images[r.cell])} and {format_word(c)} "
                                    f"share the image {format_word(r.cell)}")
                images[r.cell] = c
                if phi._backward is not None:
                    back = phi.inverse_cell_image(r.cell)
                    if back != Resolved(c):
                        problems.append(f"{format_word(c)}: inverse does not return the cell")
                if level < depth:
                    for child in space.children(c):
                        r2 = phi.cell_image(child)
                        if not isinstance(r2, Resolved) or r2.cell[:-1] != r.cell:
                            problems.append(f"{format_word(child)}: resolution not monotone")
            elif r is OUTSIDE and level < depth:
                for child in space.children(c):
                    if phi.cell_image(child) is not OUTSIDE:
                        problems.append(f"{format_word(child)}: leaves OUTSIDE under refinement")
    return problems


def cell_map(phi: PartialHomeo, level: int, cells=None) -> dict:
    """Resolved cell images at one level, as a dict."""
    out = {}
    for c in (cells if cells is not None else phi.space.cells(level)):
        r = phi.cell_image(c)
        if isinstance(r, Resolved):
            out[c] = r.cell
    return out


def table_map(space: SymbolicSpace, forward_tables: dict, backward_tables: dict | None = None,
              name: str = "phi") -> PartialHomeo:
    """PartialHomeo from explicit per-level tables {level: {cell: Resolved|UNRESOLVED|OUTSIDE}}.

    Cells of the deepest tabulated level that are UNRESOLVED form the X_max
    approximation there; likewise for the backward tables and X_min.
    """
    depth = max(forward_tables) if forward_tables else 0

    def lookup(tables):
        def f(cell):
            t = tables.get(len(cell))
            if t is None:
                return UNRESOLVED
            return t.get(tuple(cell), OUTSIDE)
        return f

    if backward_tables is None:
        backward_tables = invert_tables(space, forward_tables)

    def unresolved(tables):
        def f(level):
            t = tables.get(level)
            if t is None:
                return frozenset()
            return frozenset(c for c, r in t.items() if r is UNRESOLVED)
        return f

    phi = PartialHomeo(space, lookup(forward_tables), lookup(backward_tables),
                       xmax=unresolved(forward_tables), xmin=unresolved(backward_tables),
                       name=name)
    phi.tables = (forward_tables, backward_tables)
    phi.table_depth = depth
    return phi


def invert_tables(space: SymbolicSpace, forward_tables: dict) -> dict:
    """Backward tables from forward ones, deriving coarse entries from the finest level."""
    if not forward_tables:
        return {}
    depth = max(forward_tables)
    out = {}
    finest = {}
    for c, r in forward_tables[depth].items():
        if isinstance(r, Resolved):
            finest[r.cell] = c
    for level in range(depth, 0, -1):
        table = {}
        tab = forward_tables.get(level, {})
        hit = {r.cell: c for c, r in tab.items() if isinstance(r, Resolved)}
        for d in space.cells(level):
            if d in hit:
                table[d] = Resolved(hit[d])
                continue
            below = space.descendants(d, depth)
            n_hit = sum(1 for b in below if b in finest)
            table[d] = OUTSIDE if n_hit == 0 else UNRESOLVED
        out[level] = table
    return out


def tabulate(phi: PartialHomeo, depth: int) -> tuple:
    """Forward and backward tables of a map for all levels down to ``depth``."""
    fwd, bwd = {}, {}
    for level in range(1, depth + 1):
        cells = phi.space.cells(level)
        fwd[level] = {c: phi.cell_image(c) for c in cells}
        bwd[level] = {c: phi.inverse_cell_image(c) for c in cells}
    return fwd, bwd


def truncated_space(space: SymbolicSpace, depth: int, name=None) -> SymbolicSpace:
    """The same tree cut at ``depth``: cells of the last level get no children."""

    def kids(word):
        if len(word) >= depth:
            return ()
        return space.child_symbols(word)

    return SymbolicSpace(space.roots, kids, depth_bound=depth,
                         tail_rules=space.tail_rules, name=name or space.name)


def table_space(cells_by_level: Sequence, tail_rules=None, name="space") -> SymbolicSpace:
    """Space from explicit cell lists per level (level 1 first)."""
    kids = defaultdict(list)
    depth = len(cells_by_level)
    for level, cells in enumerate(cells_by_level, start=1):
        for c in cells:
            c = tuple(c)
            if len(c) != level:
                raise SpaceError(f"cell {format_word(c)} listed at level {level}")
            if level > 1 and c[:-1] not in set(map(tuple, cells_by_level[level - 2])):
                raise SpaceError(f"cell {format_word(c)} has no parent")
            if c[-1] not in kids[c[:-1]]:
                kids[c[:-1]].append(c[-1])
    roots = tuple(kids[()])

    def children(word):
        if len(word) >= depth:
            return ()
        return tuple(kids.get(tuple(word), ()))

    return SymbolicSpace(roots, children, depth_bound=depth, tail_rules=tail_rules, name=name)
