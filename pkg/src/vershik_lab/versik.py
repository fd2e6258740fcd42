"""Path spaces of ordered Bratteli diagrams and the Vershik successor map.

A finite path is a tuple of edge indices, one per level; the index at level
n points into ``B.edge_level(n).edges``.  Paths into one vertex are linearly
ordered by the successor map, which bumps the first non-maximal edge and
resets everything below it to the minimal path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import pds
from .bratteli import OrderedBratteliDiagram
from .space import (OUTSIDE, UNRESOLVED, ClopenSet, OutsideDomain, PartialHomeo, Point,
                    Resolved, ResolutionExhausted, SymbolicSpace)


class _NeedDeeper:
    def __repr__(self):
        return "NEED_DEEPER"

    def __bool__(self):
        return False


NEED_DEEPER = _NeedDeeper()


class MaximalPoint(ValueError):
    pass


class MinimalPoint(ValueError):
    pass


class PathError(ValueError):
    pass


def end_vertex(B: OrderedBratteliDiagram, path) -> str:
    if not path:
        return B.root
    return B.edge_level(len(path)).edges[path[-1]].range


def is_path(B: OrderedBratteliDiagram, path) -> bool:
    v = B.root
    for n, i in enumerate(path, start=1):
        if not B.has_level(n):
            return False
        E = B.edge_level(n)
        if not 0 <= i < len(E.edges) or E.edges[i].source != v:
            return False
        v = E.edges[i].range
    return True


def minimal_path(B: OrderedBratteliDiagram, vertex, level: int) -> tuple:
    """The unique path of all minimal edges from the root to ``vertex`` at ``level``."""
    out = []
    v = vertex
    for n in range(level, 0, -1):
        E = B.edge_level(n)
        i = E.min_edge(v)
        out.append(i)
        v = E.edges[i].source
    return tuple(reversed(out))


def maximal_path(B: OrderedBratteliDiagram, vertex, level: int) -> tuple:
    out = []
    v = vertex
    for n in range(level, 0, -1):
        E = B.edge_level(n)
        i = E.max_edge(v)
        out.append(i)
        v = E.edges[i].source
    return tuple(reversed(out))


def is_maximal(B, path) -> bool:
    return all(B.edge_level(n).is_max(i) for n, i in enumerate(path, start=1))


def is_minimal(B, path) -> bool:
    return all(B.edge_level(n).is_min(i) for n, i in enumerate(path, start=1))


def successor(B: OrderedBratteliDiagram, path):
    """Next path into the same vertex, or NEED_DEEPER if every edge is maximal."""
    path = tuple(path)
    for k, i in enumerate(path, start=1):
        E = B.edge_level(k)
        nxt = E.next_in_fiber(i)
        if nxt is not None:
            head = minimal_path(B, E.edges[nxt].source, k - 1)
            return head + (nxt,) + path[k:]
    return NEED_DEEPER


def predecessor(B: OrderedBratteliDiagram, path):
    path = tuple(path)
    for k, i in enumerate(path, start=1):
        E = B.edge_level(k)
        prv = E.prev_in_fiber(i)
        if prv is not None:
            head = maximal_path(B, E.edges[prv].source, k - 1)
            return head + (prv,) + path[k:]
    return NEED_DEEPER


def rank_in_fiber(B: OrderedBratteliDiagram, path) -> int:
    """Position of the path among all paths into its end vertex, in successor order."""
    rank = 0
    for n, i in enumerate(path, start=1):
        E = B.edge_level(n)
        counts = B.path_counts(n - 1)
        e = E.edges[i]
        for j in E.fiber(e.range):
            if j == i:
                break
            rank += counts[E.edges[j].source]
    return rank


def enumerate_paths(B: OrderedBratteliDiagram, level: int) -> list:
    """All depth-``level`` paths, grouped by end vertex and in successor order."""
    out = []
    for v in B.vertices(level):
        p = minimal_path(B, v, level)
        while p is not NEED_DEEPER:
            out.append(p)
            p = successor(B, p)
    return out


def path_counts(B: OrderedBratteliDiagram, level: int) -> dict:
    return dict(B.path_counts(level))


def extreme_tail_edge(B, level: int, vertex, which: str) -> int:
    """First edge out of ``vertex`` at ``level`` that is maximal (or minimal) in its fiber."""
    E = B.edge_level(level)
    test = E.is_max if which == "max" else E.is_min
    for i in E.out_edges(vertex):
        if test(i):
            return i
    raise PathError(f"no {which}imal edge leaves {vertex} at level {level}")


@dataclass(frozen=True)
class TailMax:
    def __str__(self):
        return "max"


@dataclass(frozen=True)
class TailMin:
    def __str__(self):
        return "min"


@dataclass(frozen=True)
class TailPeriodic:
    """Edge at level n beyond the prefix is word[(n - 1) % len(word)]."""
    word: tuple

    def __str__(self):
        return "per(" + ",".join(str(i) for i in self.word) + ")"


class PathPoint:
    """An infinite path: a finite prefix followed by a deterministic tail rule."""

    def __init__(self, B: OrderedBratteliDiagram, prefix=(), tail=TailMin()):
        self.B = B
        self.prefix = tuple(prefix)
        self.tail = tail
        if not is_path(B, self.prefix):
            raise PathError(f"{self.prefix} is not a path")
        if isinstance(tail, TailPeriodic) and not tail.word:
            raise PathError("periodic tail needs a nonempty word")
        self._cache = list(self.prefix)

    def edge(self, level: int) -> int:
        while len(self._cache) < level:
            n = len(self._cache) + 1
            v = end_vertex(self.B, self._cache)
            if isinstance(self.tail, TailPeriodic):
                i = self.tail.word[(n - 1) % len(self.tail.word)]
                E = self.B.edge_level(n)
                if not 0 <= i < len(E.edges) or E.edges[i].source != v:
                    raise PathError(f"periodic tail does not continue from {v} at level {n}")
            else:
                i = extreme_tail_edge(self.B, n, v, "max" if isinstance(self.tail, TailMax) else "min")
            self._cache.append(i)
        return self._cache[level - 1]

    def edges(self, depth: int) -> tuple:
        if depth:
            self.edge(depth)
        return tuple(self._cache[:depth])

    cell_at = edges

    def vertex(self, level: int):
        return end_vertex(self.B, self.edges(level))

    def __eq__(self, other):
        if not isinstance(other, PathPoint):
            return NotImplemented
        if self.tail != other.tail or self.B is not other.B:
            return False
        n = max(len(self.prefix), len(other.prefix))
        return self.edges(n) == other.edges(n) and self.vertex(n) == other.vertex(n)

    def __hash__(self):
        return hash((str(self.tail),))

    def __repr__(self):
        return f"PathPoint({format_path(self.B, self.prefix)}|{self.tail})"

    def to_point(self, space: SymbolicSpace) -> Point:
        """Exact eventually periodic symbol sequence (stationary diagrams only)."""
        if not self.B.infinite:
            raise PathError("exact points need a stationary extension")
        if isinstance(self.tail, TailPeriodic):
            word = self.tail.word
            shift = len(self.prefix) % len(word)
            self.edge(len(self.prefix) + len(word))
            return Point(space, self.prefix, word[shift:] + word[:shift])
        N, p = self.B.depth, self.B.extension.period
        n = max(len(self.prefix), N) + 1
        seen = {}
        while True:
            state = (self.vertex(n - 1), (n - N) % p)
            if state in seen:
                first = seen[state]
                word = self.edges(n - 1)
                return Point(space, word[:first - 1], word[first - 1:])
            seen[state] = n
            n += 1


def _search_limit(x: PathPoint, target_depth: int) -> int:
    B = x.B
    base = max(len(x.prefix), target_depth, B.depth)
    if not B.infinite:
        return B.depth
    p = B.extension.period
    width = max(len(B.vertices(B.depth)), 1)
    if isinstance(x.tail, TailPeriodic):
        width *= len(x.tail.word)
    return base + 2 * p * width + 2


def successor_point(x: PathPoint, target_depth: int = 0) -> PathPoint:
    """Vershik successor of an infinite path."""
    B = x.B
    if isinstance(x.tail, TailMax) and is_maximal(B, x.prefix):
        raise MaximalPoint(f"{x} is a maximal path")
    limit = _search_limit(x, target_depth)
    for k in range(1, limit + 1):
        if not B.has_level(k):
            break
        if not B.edge_level(k).is_max(x.edge(k)):
            n = max(k, len(x.prefix))
            head = successor(B, x.edges(k))
            return PathPoint(B, head + x.edges(n)[k:], x.tail)
    if B.infinite:
        raise MaximalPoint(f"{x} is a maximal path")
    raise ResolutionExhausted(f"no non-maximal edge within depth {limit}", depth=limit)


def predecessor_point(x: PathPoint, target_depth: int = 0) -> PathPoint:
    B = x.B
    if isinstance(x.tail, TailMin) and is_minimal(B, x.prefix):
        raise MinimalPoint(f"{x} is a minimal path")
    limit = _search_limit(x, target_depth)
    for k in range(1, limit + 1):
        if not B.has_level(k):
            break
        if not B.edge_level(k).is_min(x.edge(k)):
            n = max(k, len(x.prefix))
            head = predecessor(B, x.edges(k))
            return PathPoint(B, head + x.edges(n)[k:], x.tail)
    if B.infinite:
        raise MinimalPoint(f"{x} is a minimal path")
    raise ResolutionExhausted(f"no non-minimal edge within depth {limit}", depth=limit)


class _NotCofinal:
    def __repr__(self):
        return "NotCofinal"

    def __bool__(self):
        return False


NOT_COFINAL = _NotCofinal()


def counting_cocycle(x: PathPoint, y: PathPoint, depth: int):
    """Signed number of successor steps from x to y, decided at ``depth``.

    x and y are cofinal by ``depth`` when they pass through the same vertex at
    that level and agree on every edge beyond it; the value is then the
    difference of their ranks.  Otherwise NOT_COFINAL.
    """
    if x.B is not y.B:
        raise PathError("points live on different diagrams")
    if x.tail != y.tail:
        return NOT_COFINAL
    n = max(len(x.prefix), len(y.prefix), depth)
    if x.vertex(depth) != y.vertex(depth):
        return NOT_COFINAL
    if x.edges(n)[depth:] != y.edges(n)[depth:]:
        return NOT_COFINAL
    return rank_in_fiber(x.B, y.edges(depth)) - rank_in_fiber(x.B, x.edges(depth))


def path_space(B: OrderedBratteliDiagram, depth_bound: int = 16, name=None) -> SymbolicSpace:
    """Cells are finite paths; finite diagrams stop at their depth."""
    bound = depth_bound if B.infinite else min(depth_bound, B.depth)

    def children(word):
        n = len(word) + 1
        if n > bound or not B.has_level(n):
            return ()
        return tuple(B.edge_level(n).out_edges(end_vertex(B, word)))

    roots = children(())
    tails = {}
    if B.infinite and len(B.vertices(B.depth)) == 1 and B.extension.period == 1:
        E = B.edge_level(B.depth + 1)
        w = B.vertices(B.depth)[0]
        tails = {"max": (E.max_edge(w),), "min": (E.min_edge(w),)}
    return SymbolicSpace(roots, children, depth_bound=bound, tail_rules=tails,
                         name=name or f"paths({B.name})")


def _exact_shift(B, space, forward: bool):
    step = successor if forward else predecessor

    def limit(x):
        p = B.extension.period
        return len(x.prefix) + max(len(x.cycle), 1) * p * 2 + B.depth + 1

    def first_free(x):
        for k in range(1, limit(x) + 1):
            E = B.edge_level(k)
            e = x.symbol(k)
            if not (E.is_max(e) if forward else E.is_min(e)):
                return k
        return None

    def in_dom(x):
        return first_free(x) is not None

    def apply_(x):
        k = first_free(x)
        if k is None:
            raise OutsideDomain(f"{x} is an extreme path")
        head = step(B, x.word(k))
        n = max(k, len(x.prefix))
        new_prefix = head + x.word(n)[k:]
        return Point(space, new_prefix, x.cycle[(n - len(x.prefix)) % len(x.cycle):]
                     + x.cycle[:(n - len(x.prefix)) % len(x.cycle)])

    return apply_, in_dom


def versik_map(B: OrderedBratteliDiagram, space: SymbolicSpace) -> PartialHomeo:
    def fwd(cell):
        if not cell:
            return UNRESOLVED
        s = successor(B, cell)
        return UNRESOLVED if s is NEED_DEEPER else Resolved(s)

    def bwd(cell):
        if not cell:
            return UNRESOLVED
        s = predecessor(B, cell)
        return UNRESOLVED if s is NEED_DEEPER else Resolved(s)

    def xmax(level):
        if level == 0 or not B.has_level(level):
            return ()
        return [maximal_path(B, v, level) for v in B.vertices(level)]

    def xmin(level):
        if level == 0 or not B.has_level(level):
            return ()
        return [minimal_path(B, v, level) for v in B.vertices(level)]

    kw = {}
    if B.infinite:
        pm, dom = _exact_shift(B, space, True)
        pi, ran = _exact_shift(B, space, False)
        kw = dict(point_map=pm, in_domain=dom, point_inverse=pi, in_range=ran)
    return PartialHomeo(space, fwd, bwd, xmax=xmax, xmin=xmin, name=f"vershik({B.name})", **kw)


def versik_system(B: OrderedBratteliDiagram, depth_bound: int = 16) -> pds.BratteliSystem:
    space = path_space(B, depth_bound)
    return pds.BratteliSystem(space, versik_map(B, space), name=f"vershik({B.name})")


def check_orbit_cofinality(B: OrderedBratteliDiagram, U, bound: int = 4096,
                           depth: Optional[int] = None, backward: bool = False):
    """Covering check for the Vershik system on a union of cylinders.

    ``U`` is a ClopenSet on the path space or an iterable of finite paths.
    """
    if isinstance(U, ClopenSet):
        level = depth or U.level
        S = versik_system(B, max(level, 1))
        U = ClopenSet(S.space, U.cells)
    else:
        paths = [tuple(p) for p in U]
        level = depth or max((len(p) for p in paths), default=1)
        S = versik_system(B, max(level, 1))
        U = ClopenSet(S.space, paths)
    if backward:
        return pds.check_axiom_backward(S, U, bound, level)
    return pds.check_axiom_forward(S, U, bound, level)


def format_path(B: OrderedBratteliDiagram, path) -> str:
    """Order indices joined by commas; ``k@w`` when the order index alone is ambiguous."""
    parts = []
    v = B.root
    for n, i in enumerate(path, start=1):
        E = B.edge_level(n)
        e = E.edges[i]
        same = [j for j in E.out_edges(v) if E.edges[j].order == e.order]
        parts.append(str(e.order) if len(same) == 1 else f"{e.order}@{e.range}")
        v = e.range
    return ",".join(parts)


def parse_path(B: OrderedBratteliDiagram, text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    out = []
    v = B.root
    for n, tok in enumerate(text.split(","), start=1):
        tok = tok.strip()
        if not B.has_level(n):
            raise PathError(f"path is longer than the diagram ({n} levels)")
        E = B.edge_level(n)
        if "@" in tok:
            k_text, w = tok.split("@", 1)
            k = int(k_text)
            fib = E.fiber(w)
            if k >= len(fib):
                raise PathError(f"vertex {w} at level {n} has no edge of order {k}")
            i = fib[k]
            if E.edges[i].source != v:
                raise PathError(f"edge {tok} at level {n} does not start at {v}")
        else:
            k = int(tok)
            same = [j for j in E.out_edges(v) if E.edges[j].order == k]
            if not same:
                raise PathError(f"no edge of order {k} leaves {v} at level {n}")
            if len(same) > 1:
                raise PathError(f"order {k} at level {n} is ambiguous; write k@vertex")
            i = same[0]
        out.append(i)
        v = E.edges[i].range
    return tuple(out)


def parse_tail(text: str):
    text = text.strip()
    if text == "max":
        return TailMax()
    if text == "min":
        return TailMin()
    if text.startswith("per(") and text.endswith(")"):
        inner = text[4:-1].strip()
        word = tuple(int(t) for t in inner.split(",") if t.strip())
        return TailPeriodic(word)
    raise PathError(f"unknown tail {text!r}; expected max, min or per(...)")
