"""Ordered Bratteli diagrams: validation, composition, telescoping, equivalence."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class LevelMismatch(ValueError):
    pass


class BadCuts(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    source: str
    range: str
    order: int
    label: Optional[int] = None
    parts: Optional[tuple] = None


@dataclass(frozen=True)
class Stationary:
    period: int = 1


@dataclass(frozen=True)
class Violation:
    level: int
    invariant: str
    detail: str

    def __str__(self):
        return f"level {self.level}: {self.invariant}: {self.detail}"


class OrderedDiagram:
    """Edges from a source vertex set to a range vertex set, totally ordered per fiber."""

    def __init__(self, sources, ranges, edges):
        self.sources = tuple(sources)
        self.ranges = tuple(ranges)
        self.edges = tuple(edges)
        fibers = defaultdict(list)
        outs = defaultdict(list)
        for i, e in enumerate(self.edges):
            fibers[e.range].append(i)
            outs[e.source].append(i)
        for w in fibers:
            fibers[w].sort(key=lambda i: self.edges[i].order)
        self._fibers = dict(fibers)
        self._outs = dict(outs)

    def fiber(self, w) -> list:
        """Edge indices into ``w`` in increasing order."""
        return self._fibers.get(w, [])

    def out_edges(self, v) -> list:
        return self._outs.get(v, [])

    def is_max(self, i) -> bool:
        e = self.edges[i]
        return e.order == len(self.fiber(e.range)) - 1

    def is_min(self, i) -> bool:
        return self.edges[i].order == 0

    def max_edge(self, w) -> int:
        return self.fiber(w)[-1]

    def min_edge(self, w) -> int:
        return self.fiber(w)[0]

    def next_in_fiber(self, i) -> Optional[int]:
        e = self.edges[i]
        fib = self.fiber(e.range)
        k = fib.index(i)
        return fib[k + 1] if k + 1 < len(fib) else None

    def prev_in_fiber(self, i) -> Optional[int]:
        e = self.edges[i]
        fib = self.fiber(e.range)
        k = fib.index(i)
        return fib[k - 1] if k > 0 else None

    def __len__(self):
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, OrderedDiagram):
            return NotImplemented
        return (self.sources, self.ranges, self.edges) == (other.sources, other.ranges, other.edges)

    def __hash__(self):
        return hash((self.sources, self.ranges, self.edges))

    def __repr__(self):
        return f"OrderedDiagram({len(self.sources)}->{len(self.ranges)}, {len(self.edges)} edges)"

    def relabel(self, source_map=None, range_map=None) -> "OrderedDiagram":
        sm = source_map or {v: v for v in self.sources}
        rm = range_map or {w: w for w in self.ranges}
        edges = [Edge(sm[e.source], rm[e.range], e.order, e.label, e.parts) for e in self.edges]
        return OrderedDiagram([sm[v] for v in self.sources], [rm[w] for w in self.ranges], edges)

    def validate(self, level: int = 1) -> list:
        out = []
        vs, ws = set(self.sources), set(self.ranges)
        for i, e in enumerate(self.edges):
            if e.source not in vs:
                out.append(Violation(level, "composition", f"edge {i} source {e.source} not a vertex"))
            if e.range not in ws:
                out.append(Violation(level, "composition", f"edge {i} range {e.range} not a vertex"))
        for w in self.ranges:
            if not self.fiber(w):
                out.append(Violation(level, "surjectivity", f"vertex {w} has no incoming edge"))
        for v in self.sources:
            if not self.out_edges(v):
                out.append(Violation(level, "surjectivity", f"vertex {v} has no outgoing edge"))
        for w, fib in self._fibers.items():
            orders = sorted(self.edges[i].order for i in fib)
            if orders != list(range(len(fib))):
                out.append(Violation(level, "fiber-order",
                                     f"fiber of {w} has orders {orders}"))
        return out


class OrderedBratteliDiagram:
    """Finite truncation V_0..V_N, E_1..E_N with an optional stationary extension.

    With ``Stationary(p)`` the levels beyond N repeat with period p, so
    E_n = E_{n-p} for n > N.
    """

    def __init__(self, vertex_levels, edge_levels, extension=None, name="diagram"):
        self.vertex_levels = [tuple(v) for v in vertex_levels]
        self.edge_levels = list(edge_levels)
        self.extension = extension
        self.name = name
        self._count_cache = {}

    @property
    def depth(self) -> int:
        return len(self.edge_levels)

    @property
    def infinite(self) -> bool:
        return self.extension is not None

    @property
    def root(self):
        return self.vertex_levels[0][0]

    def _fold(self, n: int) -> int:
        N = self.depth
        if n <= N:
            return n
        if self.extension is None:
            raise IndexError(f"level {n} beyond finite depth {N}")
        p = self.extension.period
        return N - p + 1 + (n - N - 1) % p

    def has_level(self, n: int) -> bool:
        return n <= self.depth or self.extension is not None

    def edge_level(self, n: int) -> OrderedDiagram:
        if n < 1:
            raise IndexError("edge levels start at 1")
        return self.edge_levels[self._fold(n) - 1]

    def vertices(self, n: int) -> tuple:
        if n == 0:
            return self.vertex_levels[0]
        return self.vertex_levels[self._fold(n)]

    def path_counts(self, n: int) -> dict:
        """Number of paths from the root to each vertex of V_n."""
        got = self._count_cache.get(n)
        if got is not None:
            return got
        if n == 0:
            got = {v: 1 for v in self.vertices(0)}
        else:
            prev = self.path_counts(n - 1)
            E = self.edge_level(n)
            got = {w: 0 for w in self.vertices(n)}
            for e in E.edges:
                got[e.range] = got.get(e.range, 0) + prev.get(e.source, 0)
        self._count_cache[n] = got
        return got

    def total_paths(self, n: int) -> int:
        return sum(self.path_counts(n).values())

    def __eq__(self, other):
        if not isinstance(other, OrderedBratteliDiagram):
            return NotImplemented
        return (self.vertex_levels == other.vertex_levels
                and self.edge_levels == other.edge_levels
                and self.extension == other.extension)

    def __repr__(self):
        ext = "" if self.extension is None else f", stationary {self.extension.period}"
        return f"OrderedBratteliDiagram({self.name!r}, depth={self.depth}{ext})"

    def truncate(self, n: int) -> "OrderedBratteliDiagram":
        return OrderedBratteliDiagram([self.vertices(k) for k in range(n + 1)],
                                      [self.edge_level(k) for k in range(1, n + 1)],
                                      None, name=self.name)


def validate(B: OrderedBratteliDiagram) -> list:
    """All invariant violations; empty iff the diagram is well formed."""
    out = []
    if len(B.vertex_levels[0]) != 1:
        out.append(Violation(0, "root", f"|V_0| = {len(B.vertex_levels[0])}"))
    if len(B.vertex_levels) != B.depth + 1:
        out.append(Violation(B.depth, "composition",
                             f"{len(B.vertex_levels)} vertex levels for {B.depth} edge levels"))
        return out
    for n in range(1, B.depth + 1):
        E = B.edge_levels[n - 1]
        if tuple(E.sources) != B.vertex_levels[n - 1]:
            out.append(Violation(n, "composition", "edge level sources differ from V_{n-1}"))
        if tuple(E.ranges) != B.vertex_levels[n]:
            out.append(Violation(n, "composition", "edge level ranges differ from V_n"))
        out.extend(E.validate(n))
    if B.extension is not None:
        p = B.extension.period
        if p < 1 or p > B.depth:
            out.append(Violation(B.depth, "extension", f"period {p} out of range"))
        elif B.vertex_levels[B.depth] != B.vertex_levels[B.depth - p]:
            out.append(Violation(B.depth, "extension",
                                 f"V_{B.depth} differs from V_{B.depth - p}"))
    return out


def compose(E: OrderedDiagram, F: OrderedDiagram) -> OrderedDiagram:
    """Paths (e, f), ordered by f first and then e."""
    if tuple(E.ranges) != tuple(F.sources):
        raise LevelMismatch("range of the first diagram must equal the source of the second")
    edges = []
    for j, f in enumerate(F.edges):
        base = 0
        for fj in F.fiber(f.range):
            if fj == j:
                break
            base += len(E.fiber(F.edges[fj].source))
        for i in E.fiber(f.source):
            e = E.edges[i]
            label = None
            if e.label is not None and f.label is not None:
                label = e.label + f.label
            edges.append(Edge(e.source, f.range, base + e.order, label, (i, j)))
    return OrderedDiagram(E.sources, F.ranges, edges)


def compose_range(B: OrderedBratteliDiagram, start: int, stop: int) -> OrderedDiagram:
    """Composite of E_{start+1}..E_{stop}: all paths from V_start to V_stop."""
    if stop <= start:
        raise BadCuts("empty level range")
    D = B.edge_level(start + 1)
    for n in range(start + 2, stop + 1):
        D = compose(D, B.edge_level(n))
    return D


def telescope(B: OrderedBratteliDiagram, cuts) -> OrderedBratteliDiagram:
    """Contraction to the levels in ``cuts`` (level 0 is kept implicitly)."""
    cuts = list(cuts)
    if not cuts:
        raise BadCuts("cut list is empty")
    prev = 0
    for c in cuts:
        if c <= prev:
            raise BadCuts(f"cuts must be strictly increasing positive levels, got {cuts}")
        if not B.has_level(c):
            raise BadCuts(f"cut {c} exceeds the depth of a finite diagram")
        prev = c
    vertex_levels = [B.vertices(0)] + [B.vertices(c) for c in cuts]
    edge_levels = []
    prev = 0
    for c in cuts:
        edge_levels.append(compose_range(B, prev, c))
        prev = c
    return OrderedBratteliDiagram(vertex_levels, edge_levels, None, name=f"{B.name}/telescoped")


def _fiber_signature(D: OrderedDiagram, w):
    return len(D.fiber(w))


def _source_signature(D: OrderedDiagram, v):
    return (len(D.out_edges(v)), tuple(sorted(D.edges[i].order for i in D.out_edges(v))))


def order_isomorphic(D1: OrderedDiagram, D2: OrderedDiagram, fix_vertices: bool = False,
                     source_map: Optional[dict] = None):
    """Order-preserving bijection of edges respecting source and range.

    Returns ``{"source_map", "range_map", "edge_map"}`` or None.  With
    ``fix_vertices`` both vertex maps are the identity on names; with
    ``source_map`` the source bijection is prescribed.  Among all witnesses
    the one with the lexicographically least range map is returned.
    """
    if len(D1.edges) != len(D2.edges) or len(D1.sources) != len(D2.sources) \
            or len(D1.ranges) != len(D2.ranges):
        return None
    if fix_vertices:
        if set(D1.sources) != set(D2.sources) or set(D1.ranges) != set(D2.ranges):
            return None
        source_map = {v: v for v in D1.sources}
        range_candidates = {w: [w] for w in D1.ranges}
    else:
        range_candidates = {}
        for w in D1.ranges:
            sig = _fiber_signature(D1, w)
            range_candidates[w] = sorted(u for u in D2.ranges if _fiber_signature(D2, u) == sig)
    if source_map is not None:
        if set(source_map) != set(D1.sources) or set(source_map.values()) != set(D2.sources):
            return None
        alpha0 = dict(source_map)
    else:
        alpha0 = {}
        for v in D1.sources:
            sig = _source_signature(D1, v)
            if not any(_source_signature(D2, u) == sig for u in D2.sources):
                return None
    order = sorted(D1.ranges, key=lambda w: (len(range_candidates[w]), str(w)))
    order = sorted(D1.ranges, key=str) if fix_vertices else order

    def extend(idx, beta, alpha, used_r, used_s):
        if idx == len(order):
            return beta, alpha
        w = order[idx]
        f1 = D1.fiber(w)
        for u in range_candidates[w]:
            if u in used_r:
                continue
            f2 = D2.fiber(u)
            if len(f1) != len(f2):
                continue
            new_alpha = {}
            ok = True
            for a, b in zip(f1, f2):
                s1, s2 = D1.edges[a].source, D2.edges[b].source
                cur = alpha.get(s1, new_alpha.get(s1))
                if cur is None:
                    if s2 in used_s or s2 in new_alpha.values():
                        ok = False
                        break
                    new_alpha[s1] = s2
                elif cur != s2:
                    ok = False
                    break
            if not ok:
                continue
            beta[w] = u
            alpha.update(new_alpha)
            got = extend(idx + 1, beta, alpha, used_r | {u}, used_s | set(new_alpha.values()))
            if got is not None:
                return got
            del beta[w]
            for k in new_alpha:
                del alpha[k]
        return None

    got = extend(0, {}, dict(alpha0), frozenset(), frozenset(alpha0.values()))
    if got is None:
        return None
    beta, alpha = got
    if set(alpha) != set(D1.sources):
        return None
    edge_map = {}
    for w in D1.ranges:
        for a, b in zip(D1.fiber(w), D2.fiber(beta[w])):
            edge_map[a] = b
    return {"source_map": dict(alpha), "range_map": dict(beta), "edge_map": edge_map}


def max_source_map(D: OrderedDiagram) -> dict:
    return {w: D.edges[D.max_edge(w)].source for w in D.ranges}


def min_source_map(D: OrderedDiagram) -> dict:
    return {w: D.edges[D.min_edge(w)].source for w in D.ranges}


def _periodic_points(f: dict) -> int:
    count = 0
    for start in f:
        x = start
        for _ in range(len(f)):
            x = f[x]
            if x == start:
                count += 1
                break
    return count


def extreme_path_count(B: OrderedBratteliDiagram, which: str = "max") -> Optional[int]:
    """Number of infinite maximal (or minimal) paths of a stationary diagram.

    Such paths correspond to backward orbits of the max-source map composed
    over one period, so their number is the number of periodic points of
    that block map.  None for finite diagrams.
    """
    if B.extension is None:
        return None
    p = B.extension.period
    N = B.depth
    pick = max_source_map if which == "max" else min_source_map
    block = {w: w for w in B.vertices(N)}
    for n in range(N, N - p, -1):
        step = pick(B.edge_level(n))
        block = {w: step[block[w]] for w in block}
    return _periodic_points(block)


@dataclass
class EquivalenceVerdict:
    status: str
    witness: Optional[dict] = None
    certificate: Optional[str] = None
    bound: Optional[int] = None

    def __bool__(self):
        return self.status == "Equivalent"


def _contraction_search(B1, B2, depth, max_gap=8):
    """Levels n_1 < n_2 < ... of B1 with vertex bijections making B2 a contraction of B1."""
    levels2 = depth if B2.infinite else min(depth, B2.depth)
    V1_root, V2_root = B1.vertices(0), B2.vertices(0)
    if len(V1_root) != 1 or len(V2_root) != 1:
        return None
    beta0 = {V1_root[0]: V2_root[0]}
    limit1 = None if B1.infinite else B1.depth

    def search(k, n_prev, beta):
        if k > levels2:
            return [], []
        F = B2.edge_level(k)
        top = n_prev + max_gap
        if limit1 is not None:
            top = min(top, limit1)
        for n in range(n_prev + 1, top + 1):
            D = compose_range(B1, n_prev, n)
            if len(D.edges) > len(F.edges):
                break
            w = order_isomorphic(D, F, source_map=beta)
            if w is None:
                continue
            rest = search(k + 1, n, w["range_map"])
            if rest is not None:
                return [n] + rest[0], [w["range_map"]] + rest[1]
        return None

    got = search(1, 0, beta0)
    if got is None:
        return None
    return got[0], [beta0] + got[1]


def _build_witness(B1, B2, cuts, betas):
    """Intertwiners g(n) = n + 1, h(k) = n_k + 1 from a contraction B2 of B1."""
    n_of = [0] + list(cuts)
    E_prime, F_prime = {}, {}
    for n in range(len(n_of) - 1):
        if n + 1 >= len(n_of):
            break
        target = n_of[n + 1]
        if target <= n:
            continue
        D = compose_range(B1, n, target)
        E_prime[n] = D.relabel(range_map=betas[n + 1])
    for k in range(len(n_of)):
        if not B1.has_level(n_of[k] + 1):
            break
        F_prime[k] = B1.edge_level(n_of[k] + 1).relabel(source_map=betas[k])
    return {"g": {n: n + 1 for n in E_prime}, "h": {k: n_of[k] + 1 for k in F_prime},
            "cuts": list(cuts), "vertex_maps": betas, "E_prime": E_prime, "F_prime": F_prime}


def _chain(B, start, stop):
    return compose_range(B, start, stop)


def replay_witness(B1, B2, witness, depth) -> list:
    """Recheck both intertwining conditions; returns failures (empty when verified)."""
    failures = []
    g, h = witness["g"], witness["h"]
    Ep, Fp = witness["E_prime"], witness["F_prime"]
    for n in range(depth):
        if n not in g or g[n] not in Fp or n not in Ep:
            continue
        m = h[g[n]]
        if not B1.has_level(m):
            continue
        lhs = compose(Ep[n], Fp[g[n]])
        rhs = _chain(B1, n, m)
        if order_isomorphic(lhs, rhs, fix_vertices=True) is None:
            failures.append(f"F'_{g[n]} o E'_{n} differs from E_{n + 1}..E_{m}")
    for k in range(depth):
        if k not in h or h[k] not in Ep or k not in Fp:
            continue
        m = g[h[k]]
        if not B2.has_level(m):
            continue
        lhs = compose(Fp[k], Ep[h[k]])
        rhs = _chain(B2, k, m)
        if order_isomorphic(lhs, rhs, fix_vertices=True) is None:
            failures.append(f"E'_{h[k]} o F'_{k} differs from F_{k + 1}..F_{m}")
    return failures


def _swap_witness(w):
    return {"g": w["h"], "h": w["g"], "cuts": w["cuts"], "vertex_maps": w["vertex_maps"],
            "E_prime": w["F_prime"], "F_prime": w["E_prime"], "swapped": True}


def order_equivalent_bounded(B1: OrderedBratteliDiagram, B2: OrderedBratteliDiagram,
                             depth: int) -> EquivalenceVerdict:
    """Semidecision for order equivalence up to ``depth`` levels."""
    for which in ("max", "min"):
        c1, c2 = extreme_path_count(B1, which), extreme_path_count(B2, which)
        if c1 is not None and c2 is not None and c1 != c2:
            return EquivalenceVerdict("Inequivalent",
                                      certificate=f"|X_{which}| = {c1} versus {c2}")
    found = _contraction_search(B1, B2, depth)
    if found is not None:
        w = _build_witness(B1, B2, *found)
        if not replay_witness(B1, B2, w, depth):
            return EquivalenceVerdict("Equivalent", witness=w)
    found = _contraction_search(B2, B1, depth)
    if found is not None:
        w = _swap_witness(_build_witness(B2, B1, *found))
        if not replay_witness(B1, B2, w, depth):
            return EquivalenceVerdict("Equivalent", witness=w)
    return EquivalenceVerdict("Unknown", bound=depth)


def random_diagram(rng, depth: int = 4, max_vertices: int = 3, max_fiber: int = 3,
                   stationary: bool = False, name: str = "random") -> OrderedBratteliDiagram:
    """A valid random ordered diagram; ``rng`` is a numpy Generator or a seed."""
    rng = np.random.default_rng(rng)
    levels = [("o",)]
    edge_levels = []
    for n in range(1, depth + 1):
        V = levels[-1]
        if stationary and n == depth and depth > 1:
            W = V
        else:
            count = int(rng.integers(1, max_vertices + 1))
            W = tuple(f"v{n}_{i}" for i in range(count))
        fibers = {w: [] for w in W}
        for w in W:
            k = int(rng.integers(1, max_fiber + 1))
            fibers[w] = [V[int(rng.integers(0, len(V)))] for _ in range(k)]
        hit = {v for srcs in fibers.values() for v in srcs}
        for v in V:
            if v not in hit:
                fibers[W[int(rng.integers(0, len(W)))]].append(v)
        edges = []
        for w in W:
            srcs = fibers[w]
            orders = rng.permutation(len(srcs))
            for s, o in zip(srcs, orders):
                edges.append(Edge(s, w, int(o)))
        edge_levels.append(OrderedDiagram(V, W, edges))
        levels.append(W)
    ext = Stationary(1) if stationary and depth > 1 else None
    if ext is not None and levels[-1] != levels[-2]:
        ext = None
    return OrderedBratteliDiagram(levels, edge_levels, ext, name=name)


def to_dot(B: OrderedBratteliDiagram, depth: Optional[int] = None) -> str:
    """Layered DOT rendering; edge labels show the fiber order."""
    depth = B.depth if depth is None else depth
    lines = [f'digraph "{B.name}" {{', "  rankdir=TB;"]
    for n in range(depth + 1):
        ids = " ".join(f'"{n}:{v}"' for v in B.vertices(n))
        lines.append(f"  {{ rank=same; {ids} }}")
        for v in B.vertices(n):
            lines.append(f'  "{n}:{v}" [label="{v}"];')
    for n in range(1, depth + 1):
        for e in B.edge_level(n).edges:
            label = str(e.order) if e.label is None else f"{e.order} (j={e.label})"
            lines.append(f'  "{n - 1}:{e.source}" -> "{n}:{e.range}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
