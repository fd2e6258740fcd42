"""Kakutani-Rohlin towers, their refinement, and diagram extraction.

A stage is a clopen partition of X into towers.  Tower k has height J_k and
base pieces i; floor j of piece i is phi^j of the piece.  Consecutive stages
are nested (every floor of stage n lies inside one floor of stage n-1), and
the ordered diagram has one edge for every floor of stage n that lies in a
base of stage n-1, labelled by the floor index and ordered by it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import versik
from .bratteli import Edge, OrderedBratteliDiagram, OrderedDiagram, validate
from .pds import BratteliSystem
from .space import (OUTSIDE, ClopenSet, Point, Resolved, ResolutionExhausted, cell_key,
                    format_word, image_clopen, pullback_union_max)


class LambdaUnbounded(RuntimeError):
    def __init__(self, bound, cell=None):
        super().__init__(f"return time exceeds {bound} steps"
                         + (f" from cell {format_word(cell)}" if cell is not None else ""))
        self.bound = bound
        self.cell = cell


class BrokenContainment(ValueError):
    pass


class PartitionCheckFailed(AssertionError):
    pass


@dataclass
class Tower:
    index: int
    height: int
    base: ClopenSet
    floors: list
    pieces: list = field(default_factory=list)
    piece_floors: list = field(default_factory=list)

    def floor(self, j: int, i: Optional[int] = None) -> ClopenSet:
        if i is None:
            return self.floors[j]
        return self.piece_floors[i][j]


@dataclass
class KRPartition:
    towers: list
    Y: ClopenSet
    Z: ClopenSet
    stage: int = 0
    partition_level: int = 0

    @property
    def heights(self) -> list:
        return [t.height for t in self.towers]

    def vertices(self) -> list:
        return [(t.index, i) for t in self.towers for i in range(len(t.pieces))]

    def floor(self, k: int, j: int, i: int) -> ClopenSet:
        return self.towers[k].piece_floors[i][j]

    def all_floors(self):
        for t in self.towers:
            for i, fl in enumerate(t.piece_floors):
                for j, F in enumerate(fl):
                    yield (t.index, j, i), F


def _is_partition(space, sets) -> Optional[str]:
    """None if the clopen sets are pairwise disjoint and cover X, else a reason."""
    cells = []
    for A in sets:
        cells.extend(A.cells)
    seen = set()
    for c in cells:
        if c in seen:
            return f"cell {format_word(c)} lies in two floors"
        seen.add(c)
    for c in cells:
        for t in range(len(c)):
            if c[:t] in seen:
                return f"cells {format_word(c[:t])} and {format_word(c)} overlap"
    if not ClopenSet(space, cells).is_full():
        return "floors do not cover X"
    return None


def _orbit(S, cell, Z, fine_enough, cap):
    """Forward images of ``cell`` until it enters Z; None if ``cell`` must be split."""
    phi = S.phi
    cur = cell
    images = [cell]
    for k in range(cap + 1):
        if fine_enough is not None and not fine_enough(cur):
            return None
        if Z.contains_cell(cur):
            return images
        if Z.meets_cell(cur):
            return None
        r = phi.cell_image(cur)
        if isinstance(r, Resolved):
            cur = r.cell
            images.append(cur)
        elif r is OUTSIDE:
            raise PartitionCheckFailed(
                f"cell {format_word(cur)} misses Z but lies outside dom phi")
        else:
            return None
    raise LambdaUnbounded(cap, cell)


def _return_orbits(S, Y, Z, fine_enough=None):
    space = S.space
    out = []
    stack = sorted(Y.cells, key=cell_key, reverse=True)
    while stack:
        c = stack.pop()
        cap = space.count(len(c))
        got = _orbit(S, c, Z, fine_enough, cap)
        if got is None:
            if len(c) >= space.depth_bound:
                raise ResolutionExhausted(
                    f"orbit of {format_word(c)} needs cells below the depth bound",
                    cell=c, depth=space.depth_bound)
            stack.extend(reversed(space.children(c)))
            continue
        out.append((c, got))
    return out


def _assemble(S, Y, Z, orbits, signature=None, stage=0, partition_level=0) -> KRPartition:
    space = S.space
    by_height = {}
    for c, imgs in orbits:
        by_height.setdefault(len(imgs) - 1, []).append((c, imgs))
    towers = []
    for k, J in enumerate(sorted(by_height)):
        members = by_height[J]
        groups = {}
        for c, imgs in members:
            key = signature(imgs) if signature is not None else ()
            groups.setdefault(key, []).append((c, imgs))
        ordered = sorted(groups.values(),
                         key=lambda g: min(cell_key(c) for c, _ in g))
        pieces, piece_floors = [], []
        for g in ordered:
            pieces.append(ClopenSet(space, [c for c, _ in g]))
            piece_floors.append([ClopenSet(space, [imgs[j] for _, imgs in g])
                                 for j in range(J + 1)])
        floors = [ClopenSet(space, [imgs[j] for _, imgs in members]) for j in range(J + 1)]
        towers.append(Tower(k, J, ClopenSet(space, [c for c, _ in members]), floors,
                            pieces, piece_floors))
    part = KRPartition(towers, Y, Z, stage, partition_level)
    _check_properties(S, part)
    return part


def _check_properties(S, part: KRPartition):
    space = S.space
    reason = _is_partition(space, [F for _, F in part.all_floors()])
    if reason:
        raise PartitionCheckFailed(f"floors do not partition X: {reason}")
    top = ClopenSet.empty(space)
    for t in part.towers:
        top = top.union(t.floors[-1])
    if top != part.Z:
        raise PartitionCheckFailed("top floors differ from Z")
    first = ClopenSet.empty(space)
    for t in part.towers:
        if t.height >= 1:
            first = first.union(t.floors[1])
    expected = image_clopen(S.phi, part.Y.difference(part.Z))
    if first != expected:
        raise PartitionCheckFailed("first floors differ from phi(Y minus Z)")
    base = ClopenSet.empty(space)
    for t in part.towers:
        base = base.union(t.base)
    if base != part.Y:
        raise PartitionCheckFailed("tower bases differ from Y")


def _lagging_cells(S: BratteliSystem, Y: ClopenSet, bound: int, cap: int = 1 << 14) -> list:
    """Cells at the bound whose image is only isolated deeper, but whose points land in Y.

    The pullback drops X_min cells at the bound as negligible, which loses
    such cells; they are recovered from the exact point map on tail
    completions of the cell.
    """
    phi = S.phi
    if phi.point_map is None or S.space.count(bound) > cap:
        return []
    xmax = S.xmax_cells(bound)
    out = []
    for c in S.space.cells(bound):
        if c in xmax or isinstance(phi.cell_image(c), Resolved) or phi.cell_image(c) is OUTSIDE:
            continue
        reps = [Point(S.space, c, cyc) for cyc in S.space.tail_rules.values()]
        reps = [x for x in reps if S.space.is_cell(x.word(bound + 2))]
        if reps and all(Y.contains_point(phi.point_map(x)) for x in reps):
            out.append(c)
    return out


def top_set(S: BratteliSystem, Y: ClopenSet) -> ClopenSet:
    """Z = phi^-1(Y) together with X_max."""
    bound = S.space.depth_bound
    Z = pullback_union_max(S.phi, Y, ClopenSet(S.space, S.xmax_cells(bound)), bound)
    return Z.union(ClopenSet(S.space, _lagging_cells(S, Y, bound)))


def build_towers(S: BratteliSystem, Y: ClopenSet) -> KRPartition:
    """Towers over Y from the first entrance time into Z = phi^-1(Y) u X_max."""
    if not S.xmin(max(Y.level, 1)).issubset(Y):
        raise ValueError("Y must contain the X_min approximation at its level")
    Z = top_set(S, Y)
    return _assemble(S, Y, Z, _return_orbits(S, Y, Z))


def trivial_partition(S: BratteliSystem) -> KRPartition:
    """The stage-0 partition {X}: one tower of height 0."""
    X = ClopenSet.full(S.space)
    return KRPartition([Tower(0, 0, X, [X], [X], [[X]])], X, X, 0, 0)


def _floor_index(prev: KRPartition):
    index = {}
    for key, F in prev.all_floors():
        for c in F.cells:
            index[c] = key
    return index


def _lookup(index, cell):
    for t in range(len(cell) + 1):
        got = index.get(cell[:t])
        if got is not None:
            return got
    return None


def refine(S: BratteliSystem, prev: KRPartition, Y_n: ClopenSet,
           partition_level: Optional[int] = None) -> KRPartition:
    """Next stage: towers over Y_n with bases split so every floor sits in one
    level-``partition_level`` cell and in one floor of ``prev``."""
    if not Y_n.issubset(prev.Y):
        raise ValueError("Y_n must lie inside the previous Y")
    if not S.xmin(max(Y_n.level, 1)).issubset(Y_n):
        raise ValueError("Y_n must contain the X_min approximation at its level")
    L = prev.stage + 1 if partition_level is None else partition_level
    index = _floor_index(prev)

    def fine_enough(cell):
        return len(cell) >= L and _lookup(index, cell) is not None

    def signature(imgs):
        return tuple((c[:L], _lookup(index, c)) for c in imgs)

    Z = top_set(S, Y_n)
    orbits = _return_orbits(S, Y_n, Z, fine_enough)
    return _assemble(S, Y_n, Z, orbits, signature, prev.stage + 1, L)


def default_chain(S: BratteliSystem, stages: int, shift: int = 0) -> list:
    """Y_n = X_min approximation at level n + shift."""
    return [S.xmin(n + shift) for n in range(1, stages + 1)]


def build_stages(S: BratteliSystem, stages: int, chain=None) -> list:
    chain = default_chain(S, stages) if chain is None else list(chain)
    out = []
    prev = trivial_partition(S)
    for n, Y in enumerate(chain[:stages], start=1):
        prev = refine(S, prev, Y, n)
        out.append(prev)
    return out


def _vertex_name(k, i):
    return f"t{k}p{i}"


def extract_diagram(stages: list, S: Optional[BratteliSystem] = None,
                    name: str = "extracted") -> OrderedBratteliDiagram:
    """Ordered diagram of a refinement chain (stage 0 = {X} is implicit)."""
    if not stages:
        raise ValueError("need at least one stage")
    space = stages[0].Y.space
    prev = stages[0].__class__([Tower(0, 0, ClopenSet.full(space), [ClopenSet.full(space)],
                                      [ClopenSet.full(space)], [[ClopenSet.full(space)]])],
                               ClopenSet.full(space), ClopenSet.full(space), 0, 0)
    root = "X"
    vertex_levels = [(root,)]
    edge_levels = []
    names = {0: {(0, 0): root}}
    heights = {0: {(0, 0): 0}}
    for n, st in enumerate(stages, start=1):
        index = _floor_index(prev)
        names[n] = {}
        heights[n] = {}
        W = []
        edges = []
        for t in st.towers:
            for i, floors in enumerate(t.piece_floors):
                w = _vertex_name(t.index, i)
                names[n][(t.index, i)] = w
                heights[n][(t.index, i)] = t.height
                W.append(w)
                order = 0
                for j, F in enumerate(floors):
                    owners = {_lookup(index, c) for c in F.cells}
                    if None in owners or len(owners) != 1:
                        raise BrokenContainment(
                            f"stage {n} floor {j} of tower {t.index} piece {i} "
                            "is not inside a single floor of the previous stage")
                    k2, j2, i2 = owners.pop()
                    if j2 == 0:
                        edges.append(Edge(names[n - 1][(k2, i2)], w, order, j))
                        order += 1
        D = OrderedDiagram(vertex_levels[-1], W, edges)
        for w in W:
            fib = D.fiber(w)
            if not fib or D.edges[fib[0]].label != 0:
                raise BrokenContainment(f"stage {n}: minimal edge into {w} is not at floor 0")
            top = D.edges[fib[-1]]
            key_w = next(key for key, nm in names[n].items() if nm == w)
            key_s = next(key for key, nm in names[n - 1].items() if nm == top.source)
            if top.label != heights[n][key_w] - heights[n - 1][key_s]:
                raise BrokenContainment(f"stage {n}: maximal edge into {w} breaks the height identity")
        edge_levels.append(D)
        vertex_levels.append(tuple(W))
        prev = st
    B = OrderedBratteliDiagram(vertex_levels, edge_levels, None, name=name)
    problems = validate(B)
    if problems:
        raise BrokenContainment("extracted diagram is invalid: " + "; ".join(map(str, problems)))
    B.stages = list(stages)
    B.vertex_keys = {n: {nm: key for key, nm in m.items()} for n, m in names.items()}
    B.system = S
    return B


@dataclass
class Verified:
    pairs: int
    depth: int

    def __bool__(self):
        return True


@dataclass
class Counterexample:
    path: tuple
    detail: str

    def __bool__(self):
        return False


def path_floor(B: OrderedBratteliDiagram, path) -> ClopenSet:
    """Psi(p): floor sum(labels) of the base piece at the end vertex of p."""
    n = len(path)
    st = B.stages[n - 1]
    k, i = B.vertex_keys[n][versik.end_vertex(B, path)]
    j = sum(B.edge_level(m).edges[e].label for m, e in enumerate(path, start=1))
    floors = st.towers[k].piece_floors[i]
    if j >= len(floors):
        raise IndexError(f"label sum {j} exceeds tower height")
    return floors[j]


def verify_conjugacy(S: BratteliSystem, B: OrderedBratteliDiagram, depth: int):
    """Check phi(Psi(p)) = Psi(successor p) on all depth-d paths."""
    if depth > B.depth:
        raise ValueError(f"diagram has only {B.depth} levels")
    paths = versik.enumerate_paths(B, depth)
    try:
        psi = {p: path_floor(B, p) for p in paths}
    except (IndexError, KeyError) as exc:
        return Counterexample((), f"path labels do not index floors: {exc}")
    reason = _is_partition(S.space, list(psi.values()))
    if reason:
        bad = paths[0]
        return Counterexample(bad, f"Psi images do not partition X: {reason}")
    pairs = 0
    for p in paths:
        q = versik.successor(B, p)
        if q is versik.NEED_DEEPER:
            continue
        if image_clopen(S.phi, psi[p]) != psi[q]:
            return Counterexample(p, f"phi(Psi({p})) != Psi({q})")
        pairs += 1
    st = B.stages[depth - 1]
    mins = ClopenSet.empty(S.space)
    maxs = ClopenSet.empty(S.space)
    for v in B.vertices(depth):
        mins = mins.union(psi[versik.minimal_path(B, v, depth)])
        maxs = maxs.union(psi[versik.maximal_path(B, v, depth)])
    if mins != st.Y:
        return Counterexample((), "minimal paths do not map onto Y_d")
    if maxs != st.Z:
        return Counterexample((), "maximal paths do not map onto Z_d")
    level = max(st.Y.level, 1)
    if not S.xmin(level).issubset(mins) or not S.xmax(level).issubset(maxs):
        return Counterexample((), "extreme paths miss the X_min/X_max approximations")
    return Verified(pairs, depth)
