"""Bratteli systems: partial dynamical systems with the covering axioms.

The axioms are checked at a working resolution: a clopen U containing the
X_min approximation satisfies the forward axiom at level L when finitely many
forward images of U cover every cell.  Cells that stay unresolved are refined
down to the depth bound, where they are dropped; the cover is then an
under-approximation, so Satisfied is never claimed wrongly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .space import (ClopenSet, PartialHomeo, Resolved, SymbolicSpace, cell_key,
                    format_word, image_clopen)


class PreconditionFailed(ValueError):
    pass


@dataclass(frozen=True)
class Satisfied:
    steps: int
    level: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class FailedUpTo:
    bound: int
    level: int
    stalled_at: Optional[int] = None
    uncovered: int = 0

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Witness:
    cell: tuple
    period: int
    level: int
    cycle: tuple = ()


class BratteliSystem:
    """(X, X_max, X_min, phi) with X_max/X_min given as per-level cell approximations.

    By default the approximations are the ones carried by ``phi`` (cells
    meeting the complement of its domain or range).
    """

    def __init__(self, space: SymbolicSpace, phi: PartialHomeo, name: str = "system",
                 xmax=None, xmin=None):
        self.space = space
        self.phi = phi
        self.name = name
        self._xmax = xmax
        self._xmin = xmin

    def __repr__(self):
        return f"BratteliSystem({self.name!r})"

    def xmax_cells(self, level: int) -> frozenset:
        if self._xmax is not None:
            return frozenset(tuple(c) for c in self._xmax(level))
        return self.phi.xmax_cells(level)

    def xmin_cells(self, level: int) -> frozenset:
        if self._xmin is not None:
            return frozenset(tuple(c) for c in self._xmin(level))
        return self.phi.xmin_cells(level)

    def xmax(self, level: int) -> ClopenSet:
        return ClopenSet(self.space, self.xmax_cells(level))

    def xmin(self, level: int) -> ClopenSet:
        return ClopenSet(self.space, self.xmin_cells(level))

    def full(self) -> ClopenSet:
        return ClopenSet.full(self.space)


def _working_level(S: BratteliSystem, A: ClopenSet, depth: Optional[int]) -> int:
    level = max(A.level, 1)
    if depth is not None:
        level = max(level, depth)
    return min(level, S.space.depth_bound)


def _cover(S, phi, A, bound, level, negligible_level):
    full = ClopenSet.full(S.space)
    if A.is_full():
        return Satisfied(0, level)
    cover, frontier = A, A
    for step in range(1, bound + 1):
        frontier = image_clopen(phi, frontier, negligible_from=negligible_level,
                                drop_at_bound=True)
        grown = cover.union(frontier)
        if grown.is_full():
            return Satisfied(step, level)
        if grown == cover:
            missing = full.difference(cover)
            return FailedUpTo(bound, level, stalled_at=step,
                              uncovered=len(missing.at_level(max(missing.level, level))))
        cover = grown
    missing = full.difference(cover)
    return FailedUpTo(bound, level, uncovered=len(missing.at_level(max(missing.level, level))))


def check_axiom_forward(S: BratteliSystem, U: ClopenSet, bound: int = 256,
                        depth: Optional[int] = None):
    """Forward covering: some finite union of phi^n(U), n <= bound, is X."""
    level = _working_level(S, U, depth)
    if not S.xmin(level).issubset(U):
        raise PreconditionFailed("U must contain the X_min approximation at its level")
    return _cover(S, S.phi, U, bound, level, S.space.depth_bound)


def check_axiom_backward(S: BratteliSystem, V: ClopenSet, bound: int = 256,
                         depth: Optional[int] = None):
    """Backward covering by phi^-n(V)."""
    level = _working_level(S, V, depth)
    if not S.xmax(level).issubset(V):
        raise PreconditionFailed("V must contain the X_max approximation at its level")
    return _cover(S, S.phi.inverse(), V, bound, level, S.space.depth_bound)


@dataclass
class ProbeReport:
    samples: list = field(default_factory=list)
    disagreements: list = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.disagreements

    def count(self) -> int:
        return len(self.samples)


def _supersets(space, level, required, cap, samples, rng):
    cells = sorted(space.cells(level), key=cell_key)
    free = [c for c in cells if c not in required]
    if 2 ** len(free) <= cap:
        for mask in itertools.product((False, True), repeat=len(free)):
            yield ClopenSet(space, list(required) + [c for c, m in zip(free, mask) if m])
        return
    for _ in range(samples):
        mask = rng.random(len(free)) < 0.5
        yield ClopenSet(space, list(required) + [c for c, m in zip(free, mask) if m])


def axiom_equivalence_probe(S: BratteliSystem, levels=(1, 2, 3, 4), samples: int = 20,
                            bound: int = 256, seed: int = 0, cap: int = 256) -> ProbeReport:
    """Compare forward and backward axiom verdicts on sampled clopen sets.

    At each level, every superset of the X_min (resp. X_max) approximation is
    tried when there are at most ``cap`` of them, otherwise ``samples``
    random ones.  The two axioms are equivalent, so the aggregate verdicts of
    one level must agree; a mismatch is recorded as a disagreement.
    """
    rng = np.random.default_rng(seed)
    report = ProbeReport()
    for level in levels:
        if level > S.space.depth_bound:
            continue
        us = list(_supersets(S.space, level, S.xmin_cells(level), cap, samples, rng))
        vs = list(_supersets(S.space, level, S.xmax_cells(level), cap, samples, rng))
        fwd = [check_axiom_forward(S, U, bound, level) for U in us]
        bwd = [check_axiom_backward(S, V, bound, level) for V in vs]
        for i in range(max(len(us), len(vs))):
            U = us[i % len(us)]
            V = vs[i % len(vs)]
            report.samples.append((level, U, V, fwd[i % len(us)], bwd[i % len(vs)]))
        all_f = all(bool(v) for v in fwd)
        all_b = all(bool(v) for v in bwd)
        if all_f != all_b:
            report.disagreements.append(
                (level, f"forward {'holds' if all_f else 'fails'}, "
                        f"backward {'holds' if all_b else 'fails'}"))
    return report


def resolved_cell_map(phi: PartialHomeo, level: int) -> dict:
    out = {}
    for c in phi.space.cells(level):
        r = phi.cell_image(c)
        if isinstance(r, Resolved):
            out[c] = r.cell
    return out


def detect_periodic(S: BratteliSystem, bound: int = 32, depth: int = 8) -> Optional[Witness]:
    """First cell cycle of period <= bound at levels 1..depth, or None.

    A resolved cell cycle C -> ... -> C yields a clopen invariant set, which
    a Bratteli system cannot have, so any witness is a certificate that the
    input is not one.
    """
    depth = min(depth, S.space.depth_bound)
    for level in range(1, depth + 1):
        f = resolved_cell_map(S.phi, level)
        for start in sorted(f, key=cell_key):
            x = start
            path = [start]
            for step in range(1, bound + 1):
                x = f.get(x)
                if x is None:
                    break
                if x == start:
                    return Witness(start, step, level, tuple(path))
                path.append(x)
    return None


def describe(result) -> str:
    if isinstance(result, Satisfied):
        return f"Satisfied(N0={result.steps}, level={result.level})"
    if isinstance(result, FailedUpTo):
        extra = f", stalled at step {result.stalled_at}" if result.stalled_at else ""
        return f"FailedUpTo({result.bound}, level={result.level}{extra})"
    if isinstance(result, Witness):
        return f"Witness(cell={format_word(result.cell)}, period={result.period}, level={result.level})"
    return repr(result)
