"""Text formats for diagrams (.bd), Bratteli systems (.sys) and nested sequences (.ns).

All three are line based: ``#`` starts a comment, blank lines are ignored,
and every other line is a keyword followed by whitespace separated fields.
Cells are written as dotted symbol words (``*`` for the empty word).  The
grammars are in docs/FORMATS.md.
"""

from __future__ import annotations

import json
from typing import Optional

from .bratteli import Edge, OrderedBratteliDiagram, OrderedDiagram, Stationary
from .nested import NestedSequence
from .pds import BratteliSystem
from .space import (OUTSIDE, UNRESOLVED, PartialHomeo, Point, Resolved, SymbolicSpace,
                    cell_key, format_word, parse_word, table_map, table_space)


class FormatError(ValueError):
    def __init__(self, message, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _int(tok, no):
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"expected an integer, got {tok!r}", no) from None


# ---------------------------------------------------------------- diagrams

def emit_diagram(B: OrderedBratteliDiagram) -> str:
    out = [f"name {B.name}", f"root {B.root}"]
    for n in range(1, B.depth + 1):
        out.append(f"vertices {n} " + " ".join(B.vertices(n)))
        for e in B.edge_level(n).edges:
            extra = "" if e.label is None else f" label={e.label}"
            out.append(f"edge {n} {e.source} {e.range} {e.order}{extra}")
    if B.extension is None:
        out.append("extension none")
    else:
        out.append(f"extension stationary {B.extension.period}")
    return "\n".join(out) + "\n"


def parse_diagram(text: str) -> OrderedBratteliDiagram:
    name, root, ext = "diagram", None, None
    vertices, edges = {}, {}
    for no, f in _lines(text):
        key = f[0]
        if key == "name":
            name = " ".join(f[1:]) or name
        elif key == "root":
            if len(f) != 2:
                raise FormatError("root takes one vertex name", no)
            root = f[1]
        elif key == "vertices":
            if len(f) < 3:
                raise FormatError("vertices needs a level and at least one vertex", no)
            n = _int(f[1], no)
            if n in vertices:
                raise FormatError(f"vertices {n} given twice", no)
            vertices[n] = tuple(f[2:])
        elif key == "edge":
            if len(f) not in (5, 6):
                raise FormatError("edge <level> <source> <range> <order> [label=j]", no)
            n = _int(f[1], no)
            label = None
            if len(f) == 6:
                if not f[5].startswith("label="):
                    raise FormatError("the optional field is label=<int>", no)
                label = _int(f[5][6:], no)
            edges.setdefault(n, []).append((Edge(f[2], f[3], _int(f[4], no), label), no))
        elif key == "extension":
            if f[1:] == ["none"]:
                ext = None
            elif len(f) == 3 and f[1] == "stationary":
                ext = Stationary(_int(f[2], no))
            else:
                raise FormatError("extension none | extension stationary <period>", no)
        else:
            raise FormatError(f"unknown keyword {key!r}", no)
    if root is None:
        raise FormatError("missing root")
    depth = max(vertices) if vertices else 0
    if sorted(vertices) != list(range(1, depth + 1)):
        raise FormatError("vertex levels must be 1..N without gaps")
    if set(edges) - set(vertices):
        raise FormatError(f"edges at undeclared level {min(set(edges) - set(vertices))}")
    levels = [(root,)] + [vertices[n] for n in range(1, depth + 1)]
    edge_levels = []
    for n in range(1, depth + 1):
        for e, no in edges.get(n, []):
            if e.source not in levels[n - 1] or e.range not in levels[n]:
                raise FormatError(f"edge {e.source}->{e.range} names an unknown vertex", no)
        edge_levels.append(OrderedDiagram(levels[n - 1], levels[n],
                                          [e for e, _ in edges.get(n, [])]))
    if ext is not None and ext.period > depth:
        raise FormatError("stationary period exceeds the number of levels")
    return OrderedBratteliDiagram(levels, edge_levels, ext, name=name)


# ---------------------------------------------------------------- shared table pieces

def _fmt_result(r) -> str:
    if isinstance(r, Resolved):
        return format_word(r.cell)
    return "UNRESOLVED" if r is UNRESOLVED else "OUTSIDE"


def _parse_result(tok: str):
    if tok == "UNRESOLVED":
        return UNRESOLVED
    if tok == "OUTSIDE":
        return OUTSIDE
    return Resolved(parse_word(tok))


def _space_lines(space: SymbolicSpace, depth: int) -> list:
    out = [f"depth {depth}"]
    for level in range(1, depth + 1):
        out.append(f"cells {level} " + " ".join(format_word(c) for c in space.cells(level)))
    for name, cyc in space.tail_rules.items():
        out.append(f"tail {name} {format_word(cyc)}")
    return out


def _table_lines(phi: PartialHomeo, depth: int, index: Optional[int] = None) -> list:
    tag = "" if index is None else f"{index} "
    out = []
    for level in range(1, depth + 1):
        for c in phi.space.cells(level):
            out.append(f"map {tag}{level} {format_word(c)} {_fmt_result(phi.cell_image(c))}")
        for c in phi.space.cells(level):
            out.append(f"inverse {tag}{level} {format_word(c)} "
                       f"{_fmt_result(phi.inverse_cell_image(c))}")
    return out


class _SpaceBuilder:
    def __init__(self):
        self.depth = None
        self.cells = {}
        self.tails = {}

    def take(self, f, no) -> bool:
        if f[0] == "depth":
            self.depth = _int(f[1], no)
        elif f[0] == "cells":
            level = _int(f[1], no)
            self.cells[level] = [parse_word(t) for t in f[2:]]
        elif f[0] == "tail":
            if len(f) != 3:
                raise FormatError("tail <name> <cycle>", no)
            self.tails[f[1]] = parse_word(f[2])
        else:
            return False
        return True

    def build(self, name) -> SymbolicSpace:
        if self.depth is None:
            raise FormatError("missing depth")
        if sorted(self.cells) != list(range(1, self.depth + 1)):
            raise FormatError("cells must be listed for every level 1..depth")
        try:
            return table_space([self.cells[L] for L in range(1, self.depth + 1)],
                               tail_rules=self.tails, name=name)
        except ValueError as exc:
            raise FormatError(str(exc)) from None


def _check_cell(space, word, level, no):
    if len(word) != level or not space.is_cell(word):
        raise FormatError(f"{format_word(word)} is not a level-{level} cell", no)


# ---------------------------------------------------------------- systems

def emit_system(S: BratteliSystem, depth: Optional[int] = None) -> str:
    depth = min(depth or S.space.depth_bound, S.space.depth_bound)
    out = [f"name {S.name}"] + _space_lines(S.space, depth)
    for level in range(1, depth + 1):
        out.append(f"xmax {level} " + " ".join(format_word(c) for c in
                                               sorted(S.xmax_cells(level), key=cell_key)))
        out.append(f"xmin {level} " + " ".join(format_word(c) for c in
                                               sorted(S.xmin_cells(level), key=cell_key)))
    out += _table_lines(S.phi, depth)
    return "\n".join(out) + "\n"


def parse_system(text: str) -> BratteliSystem:
    name = "system"
    sb = _SpaceBuilder()
    fwd, bwd, xmax, xmin = {}, {}, {}, {}
    rows = []
    for no, f in _lines(text):
        if f[0] == "name":
            name = " ".join(f[1:]) or name
        elif sb.take(f, no):
            pass
        elif f[0] in ("map", "inverse", "xmax", "xmin"):
            rows.append((no, f))
        else:
            raise FormatError(f"unknown keyword {f[0]!r}", no)
    space = sb.build(name)
    for no, f in rows:
        level = _int(f[1], no)
        if not 1 <= level <= sb.depth:
            raise FormatError(f"level {level} outside 1..{sb.depth}", no)
        if f[0] in ("xmax", "xmin"):
            cells = [parse_word(t) for t in f[2:]]
            for c in cells:
                _check_cell(space, c, level, no)
            (xmax if f[0] == "xmax" else xmin)[level] = cells
            continue
        if len(f) != 4:
            raise FormatError(f"{f[0]} <level> <cell> <image|UNRESOLVED|OUTSIDE>", no)
        c = parse_word(f[2])
        _check_cell(space, c, level, no)
        r = _parse_result(f[3])
        if isinstance(r, Resolved):
            _check_cell(space, r.cell, level, no)
        (fwd if f[0] == "map" else bwd).setdefault(level, {})[c] = r
    phi = table_map(space, fwd, bwd or None, name="phi")
    return BratteliSystem(space, phi, name=name,
                          xmax=lambda L: xmax.get(L, ()), xmin=lambda L: xmin.get(L, ()))


# ---------------------------------------------------------------- nested sequences

def emit_nested(N: NestedSequence, depth: Optional[int] = None, window: Optional[int] = None) -> str:
    """Tables for phi_1..phi_window; the rule line says what happens beyond.

    Callable rules cannot be written down, so such nests are emitted with the
    ``window`` rule: maps beyond the window are empty.
    """
    depth = min(depth or N.space.depth_bound, N.space.depth_bound)
    rule = N.rule if isinstance(N.rule, str) else "window"
    if rule == "power":
        stored = [1]
    elif rule == "parity-power":
        stored = [1, 2]
    else:
        W = window or N.horizon
        stored = list(range(1, W + 1))
    horizon = len(stored) if rule in ("window", "empty") else N.horizon
    out = [f"name {N.name}"] + _space_lines(N.space, depth)
    out += [f"rule {rule}", f"horizon {horizon}"]
    for p in N.special_points:
        out.append(f"point {format_word(p.prefix)}|{format_word(p.cycle)}")
    for n in stored:
        out += _table_lines(N.get(n), depth, n)
    return "\n".join(out) + "\n"


def parse_nested(text: str) -> NestedSequence:
    name, rule, horizon = "nest", "window", None
    sb = _SpaceBuilder()
    rows, points = [], []
    for no, f in _lines(text):
        if f[0] == "name":
            name = " ".join(f[1:]) or name
        elif sb.take(f, no):
            pass
        elif f[0] == "rule":
            if len(f) != 2 or f[1] not in ("empty", "window", "power", "parity-power"):
                raise FormatError("rule empty | window | power | parity-power", no)
            rule = f[1]
        elif f[0] == "horizon":
            horizon = _int(f[1], no)
        elif f[0] == "point":
            points.append((no, f[1]))
        elif f[0] in ("map", "inverse"):
            rows.append((no, f))
        else:
            raise FormatError(f"unknown keyword {f[0]!r}", no)
    space = sb.build(name)
    fwd, bwd = {}, {}
    for no, f in rows:
        if len(f) != 5:
            raise FormatError(f"{f[0]} <n> <level> <cell> <image|UNRESOLVED|OUTSIDE>", no)
        n, level = _int(f[1], no), _int(f[2], no)
        if n < 1:
            raise FormatError("map indices start at 1", no)
        c = parse_word(f[3])
        _check_cell(space, c, level, no)
        r = _parse_result(f[4])
        if isinstance(r, Resolved):
            _check_cell(space, r.cell, level, no)
        (fwd if f[0] == "map" else bwd).setdefault(n, {}).setdefault(level, {})[c] = r
    maps = {n: table_map(space, fwd[n], bwd.get(n), name=f"phi_{n}") for n in sorted(fwd)}
    if rule in ("power", "parity-power") and 1 not in maps:
        raise FormatError(f"rule {rule} needs the table of phi_1")
    if rule == "parity-power" and 2 not in maps:
        raise FormatError("rule parity-power needs the table of phi_2")
    special = []
    for no, tok in points:
        if "|" not in tok:
            raise FormatError("point <prefix>|<cycle>", no)
        head, cyc = tok.split("|", 1)
        special.append(Point(space, parse_word(head), parse_word(cyc)))
    if horizon is None:
        horizon = max(maps) if maps else 0
    return NestedSequence(space, maps, rule=rule, horizon=horizon,
                          special_points=special, name=name)


# ---------------------------------------------------------------- JSON helpers

def diagram_level_to_json(D: OrderedDiagram) -> dict:
    return {"sources": list(D.sources), "ranges": list(D.ranges),
            "edges": [[e.source, e.range, e.order] for e in D.edges]}


def diagram_level_from_json(d: dict) -> OrderedDiagram:
    return OrderedDiagram(d["sources"], d["ranges"], [Edge(s, r, o) for s, r, o in d["edges"]])


def equivalence_witness_to_json(w: dict) -> dict:
    return {"g": {str(k): v for k, v in w["g"].items()},
            "h": {str(k): v for k, v in w["h"].items()},
            "cuts": list(w["cuts"]),
            "E_prime": {str(k): diagram_level_to_json(v) for k, v in w["E_prime"].items()},
            "F_prime": {str(k): diagram_level_to_json(v) for k, v in w["F_prime"].items()}}


def equivalence_witness_from_json(d: dict) -> dict:
    return {"g": {int(k): v for k, v in d["g"].items()},
            "h": {int(k): v for k, v in d["h"].items()},
            "cuts": d["cuts"],
            "E_prime": {int(k): diagram_level_from_json(v) for k, v in d["E_prime"].items()},
            "F_prime": {int(k): diagram_level_from_json(v) for k, v in d["F_prime"].items()}}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
