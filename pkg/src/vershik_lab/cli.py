"""vershik-lab command line.

Exit codes: 0 satisfied or verified, 1 violation or witness found, 2 unknown
or resolution exhausted, 3 input error.  Inputs are files (.bd, .sys, .ns)
or built-in names written ``@name``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import bratteli, examples, formats, kr, nested, pds, versik
from .space import ClopenSet, Point, ResolutionExhausted, SpaceError, format_word, parse_word

OK, FOUND, UNKNOWN, BAD_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(BAD_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- inputs

def _read(ref: str) -> str:
    try:
        return Path(ref).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {ref}: {exc.strerror}") from None


def _builtin(ref: str, kind: str, depth: int):
    name = ref[1:]
    if name not in examples.CATALOG:
        raise InputError(f"unknown built-in {name!r}; see `examples list`")
    got = examples.KINDS[name]
    if got == "diagram":
        obj = examples.build(name, **({"depth": 2} if name == "dyadic_diagram" else {}))
    elif got == "space":
        raise InputError(f"{name} is a space, not a {kind}")
    else:
        obj = examples.build(name, depth_bound=depth)
    return got, obj


def load_diagram(ref: str, depth: int):
    if ref.startswith("@"):
        got, obj = _builtin(ref, "diagram", depth)
        if got != "diagram":
            raise InputError(f"{ref} is a {got}, not a diagram")
        return obj
    return formats.parse_diagram(_read(ref))


def load_system(ref: str, depth: int) -> pds.BratteliSystem:
    if ref.startswith("@"):
        got, obj = _builtin(ref, "system", depth)
        if got == "diagram":
            return versik.versik_system(obj, depth)
        if got != "system":
            raise InputError(f"{ref} is a {got}, not a system")
        return obj
    text = _read(ref)
    if ref.endswith(".bd"):
        return versik.versik_system(formats.parse_diagram(text), depth)
    return formats.parse_system(text)


def load_nested(ref: str, depth: int) -> nested.NestedSequence:
    if ref.startswith("@"):
        got, obj = _builtin(ref, "nested sequence", depth)
        if got != "nested":
            raise InputError(f"{ref} is a {got}, not a nested sequence")
        return obj
    return formats.parse_nested(_read(ref))


def _cells(space, tokens):
    out = []
    for t in tokens:
        w = parse_word(t)
        if not space.is_cell(w):
            raise InputError(f"{t} is not a cell")
        out.append(w)
    return ClopenSet(space, out)


def _words(cells):
    return [format_word(c) for c in sorted(cells, key=lambda c: (len(c), str(c)))]


# ---------------------------------------------------------------- reports

class Report:
    def __init__(self, command: str, args):
        self.data = {"command": command, "parameters": {"depth": args.depth, "seed": args.seed},
                     "verdict": None, "details": {}, "witness": None}
        self.text = None

    def set(self, verdict: str, code: int, **details):
        self.data["verdict"] = verdict
        self.data["exit_code"] = code
        self.data["details"].update(details)
        return code

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return formats.dumps(self.data)
        lines = [f"verdict: {self.data['verdict']}"]
        for k, v in self.data["details"].items():
            if isinstance(v, (list, dict)):
                v = json.dumps(v)
            lines.append(f"{k}: {v}")
        if self.data["witness"] is not None:
            lines.append("witness: " + json.dumps(self.data["witness"], sort_keys=True))
        if self.text is not None:
            lines.append(self.text.rstrip("\n"))
        return "\n".join(lines) + "\n"


def _write_out(args, text: str, report: Report):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
        report.data["details"]["written"] = args.out
    else:
        report.text = text


# ---------------------------------------------------------------- commands

def cmd_validate_diagram(args, rep):
    B = load_diagram(args.diagram, args.depth)
    problems = bratteli.validate(B)
    if problems:
        return rep.set("invalid", FOUND, violations=[str(v) for v in problems])
    return rep.set("valid", OK, levels=B.depth, infinite=B.infinite)


def _step(B, path, backward):
    return (versik.predecessor if backward else versik.successor)(B, path)


def cmd_successor(args, rep):
    B = load_diagram(args.diagram, args.depth)
    path = versik.parse_path(B, args.path)
    got = _step(B, path, args.backward)
    if got is versik.NEED_DEEPER:
        if not B.infinite and len(path) == B.depth:
            return rep.set("extreme", FOUND, path=args.path)
        return rep.set("needs-deeper", UNKNOWN, path=args.path)
    return rep.set("ok", OK, path=args.path, result=versik.format_path(B, got))


def cmd_orbit(args, rep):
    B = load_diagram(args.diagram, args.depth)
    path = versik.parse_path(B, args.path)
    orbit = [versik.format_path(B, path)]
    for _ in range(args.steps):
        path = _step(B, path, args.backward)
        if path is versik.NEED_DEEPER:
            return rep.set("stopped", OK, orbit=orbit, stopped_at_extreme=True)
        orbit.append(versik.format_path(B, path))
    return rep.set("ok", OK, orbit=orbit)


def _int_list(text: str):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma separated integers, got {text!r}") from None


def cmd_telescope(args, rep):
    B = load_diagram(args.diagram, args.depth)
    T = bratteli.telescope(B, _int_list(args.cuts))
    _write_out(args, formats.emit_diagram(T), rep)
    return rep.set("ok", OK, levels=T.depth)


def cmd_equiv(args, rep):
    B1 = load_diagram(args.diagram, args.depth)
    B2 = load_diagram(args.other, args.depth)
    depth = args.bound
    v = bratteli.order_equivalent_bounded(B1, B2, depth)
    if v.status == "Equivalent":
        rep.data["witness"] = {"kind": "equivalence", "diagram": args.diagram,
                               "other": args.other, "bound": depth,
                               "data": formats.equivalence_witness_to_json(v.witness)}
        return rep.set("Equivalent", OK, cuts=v.witness["cuts"])
    if v.status == "Inequivalent":
        return rep.set("Inequivalent", FOUND, certificate=v.certificate)
    return rep.set("Unknown", UNKNOWN, bound=depth)


def _describe(r):
    return pds.describe(r)


def cmd_check_bs(args, rep):
    S = load_system(args.system, args.depth)
    level = min(args.level, S.space.depth_bound)
    U = _cells(S.space, args.U) if args.U else S.xmin(level)
    V = _cells(S.space, args.V) if args.V else S.xmax(level)
    w = pds.detect_periodic(S, bound=32, depth=min(args.depth, 8))
    if w is not None:
        rep.data["witness"] = {"kind": "periodic", "system": args.system, "depth": args.depth,
                               "level": w.level, "cycle": [format_word(c) for c in w.cycle]}
        return rep.set("periodic", FOUND, period=w.period, cell=format_word(w.cell))
    try:
        f = pds.check_axiom_forward(S, U, args.bound, level)
        b = pds.check_axiom_backward(S, V, args.bound, level)
    except pds.PreconditionFailed as exc:
        raise InputError(str(exc)) from None
    details = {"forward": _describe(f), "backward": _describe(b),
               "U": _words(U.cells), "V": _words(V.cells)}
    if args.probe:
        probe = pds.axiom_equivalence_probe(S, levels=range(1, level + 1), seed=args.seed,
                                            bound=args.bound)
        details["probe_samples"] = probe.count()
        details["probe_disagreements"] = [f"level {L}: {d}" for L, d in probe.disagreements]
    if f and b:
        return rep.set("Satisfied", OK, **details)
    if (not f and f.stalled_at) or (not b and b.stalled_at):
        return rep.set("Fails", FOUND, **details)
    return rep.set("Unknown", UNKNOWN, **details)


def _chain(S, args):
    if args.chain:
        return [_cells(S.space, c.split("+")) for c in args.chain]
    return kr.default_chain(S, args.stages, args.shift)


def _extract(args):
    S = load_system(args.system, args.depth + args.shift + 4)
    chain = _chain(S, args)
    stages = kr.build_stages(S, len(chain), chain)
    return S, kr.extract_diagram(stages, S, name=f"kr({S.name})")


def cmd_extract_diagram(args, rep):
    S, B = _extract(args)
    _write_out(args, formats.emit_diagram(B), rep)
    return rep.set("ok", OK, levels=B.depth,
                   paths=[B.total_paths(n) for n in range(1, B.depth + 1)])


def cmd_verify_conjugacy(args, rep):
    if args.stages < args.depth and not args.chain:
        args.stages = args.depth
    S, B = _extract(args)
    depth = min(args.depth, B.depth)
    v = kr.verify_conjugacy(S, B, depth)
    if v:
        return rep.set("Verified", OK, pairs=v.pairs, checked_depth=depth)
    rep.data["witness"] = {"kind": "conjugacy", "system": args.system, "depth": depth,
                           "stages": args.stages, "shift": args.shift,
                           "path": list(v.path), "detail": v.detail}
    return rep.set("Counterexample", FOUND, detail=v.detail)


def _default_uv(N, args):
    level = min(args.level, N.space.depth_bound)
    U = _cells(N.space, args.U) if args.U else ClopenSet(N.space, N.xmin_cells(level))
    V = _cells(N.space, args.V) if args.V else ClopenSet(N.space, N.xmax_cells(level))
    return U, V


def _afnest(N, args):
    U, V = _default_uv(N, args)
    r = nested.check_afnest(N, U, V, search_depth=args.search_depth)
    if r:
        return "Found", OK, {"k": r.level, "M": r.M, "Y": _words(r.Y.cells),
                             "Z": _words(r.Z.cells)}
    return "NotFound", UNKNOWN, {"reasons": [f"k={k}: {d}" for k, d in r.reasons]}


def cmd_check_afnest(args, rep):
    N = load_nested(args.nested, args.depth)
    verdict, code, details = _afnest(N, args)
    return rep.set(verdict, code, **details)


def _discontinuity_json(args, w):
    return {"kind": "discontinuity", "nested": args.nested, "depth": args.depth,
            "level": w.level, "cell": format_word(w.cell), "n": w.n,
            "values": list(w.values), "points": [p.to_text() for p in w.points]}


def _continuity(N, args, rep):
    r = nested.continuity_diagnostic(N, depth=args.depth, nmax=args.nmax)
    if r:
        return "Continuous", OK, {"checked_depth": r.depth}
    w = r.witness
    rep.data["witness"] = _discontinuity_json(args, w)
    return "Discontinuity", FOUND, {"values": list(w.values), "cell": format_word(w.cell),
                                    "n": w.n, "points": [p.to_text() for p in w.points]}


def cmd_diagnose_cocycle(args, rep):
    N = load_nested(args.nested, args.depth)
    verdict, code, details = _continuity(N, args, rep)
    return rep.set(verdict, code, **details)


def _semisat(N, args, rep):
    depth = min(args.depth, 8)
    r = nested.semisaturation_check(N, depth=depth)
    if isinstance(r, nested.Admits):
        return "Admits", OK, {"extension_cells": len(r.extension)}
    if isinstance(r, nested.FailsWithWitness):
        rep.data["witness"] = {"kind": "semisat", "nested": args.nested, "depth": args.depth,
                               "cell": format_word(r.cell), "direction": r.direction,
                               "separation_level": r.separation_level,
                               "image_cells": [format_word(c) for c in r.image_cells],
                               "chains": [[format_word(c) if c else None for c in ch]
                                          for ch in r.chains]}
        return "FailsWithWitness", FOUND, {"separation_level": r.separation_level,
                                           "image_cells": [format_word(c) for c in r.image_cells]}
    return "UnknownUpTo", UNKNOWN, {"depth": r.depth}


def cmd_check_semisat(args, rep):
    N = load_nested(args.nested, args.depth)
    try:
        verdict, code, details = _semisat(N, args, rep)
    except nested.NotDense as exc:
        raise InputError(f"precondition fails: {exc}") from None
    return rep.set(verdict, code, **details)


def cmd_diagnose(args, rep):
    N = load_nested(args.nested, args.depth)
    problems = nested.validate_nested(N, depth=min(args.depth, 6), window=3)
    codes = [FOUND if problems else OK]
    details = {"nested": "ok" if not problems else [str(p) for p in problems[:5]]}
    af, code, _ = _afnest(N, args)
    details["af"] = af
    codes.append(code)
    cont, code, extra = _continuity(N, args, rep)
    details["cocycle"] = cont
    if cont == "Discontinuity":
        details["cocycle_values"] = extra["values"]
    codes.append(code)
    witness = rep.data["witness"]
    try:
        semi, code, _ = _semisat(N, args, rep)
    except nested.NotDense:
        semi, code = "NotDense", FOUND
    if witness is not None:
        rep.data["witness"] = witness
    details["semisaturation"] = semi
    codes.append(code)
    final = FOUND if FOUND in codes else (UNKNOWN if UNKNOWN in codes else OK)
    return rep.set("problems" if final == FOUND else ("unknown" if final else "ok"), final,
                   **details)


def cmd_examples(args, rep):
    if args.action == "list":
        rows = [{"name": n, "kind": examples.KINDS[n], "about": examples.DESCRIPTIONS[n]}
                for n in examples.CATALOG]
        rep.text = "\n".join(f"{r['name']:22} {r['kind']:8} {r['about']}" for r in rows)
        return rep.set("ok", OK, count=len(rows), names=[r["name"] for r in rows])
    if not args.name:
        raise InputError("examples emit needs a name")
    kind, obj = _builtin("@" + args.name, "file", args.depth)
    if kind == "diagram":
        text = formats.emit_diagram(obj)
    elif kind == "system":
        text = formats.emit_system(obj, args.depth)
    else:
        text = formats.emit_nested(obj, args.depth, args.window)
    _write_out(args, text, rep)
    return rep.set("ok", OK, name=args.name, kind=kind)


def cmd_export_dot(args, rep):
    B = load_diagram(args.diagram, args.depth)
    levels = args.levels if args.levels else (B.depth if not B.infinite else B.depth + 2)
    _write_out(args, bratteli.to_dot(B, levels), rep)
    return rep.set("ok", OK, levels=levels)


# ---------------------------------------------------------------- replay

def _replay(w: dict) -> list:
    kind = w.get("kind")
    depth = int(w.get("depth", 12))
    if kind == "discontinuity":
        N = load_nested(w["nested"], depth)
        pts = []
        for t in w["points"]:
            head, cyc = t.split("|", 1)
            pts.append(Point(N.space, parse_word(head), parse_word(cyc)))
        dw = nested.DiscontinuityWitness(w["level"], parse_word(w["cell"]), w["n"], (),
                                         tuple(w["values"]), tuple(pts))
        return [] if nested.replay_discontinuity(N, dw) else ["values do not recompute"]
    if kind == "equivalence":
        B1 = load_diagram(w["diagram"], depth)
        B2 = load_diagram(w["other"], depth)
        wit = formats.equivalence_witness_from_json(w["data"])
        return bratteli.replay_witness(B1, B2, wit, w["bound"])
    if kind == "periodic":
        S = load_system(w["system"], depth)
        cyc = [parse_word(c) for c in w["cycle"]]
        f = pds.resolved_cell_map(S.phi, w["level"])
        bad = [format_word(c) for c, d in zip(cyc, cyc[1:] + cyc[:1]) if f.get(c) != d]
        return [f"{c} does not map to the next cell" for c in bad]
    if kind == "semisat":
        N = load_nested(w["nested"], depth)
        sign = w["direction"]
        f1 = N.get(sign)
        heads = [parse_word(c) for c in w["image_cells"]]
        sep = w["separation_level"]
        out = []
        for head, chain in zip(heads, w["chains"]):
            for c in chain:
                if c is None:
                    out.append("missing chain cell")
                    continue
                r = f1.cell_image(parse_word(c))
                if not hasattr(r, "cell") or r.cell[:sep] != head:
                    out.append(f"{c} does not map into {format_word(head)}")
        if heads[0] == heads[1]:
            out.append("image cells do not separate")
        return out
    if kind == "conjugacy":
        ns = argparse.Namespace(system=w["system"], depth=depth, stages=w["stages"],
                                shift=w["shift"], chain=None)
        S, B = _extract(ns)
        v = kr.verify_conjugacy(S, B, depth)
        return [] if not v and list(v.path) == w["path"] else ["counterexample does not recur"]
    raise InputError(f"unknown witness kind {kind!r}")


def cmd_replay(args, rep):
    try:
        data = json.loads(_read(args.witness))
    except json.JSONDecodeError as exc:
        raise InputError(f"witness is not JSON: {exc}") from None
    w = data.get("witness", data) if isinstance(data, dict) else None
    if not isinstance(w, dict):
        raise InputError("no witness in the file")
    failures = _replay(w)
    if failures:
        return rep.set("failed", FOUND, kind=w["kind"], failures=failures)
    return rep.set("verified", OK, kind=w["kind"])


# ---------------------------------------------------------------- parser

def _default_depth() -> int:
    raw = os.environ.get("VERSHIK_LAB_DEPTH")
    if raw is None:
        return 12
    try:
        return int(raw)
    except ValueError:
        return 12


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--depth", type=int, default=_default_depth(),
                        help="resolution cap (default 12 or $VERSHIK_LAB_DEPTH)")
    common.add_argument("--seed", type=int, default=0)
    p = _Parser(prog="vershik-lab", description="Bratteli diagrams, Vershik maps and nests.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("validate-diagram", cmd_validate_diagram, "check diagram invariants")
    sp.add_argument("--diagram", required=True)
    for name, fn, h in (("successor", cmd_successor, "Vershik successor of a finite path"),
                        ("orbit", cmd_orbit, "iterate the successor")):
        sp = add(name, fn, h)
        sp.add_argument("--diagram", required=True)
        sp.add_argument("--path", required=True, help="edge orders, e.g. 1,1,0 (k@vertex)")
        sp.add_argument("--backward", action="store_true")
        if name == "orbit":
            sp.add_argument("--steps", type=int, default=8)
    sp = add("telescope", cmd_telescope, "contract a diagram at the given cut levels")
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--cuts", required=True)
    sp.add_argument("--out")
    sp = add("equiv", cmd_equiv, "bounded order-equivalence search")
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--other", required=True)
    sp.add_argument("--bound", type=int, default=4)
    sp = add("check-bs", cmd_check_bs, "Bratteli-system axioms and periodic points")
    sp.add_argument("--system", required=True)
    sp.add_argument("--level", type=int, default=3)
    sp.add_argument("--U", nargs="+")
    sp.add_argument("--V", nargs="+")
    sp.add_argument("--bound", type=int, default=256)
    sp.add_argument("--probe", action="store_true")
    for name, fn, h in (("extract-diagram", cmd_extract_diagram, "diagram from KR towers"),
                        ("verify-conjugacy", cmd_verify_conjugacy, "check the extracted conjugacy")):
        sp = add(name, fn, h)
        sp.add_argument("--system", required=True)
        sp.add_argument("--stages", type=int, default=6)
        sp.add_argument("--shift", type=int, default=0)
        sp.add_argument("--chain", nargs="+", help="Y_n as cell lists joined by +")
        if name == "extract-diagram":
            sp.add_argument("--out")
    for name, fn, h in (("check-afnest", cmd_check_afnest, "AF criterion search"),
                        ("diagnose-cocycle", cmd_diagnose_cocycle, "cocycle continuity"),
                        ("check-semisat", cmd_check_semisat, "semi-saturation"),
                        ("diagnose", cmd_diagnose, "all nest checks")):
        sp = add(name, fn, h)
        sp.add_argument("--nested", required=True)
        sp.add_argument("--level", type=int, default=3)
        sp.add_argument("--U", nargs="+")
        sp.add_argument("--V", nargs="+")
        sp.add_argument("--search-depth", type=int, default=4)
        sp.add_argument("--nmax", type=int, default=4)
    sp = add("examples", cmd_examples, "list or emit built-ins")
    sp.add_argument("action", choices=("list", "emit"))
    sp.add_argument("name", nargs="?")
    sp.add_argument("--window", type=int, default=8)
    sp.add_argument("--out")
    sp = add("export-dot", cmd_export_dot, "DOT rendering of a diagram")
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--out")
    sp = add("replay", cmd_replay, "re-verify a witness from a JSON report")
    sp.add_argument("--witness", required=True)
    return p


def run(argv=None) -> tuple:
    """Parse and dispatch; returns (exit code, rendered report)."""
    args = build_parser().parse_args(argv)
    rep = Report(args.command, args)
    try:
        code = args.func(args, rep)
    except (InputError, formats.FormatError, versik.PathError, bratteli.BadCuts,
            bratteli.LevelMismatch, SpaceError) as exc:
        code = rep.set("input-error", BAD_INPUT, error=str(exc))
    except (ResolutionExhausted, kr.LambdaUnbounded) as exc:
        code = rep.set("resolution-exhausted", UNKNOWN, error=str(exc))
    return code, rep.render(args.format)


def main(argv: Optional[list] = None) -> int:
    code, out = run(argv)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
