"""Command-line front end over workspace files.

A workspace file holds rule lines, ``let name = term`` bindings and
``option key = value`` lines.  Wherever a command takes a proof-term name it
also accepts an inline term, which is handy for one-off queries.

Exit codes: 0 ok or equivalent, 1 negative verdict, 2 unknown or truncated,
3 input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, TextIO

from . import derivation as dv
from .extraction import DEFAULT_BOUND, ExtractablePair, ers, verify_extraction_confluence
from .peq import EQUIVALENT, NOT_EQUIVALENT, Counterexample, ProjectionWitness, peq_decide_finitary, peq_upto_depth
from .projection import DEFAULT_FUEL, efp, project
from .proofterm import DEFAULT_CERT_DEPTH, Undefined, is_convergent, mind, pt_eq, src, tgt, validate
from .syntax import ParseError, Workspace, parse_context, parse_proof_term, parse_workspace, show
from .terms import Node, Omega, TermError, format_position, parse_position

OK, NEGATIVE, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3


class Report:
    """Collects ``key=value`` pairs and free text; prints one or the other."""

    def __init__(self, fmt: str, out: TextIO):
        self.fmt = fmt
        self.out = out

    def kv(self, key: str, value: object, text: str | None = None) -> None:
        if self.fmt == "report":
            print(f"{key}={_flat(value)}", file=self.out)
        else:
            print(text if text is not None else f"{key}: {_flat(value)}", file=self.out)

    def text(self, line: str) -> None:
        if self.fmt == "text":
            print(line, file=self.out)


def _flat(v: object) -> str:
    if isinstance(v, (tuple, list)) and not isinstance(v, str):
        return ",".join(_flat(x) for x in v)
    if isinstance(v, float) and v == float("inf"):
        return "inf"
    if hasattr(v, "kids"):
        return show(v)  # type: ignore[arg-type]
    return str(v).replace("\n", " ")


def _load(path: str) -> Workspace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    return parse_workspace(text)


def _term(ws: Workspace, name: str) -> Node:
    if name in ws.terms:
        return ws.terms[name]
    try:
        return parse_proof_term(name, ws.trs)
    except ParseError:
        raise ParseError(f"unknown proof term {name!r}") from None


def _opt(args: argparse.Namespace, ws: Workspace, key: str, default: int) -> int:
    v = getattr(args, key, None)
    if v is not None:
        return v
    try:
        return int(ws.options.get(key, default))
    except ValueError:
        raise ParseError(f"option {key} must be an integer") from None


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args, ws: Workspace, rep: Report) -> int:
    names = args.names or sorted(ws.terms)
    bad = 0
    for name in names:
        t = _term(ws, name)
        problems = validate(t, ws.trs)
        if problems:
            bad += 1
            rep.kv(f"{name}.status", "invalid", f"{name}: invalid")
            for v in problems:
                rep.kv(f"{name}.violation", str(v), f"  {v}")
            continue
        cert = is_convergent(t)
        if not cert:
            bad += 1
            rep.kv(f"{name}.status", cert.verdict, f"{name}: {cert.verdict} ({cert.reason})")
            continue
        rep.kv(f"{name}.status", "ok", f"{name}: ok")
        if isinstance(t, Omega) and cert.witness is not None:
            w = [cert.witness(k) for k in range(4)]
            rep.kv(f"{name}.witness", w, f"  convergent, witness for k=0..3: {w}")
    return NEGATIVE if bad else OK


def _unary(fn: Callable[[Node], object], key: str):
    def run(args, ws: Workspace, rep: Report) -> int:
        value = fn(_term(ws, args.name))
        rep.kv(key, value)
        return UNKNOWN if isinstance(value, Undefined) else OK

    return run


def cmd_project(args, ws: Workspace, rep: Report) -> int:
    psi, phi = _term(ws, args.psi), _term(ws, args.phi)
    res = project(psi, phi, fuel=_opt(args, ws, "fuel", DEFAULT_FUEL), depth=_opt(args, ws, "depth", DEFAULT_CERT_DEPTH))
    rep.kv("outcome", res.outcome)
    if args.trace:
        for e in res.trace:
            rep.kv("trace", f"{e.clause}", f"  ({e.clause})  {show(e.dividend)} / {show(e.divisor)}")
    if res.closed:
        rep.kv("result", res.term)
        return OK
    for r in res.recurrences:
        rep.kv("recurrence", r.equation(f"{args.psi}/{args.phi}"))
    rep.kv("approximation_depth", res.depth)
    rep.kv("approximation", res.approximation)
    return UNKNOWN


def cmd_peq(args, ws: Workspace, rep: Report) -> int:
    psi, phi = _term(ws, args.psi), _term(ws, args.phi)
    bound = _opt(args, ws, "bound", DEFAULT_BOUND)
    if args.derivation:
        return _check_script(Path(args.derivation), psi, phi, rep)
    if args.depth is not None and not args.finitary:
        v = peq_upto_depth(psi, phi, args.depth, bound)
    else:
        v = peq_decide_finitary(psi, phi, bound)
    rep.kv("verdict", v.value)
    rep.kv("reason", v.reason)
    ev = v.evidence
    if isinstance(ev, dv.LimDerivation):
        rep.kv("evidence", f"lim blocks k={','.join(map(str, sorted(ev.blocks)))}")
        if args.show_evidence:
            rep.text(dv.format_lim(ev))
    elif isinstance(ev, dv.Derivation):
        rep.kv("evidence", f"derivation of {len(ev.steps)} steps")
        if args.show_evidence:
            rep.text(dv.format_derivation(ev))
    elif isinstance(ev, ProjectionWitness):
        rep.kv("evidence", "empty projections")
    elif isinstance(ev, Counterexample):
        rep.kv("counterexample", ev.kind)
        rep.kv("left", ev.left)
        rep.kv("right", ev.right)
    if v.value == EQUIVALENT:
        return OK
    return NEGATIVE if v.value == NOT_EQUIVALENT else UNKNOWN


def _check_script(path: Path, psi: Node, phi: Node, rep: Report) -> int:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    try:
        d = dv.run_script(text, psi, phi)
    except dv.StepFailed as e:
        # a step that does not apply is a rejected derivation, not bad input
        rep.kv("verdict", "rejected")
        rep.kv("failed_line", e.line)
        rep.kv("message", str(e))
        return NEGATIVE
    res = dv.check_derivation(d)
    if res and isinstance(d, dv.Derivation) and not pt_eq(d.end, phi):
        res = dv.CheckResult(False, len(d.steps), f"derivation ends at {show(d.end)}, not at {show(phi)}")
    rep.kv("verdict", EQUIVALENT if res else "rejected")
    if not res:
        rep.kv("failed_step", res.index)
        rep.kv("message", res.message)
    elif res.sampled:
        rep.kv("note", "infinite-composition steps were checked on samples")
    return OK if res else NEGATIVE


def cmd_ers(args, ws: Workspace, rep: Report) -> int:
    res = ers(_term(ws, args.name), _opt(args, ws, "bound", DEFAULT_BOUND))
    for x in res:
        rep.kv("pair", f"r={format_position(x.r)},p={format_position(x.p)}", f"<{format_position(x.r)}, {format_position(x.p)}>  {x.rule.name}")
    rep.kv("complete", "yes" if res.complete else f"no (bound {res.bound})")
    return OK if res.complete else UNKNOWN


def _parse_pair(s: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # positions use dots, so the only comma separates the two halves
    parts = dict(kv.split("=", 1) for kv in s.split(",") if "=" in kv)
    if set(parts) != {"r", "p"}:
        raise ParseError(f"bad pair {s!r}; expected r=<pos>,p=<pos>")
    return parse_position(parts["r"]), parse_position(parts["p"])


def cmd_prop7(args, ws: Workspace, rep: Report) -> int:
    t = _term(ws, args.name)
    r, p = _parse_pair(args.pair)
    rep_ = verify_extraction_confluence(t, (r, p), depth=args.depth or 4, bound=_opt(args, ws, "bound", DEFAULT_BOUND))
    rep.kv("step", rep_.phi)
    rep.kv("residual", rep_.psi_over_phi)
    rep.kv("back", rep_.phi_over_psi)
    left, right = dv.check_derivation(rep_.left), dv.check_derivation(rep_.right)
    rep.kv("left_derivation", f"{'accepted' if left else 'rejected'} ({len(rep_.left.steps)} steps)")
    rep.kv("right_derivation", f"{'accepted' if right else 'rejected'} ({len(rep_.right.steps)} steps)")
    if args.show_evidence:
        rep.text(dv.format_derivation(rep_.left))
    return OK if left and right else NEGATIVE


def cmd_efp(args, ws: Workspace, rep: Report) -> int:
    from .extraction import efp_derivation

    t = _term(ws, args.name)
    ctx = parse_context(args.context, ws.trs)
    parts = efp(t, ctx)
    rep.kv("components", len(parts))
    for part in parts:
        rep.kv("component", part, f"  {show(part)}")
    d = efp_derivation(t, ctx)
    ok = dv.check_derivation(d)
    rep.kv("derivation", f"{'accepted' if ok else 'rejected'} ({len(d.steps)} steps, structural={d.is_structural()})")
    return OK if ok else NEGATIVE


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infproof", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "report"), default="text")
    common.add_argument("--fuel", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--bound", type=int)
    common.add_argument("--trace", action="store_true")
    common.add_argument("--show-evidence", action="store_true", help="print derivations in full")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("workspace")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, "validate every (or the named) proof term").add_argument("names", nargs="*")
    for name, fn, key in (("src", src, "source"), ("tgt", tgt, "target"), ("mind", mind, "mind")):
        add(name, _unary(fn, key), f"print the {key} of a proof term").add_argument("name")
    p = add("project", cmd_project, "project one proof term over another")
    p.add_argument("psi")
    p.add_argument("phi")
    p = add("peq", cmd_peq, "decide or certify permutation equivalence")
    p.add_argument("psi")
    p.add_argument("phi")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--finitary", action="store_true", help="exact check for finitary terms (default without --depth)")
    mode.add_argument("--derivation", metavar="FILE", help="check a derivation script")
    add("ers", cmd_ers, "list easily extractable pairs").add_argument("name")
    p = add("prop7", cmd_prop7, "verify the extraction square for one pair")
    p.add_argument("name")
    p.add_argument("--pair", required=True, metavar="r=<pos>,p=<pos>")
    p = add("efp", cmd_efp, "explicit fixed-prefix form with its derivation")
    p.add_argument("name")
    p.add_argument("--context", required=True, help="context with _ for holes")
    return ap


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        ws = _load(args.workspace)
        return args.fn(args, ws, Report(args.format, out))
    except (ParseError, dv.ScriptError) as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR
    except (TermError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
