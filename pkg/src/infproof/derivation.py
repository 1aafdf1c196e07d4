"""Equational derivations between proof terms.

Terms are addressed after :func:`proofterm.normalize`: compositions are
right-nested spines and an omega-composition is read as ``psi_0 . rest``
when a position walks into it.  Equations that relate two neighbours of a
spine may be applied at the spine node holding the first of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

from . import schema
from .proofterm import (
    Undefined,
    from_spine,
    mind,
    normalize,
    pt_eq,
    spine,
    src,
    tgt,
)
from .terms import (
    Comp,
    Fun,
    Node,
    Omega,
    Position,
    Rule,
    RuleSymbol,
    TermError,
    format_position,
    has_rules,
    head,
    instantiate_lhs,
    instantiate_rhs,
    match_pattern,
    parse_position,
    replace_at,
    subterm_at,
    term_eq,
)

EQUATIONS = ("IdLeft", "IdRight", "Assoc", "Struct", "InfStruct", "OutIn", "InOut")
STRUCTURAL = frozenset(EQUATIONS) - {"OutIn", "InOut"}
LR, RL = "lr", "rl"


class EquationError(TermError):
    pass


class NoMatch(EquationError):
    pass


class SideCondition(EquationError):
    pass


# ---------------------------------------------------------------------------
# single equations


def _pair(u: Node) -> tuple[Node, Node, Node | None]:
    """``(x, y, tail)`` for a spine node ``x . y . tail`` (tail may be None)."""
    if isinstance(u, Omega):
        u = schema.split(u)
    if not isinstance(u, Comp):
        raise NoMatch("not a composition")
    x, rest = u.left, u.right
    if isinstance(rest, Omega):
        return x, rest, None
    if isinstance(rest, Comp):
        return x, rest.left, rest.right
    return x, rest, None


def _with_tail(t: Node, tail: Node | None) -> Node:
    return t if tail is None else Comp(t, tail)


def _local(eq: str, d: str, u: Node) -> Node:
    fn = _TABLE.get((eq, d))
    if fn is None:
        raise EquationError(f"unknown equation {eq} {d}")
    try:
        return fn(u)
    except NoMatch:
        # relate two neighbours of a spine
        if eq in ("IdLeft", "IdRight", "Struct", "OutIn", "InOut") and (eq, d) not in (
            ("IdLeft", RL),
            ("IdRight", RL),
            ("Struct", RL),
            ("OutIn", LR),
            ("InOut", LR),
        ):
            x, y, tail = _pair(u)
            if isinstance(y, Omega) and eq != "IdRight":
                y0, rest = schema.expand(y, 0), schema.shift(y)
                try:
                    return Comp(fn(Comp(x, y)), tail) if tail is not None else fn(Comp(x, y))
                except NoMatch:
                    return Comp(fn(Comp(x, y0)), rest)
            return _with_tail(fn(Comp(x, y)), tail)
        raise


def _comp_parts(u: Node) -> tuple[Node, Node]:
    if not isinstance(u, Comp):
        raise NoMatch("not a composition")
    return u.left, u.right


def _id_left_lr(u: Node) -> Node:
    a, b = _comp_parts(u)
    if has_rules(a):
        raise NoMatch("left part is not an object term")
    if not term_eq(a, src(b)):
        raise SideCondition("object term differs from the source")
    return b


def _id_left_rl(u: Node) -> Node:
    return Comp(src(u), u)


def _id_right_lr(u: Node) -> Node:
    a, b = _comp_parts(u)
    if has_rules(b):
        raise NoMatch("right part is not an object term")
    t = tgt(a)
    if isinstance(t, Undefined) or not term_eq(b, t):
        raise SideCondition("object term differs from the target")
    return a


def _id_right_rl(u: Node) -> Node:
    t = tgt(u)
    if isinstance(t, Undefined):
        raise SideCondition(f"target {t}")
    return Comp(u, t)


def _assoc_lr(u: Node) -> Node:
    a, bc = _comp_parts(u)
    b, c = _comp_parts(bc)
    return Comp(Comp(a, b), c)


def _assoc_rl(u: Node) -> Node:
    ab, c = _comp_parts(u)
    a, b = _comp_parts(ab)
    return Comp(a, Comp(b, c))


def _struct_lr(u: Node) -> Node:
    a, b = _comp_parts(u)
    a, b = head(a), head(b)
    if not (isinstance(a, Fun) and isinstance(b, Fun)) or a.name != b.name or len(a.args) != len(b.args):
        raise NoMatch("Struct needs two applications of the same function symbol")
    if not a.args:
        raise NoMatch("constant")
    return Fun(a.name, tuple(Comp(x, y) for x, y in zip(a.args, b.args)))


def _split_first(t: Node) -> tuple[Node, Node]:
    t = normalize(t)
    if isinstance(t, Omega):
        return schema.expand(t, 0), schema.shift(t)
    if isinstance(t, Comp):
        return t.left, t.right
    out = tgt(t)
    if isinstance(out, Undefined):
        raise SideCondition(f"target {out}")
    return t, out


def _struct_rl(u: Node) -> Node:
    u = head(u)
    if not isinstance(u, Fun) or not u.args:
        raise NoMatch("Struct needs a function application")
    parts = [_split_first(a) for a in u.args]
    return Comp(Fun(u.name, tuple(p[0] for p in parts)), Fun(u.name, tuple(p[1] for p in parts)))


def _infstruct_lr(u: Node) -> Node:
    if not isinstance(u, Omega):
        raise NoMatch("InfStruct needs an omega-composition")
    root = head(src(schema.expand(u, 0)))
    if not isinstance(root, Fun) or not root.args:
        raise NoMatch("components are not function applications")
    bodies = schema.peel(u.body, root.name, len(root.args))
    if bodies is None:
        raise NoMatch(f"components do not share the symbol {root.name}")
    return Fun(root.name, tuple(schema.make_omega(b) for b in bodies))


def _infstruct_rl(u: Node) -> Node:
    u = head(u)
    if not isinstance(u, Fun) or not any(isinstance(a, Omega) for a in u.args):
        raise NoMatch("InfStruct needs an application with omega-composition arguments")
    bodies = []
    for a in u.args:
        if isinstance(a, Omega):
            bodies.append(a.body)
        elif not has_rules(a):
            bodies.append(a)
        else:
            raise NoMatch("argument is neither an omega-composition nor an object term")
    return Omega(schema.canonical(Fun(u.name, tuple(bodies))))


def _outin_lr(u: Node) -> Node:
    u = head(u)
    if not isinstance(u, Rule):
        raise NoMatch("OutIn needs a rule symbol")
    srcs = tuple(src(a) for a in u.args)
    return Comp(Rule(u.symbol, srcs), instantiate_rhs(u.symbol, u.args))


def _outin_rl(u: Node) -> Node:
    a, b = _comp_parts(u)
    a = head(a)
    if not isinstance(a, Rule) or has_rules(Fun("_", a.args)):
        raise NoMatch("OutIn needs a rule symbol over object terms")
    sigma = match_pattern(a.symbol.rhs, b)
    if sigma is None:
        raise NoMatch("right part is not an instance of the right-hand side")
    args = []
    for v, s in zip(a.symbol.variables, a.args):
        x = sigma.get(v, s)
        if not term_eq(src(x), s):
            raise SideCondition(f"source of argument {v} differs")
        args.append(x)
    return Rule(a.symbol, tuple(args))


def _inout_lr(u: Node) -> Node:
    u = head(u)
    if not isinstance(u, Rule):
        raise NoMatch("InOut needs a rule symbol")
    tgts = []
    for a in u.args:
        t = tgt(a)
        if isinstance(t, Undefined):
            raise SideCondition(f"target {t}")
        tgts.append(t)
    return Comp(instantiate_lhs(u.symbol, u.args), Rule(u.symbol, tuple(tgts)))


def _inout_rl(u: Node) -> Node:
    a, b = _comp_parts(u)
    b = head(b)
    if not isinstance(b, Rule) or has_rules(Fun("_", b.args)):
        raise NoMatch("InOut needs a rule symbol over object terms")
    sigma = match_pattern(b.symbol.lhs, a)
    if sigma is None:
        raise NoMatch("left part is not an instance of the left-hand side")
    args = []
    for v, t in zip(b.symbol.variables, b.args):
        x = sigma[v]
        xt = tgt(x)
        if isinstance(xt, Undefined) or not term_eq(xt, t):
            raise SideCondition(f"target of argument {v} differs")
        args.append(x)
    return Rule(b.symbol, tuple(args))


_TABLE: dict[tuple[str, str], Callable[[Node], Node]] = {
    ("IdLeft", LR): _id_left_lr,
    ("IdLeft", RL): _id_left_rl,
    ("IdRight", LR): _id_right_lr,
    ("IdRight", RL): _id_right_rl,
    ("Assoc", LR): _assoc_lr,
    ("Assoc", RL): _assoc_rl,
    ("Struct", LR): _struct_lr,
    ("Struct", RL): _struct_rl,
    ("InfStruct", LR): _infstruct_lr,
    ("InfStruct", RL): _infstruct_rl,
    ("OutIn", LR): _outin_lr,
    ("OutIn", RL): _outin_rl,
    ("InOut", LR): _inout_lr,
    ("InOut", RL): _inout_rl,
}


def apply_equation(eq: str, d: str, t: Node, pos: Position = ()) -> Node:
    """Rewrite the subterm of ``normalize(t)`` at ``pos`` with one equation instance."""
    if eq not in EQUATIONS:
        raise EquationError(f"unknown equation {eq!r}")
    if d not in (LR, RL):
        raise EquationError(f"direction must be lr or rl, not {d!r}")
    t = normalize(t)
    u = subterm_at(t, pos)
    return normalize(replace_at(t, pos, _local(eq, d, u)))


# ---------------------------------------------------------------------------
# derivations


@dataclass(frozen=True)
class Step:
    eq: str
    dir: str
    pos: Position
    before: Node
    after: Node

    def describe(self) -> str:
        return f"{self.eq} {self.dir} @ {format_position(self.pos)}"


@dataclass(frozen=True)
class InfCompStep:
    """``comp i. a_i ~ comp i. b_i`` at ``pos`` from one derivation per index."""

    pos: Position
    before: Node
    after: Node
    family: Callable[[int], "Derivation"]
    samples: int = 9

    def describe(self) -> str:
        return f"InfComp @ {format_position(self.pos)}"


AnyStep = Union[Step, InfCompStep]


@dataclass
class Derivation:
    start: Node
    end: Node
    steps: list[AnyStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def equations(self) -> set[str]:
        out = set()
        for s in self.steps:
            out.add(s.eq if isinstance(s, Step) else "InfComp")
        return out

    def is_structural(self) -> bool:
        return self.equations() <= STRUCTURAL | {"InfComp"}


@dataclass
class LimDerivation:
    """The Lim rule: for each ``k``, derivations ``psi ~ chi_k . psi'_k`` and
    ``phi ~ chi_k . phi'_k`` with ``mind(psi'_k), mind(phi'_k) > k``."""

    psi: Node
    phi: Node
    blocks: dict[int, tuple[Derivation, Derivation]] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    index: int | None = None
    message: str = ""
    sampled: bool = False

    def __bool__(self) -> bool:
        return self.ok


def check_step(s: AnyStep) -> CheckResult:
    if isinstance(s, InfCompStep):
        return _check_infcomp(s)
    try:
        got = apply_equation(s.eq, s.dir, s.before, s.pos)
        if pt_eq(got, s.after):
            return CheckResult(True)
    except EquationError as e:
        err = str(e)
    except TermError as e:
        err = str(e)
    else:
        err = "result differs"
    # a step may also be stated as the mirror image of an instance
    flip = LR if s.dir == RL else RL
    for pos in _mirror_positions(s.pos):
        try:
            back = apply_equation(s.eq, flip, s.after, pos)
            if pt_eq(back, s.before):
                return CheckResult(True)
        except TermError:
            pass
    return CheckResult(False, None, f"{s.describe()}: {err}")


def _mirror_positions(pos: Position) -> list[Position]:
    # a spine component that splits into two components is addressed, on
    # the other side, by the spine node in front of them
    out = [pos]
    if pos and pos[-1] == 1 and all(i == 2 for i in pos[:-1]):
        out.append(pos[:-1])
    return out


def _check_infcomp(s: InfCompStep) -> CheckResult:
    before = normalize(s.before)
    a = subterm_at(before, s.pos)
    after_full = normalize(s.after)
    b = subterm_at(after_full, s.pos)
    if not (isinstance(a, Omega) and isinstance(b, Omega)):
        return CheckResult(False, None, "InfComp needs omega-compositions on both sides")
    if not pt_eq(replace_at(before, s.pos, b), after_full):
        return CheckResult(False, None, "InfComp changes more than the composition")
    for i in range(s.samples):
        d = s.family(i)
        if not pt_eq(d.start, schema.expand(a, i)) or not pt_eq(d.end, schema.expand(b, i)):
            return CheckResult(False, None, f"InfComp component {i} is not related", True)
        res = check_derivation(d)
        if not res:
            return CheckResult(False, None, f"InfComp component {i}: {res.message}", True)
    return CheckResult(True, sampled=True)


def check_derivation(d: Derivation | LimDerivation) -> CheckResult:
    """Accept iff every step re-derives and consecutive terms chain."""
    if isinstance(d, LimDerivation):
        return check_lim(d)
    cur = d.start
    sampled = False
    for n, s in enumerate(d.steps):
        if not pt_eq(cur, s.before):
            return CheckResult(False, n, f"step {n} does not start where the previous one ended")
        res = check_step(s)
        if not res:
            return CheckResult(False, n, f"step {n}: {res.message}")
        sampled = sampled or res.sampled
        cur = s.after
    if not pt_eq(cur, d.end):
        return CheckResult(False, len(d.steps), "derivation does not end at the claimed term")
    return CheckResult(True, sampled=sampled)


def common_prefix_split(x: Node, y: Node, k: int, max_splits: int = 64) -> tuple[list[Node], Node, Node] | None:
    """A shared spine prefix ``chi`` with ``x = chi . x'`` and ``y = chi . y'`` and both rests deeper than ``k``."""
    xs, ys = spine(normalize(x)), spine(normalize(y))
    shared: list[Node] = []
    splits = 0
    while True:
        rx = from_spine(xs) if xs else None
        ry = from_spine(ys) if ys else None
        if (rx is None or mind(rx) > k) and (ry is None or mind(ry) > k):
            return shared, rx if rx is not None else src(x), ry if ry is not None else src(y)
        if not xs or not ys:
            return None
        a, b = xs[0], ys[0]
        if pt_eq(a, b) and not (isinstance(a, Omega) != isinstance(b, Omega)):
            shared.append(a)
            xs.pop(0)
            ys.pop(0)
            continue
        progressed = False
        for lst in (xs, ys):
            if isinstance(lst[0], Omega):
                om = lst.pop(0)
                lst[:0] = [p for p in spine(normalize(schema.expand(om, 0))) if has_rules(p)] + [
                    normalize(schema.shift(om))
                ]
                progressed = True
        splits += 1
        if not progressed or splits > max_splits:
            return None


def check_lim(d: LimDerivation) -> CheckResult:
    if not d.blocks:
        return CheckResult(False, None, "no Lim blocks")
    sampled = False
    for k, (dp, df) in sorted(d.blocks.items()):
        for name, sub, goal in (("psi", dp, d.psi), ("phi", df, d.phi)):
            if not pt_eq(sub.start, goal):
                return CheckResult(False, k, f"k={k}: {name} derivation starts elsewhere")
            res = check_derivation(sub)
            if not res:
                return CheckResult(False, k, f"k={k}, {name}: {res.message}")
            sampled = sampled or res.sampled
        if common_prefix_split(dp.end, df.end, k) is None:
            return CheckResult(False, k, f"k={k}: no common prefix leaving activity deeper than {k}")
    return CheckResult(True, sampled=sampled)


# ---------------------------------------------------------------------------
# building derivations


def _spine_len(t: Node) -> int:
    return len(spine(normalize(t)))


def component_position(t: Node, j: int) -> Position:
    """Position of spine component ``j`` of ``normalize(t)``."""
    n = _spine_len(t)
    if not 0 <= j < n:
        raise EquationError(f"no spine component {j}")
    return (2,) * j + ((1,) if j < n - 1 else ())


def lift_fun(prefix: Position) -> Callable[[Node, Position], Position]:
    return lambda _before, p: prefix + p


def lift_tail(m: int) -> Callable[[Node, Position], Position]:
    """Sub-derivation on the spine after ``m`` leading components."""
    return lambda _before, p: (2,) * m + p


def lift_head(_tail_len: int = 1) -> Callable[[Node, Position], Position]:
    """Sub-derivation on leading components followed by a fixed tail."""

    def tr(before: Node, p: Position) -> Position:
        n = _spine_len(before)
        j = 0
        while j < len(p) and p[j] == 2 and j < n - 1:
            j += 1
        if j == n - 1:
            return p[:j] + (1,) + p[j:]
        return p

    return tr


class FunCtx:
    """Sub-derivation on the argument at ``prefix``."""

    def __init__(self, prefix: Position):
        self.prefix = tuple(prefix)

    def wrap(self, cur: Node, x: Node) -> Node:
        return replace_at(cur, self.prefix, x)

    def pos(self, _before: Node, p: Position) -> Position:
        return self.prefix + p


class HeadCtx:
    """Sub-derivation on the leading spine components, followed by ``tail``."""

    def __init__(self, tail: Sequence[Node]):
        self.tail = [x for x in tail if has_rules(x)]
        self._pos = lift_head()

    def wrap(self, cur: Node, x: Node) -> Node:
        return from_spine(spine(normalize(x)) + self.tail)

    def pos(self, before: Node, p: Position) -> Position:
        return self._pos(before, p) if self.tail else p


class TailCtx:
    """Sub-derivation on the spine after the components ``head``."""

    def __init__(self, head_parts: Sequence[Node]):
        self.head = [x for x in head_parts if has_rules(x)]

    def wrap(self, cur: Node, x: Node) -> Node:
        return from_spine(self.head + spine(normalize(x)))

    def pos(self, _before: Node, p: Position) -> Position:
        return (2,) * len(self.head) + p


Context = Union[FunCtx, HeadCtx, TailCtx]


class Builder:
    """Accumulates steps by applying them, so every recorded step holds."""

    def __init__(self, start: Node):
        self.start = normalize(start)
        self.cur = self.start
        self.steps: list[AnyStep] = []

    def step(self, eq: str, d: str, pos: Position = ()) -> "Builder":
        new = apply_equation(eq, d, self.cur, pos)
        self.steps.append(Step(eq, d, pos, self.cur, new))
        self.cur = new
        return self

    def mirror(self, eq: str, pos: Position, target: Node) -> "Builder":
        """Record ``cur ~ target`` right-to-left, where ``eq`` rewrites ``target`` to ``cur`` at ``pos``.

        Needed when the right-to-left reading is not a function of ``cur``
        (an erased argument of OutIn, say).
        """
        target = normalize(target)
        if not pt_eq(apply_equation(eq, LR, target, pos), self.cur):
            raise EquationError(f"{eq} does not relate the terms")
        self.steps.append(Step(eq, RL, pos, self.cur, target))
        self.cur = target
        return self

    def reshape(self, t: Node) -> "Builder":
        """Continue from ``t``, which must equal the current term modulo unfolding."""
        if not pt_eq(t, self.cur):
            raise EquationError(f"{t} is not the current term {self.cur}")
        self.cur = t
        return self

    def lift(self, d: Derivation, ctx: Context) -> "Builder":
        """Replay ``d`` inside ``ctx``; each lifted step is re-checked."""
        for n, s in enumerate(d.steps):
            if isinstance(s, InfCompStep):
                raise EquationError("cannot lift an InfComp step")
            before = normalize(ctx.wrap(self.cur, s.before))
            if not pt_eq(before, self.cur):
                raise EquationError(f"lifted step {n} does not continue the derivation")
            after = normalize(ctx.wrap(self.cur, s.after))
            lifted = Step(s.eq, s.dir, ctx.pos(s.before, s.pos), before, after)
            res = check_step(lifted)
            if not res:
                raise EquationError(f"lifted step {n}: {res.message}")
            self.steps.append(lifted)
            self.cur = after
        return self

    def build(self, end: Node | None = None) -> Derivation:
        return Derivation(self.start, self.cur if end is None else normalize(end), list(self.steps))


def reverse(d: Derivation) -> Derivation:
    steps: list[AnyStep] = []
    for s in reversed(d.steps):
        if isinstance(s, InfCompStep):
            fam = s.family
            steps.append(InfCompStep(s.pos, s.after, s.before, lambda i, fam=fam: reverse(fam(i)), s.samples))
        else:
            steps.append(Step(s.eq, RL if s.dir == LR else LR, s.pos, s.after, s.before))
    return Derivation(d.end, d.start, steps)


def concat(*ds: Derivation) -> Derivation:
    if not ds:
        raise EquationError("nothing to concatenate")
    steps: list[AnyStep] = []
    for d in ds:
        steps.extend(d.steps)
    return Derivation(ds[0].start, ds[-1].end, steps)


# ---------------------------------------------------------------------------
# scripts


class ScriptError(EquationError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class StepFailed(ScriptError):
    """A well-formed script line whose step does not apply."""


def _parse_step_line(line: str, n: int) -> tuple[str, str, Position]:
    parts = line.replace("@", " @ ").split()
    if len(parts) != 4 or parts[2] != "@":
        raise ScriptError("expected '<equation> <lr|rl> @ <position>'", n)
    eq, d, _, pos = parts
    if eq not in EQUATIONS:
        raise ScriptError(f"unknown equation {eq!r}", n)
    if d not in (LR, RL):
        raise ScriptError(f"direction must be lr or rl, not {d!r}", n)
    try:
        return eq, d, parse_position(pos)
    except TermError as e:
        raise StepFailed(str(e), n) from None


def run_script(text: str, start: Node, goal: Node | None = None) -> Derivation | LimDerivation:
    """Replay a derivation script.

    Plain lines ``<eq> <dir> @ <pos>`` act on the current term.  When the
    script holds ``lim k=<n> { psi { ... } phi { ... } }`` blocks, it is a Lim
    derivation between ``start`` and ``goal``.
    """
    lines = [(n, ln.split("#", 1)[0].strip()) for n, ln in enumerate(text.splitlines(), 1)]
    lines = [(n, ln) for n, ln in lines if ln]
    if any(ln.startswith("lim") for _, ln in lines):
        if goal is None:
            raise ScriptError("a lim script needs a goal term", lines[0][0])
        return _run_lim(lines, start, goal)
    b = Builder(start)
    for n, ln in lines:
        eq, d, pos = _parse_step_line(ln, n)
        try:
            b.step(eq, d, pos)
        except TermError as e:
            raise StepFailed(str(e), n) from None
    return b.build()


def _run_lim(lines: list[tuple[int, str]], psi: Node, phi: Node) -> LimDerivation:
    out = LimDerivation(normalize(psi), normalize(phi))
    toks: list[tuple[int, str]] = []
    for n, ln in lines:
        for tok in ln.replace("{", " { ").replace("}", " } ").split():
            toks.append((n, tok))
    i = 0

    def expect(word: str) -> None:
        nonlocal i
        if i >= len(toks) or toks[i][1] != word:
            raise ScriptError(f"expected {word!r}", toks[min(i, len(toks) - 1)][0])
        i += 1

    def side(start: Node) -> Derivation:
        nonlocal i
        b = Builder(start)
        while i < len(toks) and toks[i][1] != "}":
            n = toks[i][0]
            group = [t for _, t in toks[i : i + 4]]
            eq, d, pos = _parse_step_line(" ".join(group), n)
            try:
                b.step(eq, d, pos)
            except TermError as e:
                raise StepFailed(str(e), n) from None
            i += 4
        expect("}")
        return b.build()

    while i < len(toks):
        n, tok = toks[i]
        if tok != "lim":
            raise ScriptError(f"unexpected {tok!r}", n)
        i += 1
        kspec = toks[i][1] if i < len(toks) else ""
        if not kspec.startswith("k="):
            raise ScriptError("expected k=<n>", n)
        k = int(kspec[2:])
        i += 1
        expect("{")
        expect("psi")
        expect("{")
        dp = side(out.psi)
        expect("phi")
        expect("{")
        df = side(out.phi)
        expect("}")
        out.blocks[k] = (dp, df)
    return out


def format_derivation(d: Derivation) -> str:
    return "\n".join(s.describe() for s in d.steps)


def format_lim(d: LimDerivation) -> str:
    out = []
    for k, (dp, df) in sorted(d.blocks.items()):
        out.append(f"lim k={k} {{")
        out.append("  psi {")
        out.extend(f"    {s.describe()}" for s in dp.steps)
        out.append("  }")
        out.append("  phi {")
        out.extend(f"    {s.describe()}" for s in df.steps)
        out.append("  }")
        out.append("}")
    return "\n".join(out)
