"""Projection ``psi / phi`` of coinitial proof terms.

The seven clauses are tried in order as literal guards.  Operands are kept
modulo the reduction identities (see :func:`proofterm.normalize`).  Runs that
would not terminate are cut short by recurrence detection:

* an *exact* recurrence re-enters a pending pair; when every clause on the
  cycle is structural (2, 3, 4, 7) the answer is the rational multistep
  ``rec P. R``, otherwise the cycle describes an infinite composition or an
  erased limit, and the result is reported as truncated;
* a *shift* loop re-enters a pair whose omega-composition operand is a
  shifted copy of an ancestor's while the other operand keeps its shape.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import schema
from .proofterm import (
    DEFAULT_CERT_DEPTH,
    Truncated,
    Undefined,
    from_spine,
    normalize,
    spine,
    src,
    tgt,
)
from .terms import (
    CUT,
    HOLE,
    Comp,
    Fun,
    Hole,
    Node,
    Omega,
    Pow,
    Rec,
    RecVar,
    Rule,
    TermError,
    fill,
    has_rules,
    head,
    holes,
    instantiate_rhs,
    is_prefix,
    lhs_context,
    pattern_positions,
    subst_rec,
    symbol_context,
    term_eq,
    variables,
)

DEFAULT_FUEL = 10_000


class ProjectionError(TermError):
    pass


class ClauseMatchError(ProjectionError):
    """No clause applies; the operands are not mutually orthogonal."""


class FuelExhausted(ProjectionError):
    pass


class NotCoinitial(ProjectionError):
    pass


class PrefixViolation(ProjectionError):
    pass


# ---------------------------------------------------------------------------
# fixed prefixes


def _sample_range(om: Omega, ctx: Node) -> range:
    # components of an affine schema agree in shape once every exponent
    # exceeds the context depth, so a short prefix of the family decides
    return range(_ctx_depth(ctx) + schema.max_offset(om.body) + 2)


def _ctx_depth(ctx: Node) -> int:
    if isinstance(ctx, Hole) or not ctx.kids:
        return 0
    return 1 + max(_ctx_depth(k) for k in ctx.kids)


@dataclass(frozen=True)
class FixedPrefixWitness:
    context: Node
    term: Node
    trace: tuple[str, ...]


def is_fixed_prefix(ctx: Node, t: Node) -> FixedPrefixWitness | None:
    trace: list[str] = []
    if _fixed(ctx, t, trace):
        return FixedPrefixWitness(ctx, t, tuple(trace))
    return None


def _fixed(ctx: Node, t: Node, trace: list[str]) -> bool:
    if isinstance(ctx, Hole):
        trace.append("hole")
        return True
    t = head(t)
    if isinstance(t, Comp):
        trace.append("composition")
        return _fixed(ctx, t.left, trace) and _fixed(ctx, t.right, trace)
    if isinstance(t, Omega):
        trace.append("omega")
        return all(_fixed(ctx, schema.expand(t, n), trace) for n in _sample_range(t, ctx))
    if isinstance(t, Fun) and isinstance(ctx, Fun):
        if t.name != ctx.name or len(t.args) != len(ctx.args):
            return False
        trace.append(f"function {t.name}")
        return all(_fixed(c, a, trace) for c, a in zip(ctx.args, t.args))
    return False


def includes_head_steps(t: Node) -> bool:
    t = head(t)
    if isinstance(t, Rule):
        return True
    if isinstance(t, Comp):
        return includes_head_steps(t.left) or includes_head_steps(t.right)
    if isinstance(t, Omega):
        return any(includes_head_steps(schema.expand(t, n)) for n in _sample_range(t, HOLE))
    return False


def efp(t: Node, ctx: Node) -> list[Node]:
    """Arguments ``t_1..t_m`` of the explicit fixed-prefix form ``ctx[t_1..t_m]``."""
    if not is_fixed_prefix(ctx, t):
        raise PrefixViolation(f"{ctx} is not a fixed prefix for {t}")
    return [normalize(x) for x in _efp(ctx, t)]


def efp_term(t: Node, ctx: Node) -> Node:
    return fill(ctx, efp(t, ctx))


def _efp(ctx: Node, t: Node, fallback: bool = True) -> list[Node]:
    if isinstance(ctx, Hole):
        return [t]
    assert isinstance(ctx, Fun)
    t = head(t)
    if isinstance(t, Fun):
        out: list[Node] = []
        for c, a in zip(ctx.args, t.args):
            out.extend(_efp(c, a))
        return out
    if isinstance(t, Comp):
        return [Comp(x, y) for x, y in zip(_efp(ctx, t.left), _efp(ctx, t.right))]
    if isinstance(t, Omega):
        bodies = schema.peel(t.body, ctx.name, len(ctx.args))
        if bodies is not None:
            out = []
            for c, b in zip(ctx.args, bodies):
                out.extend(_efp(c, schema.make_omega(b)))
            return out
        if fallback:
            first = _efp(ctx, schema.expand(t, 0))
            rest = _efp(ctx, schema.shift(t), fallback=False)
            return [Comp(x, y) for x, y in zip(first, rest)]
    raise PrefixViolation(f"cannot expose {ctx} in {t}")


# ---------------------------------------------------------------------------
# mutual orthogonality


def redex_occurrences(t: Node, bound: int = 16) -> list[tuple[tuple[int, ...], object]]:
    """(source position, rule symbol) of the rule occurrences of the first step of ``t``."""
    out: list[tuple[tuple[int, ...], object]] = []

    def go(u: Node, pos: tuple[int, ...]) -> None:
        if len(pos) > bound:
            return
        u = head(u)
        if isinstance(u, Comp):
            go(u.left, pos)
        elif isinstance(u, Omega):
            go(schema.expand(u, 0), pos)
        elif isinstance(u, Rule):
            out.append((pos, u.symbol))
            vp = u.symbol.var_positions
            for v, a in zip(u.symbol.variables, u.args):
                go(a, pos + vp[v])
        elif isinstance(u, Fun):
            for i, a in enumerate(u.args, 1):
                go(a, pos + (i,))

    go(t, ())
    return out


def check_mutual_orthogonality(a: Node, b: Node, bound: int = 16) -> list[str]:
    """Overlaps between the redex patterns of the first steps; empty means ok."""
    if not term_eq(src(a), src(b)):
        raise NotCoinitial(f"{src(a)} vs {src(b)}")
    problems: list[str] = []
    ra, rb = redex_occurrences(a, bound), redex_occurrences(b, bound)
    for (p, mu), (q, nu) in itertools.chain(
        ((x, y) for x in ra for y in rb), ((y, x) for x in ra for y in rb)
    ):
        if not is_prefix(p, q):
            continue
        o = q[len(p):]
        if o == () and mu.name == nu.name:
            continue
        if o in pattern_positions(mu):
            problems.append(f"{nu.name} at {q} overlaps the pattern of {mu.name} at {p}")
    return sorted(set(problems))


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Recurrence:
    """``var = body`` where ``var`` stands for the pending projection ``dividend / divisor``."""

    kind: str  # "exact" or "shift"
    var: str
    dividend: Node
    divisor: Node
    body: Node | None = None
    clauses: tuple[int, ...] = ()

    def equation(self, name: str = "psi/phi") -> str:
        if self.body is None:
            return f"{name} recurs with a shifted operand"
        from .syntax import show

        return f"{name} = {show(self.body).replace(self.var, name)}"


@dataclass(frozen=True)
class TraceEntry:
    clause: int
    dividend: Node
    divisor: Node


@dataclass(frozen=True)
class ProjectionResult:
    outcome: str  # "closed" or "truncated"
    term: Node | None
    trace: tuple[TraceEntry, ...]
    approximation: Node | None = None
    depth: int = 0
    recurrences: tuple[Recurrence, ...] = ()
    pending: tuple[tuple[Node, Node], ...] = ()

    @property
    def closed(self) -> bool:
        return self.outcome == "closed"

    @property
    def clauses(self) -> list[int]:
        return [e.clause for e in self.trace]


class _Loop(Exception):
    def __init__(self, rec: Recurrence):
        self.rec = rec


class _NeedsLimit(Exception):
    """A marker-carrying partial result was needed as an operand."""


def skeleton(t: Node) -> Node:
    """``t`` with maximal rule-free subterms replaced by a placeholder."""
    if not has_rules(t):
        return CUT
    t = head(t) if isinstance(t, Rec) else t
    if isinstance(t, Omega):
        return Omega(skeleton(t.body))
    if isinstance(t, Pow):
        return Pow(t.ctx, 0, 0, skeleton(t.arg))
    if not t.kids:
        return t
    return t.rebuild(skeleton(k) for k in t.kids)


def _last(t: Node) -> Node:
    return spine(t)[-1]


def is_infinite_composition(t: Node) -> bool:
    return isinstance(_last(t), Omega)


def is_composition(t: Node) -> bool:
    return isinstance(t, (Comp, Omega))


# ---------------------------------------------------------------------------
# engine


@dataclass
class _Frame:
    key: tuple[Node, Node]
    var: str
    clauses: list[int] = field(default_factory=list)
    used: bool = False
    improper: bool = False


class Projector:
    def __init__(self, fuel: int = DEFAULT_FUEL, depth: int = DEFAULT_CERT_DEPTH, swap_guards: bool = False):
        self.fuel = fuel
        self.depth = depth
        self.swap_guards = swap_guards
        self.trace: list[TraceEntry] = []
        self.stack: list[_Frame] = []
        self.recurrences: list[Recurrence] = []
        self._names = itertools.count(1)
        self.improper: list[Recurrence] = []

    # -- entry ------------------------------------------------------------
    def run(self, a: Node, b: Node) -> ProjectionResult:
        a, b = normalize(a), normalize(b)
        if not term_eq(src(a), src(b)):
            raise NotCoinitial(f"sources differ: {src(a)} vs {src(b)}")
        try:
            out = normalize(self.project(a, b))
        except _Loop as e:
            self.recurrences.append(e.rec)
            return self._truncated(CUT, 0, pending=((e.rec.dividend, e.rec.divisor),))
        except _NeedsLimit:
            return self._truncated(CUT, 0)
        if self.improper:
            return self._truncated(self._approximate(out), self.depth)
        return ProjectionResult("closed", out, tuple(self.trace), recurrences=tuple(self.recurrences))

    def _truncated(self, approx: Node, depth: int, pending=()) -> ProjectionResult:
        return ProjectionResult(
            "truncated", None, tuple(self.trace), approx, depth, tuple(self.recurrences), tuple(pending)
        )

    def _approximate(self, t: Node) -> Node:
        """Unroll improper rec-binders ``depth`` times, then cut."""

        def go(u: Node) -> Node:
            if isinstance(u, Rec) and u.var.startswith("P#"):
                body = go(u.body)
                out: Node = CUT
                for _ in range(self.depth):
                    out = subst_rec(body, u.var, out)
                return out
            if not u.kids or isinstance(u, (Omega, Rec)):
                return u
            return u.rebuild(go(k) for k in u.kids)

        return go(t)

    # -- recursion --------------------------------------------------------
    def project(self, a: Node, b: Node) -> Node:
        a, b = normalize(a), normalize(b)
        if _has_marker(a) or _has_marker(b):
            raise _NeedsLimit()
        key = (a, b)
        for n, fr in enumerate(self.stack):
            if fr.key == key:
                fr.used = True
                cyc = [c for f in self.stack[n:] for c in f.clauses]
                if 5 in cyc or 6 in cyc:
                    fr.improper = True
                return RecVar(fr.var)
        self._check_shift(a, b)
        frame = _Frame(key, f"P#{next(self._names)}")
        self.stack.append(frame)
        try:
            out = self._dispatch(a, b, frame)
        finally:
            self.stack.pop()
        if frame.used:
            rec = Recurrence("exact", frame.var, a, b, out, tuple(frame.clauses))
            self.recurrences.append(rec)
            if frame.improper:
                self.improper.append(rec)
                return Rec(frame.var, out)
            return _rename(Rec(frame.var, out))
        return out

    def _check_shift(self, a: Node, b: Node) -> None:
        for fr in self.stack:
            a0, b0 = fr.key
            for (x0, y0), (x, y) in (((a0, b0), (a, b)), ((b0, a0), (b, a))):
                ox, oy = _last(x0), _last(x)
                if not (isinstance(ox, Omega) and isinstance(oy, Omega)):
                    continue
                if schema.shift_distance(ox, oy, limit=self.depth) is None:
                    continue
                if skeleton(y0) == skeleton(y) and len(spine(x0)) == len(spine(x)):
                    raise _Loop(Recurrence("shift", fr.var, a0, b0, None, tuple(fr.clauses)))

    def _use(self, clause: int, a: Node, b: Node, frame: _Frame) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("fuel exhausted without detecting a recurrence")
        frame.clauses.append(clause)
        self.trace.append(TraceEntry(clause, a, b))

    def _dispatch(self, a: Node, b: Node, frame: _Frame) -> Node:
        # 1
        if not has_rules(b):
            self._use(1, a, b, frame)
            return a
        if not has_rules(a):
            self._use(1, a, b, frame)
            out = tgt(b)
            if isinstance(out, Undefined):
                raise ProjectionError(f"target of {b} is {out}")
            return out
        ha, hb = head(a), head(b)
        # 2
        if isinstance(ha, Rule) and isinstance(hb, Rule) and ha.symbol == hb.symbol:
            self._use(2, a, b, frame)
            return self._rhs(ha.symbol, ha.args, hb.args)
        # 3
        if isinstance(ha, Rule) and is_fixed_prefix(lhs_context(ha.symbol), b):
            self._use(3, a, b, frame)
            parts = efp(b, lhs_context(ha.symbol))
            return Rule(ha.symbol, tuple(self.project(x, y) for x, y in zip(ha.args, parts)))
        # 4
        if isinstance(hb, Rule) and is_fixed_prefix(lhs_context(hb.symbol), a):
            self._use(4, a, b, frame)
            parts = efp(a, lhs_context(hb.symbol))
            return self._rhs(hb.symbol, parts, hb.args)
        # 5 and 6
        if self._clause5(ha, hb):
            self._use(5, a, b, frame)
            a1, a2 = _split(ha)
            left = self.project(a1, b)
            b_after = self.project(b, a1)
            right = self.project(a2, b_after)
            return Comp(left, right)
        if is_composition(hb) and (includes_head_steps(hb) or includes_head_steps(ha)):
            self._use(6, a, b, frame)
            b1, b2 = _split(hb)
            return self.project(self.project(a, b1), b2)
        # 7
        root = head(src(a))
        if isinstance(root, Fun):
            ctx = symbol_context(root.name, len(root.args))
            if is_fixed_prefix(ctx, a) and is_fixed_prefix(ctx, b):
                self._use(7, a, b, frame)
                pa, pb = efp(a, ctx), efp(b, ctx)
                return Fun(root.name, tuple(self.project(x, y) for x, y in zip(pa, pb)))
        raise ClauseMatchError(f"no clause applies to {a} / {b}")

    def _clause5(self, a: Node, b: Node) -> bool:
        if not is_composition(a):
            return False
        if not self.swap_guards:
            return includes_head_steps(a) and (
                isinstance(b, (Rule, Fun)) or (is_composition(b) and is_infinite_composition(b))
            )
        if isinstance(b, (Rule, Fun)):
            return includes_head_steps(a)
        return (
            isinstance(b, Comp)
            and not is_infinite_composition(b)
            and (includes_head_steps(a) or includes_head_steps(b))
        )

    def _rhs(self, sym, dividends, divisors) -> Node:
        used = set(variables(sym.rhs))
        args = []
        for v, x, y in zip(sym.variables, dividends, divisors):
            args.append(self.project(x, y) if v in used else CUT)
        return instantiate_rhs(sym, args)


def _split(t: Node) -> tuple[Node, Node]:
    if isinstance(t, Omega):
        return normalize(schema.expand(t, 0)), normalize(schema.shift(t))
    assert isinstance(t, Comp)
    return t.left, t.right


def _rename(r: Rec) -> Node:
    taken = {u.var for u in _recs(r.body)}
    name = next(n for n in ("X", "Y", "Z", "W") + tuple(f"X{i}" for i in range(1, 99)) if n not in taken)
    return Rec(name, subst_rec(r.body, r.var, RecVar(name)))


def _recs(t: Node):
    if isinstance(t, Rec):
        yield t
    for k in t.kids:
        yield from _recs(k)


def _has_marker(t: Node) -> bool:
    if isinstance(t, RecVar) and t.name.startswith("P#"):
        return True
    return any(_has_marker(k) for k in t.kids)


def project(
    a: Node,
    b: Node,
    fuel: int = DEFAULT_FUEL,
    depth: int = DEFAULT_CERT_DEPTH,
    swap_guards: bool = False,
) -> ProjectionResult:
    """``a / b``.  ``swap_guards`` prefers clause 5 over clause 6 for binary
    divisors instead of infinite ones (for experiments only)."""
    return Projector(fuel, depth, swap_guards).run(a, b)


def residual(a: Node, b: Node, **kw) -> Node:
    """Closed projection or an error."""
    res = project(a, b, **kw)
    if not res.closed:
        raise ProjectionError(f"projection did not close: {res.recurrences}")
    assert res.term is not None
    return res.term
