"""Proof terms: source, target, activity depth, validity, convergence and
reduction-identity normal forms."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from . import schema
from .terms import (
    CUT,
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
    Var,
    apply_subst,
    bisimilar,
    contains,
    free_recvars,
    has_rules,
    head,
    is_guarded,
    is_object_term,
    label,
    term_eq,
    unfold,
)

INF = math.inf
DEFAULT_CERT_DEPTH = 8


class UndefinedTarget(TermError):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"target undefined ({reason}){': ' + detail if detail else ''}")
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class Undefined:
    """Value returned by :func:`tgt` when the target does not exist."""

    reason: str
    detail: str = ""

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"undefined ({self.reason})"


@dataclass(frozen=True)
class Truncated:
    """A finite approximation, exact on positions shorter than ``depth``."""

    approximation: Node
    depth: int
    reason: str = ""


# ---------------------------------------------------------------------------
# source and target


@lru_cache(maxsize=200_000)
def src(t: Node) -> Node:
    """Normal form in the source system; works on schema bodies and open rec bodies too."""
    if isinstance(t, (Var, RecVar, Hole)):
        return t
    if isinstance(t, Fun):
        return t if not t.args else Fun(t.name, tuple(src(a) for a in t.args))
    if isinstance(t, Rule):
        return apply_subst(t.symbol.lhs, dict(zip(t.symbol.variables, (src(a) for a in t.args))))
    if isinstance(t, Rec):
        return Rec(t.var, src(t.body))
    if isinstance(t, Comp):
        return src(t.left)
    if isinstance(t, Omega):
        return src(schema.expand(t, 0))
    if isinstance(t, Pow):
        return Pow(t.ctx, t.a, t.b, src(t.arg))
    raise TermError(f"no source for {type(t).__name__}")


@lru_cache(maxsize=200_000)
def _tgt(t: Node) -> Node:
    if isinstance(t, (Var, RecVar, Hole)):
        return t
    if isinstance(t, Fun):
        return t if not t.args else Fun(t.name, tuple(_tgt(a) for a in t.args))
    if isinstance(t, Rule):
        sym = t.symbol
        needed = {v for v in _rhs_vars(sym)}
        sigma = {v: _tgt(a) for v, a in zip(sym.variables, t.args) if v in needed}
        return apply_subst(sym.rhs, sigma)
    if isinstance(t, Rec):
        body = _tgt(t.body)
        if t.var not in free_recvars(body):
            return body
        out = Rec(t.var, body)
        if not is_guarded(out):
            raise UndefinedTarget("collapsing-tower", f"rec {t.var} has no guard in the target")
        return out
    if isinstance(t, Comp):
        return _tgt(t.right)
    if isinstance(t, Omega):
        lim = limit_of_targets(t)
        if isinstance(lim, Truncated):
            raise UndefinedTarget("no-rational-form", lim.reason)
        return lim
    if isinstance(t, Pow):
        return Pow(t.ctx, t.a, t.b, _tgt(t.arg))
    raise TermError(f"no target for {type(t).__name__}")


def _rhs_vars(sym) -> set[str]:
    from .terms import variables

    return set(variables(sym.rhs))


def tgt(t: Node) -> Node | Undefined:
    """Target term, or an :class:`Undefined` value."""
    try:
        out = _tgt(t)
    except UndefinedTarget as e:
        return Undefined(e.reason, e.detail)
    if _has_unguarded_rec(out):
        return Undefined("collapsing-tower")
    return out


def tgt_strict(t: Node) -> Node:
    out = tgt(t)
    if isinstance(out, Undefined):
        raise UndefinedTarget(out.reason, out.detail)
    return out


def _has_unguarded_rec(t: Node) -> bool:
    return contains(t, (Rec,)) and not is_guarded(t)


# ---------------------------------------------------------------------------
# minimal activity depth


def mind(t: Node) -> float:
    """Least depth of a rule symbol occurrence (compositions add no depth); ``inf`` if none."""
    if isinstance(t, Omega) or contains(t, (Pow,)):
        if isinstance(t, Omega):
            return mind(schema.expand(t, 0))
    dq: deque[tuple[Node, int]] = deque([(t, 0)])
    seen: set[Node] = set()
    while dq:
        u, d = dq.popleft()
        if u in seen:
            continue
        seen.add(u)
        u = head(u)
        if isinstance(u, Rule):
            return d
        if isinstance(u, Comp):
            dq.appendleft((u.right, d))
            dq.appendleft((u.left, d))
        elif isinstance(u, Omega):
            dq.appendleft((schema.expand(u, 0), d))
        elif isinstance(u, Fun):
            dq.extend((a, d + 1) for a in u.args)
    return INF


def rule_occurrence_depths(t: Node, limit: int) -> list[int]:
    """Depths of rule occurrences up to ``limit`` (for diagnostics and tests)."""
    out: list[int] = []

    def go(u: Node, d: int) -> None:
        if d > limit:
            return
        u = head(u)
        if isinstance(u, Rule):
            out.append(d)
        if isinstance(u, Comp):
            go(u.left, d)
            go(u.right, d)
        elif isinstance(u, (Fun, Rule)):
            for a in u.args:
                go(a, d + 1)

    go(t, 0)
    return out


# ---------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class ConvergenceCertificate:
    verdict: str  # convergent | divergent | unknown
    witness: Callable[[int], int] | None = None
    depth_classes: tuple[tuple[int, float], ...] = ()
    sampled: bool = False
    reason: str = ""

    def __bool__(self) -> bool:
        return self.verdict == "convergent"


def activity_classes(body: Node) -> list[tuple[int, float]]:
    """Rule-occurrence depths of a schema body as affine functions ``alpha*i + beta``."""
    out: list[tuple[int, float]] = []

    def go(u: Node, a: int, b: float) -> None:
        if isinstance(u, Rule):
            out.append((a, b))
            vp = u.symbol.var_positions
            for v, x in zip(u.symbol.variables, u.args):
                go(x, a, b + len(vp[v]))
        elif isinstance(u, Fun):
            for x in u.args:
                go(x, a, b + 1)
        elif isinstance(u, Comp):
            go(u.left, a, b)
            go(u.right, a, b)
        elif isinstance(u, Pow):
            hd = schema.hole_depth(u.ctx)
            go(u.arg, a + u.a * hd, b + u.b * hd)
        elif isinstance(u, (Rec, Omega)):
            m = mind(u)
            if m != INF:
                out.append((a, b + m))

    go(body, 0, 0)
    return out


def is_convergent(t: Node) -> ConvergenceCertificate:
    if isinstance(t, Omega):
        classes = activity_classes(t.body)
        if any(a == 0 for a, _ in classes):
            return ConvergenceCertificate("divergent", None, tuple(classes), reason="activity at constant depth")
        for n in range(2):
            if isinstance(tgt(schema.expand(t, n)), Undefined):
                return ConvergenceCertificate("unknown", None, tuple(classes), reason="component target undefined")

        def witness(k: int, _cl=tuple(classes)) -> int:
            return max((max(0, math.ceil((k + 1 - b) / a)) for a, b in _cl), default=0)

        return ConvergenceCertificate("convergent", witness, tuple(classes))
    if isinstance(t, Comp):
        for part in (t.left, t.right):
            c = is_convergent(part)
            if not c:
                return c
        return ConvergenceCertificate("convergent", lambda k: 0)
    if contains(t, (Omega, Comp)):
        for k in head(t).kids:
            c = is_convergent(k)
            if not c:
                return c
        return ConvergenceCertificate("convergent", lambda k: 0)
    if isinstance(tgt(t), Undefined):
        return ConvergenceCertificate("divergent", None, reason="target undefined")
    return ConvergenceCertificate("convergent", lambda k: 0)


def target_schema(body: Node) -> Node:
    """Schematic target of a body: ``tgt(body)[i:=n] == tgt(body[i:=n])``."""
    return _tgt(body)


def _limit_candidate(t: Node) -> Node:
    if isinstance(t, Pow):
        if t.a >= 1:
            return schema.c_omega(t.ctx)
        return schema.ctx_power(t.ctx, t.b, _limit_candidate(t.arg))
    if not t.kids or isinstance(t, Omega):
        return t
    return t.rebuild(_limit_candidate(k) for k in t.kids)


def limit_of_targets(om: Omega, depth: int = DEFAULT_CERT_DEPTH) -> Node | Truncated:
    """Rational limit of the component targets, certified against expansions up to ``depth``."""
    cert = is_convergent(om)
    if cert.verdict != "convergent":
        raise UndefinedTarget("divergent-composition", cert.reason)
    w = cert.witness
    assert w is not None
    try:
        candidate = _limit_candidate(schema.canonical(target_schema(om.body)))
    except UndefinedTarget:
        candidate = None
    for k in range(depth + 1):
        n = w(k)
        stable = unfold(src(schema.expand(om, n)), k + 1)
        if candidate is None or unfold(candidate, k + 1) != stable:
            approx = unfold(src(schema.expand(om, w(depth))), depth + 1)
            return Truncated(approx, depth + 1, "no rational limit matched the stabilised prefixes")
    return candidate


# ---------------------------------------------------------------------------
# validity


@dataclass(frozen=True)
class Violation:
    position: tuple[int, ...]
    message: str

    def __str__(self) -> str:
        from .terms import format_position

        return f"at {format_position(self.position)}: {self.message}"


@dataclass(frozen=True)
class ChainCheck:
    ok: bool
    sampled: bool


def check_chaining(om: Omega) -> ChainCheck:
    """``tgt(psi_i) == src(psi_(i+1))`` for all i: symbolic first, sampled as fallback."""
    body = om.body
    try:
        lhs = target_schema(body)
        rhs = schema.shift_body(src(body), 1)
        if schema.schema_eq(lhs, rhs):
            return ChainCheck(True, False)
    except UndefinedTarget:
        pass
    top = max(8, 2 * schema.max_offset(body) + 2)
    for n in range(top + 1):
        t = tgt(schema.expand(om, n))
        if isinstance(t, Undefined) or not term_eq(t, src(schema.expand(om, n + 1))):
            return ChainCheck(False, True)
    return ChainCheck(True, True)


def validate(t: Node, trs=None) -> list[Violation]:
    """All violations found, with positions; an empty list means valid."""
    out: list[Violation] = []
    if trs is not None:
        from .trs import check_signature

        out.extend(Violation((), m) for m in check_signature(t, trs))
    _validate(t, (), out, in_body=False)
    return out


def _validate(t: Node, pos: tuple[int, ...], out: list[Violation], in_body: bool) -> None:
    if isinstance(t, Rule):
        if len(t.args) != t.symbol.arity:
            out.append(Violation(pos, f"{t.symbol.name} expects {t.symbol.arity} arguments"))
    if isinstance(t, Pow) and not in_body:
        out.append(Violation(pos, "context power outside a comp body"))
    if isinstance(t, (Var, Hole)):
        out.append(Violation(pos, "variable or hole in a proof term"))
        return
    if isinstance(t, Rec):
        if contains(t.body, (Comp, Omega, Pow)):
            out.append(Violation(pos, "rec-binders may only describe multisteps"))
        if not is_guarded(t):
            out.append(Violation(pos, "unguarded rec-binder"))
        if free_recvars(t) and not in_body:
            pass
        return
    if isinstance(t, Omega):
        if _has_free_var(t.body):
            out.append(Violation(pos, "variable or hole in a comp body"))
            return
        for n in range(2):
            _validate(schema.expand(t, n), pos + ((2,) * n) + (1,), out, in_body=False)
        if not check_chaining(t).ok:
            out.append(Violation(pos, "components do not chain: tgt(psi_i) != src(psi_(i+1))"))
        return
    if isinstance(t, Comp):
        _validate(t.left, pos + (1,), out, in_body)
        _validate(t.right, pos + (2,), out, in_body)
        if in_body:
            try:
                if not schema.schema_eq(target_schema(t.left), src(t.right)):
                    out.append(Violation(pos, "composition: target of the left part differs from source of the right part"))
            except UndefinedTarget as e:
                out.append(Violation(pos, f"composition: {e}"))
            return
        left_t = tgt(t.left)
        if isinstance(left_t, Undefined):
            out.append(Violation(pos, f"composition: left target {left_t}"))
        elif not term_eq(left_t, src(t.right)):
            out.append(
                Violation(pos, f"composition: tgt {left_t} differs from src {src(t.right)}")
            )
        return
    for i, k in enumerate(t.kids, 1):
        _validate(k, pos + (i,), out, in_body)


def _has_free_var(t: Node) -> bool:
    # holes inside power contexts are part of the schema syntax
    if isinstance(t, (Var, Hole)):
        return True
    return any(_has_free_var(k) for k in t.kids)


# ---------------------------------------------------------------------------
# expansion helpers


def expand_schema(om: Omega, i: int) -> Node:
    return schema.expand(om, i)


def is_one_step(t: Node) -> bool:
    return not contains(t, (Comp, Omega, Pow, Rec)) and _count_rules(t) == 1


def _count_rules(t: Node) -> int:
    return (1 if isinstance(t, Rule) else 0) + sum(_count_rules(k) for k in t.kids)


class ComposabilityError(TermError):
    def __init__(self, index: int, msg: str):
        super().__init__(f"step {index}: {msg}")
        self.index = index


def stepwise(steps: Sequence[Node] | Omega, source: Node | None = None) -> Node:
    """Right-nested composition of one-steps, or the omega-composition itself."""
    if isinstance(steps, Omega):
        if _count_rules(steps.body) != 1 or contains(steps.body, (Comp,)):
            raise ComposabilityError(0, "comp body is not a one-step")
        chk = check_chaining(steps)
        if not chk.ok:
            raise ComposabilityError(0, "components do not chain")
        return steps
    steps = list(steps)
    if not steps:
        if source is None:
            raise ComposabilityError(0, "empty reduction needs a source term")
        return source
    for n, s in enumerate(steps):
        if not is_one_step(s) and not (isinstance(s, Rec) and has_rules(s)):
            raise ComposabilityError(n, f"{s} is not a one-step")
    if source is not None and not term_eq(source, src(steps[0])):
        raise ComposabilityError(0, "source mismatch")
    for n in range(len(steps) - 1):
        t = tgt(steps[n])
        if isinstance(t, Undefined) or not term_eq(t, src(steps[n + 1])):
            raise ComposabilityError(n + 1, f"source {src(steps[n + 1])} does not match previous target")
    out = steps[-1]
    for s in reversed(steps[:-1]):
        out = Comp(s, out)
    return out


# ---------------------------------------------------------------------------
# reduction identities


def spine(t: Node) -> list[Node]:
    """Components of a right-nested composition (an omega-composition is one component)."""
    out: list[Node] = []
    while isinstance(t, Comp):
        out.extend(spine(t.left))
        t = t.right
    out.append(t)
    return out


def from_spine(parts: Sequence[Node]) -> Node:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Comp(p, out)
    return out


@lru_cache(maxsize=200_000)
def normalize(t: Node) -> Node:
    """Normal form modulo IdLeft, IdRight and Assoc.

    Compositions are right-nested; a rule-free component is dropped; a
    rule-free proof term becomes its source; comp bodies are canonicalised.
    """
    if not has_rules(t):
        if isinstance(t, (Omega, Comp)) or contains(t, (Comp, Omega)):
            t = src(t)
        return compact(t)
    if isinstance(t, Comp):
        parts = [normalize(p) for p in spine(t)]
        flat: list[Node] = []
        for p in parts:
            flat.extend(spine(p))
        kept = [p for p in flat if has_rules(p)]
        return from_spine(kept) if kept else src(t)
    if isinstance(t, Omega):
        body = schema.canonical(normalize(t.body))
        return schema.make_omega(body)
    if isinstance(t, Pow):
        return Pow(t.ctx, t.a, t.b, normalize(t.arg))
    if isinstance(t, Rec) or not t.kids:
        return t
    return t.rebuild(normalize(k) for k in t.kids)


@lru_cache(maxsize=100_000)
def compact(t: Node) -> Node:
    """Fold ``f(..., f^omega, ...)``-like prefixes back into the rec-binder when bisimilar."""
    if isinstance(t, (Rec, Omega, Pow)) or not t.kids or not contains(t, (Rec,)):
        return t
    t = t.rebuild(compact(k) for k in t.kids)
    for k in t.kids:
        if isinstance(k, Rec) and not free_recvars(k) and bisimilar(t, k):
            return k
    return t


def is_spine_node(t: Node) -> bool:
    return isinstance(t, (Comp, Omega))


def _flat(t: Node) -> list[Node]:
    t = head(t)
    return spine(t) if isinstance(t, Comp) else [t]


def pt_eq(a: Node, b: Node, max_splits: int = 64) -> bool:
    """Equality modulo reduction identities and the omega split."""
    return _PtEq(max_splits).eq(normalize(a), normalize(b))


class _PtEq:
    def __init__(self, max_splits: int):
        self.assumed: set[tuple[Node, Node]] = set()
        self.max_splits = max_splits

    def eq(self, a: Node, b: Node) -> bool:
        if a == b:
            return True
        if (a, b) in self.assumed:
            return True
        self.assumed.add((a, b))
        a, b = head(a), head(b)
        if is_spine_node(a) or is_spine_node(b):
            return self.spines(_flat(a), _flat(b))
        if label(a) != label(b):
            return False
        return all(self.eq(x, y) for x, y in zip(a.kids, b.kids))

    def spines(self, xs: list[Node], ys: list[Node]) -> bool:
        xs, ys = list(xs), list(ys)
        splits = 0
        while xs and ys:
            x, y = xs[0], ys[0]
            if x == y:
                xs.pop(0)
                ys.pop(0)
                continue
            if isinstance(x, Omega) and isinstance(y, Omega) and schema.omega_eq(x, y):
                xs.pop(0)
                ys.pop(0)
                continue
            if isinstance(x, Omega) or isinstance(y, Omega):
                splits += 1
                if splits > self.max_splits:
                    return False
                for lst in (xs, ys):
                    if isinstance(lst[0], Omega):
                        om = lst.pop(0)
                        head_parts = spine(normalize(schema.expand(om, 0)))
                        lst[:0] = [p for p in head_parts if has_rules(p)] + [normalize(schema.shift(om))]
                continue
            if not self.eq(x, y):
                return False
            xs.pop(0)
            ys.pop(0)
        return not xs and not ys
