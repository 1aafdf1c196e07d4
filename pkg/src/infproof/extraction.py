"""Easily extractable rule occurrences and the extraction-confluence check.

A pair ``(r, p)`` says that the rule occurrence at position ``p`` of a proof
term can be performed first, at position ``r`` of its source.  The
derivations built here follow the inductive structure of the argument that
``phi . (psi/phi)`` and ``psi . (phi/psi)`` both equal ``psi`` when ``phi``
is that extracted step.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from . import schema
from .derivation import (
    Builder,
    Derivation,
    EquationError,
    FunCtx,
    HeadCtx,
    TailCtx,
    concat,
    reverse,
)
from .projection import (
    efp,
    efp_term,
    includes_head_steps,
    is_fixed_prefix,
    project,
)
from .proofterm import (
    Undefined,
    from_spine,
    normalize,
    pt_eq,
    spine,
    src,
    tgt,
)
from .terms import (
    Comp,
    Fun,
    Hole,
    Node,
    Omega,
    Position,
    PositionError,
    Rule,
    RuleSymbol,
    TermError,
    fill,
    has_rules,
    head,
    is_multistep,
    is_prefix_closed,
    lhs_args,
    lhs_context,
    non_hole_positions,
    pattern_positions,
    replace_at,
    restrict,
    strict_prefixes,
    subterm_at,
    symbol_at,
    symbol_context,
    term_eq,
)

DEFAULT_BOUND = 32


class ExtractionError(TermError):
    pass


class NotExtractable(ExtractionError):
    pass


class ConstructionError(ExtractionError):
    """A derivation could not be assembled; carries the case that failed."""


# ---------------------------------------------------------------------------
# respects


def respects(t: Node, positions: Iterable[Position]) -> bool:
    """Does ``t`` leave the symbols at ``positions`` untouched (inductively)?"""
    P = frozenset(tuple(p) for p in positions)
    if not is_prefix_closed(P):
        return False
    return _respects(t, P)


def _omega_samples(om: Omega, P: frozenset) -> range:
    # beyond this index every exponent in the body exceeds the depth of P,
    # so the visible part of later components repeats
    depth = max((len(p) for p in P), default=0)
    return range(depth + schema.max_offset(om.body) + 2)


@lru_cache(maxsize=100_000)
def _respects(t: Node, P: frozenset) -> bool:
    t = head(t)
    if is_multistep(t):
        for q in P:
            try:
                if not isinstance(symbol_at(t, q), Fun):
                    return False
            except PositionError:
                return False
        return True
    if isinstance(t, Comp):
        return _respects(t.left, P) and _respects(t.right, P)
    if isinstance(t, Omega):
        return all(_respects(schema.expand(t, n), P) for n in _omega_samples(t, P))
    if isinstance(t, Fun):
        if not P:
            return True
        # positions past the arity are not positions of t at all
        if any(p and p[0] > len(t.args) for p in P):
            return False
        return all(_respects(a, restrict(P, i)) for i, a in enumerate(t.args, 1))
    if isinstance(t, Rule):
        return not P
    return False


def guard_set(r: Position, mu: RuleSymbol) -> frozenset[Position]:
    """``{r' : r' < r} U r.PPos(mu)``."""
    return frozenset(strict_prefixes(r)) | {tuple(r) + q for q in pattern_positions(mu)}


# ---------------------------------------------------------------------------
# ers


@dataclass(frozen=True, order=True)
class ExtractablePair:
    r: Position
    p: Position
    rule: RuleSymbol

    def __str__(self) -> str:
        from .terms import format_position

        return f"<{format_position(self.r)}, {format_position(self.p)}> {self.rule.name}"


@dataclass(frozen=True)
class ErsResult:
    """Pairs with ``|p| <= bound``; ``complete`` is False when the bound cut some off."""

    pairs: tuple[ExtractablePair, ...]
    bound: int
    complete: bool

    def __iter__(self) -> Iterator[ExtractablePair]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, item) -> bool:
        if isinstance(item, ExtractablePair):
            return item in self.pairs
        r, p = item
        return any(x.r == tuple(r) and x.p == tuple(p) for x in self.pairs)

    def find(self, r: Position, p: Position) -> ExtractablePair | None:
        for x in self.pairs:
            if x.r == tuple(r) and x.p == tuple(p):
                return x
        return None


def _sort_key(x: ExtractablePair):
    return (len(x.r), x.r, len(x.p), x.p)


def ers(t: Node, bound: int = DEFAULT_BOUND) -> ErsResult:
    found, cut = _ers(t, bound)
    return ErsResult(tuple(sorted(found, key=_sort_key)), bound, not cut)


@lru_cache(maxsize=100_000)
def _ers(t: Node, budget: int) -> tuple[frozenset, bool]:
    """(pairs, whether the budget cut the enumeration)."""
    if not has_rules(t):
        return frozenset(), False
    if budget <= 0:
        return frozenset(), True
    t = head(t)
    out: set[ExtractablePair] = set()
    cut = False
    if isinstance(t, Rule):
        out.add(ExtractablePair((), (), t.symbol))
        vp = t.symbol.var_positions
        for i, (v, a) in enumerate(zip(t.symbol.variables, t.args), 1):
            sub, c = _ers(a, budget - 1)
            cut |= c
            out.update(ExtractablePair(vp[v] + x.r, (i,) + x.p, x.rule) for x in sub)
    elif isinstance(t, Fun):
        for i, a in enumerate(t.args, 1):
            sub, c = _ers(a, budget - 1)
            cut |= c
            out.update(ExtractablePair((i,) + x.r, (i,) + x.p, x.rule) for x in sub)
    elif isinstance(t, (Comp, Omega)):
        # an omega-composition is read as psi_0 . comp i. psi_(i+1); the
        # respect conditions for later components then accumulate
        c2 = schema.split(t) if isinstance(t, Omega) else t
        left, c = _ers(c2.left, budget - 1)
        cut |= c
        out.update(ExtractablePair(x.r, (1,) + x.p, x.rule) for x in left)
        right, c = _ers(c2.right, budget - 1)
        cut |= c
        for x in right:
            if _respects(c2.left, guard_set(x.r, x.rule)):
                out.add(ExtractablePair(x.r, (2,) + x.p, x.rule))
    return frozenset(out), cut


def check_pair(t: Node, pair: ExtractablePair) -> bool:
    """The two facts every extractable pair satisfies: a rule symbol sits at
    ``p`` and the source matches its left-hand side at ``r``."""
    try:
        node = symbol_at(t, pair.p)
        sub = subterm_at(src(t), pair.r)
    except TermError:
        return False
    return isinstance(node, Rule) and node.symbol == pair.rule and lhs_args(pair.rule, sub) is not None


# ---------------------------------------------------------------------------
# insertion


def insert_rule(t: Node, mu: RuleSymbol, r: Position) -> Node:
    """``t<mu>_r``: the one-step proof term contracting ``mu`` at ``r`` of ``t``."""
    try:
        sub = subterm_at(t, r)
    except PositionError as e:
        raise ExtractionError(str(e)) from None
    args = lhs_args(mu, sub)
    if args is None:
        raise ExtractionError(f"{mu.name} does not match at {r}")
    return replace_at(t, r, Rule(mu, args))


def extracted_step(t: Node, pair: ExtractablePair) -> Node:
    return insert_rule(src(t), pair.rule, pair.r)


# ---------------------------------------------------------------------------
# locating a pair again after a rewrite of the proof term


def _marked(t: Node, p: Position) -> tuple[Node, RuleSymbol]:
    node = symbol_at(t, p)
    if not isinstance(node, Rule):
        raise NotExtractable(f"no rule symbol at {p}")
    mark = RuleSymbol(node.symbol.name + "'", node.symbol.lhs, node.symbol.rhs)
    return replace_at(t, p, Rule(mark, node.args)), mark


def _find_marked(t: Node, r: Position, mark: RuleSymbol, original: RuleSymbol, bound: int) -> ExtractablePair | None:
    for x in ers(t, bound):
        if x.r == tuple(r) and x.rule == mark:
            return ExtractablePair(x.r, x.p, original)
    return None


def _follow(t: Node, pair: ExtractablePair, rewrite, bound: int) -> tuple[Node, ExtractablePair]:
    """Apply ``rewrite`` to ``t`` and find where the occurrence at ``pair.p`` went."""
    marked, mark = _marked(t, pair.p)
    out = rewrite(t)
    mout = rewrite(marked)
    found = _find_marked(mout, pair.r, mark, pair.rule, bound)
    if found is None:
        raise NotExtractable(f"pair {pair} is not extractable after rewriting")
    return out, found


def ers_trace_forward(t: Node, pair: ExtractablePair, f: str, bound: int = DEFAULT_BOUND) -> ExtractablePair:
    """The pair for the same occurrence in the explicit fixed-prefix form for ``f``."""
    root = head(src(t))
    if not isinstance(root, Fun) or root.name != f:
        raise ExtractionError(f"{f} is not the root symbol of the source")
    ctx = symbol_context(f, len(root.args))
    if not is_fixed_prefix(ctx, t):
        raise ExtractionError(f"{f}(...) is not a fixed prefix")
    return _follow(t, pair, lambda u: efp_term(u, ctx), bound)[1]


# ---------------------------------------------------------------------------
# checks on a single extracted step


def check_step_survives(t: Node, mu: RuleSymbol, r: Position) -> bool:
    """``t<mu>_r / psi`` is the same step inserted into the target."""
    if not respects(t, guard_set(r, mu)):
        raise ExtractionError("the respects hypothesis fails")
    step = insert_rule(src(t), mu, r)
    res = project(step, t)
    target = tgt(t)
    if not res.closed or isinstance(target, Undefined):
        return False
    return pt_eq(res.term, insert_rule(target, mu, r))


def check_step_absorbed(t: Node, pair: ExtractablePair) -> bool:
    """Projecting the extracted step over ``t`` leaves no activity."""
    res = project(extracted_step(t, pair), t)
    target = tgt(t)
    if not res.closed or isinstance(target, Undefined):
        return False
    return not has_rules(res.term) and term_eq(res.term, target)


# ---------------------------------------------------------------------------
# structural derivations for explicit fixed-prefix forms


def efp_derivation(t: Node, ctx: Node) -> Derivation:
    """A derivation ``t ~ efp(t, ctx)`` using only structural equations."""
    if not is_fixed_prefix(ctx, t):
        raise ConstructionError(f"{ctx} is not a fixed prefix")
    d = _efp_derivation(normalize(t), ctx)
    goal = efp_term(t, ctx)
    if not pt_eq(d.end, goal):
        raise ConstructionError("structural derivation misses the fixed-prefix form")
    return d


def _efp_derivation(t: Node, ctx: Node) -> Derivation:
    b = Builder(t)
    if isinstance(ctx, Hole):
        return b.build()
    t = head(b.cur)
    if isinstance(t, Fun):
        for i, (c, a) in enumerate(zip(ctx.args, t.args), 1):
            b.lift(_efp_derivation(normalize(a), c), FunCtx((i,)))
        return b.build()
    if isinstance(t, Omega):
        try:
            b.step("InfStruct", "lr", ())
        except EquationError:
            parts = schema.split(t)
            return _efp_comp(b, normalize(parts.left), normalize(parts.right), ctx)
        return concat(b.build(), _efp_derivation(b.cur, ctx))
    if isinstance(t, Comp):
        parts = spine(t)
        return _efp_comp(b, parts[0], from_spine(parts[1:]), ctx)
    raise ConstructionError(f"cannot expose {ctx} in {t}")


def _efp_comp(b: Builder, first: Node, rest: Node, ctx: Node) -> Derivation:
    rest_parts = spine(rest)
    b.reshape(from_spine(spine(first) + rest_parts))
    b.lift(_efp_derivation(first, ctx), HeadCtx(rest_parts))
    left = b.cur.left if isinstance(b.cur, Comp) else b.cur
    b.lift(_efp_derivation(rest, ctx), TailCtx([left]))
    for q in sorted(non_hole_positions(ctx), key=lambda q: (len(q), q)):
        try:
            u = subterm_at(b.cur, q)
        except TermError:
            continue
        if isinstance(u, Comp):
            b.step("Struct", "lr", q)

    return b.build()


# ---------------------------------------------------------------------------
# the extraction derivations


def _closed(a: Node, b: Node, what: str) -> Node:
    res = project(a, b)
    if not res.closed:
        raise ConstructionError(f"{what} does not close: {res.outcome}")
    return normalize(res.term)


def _settle(b: Builder, expected: Node, what: str) -> None:
    try:
        b.reshape(expected)
    except EquationError:
        raise ConstructionError(f"{what}: projection differs from the expected shape") from None


def respects_derivation(t: Node, mu: RuleSymbol, r: Position) -> Derivation:
    """``t<mu>_r . (psi / t<mu>_r) ~ psi . tgt(psi)<mu>_r`` when ``psi`` respects the guard set."""
    t = normalize(t)
    if not respects(t, guard_set(r, mu)):
        raise ConstructionError("the respects hypothesis fails")
    phi = insert_rule(src(t), mu, r)
    target = tgt(t)
    if isinstance(target, Undefined):
        raise ConstructionError(f"target {target}")
    phi2 = insert_rule(target, mu, r)
    start = normalize(Comp(phi, _closed(t, phi, "psi/phi")))
    goal = normalize(Comp(t, phi2))
    if pt_eq(start, goal):
        return Derivation(start, goal, [])
    if not r:
        ctx = lhs_context(mu)
        args = efp(t, ctx)
        b = Builder(start)
        _settle(b, Comp(Rule(mu, tuple(src(a) for a in args)), normalize(_rhs(mu, args))), "root step")
        b.mirror("OutIn", (), Rule(mu, tuple(args)))
        b.step("InOut", "lr", ())
        right = Builder(goal)
        right.lift(efp_derivation(t, ctx), HeadCtx([phi2]))
        return _meet(b.build(), right.build())
    i, r1 = r[0], r[1:]
    root = head(src(t))
    ctx = symbol_context(root.name, len(root.args))
    args = efp(t, ctx)
    sub = respects_derivation(args[i - 1], mu, r1)
    inner = _closed(args[i - 1], insert_rule(src(args[i - 1]), mu, r1), "argument projection")
    b = Builder(start)
    _settle(b, Comp(phi, Fun(root.name, tuple(inner if j == i else a for j, a in enumerate(args, 1)))), "argument")
    _merge(b, ())
    b.lift(sub, FunCtx((i,)))
    right = Builder(goal)
    right.lift(efp_derivation(t, ctx), HeadCtx([phi2]))
    right.step("Struct", "lr", ())
    return _meet(b.build(), right.build())


def _merge(b: Builder, pos: Position) -> None:
    """Struct left-to-right at ``pos``; a vanished object factor leaves nothing to merge."""
    if isinstance(subterm_at(normalize(b.cur), pos), Comp):
        b.step("Struct", "lr", pos)
    else:
        b.cur = normalize(b.cur)


def _rhs(mu: RuleSymbol, args) -> Node:
    from .terms import instantiate_rhs

    return instantiate_rhs(mu, args)


def _meet(d1: Derivation, d2: Derivation) -> Derivation:
    if not pt_eq(d1.end, d2.end):
        raise ConstructionError("the two halves of the derivation do not meet")
    return concat(d1, reverse(d2))


def extraction_derivation(t: Node, pair: ExtractablePair, bound: int = DEFAULT_BOUND) -> Derivation:
    """``phi . (psi / phi) ~ psi`` for the extracted step ``phi``."""
    nt = normalize(t)
    if nt is not t and nt != t:
        t, pair = _follow(t, pair, normalize, bound)
    return _extract(t, pair, bound)


def _extract(t: Node, pair: ExtractablePair, bound: int) -> Derivation:
    phi = extracted_step(t, pair)
    quotient = _closed(t, phi, "psi/phi")
    start = normalize(Comp(phi, quotient))
    if pt_eq(start, t):
        return Derivation(start, t, [])
    h = head(t)
    r, p = pair.r, pair.p
    if isinstance(h, Rule):
        mu = h.symbol
        if not p:
            # root step: phi . h[psi_1..psi_m] is OutIn read backwards
            b = Builder(start)
            _settle(b, Comp(phi, normalize(_rhs(mu, h.args))), "root step")
            b.mirror("OutIn", (), t)
            return b.build(t)
        i, p2 = p[0], p[1:]
        r1 = mu.var_positions[mu.variables[i - 1]]
        r2 = r[len(r1):]
        arg = normalize(h.args[i - 1])
        sub_pair = ExtractablePair(r2, p2, pair.rule)
        arg, sub_pair = _renormalized(h.args[i - 1], sub_pair, bound)
        sub = _extract(arg, sub_pair, bound)
        phi_i = extracted_step(arg, sub_pair)
        q_i = _closed(arg, phi_i, "argument projection")
        args = list(h.args)
        args[i - 1] = q_i
        b = Builder(start)
        _settle(b, Comp(phi, Rule(mu, tuple(args))), "rule argument")
        b.step("InOut", "lr", (len(spine(b.cur)) - 1) * (2,))
        if len(spine(b.cur)) < 3:
            # the middle factor is an object term and vanished
            b.lift(sub, FunCtx((1,) + r1))
            b.mirror("InOut", (), t)
            return b.build(t)
        _merge(b, ())
        for q in sorted(pattern_positions(mu) - {()}, key=lambda q: (len(q), q)):
            if isinstance(subterm_at(b.cur, (1,) + q), Comp):
                b.step("Struct", "lr", (1,) + q)
        b.lift(sub, FunCtx((1,) + r1))
        b.mirror("InOut", (), t)
        return b.build(t)
    if isinstance(h, (Comp, Omega)) and includes_head_steps(h):
        c = schema.split(h) if isinstance(h, Omega) else h
        if isinstance(h, Comp):
            parts = spine(h)
            first, rest = parts[0], from_spine(parts[1:])
        else:
            first, rest = normalize(c.left), normalize(c.right)
        if p[0] == 1:
            sub_pair = ExtractablePair(r, p[1:], pair.rule)
            first_n, sub_pair = _renormalized(c.left, sub_pair, bound)
            sub = _extract(first_n, sub_pair, bound)
            a = _closed(first_n, phi, "first component projection")
            b = Builder(start)
            _settle(b, from_spine([phi] + spine(a) + spine(rest)), "composition")
            b.lift(sub, HeadCtx(spine(rest)))
            return b.build(t)
        sub_pair = ExtractablePair(r, p[1:], pair.rule)
        rest_n, sub_pair = _renormalized(c.right, sub_pair, bound)
        e = respects_derivation(first, pair.rule, r)
        a = _closed(first, phi, "first component projection")
        phi2 = _closed(phi, first, "step projection")
        tail_q = _closed(rest_n, phi2, "rest projection")
        sub = _extract(rest_n, sub_pair, bound)
        b = Builder(start)
        _settle(b, from_spine([phi] + spine(a) + spine(tail_q)), "composition")
        b.lift(e, HeadCtx(spine(tail_q)))
        b.reshape(from_spine(spine(first) + [phi2] + spine(tail_q)))
        b.lift(sub, TailCtx(spine(first)))
        return b.build(t)
    root = head(src(t))
    if not isinstance(root, Fun) or not root.args or not r:
        raise ConstructionError(f"no case applies to {t}")
    ctx = symbol_context(root.name, len(root.args))
    if not is_fixed_prefix(ctx, t):
        raise ConstructionError(f"{root.name}(...) is not a fixed prefix for {t}")
    fwd = ers_trace_forward(t, pair, root.name, bound)
    args = efp(t, ctx)
    i = fwd.p[0]
    if fwd.r[0] != i:
        raise ConstructionError("traced pair leaves its argument")
    sub_pair = ExtractablePair(fwd.r[1:], fwd.p[1:], pair.rule)
    arg, sub_pair = _renormalized(args[i - 1], sub_pair, bound)
    sub = _extract(arg, sub_pair, bound)
    q_i = _closed(arg, extracted_step(arg, sub_pair), "argument projection")
    b = Builder(start)
    _settle(b, Comp(phi, Fun(root.name, tuple(q_i if j == i else a for j, a in enumerate(args, 1)))), "argument")
    _merge(b, ())
    b.lift(sub, FunCtx((i,)))
    back = efp_derivation(t, ctx)
    return _meet(b.build(), back)


def _renormalized(t: Node, pair: ExtractablePair, bound: int) -> tuple[Node, ExtractablePair]:
    nt = normalize(t)
    if nt == t:
        return nt, pair
    return _follow(t, pair, normalize, bound)


@dataclass
class ConfluenceReport:
    """The extracted step, both projections and the two derivations."""

    psi: Node
    pair: ExtractablePair
    phi: Node
    psi_over_phi: Node
    phi_over_psi: Node
    left: Derivation  # phi . (psi/phi) ~ psi
    right: Derivation  # psi . (phi/psi) ~ psi


def verify_extraction_confluence(
    t: Node, pair: ExtractablePair | tuple[Position, Position], depth: int = 4, bound: int = DEFAULT_BOUND
) -> ConfluenceReport:
    """Build both derivations for the step extracted by ``pair``.

    ``depth`` only matters for proof terms whose projections do not close;
    such inputs are rejected, since no finite derivation can be built for
    them here.
    """
    found = ers(t, bound)
    if not isinstance(pair, ExtractablePair):
        r, p = pair
        hit = found.find(tuple(r), tuple(p))
        if hit is None:
            raise NotExtractable(f"<{r}, {p}> is not in ers")
        pair = hit
    elif pair not in found:
        raise NotExtractable(f"{pair} is not in ers")
    phi = extracted_step(t, pair)
    res = project(t, phi, depth=max(depth, 1))
    if not res.closed:
        raise ConstructionError(f"psi/phi is truncated at depth {res.depth}")
    back = project(phi, t, depth=max(depth, 1))
    if not back.closed:
        raise ConstructionError(f"phi/psi is truncated at depth {back.depth}")
    left = extraction_derivation(t, pair, bound)
    right = Derivation(normalize(Comp(t, back.term)), normalize(t), [])
    return ConfluenceReport(t, pair, phi, res.term, back.term, left, right)
