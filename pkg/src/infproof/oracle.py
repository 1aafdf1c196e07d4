"""Brute-force residual tracking for finite terms, plus a random corpus.

This is the classical construction: mark the redex of one step, carry the
marks along the other reduction, then contract what is left.  It shares no
code with the projection engine beyond term plumbing, so the two can be
compared.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .proofterm import normalize, spine, src, tgt
from .terms import (
    Fun,
    Node,
    Omega,
    Position,
    Rec,
    Rule,
    RuleSymbol,
    TermError,
    Var,
    contains,
    format_position,
    instantiate_rhs,
    is_prefix,
    is_strict_prefix,
    lhs_args,
    pattern_positions,
    replace_at,
    subterm_at,
)
from .trs import TRS, overlaps

Mark = tuple[Position, RuleSymbol]


class OracleError(TermError):
    pass


class Overlap(OracleError):
    pass


@dataclass(frozen=True)
class MarkedTerm:
    term: Node
    marks: frozenset = frozenset()

    def __post_init__(self) -> None:
        for pos, mu in self.marks:
            if lhs_args(mu, subterm_at(self.term, pos)) is None:
                raise OracleError(f"mark {mu.name} at {format_position(pos)} does not match")


def _rhs_occurrences(mu: RuleSymbol) -> dict[str, list[Position]]:
    occ: dict[str, list[Position]] = {}

    def go(t: Node, pos: Position) -> None:
        if isinstance(t, Var):
            occ.setdefault(t.name, []).append(pos)
            return
        for i, k in enumerate(t.kids, 1):
            go(k, pos + (i,))

    go(mu.rhs, ())
    return occ


def contract(term: Node, pos: Position, mu: RuleSymbol) -> Node:
    args = lhs_args(mu, subterm_at(term, pos))
    if args is None:
        raise OracleError(f"{mu.name} does not match at {format_position(pos)}")
    return replace_at(term, pos, instantiate_rhs(mu, args))


def residuals_after_step(m: MarkedTerm, step: Mark) -> MarkedTerm:
    pos, mu = step
    new_term = contract(m.term, pos, mu)
    pat = pattern_positions(mu)
    vp = mu.var_positions
    occ = _rhs_occurrences(mu)
    out: set[Mark] = set()
    for q, nu in m.marks:
        if q == pos:
            if nu != mu:
                raise Overlap(f"{nu.name} and {mu.name} at {format_position(q)}")
            continue
        if is_strict_prefix(q, pos):
            if pos[len(q):] in pattern_positions(nu):
                raise Overlap(f"{mu.name} overlaps the pattern of {nu.name}")
            out.add((q, nu))
        elif is_strict_prefix(pos, q):
            rel = q[len(pos):]
            if rel in pat:
                raise Overlap(f"{nu.name} overlaps the pattern of {mu.name}")
            for v, vpos in vp.items():
                if is_prefix(vpos, rel):
                    w = rel[len(vpos):]
                    out.update((pos + o + w, nu) for o in occ.get(v, []))
                    break
        else:
            out.add((q, nu))
    return MarkedTerm(new_term, frozenset(out))


def _leftmost_innermost(marks) -> Mark:
    def inner(m):
        return not any(is_strict_prefix(m[0], o[0]) for o in marks)

    return min((m for m in marks if inner(m)), key=lambda m: m[0])


def develop(m: MarkedTerm) -> list[tuple[Node, Position, RuleSymbol]]:
    """Contract all marks, leftmost-innermost first; returns (term before, position, rule)."""
    out = []
    while m.marks:
        pos, mu = _leftmost_innermost(m.marks)
        out.append((m.term, pos, mu))
        m = residuals_after_step(m, (pos, mu))
    return out


def one_step_of(t: Node) -> Mark:
    """(source position, rule) of a one-step proof term."""
    found: list[Mark] = []

    def go(u: Node, pos: Position) -> None:
        if isinstance(u, Rule):
            found.append((pos, u.symbol))
            vp = u.symbol.var_positions
            for v, a in zip(u.symbol.variables, u.args):
                go(a, pos + vp[v])
            return
        for i, k in enumerate(u.kids, 1):
            go(k, pos + (i,))

    go(t, ())
    if len(found) != 1:
        raise OracleError("not a one-step proof term")
    return found[0]


def stepwise_term(steps: list[tuple[Node, Position, RuleSymbol]], source: Node) -> Node:
    from .proofterm import from_spine

    if not steps:
        return source
    return from_spine([replace_at(t, p, Rule(mu, lhs_args(mu, subterm_at(t, p)))) for t, p, mu in steps])


def oracle_project_step(phi: Node, psi: Node) -> Node:
    """Residuals of the step ``phi`` after the stepwise reduction ``psi``, developed."""
    m = _track(phi, psi)
    return stepwise_term(develop(m), m.term)


def oracle_marks(phi: Node, psi: Node) -> frozenset:
    """The residual mark set itself (before development)."""
    return _track(phi, psi).marks


def one_steps(psi: Node) -> list[Mark]:
    """``psi`` as a sequence of one-steps; multisteps are developed leftmost-innermost."""
    out: list[Mark] = []
    for part in spine(normalize(psi)):
        if not contains(part, (Rule,)):
            continue
        out.extend((p, mu) for _, p, mu in develop(MarkedTerm(src(part), multistep_marks(part))))
    return out


def _track(phi: Node, psi: Node) -> MarkedTerm:
    if contains(psi, (Omega, Rec)) or contains(phi, (Omega, Rec)):
        raise OracleError("the oracle handles finite proof terms only")
    m = MarkedTerm(src(phi), frozenset([one_step_of(phi)]))
    for step in one_steps(psi):
        m = residuals_after_step(m, step)
    return m


def multistep_marks(t: Node) -> frozenset:
    """Source positions and rules of the rule occurrences of a finite multistep."""
    out: set[Mark] = set()

    def go(u: Node, pos: Position) -> None:
        if isinstance(u, Rule):
            out.add((pos, u.symbol))
            vp = u.symbol.var_positions
            for v, a in zip(u.symbol.variables, u.args):
                go(a, pos + vp[v])
            return
        if not isinstance(u, Fun):
            raise OracleError(f"not a finite multistep: {u}")
        for i, k in enumerate(u.args, 1):
            go(k, pos + (i,))

    go(normalize(t), ())
    return frozenset(out)


# ---------------------------------------------------------------------------
# random corpus

_NAMES = "fghk"
_CONSTS = "abcd"


@dataclass
class Instance:
    seed: int
    trs: TRS
    psi: Node  # finite proof term
    phi: Node  # one-step coinitial with psi
    stepwise: bool


def random_trs(rng: random.Random, max_symbols: int = 4, max_rules: int = 3) -> TRS:
    """A random orthogonal, left-linear, non-collapsing TRS."""
    while True:
        n_const = rng.randint(1, 2)
        n_fun = rng.randint(1, max_symbols - n_const)
        sig = {c: 0 for c in _CONSTS[:n_const]}
        for name in _NAMES[:n_fun]:
            sig[name] = rng.choice([1, 1, 2])
        rules: list[RuleSymbol] = []
        for i in range(rng.randint(1, max_rules)):
            counter = iter(range(100))
            lhs = _random_pattern(rng, sig, 2, counter, root=True)
            vars_ = [v.name for v in _vars(lhs)]
            rhs = _random_term(rng, sig, 2, vars_, root=True)
            try:
                rules.append(RuleSymbol(f"r{i}", lhs, rhs))
            except TermError:
                continue
        if not rules:
            continue
        if any(overlaps(a, b) for a in rules for b in rules):
            continue
        return TRS.from_rules(rules, sig)


def _vars(t: Node) -> list[Var]:
    if isinstance(t, Var):
        return [t]
    out: list[Var] = []
    for k in t.kids:
        out.extend(_vars(k))
    return out


def _random_pattern(rng, sig, depth, counter, root=False) -> Node:
    if not root and (depth == 0 or rng.random() < 0.45):
        return Var(f"x{next(counter)}")
    names = [n for n in sig if depth > 0 or sig[n] == 0]
    name = rng.choice(names)
    return Fun(name, tuple(_random_pattern(rng, sig, depth - 1, counter) for _ in range(sig[name])))


def _random_term(rng, sig, depth, vars_, root=False) -> Node:
    if vars_ and not root and rng.random() < 0.4:
        return Var(rng.choice(vars_))
    names = [n for n in sig if depth > 0 or sig[n] == 0]
    name = rng.choice(names)
    return Fun(name, tuple(_random_term(rng, sig, depth - 1, vars_) for _ in range(sig[name])))


def random_ground(rng: random.Random, sig, depth: int = 5) -> Node:
    names = [n for n in sig if depth > 0 or sig[n] == 0]
    if depth > 0 and rng.random() < 0.2:
        names = [n for n in sig if sig[n] == 0]
    name = rng.choice(names)
    return Fun(name, tuple(random_ground(rng, sig, depth - 1) for _ in range(sig[name])))


def redexes(trs: TRS, t: Node, pos: Position = ()) -> list[Mark]:
    out: list[Mark] = []
    for mu in trs:
        if lhs_args(mu, t) is not None:
            out.append((pos, mu))
    for i, k in enumerate(t.kids, 1):
        out.extend(redexes(trs, k, pos + (i,)))
    return out


def multistep(t: Node, marks: frozenset) -> Node:
    """The multistep contracting ``marks`` (pairwise orthogonal) simultaneously."""

    def build(u: Node, pos: Position) -> Node:
        hit = [mu for q, mu in marks if q == pos]
        if hit:
            mu = hit[0]
            vp = mu.var_positions
            args = lhs_args(mu, u)
            return Rule(mu, tuple(build(a, pos + vp[v]) for v, a in zip(mu.variables, args)))
        if not isinstance(u, Fun):
            return u
        return Fun(u.name, tuple(build(k, pos + (i,)) for i, k in enumerate(u.args, 1)))

    return build(t, ())


def random_instance(seed: int, max_len: int = 6, depth: int = 5) -> Instance | None:
    """A coinitial pair: a finite proof term ``psi`` and a one-step ``phi``."""
    rng = random.Random(seed)
    trs = random_trs(rng)
    for _ in range(20):
        s = random_ground(rng, trs.signature, rng.randint(2, depth))
        first = redexes(trs, s)
        if first:
            break
    else:
        return None
    stepwise = rng.random() < 0.6
    parts: list[Node] = []
    cur = s
    for _ in range(rng.randint(1, max_len if stepwise else 3)):
        rs = redexes(trs, cur)
        if not rs:
            break
        if stepwise:
            chosen = frozenset([rng.choice(rs)])
        else:
            chosen = frozenset(m for m in rs if rng.random() < 0.6) or frozenset([rng.choice(rs)])
        step = multistep(cur, chosen)
        parts.append(step)
        t = tgt(step)
        if _size(t) > 200:
            break
        cur = t
    if not parts:
        return None
    from .proofterm import from_spine

    psi = from_spine(parts)
    pos, mu = rng.choice(first)
    phi = multistep(s, frozenset([(pos, mu)]))
    return Instance(seed, trs, psi, phi, stepwise)


def _size(t: Node) -> int:
    return 1 + sum(_size(k) for k in t.kids)


def corpus(n: int = 500, start: int = 0) -> list[Instance]:
    out: list[Instance] = []
    seed = start
    while len(out) < n:
        inst = random_instance(seed)
        if inst is not None:
            out.append(inst)
        seed += 1
    return out
