"""Terms, positions, contexts and pattern matching.

A single immutable node family represents object terms, patterns, contexts
and proof terms.  Infinite terms are rational: they are written with guarded
``rec X. t`` binders and unfolded lazily, one binder at a time, whenever an
operation needs to look below the root.  Positions are tuples of positive
integers; ``()`` is the root.

Only closed terms are ever unfolded, so substituting a binder into its own
body can never capture a variable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

Position = tuple[int, ...]
EPSILON: Position = ()

_MAX_HEAD_UNFOLDINGS = 10_000


class TermError(ValueError):
    pass


class PositionError(TermError):
    pass


class Node:
    """Base class of every term node.  Subclasses are frozen slotted dataclasses."""

    __slots__ = ()

    def _key(self) -> tuple:
        raise NotImplementedError

    @property
    def kids(self) -> tuple["Node", ...]:
        """Syntactic children (no unfolding)."""
        return ()

    def rebuild(self, kids: Iterable["Node"]) -> "Node":
        return self

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:  # type: ignore[attr-defined]
            return False
        return self._key() == other._key()  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def __str__(self) -> str:
        from .syntax import show

        return show(self)

    __repr__ = __str__


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Var(Node):
    """Pattern variable (lowercase in the text format)."""

    name: str
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("Var", self.name)))

    def _key(self) -> tuple:
        return (self.name,)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Fun(Node):
    name: str
    args: tuple[Node, ...] = ()
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "_hash", hash(("Fun", self.name, self.args)))

    def _key(self) -> tuple:
        return (self.name, self.args)

    @property
    def kids(self) -> tuple[Node, ...]:
        return self.args

    def rebuild(self, kids: Iterable[Node]) -> Node:
        return Fun(self.name, tuple(kids))


@dataclass(frozen=True, slots=True)
class RuleSymbol:
    """A left-linear rule ``name: lhs -> rhs``.

    Arguments of the rule symbol correspond to the variables of ``lhs`` in
    order of first (leftmost) occurrence.
    """

    name: str
    lhs: Node
    rhs: Node

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise TermError(f"rule {self.name}: left-hand side is a variable")
        occ = [v for _, v in _var_occurrences(self.lhs)]
        if len(occ) != len(set(occ)):
            raise TermError(f"rule {self.name}: left-hand side is not left-linear")
        extra = {v for _, v in _var_occurrences(self.rhs)} - set(occ)
        if extra:
            raise TermError(f"rule {self.name}: rhs variables {sorted(extra)} not in lhs")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for _, v in _var_occurrences(self.lhs))

    @property
    def arity(self) -> int:
        return len(self.variables)

    @property
    def var_positions(self) -> dict[str, Position]:
        return {v: p for p, v in _var_occurrences(self.lhs)}

    @property
    def is_collapsing(self) -> bool:
        return isinstance(self.rhs, Var)

    def __str__(self) -> str:
        return f"{self.name} : {self.lhs} -> {self.rhs}"


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Rule(Node):
    """Application of a rule symbol inside a proof term."""

    symbol: RuleSymbol
    args: tuple[Node, ...] = ()
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "_hash", hash(("Rule", self.symbol.name, self.args)))

    def _key(self) -> tuple:
        return (self.symbol, self.args)

    @property
    def name(self) -> str:
        return self.symbol.name

    @property
    def kids(self) -> tuple[Node, ...]:
        return self.args

    def rebuild(self, kids: Iterable[Node]) -> Node:
        return Rule(self.symbol, tuple(kids))


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class RecVar(Node):
    name: str
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("RecVar", self.name)))

    def _key(self) -> tuple:
        return (self.name,)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Rec(Node):
    var: str
    body: Node
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("Rec", self.var, self.body)))

    def _key(self) -> tuple:
        return (self.var, self.body)

    @property
    def kids(self) -> tuple[Node, ...]:
        return (self.body,)

    def rebuild(self, kids: Iterable[Node]) -> Node:
        (body,) = kids
        return Rec(self.var, body)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Hole(Node):
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash("Hole"))

    def _key(self) -> tuple:
        return ()


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Comp(Node):
    """Binary composition ``left . right``."""

    left: Node
    right: Node
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("Comp", self.left, self.right)))

    def _key(self) -> tuple:
        return (self.left, self.right)

    @property
    def kids(self) -> tuple[Node, ...]:
        return (self.left, self.right)

    def rebuild(self, kids: Iterable[Node]) -> Node:
        left, right = kids
        return Comp(left, right)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Pow(Node):
    """``ctx^(a*i+b)[arg]`` inside an omega-composition body.

    ``ctx`` is a one-hole context built from function symbols only.
    """

    ctx: Node
    a: int
    b: int
    arg: Node
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise TermError("exponents must have non-negative coefficients")
        object.__setattr__(self, "_hash", hash(("Pow", self.ctx, self.a, self.b, self.arg)))

    def _key(self) -> tuple:
        return (self.ctx, self.a, self.b, self.arg)

    @property
    def kids(self) -> tuple[Node, ...]:
        return (self.arg,)

    def rebuild(self, kids: Iterable[Node]) -> Node:
        (arg,) = kids
        return Pow(self.ctx, self.a, self.b, arg)


@dataclass(frozen=True, eq=False, slots=True, repr=False)
class Omega(Node):
    """omega-composition ``comp i. body`` of the family ``body[i := 0, 1, 2, ...]``."""

    body: Node
    _hash: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("Omega", self.body)))

    def _key(self) -> tuple:
        return (self.body,)

    @property
    def kids(self) -> tuple[Node, ...]:
        return (self.body,)

    def rebuild(self, kids: Iterable[Node]) -> Node:
        (body,) = kids
        return Omega(body)


HOLE = Hole()
# reserved nullary symbol marking where `unfold` stopped; the parser rejects it
CUT = Fun("✂")


def fun(name: str, *args: Node) -> Fun:
    return Fun(name, args)


# ---------------------------------------------------------------------------
# structural helpers


def _var_occurrences(t: Node, pos: Position = ()) -> Iterator[tuple[Position, str]]:
    if isinstance(t, Var):
        yield pos, t.name
        return
    for i, k in enumerate(t.kids, 1):
        yield from _var_occurrences(k, pos + (i,))


def variables(t: Node) -> list[str]:
    return [v for _, v in _var_occurrences(t)]


def transform(t: Node, fn: Callable[[Node], Node | None]) -> Node:
    """Bottom-up rewrite of the syntax tree; ``fn`` returns a replacement or None."""
    out = fn(t)
    if out is not None:
        return out
    kids = t.kids
    if not kids:
        return t
    new = tuple(transform(k, fn) for k in kids)
    if all(a is b for a, b in zip(new, kids)):
        return t
    return t.rebuild(new)


def subst_rec(t: Node, var: str, value: Node) -> Node:
    """Replace free occurrences of rec-variable ``var`` in ``t`` by ``value``."""

    def go(u: Node) -> Node:
        if isinstance(u, RecVar):
            return value if u.name == var else u
        if isinstance(u, Rec) and u.var == var:
            return u
        kids = u.kids
        if not kids:
            return u
        new = tuple(go(k) for k in kids)
        if all(a is b for a, b in zip(new, kids)):
            return u
        return u.rebuild(new)

    return go(t)


def apply_subst(pattern: Node, sigma: Mapping[str, Node]) -> Node:
    """Instantiate pattern variables."""
    return transform(pattern, lambda u: sigma.get(u.name, u) if isinstance(u, Var) else None)


def free_recvars(t: Node) -> set[str]:
    if isinstance(t, RecVar):
        return {t.name}
    if isinstance(t, Rec):
        return free_recvars(t.body) - {t.var}
    out: set[str] = set()
    for k in t.kids:
        out |= free_recvars(k)
    return out


def is_guarded(t: Node) -> bool:
    """Every rec-variable occurs strictly below a function or rule symbol of its binder."""

    def unguarded(u: Node) -> set[str]:
        # rec-variables reachable from u through rec-binders only
        if isinstance(u, RecVar):
            return {u.name}
        if isinstance(u, Rec):
            return unguarded(u.body) - {u.var}
        if isinstance(u, Comp):
            return unguarded(u.left)
        return set()

    def check(u: Node) -> bool:
        if isinstance(u, Rec) and u.var in unguarded(u.body):
            return False
        return all(check(k) for k in u.kids) and (not isinstance(u, Pow) or check(u.ctx))

    return check(t)


def contains(t: Node, kinds: tuple[type, ...]) -> bool:
    if isinstance(t, kinds):
        return True
    if isinstance(t, Pow) and contains(t.ctx, kinds):
        return True
    return any(contains(k, kinds) for k in t.kids)


def has_rules(t: Node) -> bool:
    return contains(t, (Rule,))


def is_object_term(t: Node) -> bool:
    """No rule symbols, compositions or schema constructs."""
    return not contains(t, (Rule, Comp, Omega, Pow, Hole))


def is_multistep(t: Node) -> bool:
    return not contains(t, (Comp, Omega, Pow))


# ---------------------------------------------------------------------------
# lazy unfolding


def unfold_rec(t: Rec) -> Node:
    return subst_rec(t.body, t.var, t)


def head(t: Node) -> Node:
    """Unfold rec-binders at the root until a proper symbol shows up."""
    n = 0
    while isinstance(t, Rec):
        t = unfold_rec(t)
        n += 1
        if n > _MAX_HEAD_UNFOLDINGS:
            raise TermError("unguarded rec-binder")
    return t


def children(t: Node) -> tuple[Node, ...]:
    """Children of the (head-unfolded) closed node; an omega-composition is
    seen as ``psi_0 . comp i. psi_(i+1)``."""
    t = head(t)
    if isinstance(t, Omega):
        from .schema import split

        t = split(t)
    if isinstance(t, Pow):
        raise TermError("schema power outside an omega-composition body")
    return t.kids


def _as_tree_node(t: Node) -> Node:
    t = head(t)
    if isinstance(t, Omega):
        from .schema import split

        return split(t)
    return t


def subterm_at(t: Node, r: Position) -> Node:
    """``t|_r``; rec-binders are unfolded on the way down."""
    for depth, i in enumerate(r):
        kids = children(t)
        if not 1 <= i <= len(kids):
            raise PositionError(f"position {format_position(r)} out of range (at depth {depth})")
        t = kids[i - 1]
    return t


def symbol_at(t: Node, r: Position) -> Node:
    """Head-unfolded node at ``r``."""
    return _as_tree_node(subterm_at(t, r))


def replace_at(t: Node, r: Position, s: Node) -> Node:
    """``t[s]_r``, unfolding rec-binders just enough that ``r`` is a tree position."""
    if not r:
        return s
    node = _as_tree_node(t)
    kids = list(node.kids)
    i = r[0]
    if not 1 <= i <= len(kids):
        raise PositionError(f"position {format_position(r)} out of range")
    kids[i - 1] = replace_at(kids[i - 1], r[1:], s)
    return node.rebuild(kids)


def unfold(t: Node, d: int) -> Node:
    """Finite tree equal to ``t`` on positions shorter than ``d``; deeper nodes become CUT."""
    if d <= 0:
        return CUT
    node = _as_tree_node(t)
    if not node.kids:
        return node
    return node.rebuild(unfold(k, d - 1) for k in node.kids)


def label(t: Node) -> tuple:
    if isinstance(t, Fun):
        return ("F", t.name, len(t.args))
    if isinstance(t, Rule):
        return ("R", t.symbol.name, len(t.args))
    if isinstance(t, Comp):
        return ("C",)
    if isinstance(t, Var):
        return ("V", t.name)
    if isinstance(t, Hole):
        return ("H",)
    if isinstance(t, RecVar):
        return ("X", t.name)
    if isinstance(t, Pow):
        return ("P", t.ctx, t.a, t.b)
    if isinstance(t, Omega):
        return ("O",)
    raise TermError(f"no label for {type(t).__name__}")


def bisimilar(t: Node, u: Node, omega_eq: Callable[[Omega, Omega], bool] | None = None) -> bool:
    """Equality of the (possibly infinite) trees denoted by two closed nodes.

    Omega-compositions are compared with ``omega_eq`` when both sides are
    omega nodes, and split into ``psi_0 . rest`` when compared against a
    binary composition.
    """
    seen: set[tuple[Node, Node]] = set()
    stack = [(t, u)]
    while stack:
        a, b = stack.pop()
        if a == b or (a, b) in seen:
            continue
        seen.add((a, b))
        a, b = head(a), head(b)
        if isinstance(a, Omega) and isinstance(b, Omega):
            if omega_eq is None or not omega_eq(a, b):
                return False
            continue
        if isinstance(a, Omega) or isinstance(b, Omega):
            a, b = _as_tree_node(a), _as_tree_node(b)
        if label(a) != label(b):
            return False
        if isinstance(a, Pow):
            stack.append((a.arg, b.arg))  # type: ignore[attr-defined]
            continue
        stack.extend(zip(a.kids, b.kids))
    return True


def term_eq(t: Node, u: Node) -> bool:
    """Do two closed rational terms denote the same tree?"""
    return bisimilar(t, u)


def match_pattern(pattern: Node, t: Node) -> dict[str, Node] | None:
    """Substitution ``sigma`` with ``sigma(pattern) == t`` or None.

    Function symbols of the pattern must meet function nodes of ``t``; a rule
    node or composition in their place is a mismatch.
    """
    sigma: dict[str, Node] = {}
    stack = [(pattern, t)]
    while stack:
        p, u = stack.pop()
        if isinstance(p, Var):
            if p.name in sigma:
                if not term_eq(sigma[p.name], u):
                    return None
            else:
                sigma[p.name] = u
            continue
        u = head(u)
        if not isinstance(p, Fun) or not isinstance(u, Fun):
            return None
        if u.name != p.name or len(u.args) != len(p.args):
            return None
        stack.extend(zip(p.args, u.args))
    return sigma


def pattern_positions(rule: RuleSymbol) -> frozenset[Position]:
    """Non-variable positions of the rule's left-hand side."""
    out: set[Position] = set()

    def go(t: Node, pos: Position) -> None:
        if isinstance(t, Var):
            return
        out.add(pos)
        for i, k in enumerate(t.kids, 1):
            go(k, pos + (i,))

    go(rule.lhs, ())
    return frozenset(out)


def lhs_args(rule: RuleSymbol, t: Node) -> tuple[Node, ...] | None:
    """The instances ``t_1..t_m`` with ``t == lhs[t_1..t_m]``, or None."""
    sigma = match_pattern(rule.lhs, t)
    if sigma is None:
        return None
    return tuple(sigma[v] for v in rule.variables)


def instantiate_lhs(rule: RuleSymbol, args: Iterable[Node]) -> Node:
    return apply_subst(rule.lhs, dict(zip(rule.variables, args)))


def instantiate_rhs(rule: RuleSymbol, args: Iterable[Node]) -> Node:
    return apply_subst(rule.rhs, dict(zip(rule.variables, args)))


# ---------------------------------------------------------------------------
# contexts


def holes(ctx: Node, pos: Position = ()) -> list[Position]:
    if isinstance(ctx, Hole):
        return [pos]
    out: list[Position] = []
    for i, k in enumerate(ctx.kids, 1):
        out.extend(holes(k, pos + (i,)))
    return out


def fill(ctx: Node, args: Iterable[Node]) -> Node:
    """Fill the holes of ``ctx`` left to right."""
    it = iter(args)

    def go(c: Node) -> Node:
        if isinstance(c, Hole):
            return next(it)
        if not c.kids:
            return c
        return c.rebuild(go(k) for k in c.kids)

    out = go(ctx)
    if next(it, None) is not None:
        raise TermError("too many arguments for context")
    return out


def lhs_context(rule: RuleSymbol) -> Node:
    """``l`` with its variables replaced by holes."""
    return transform(rule.lhs, lambda u: HOLE if isinstance(u, Var) else None)


def symbol_context(name: str, arity: int) -> Node:
    return Fun(name, (HOLE,) * arity)


def non_hole_positions(ctx: Node) -> frozenset[Position]:
    out: set[Position] = set()

    def go(c: Node, pos: Position) -> None:
        if isinstance(c, Hole):
            return
        out.add(pos)
        for i, k in enumerate(c.kids, 1):
            go(k, pos + (i,))

    go(ctx, ())
    return frozenset(out)


# ---------------------------------------------------------------------------
# positions


def format_position(p: Position) -> str:
    return ".".join(map(str, p)) if p else "e"


def parse_position(s: str) -> Position:
    s = s.strip()
    if s in ("e", "ε", ""):
        return ()
    try:
        out = tuple(int(x) for x in s.replace("·", ".").split("."))
    except ValueError:
        raise PositionError(f"bad position {s!r}") from None
    if any(i < 1 for i in out):
        raise PositionError(f"bad position {s!r}")
    return out


def is_prefix(p: Position, q: Position) -> bool:
    return len(p) <= len(q) and q[: len(p)] == p


def is_strict_prefix(p: Position, q: Position) -> bool:
    return len(p) < len(q) and q[: len(p)] == p


def strict_prefixes(p: Position) -> set[Position]:
    return {p[:k] for k in range(len(p))}


def restrict(positions: Iterable[Position], i: int) -> frozenset[Position]:
    """``P|_i = {p : i.p in P}``."""
    return frozenset(p[1:] for p in positions if p and p[0] == i)


def is_prefix_closed(positions: Iterable[Position]) -> bool:
    ps = set(positions)
    return all(p[:-1] in ps for p in ps if p)
