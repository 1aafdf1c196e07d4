"""Affine omega-composition schemas.

An omega-composition ``comp i. body`` denotes ``psi_0 . (psi_1 . ...)`` where
``psi_n`` is ``body`` with every power node ``C^(a*i+b)[arg]`` expanded at
``i = n``.  Because exponents are affine, shifting the family by ``k``
only changes constant terms, and most questions about all components can be
answered on the body itself.
"""
from __future__ import annotations

from .terms import (
    Comp,
    Fun,
    Hole,
    Node,
    Omega,
    Pow,
    Rec,
    RecVar,
    Rule,
    bisimilar,
    fill,
    has_rules,
    head,
    holes,
)


def ctx_power(ctx: Node, n: int, arg: Node) -> Node:
    """``ctx^n[arg]``."""
    out = arg
    for _ in range(n):
        out = fill(ctx, [out])
    return out


def c_omega(ctx: Node) -> Node:
    """``ctx^omega = rec X. ctx[X]``."""
    return Rec("X", fill(ctx, [RecVar("X")]))


def hole_depth(ctx: Node) -> int:
    (p,) = holes(ctx)
    return len(p)


def _map_body(body: Node, fn) -> Node:
    """Rebuild ``body`` applying ``fn`` to every power node (not inside nested comps)."""

    def go(t: Node) -> Node:
        if isinstance(t, Pow):
            return fn(t, go(t.arg))
        if isinstance(t, Omega) or not t.kids:
            return t
        new = tuple(go(k) for k in t.kids)
        if all(a is b for a, b in zip(new, t.kids)):
            return t
        return t.rebuild(new)

    return go(body)


def instantiate(body: Node, n: int) -> Node:
    return _map_body(body, lambda p, arg: ctx_power(p.ctx, p.a * n + p.b, arg))


def expand(om: Omega, n: int) -> Node:
    """Component ``psi_n`` of an omega-composition."""
    return instantiate(om.body, n)


def shift_body(body: Node, k: int = 1) -> Node:
    return _map_body(body, lambda p, arg: Pow(p.ctx, p.a, p.b + p.a * k, arg))


def shift(om: Omega, k: int = 1) -> Omega:
    """``comp i. psi_(i+k)``."""
    return Omega(shift_body(om.body, k))


def split(om: Omega) -> Comp:
    """``psi_0 . comp i. psi_(i+1)``."""
    return Comp(expand(om, 0), shift(om, 1))


def pows(body: Node) -> list[Pow]:
    out: list[Pow] = []

    def go(t: Node) -> None:
        if isinstance(t, Pow):
            out.append(t)
        if isinstance(t, Omega):
            return
        for k in t.kids:
            go(k)

    go(body)
    return out


def is_schematic(body: Node) -> bool:
    """Does the body depend on the index?"""
    return any(p.a > 0 for p in pows(body))


def max_offset(body: Node) -> int:
    return max((p.b for p in pows(body)), default=0)


def match_ctx(ctx: Node, t: Node) -> Node | None:
    """The filler ``x`` with ``ctx[x] == t`` (as trees), or None."""
    if isinstance(ctx, Hole):
        return t
    t = head(t)
    if isinstance(ctx, Fun):
        if not isinstance(t, Fun) or t.name != ctx.name or len(t.args) != len(ctx.args):
            return None
        found = None
        for c, u in zip(ctx.args, t.args):
            if holes(c):
                found = match_ctx(c, u)
                if found is None:
                    return None
            elif not bisimilar(c, u):
                return None
        return found
    return None


def canonical(body: Node) -> Node:
    """Merge adjacent context powers so that equal schemas get equal bodies.

    ``C^e[C[x]]`` and ``C[C^e[x]]`` become ``C^(e+1)[x]``, nested powers of
    the same context add up, ``C^e[C^omega]`` becomes ``C^omega`` and a zero
    exponent disappears.
    """

    def go(t: Node) -> Node:
        if isinstance(t, Omega) or not t.kids:
            return t
        t = t.rebuild(go(k) for k in t.kids)
        if isinstance(t, Pow):
            return _canon_pow(t)
        if isinstance(t, Fun):
            for k in t.args:
                if isinstance(k, Pow) and match_ctx(k.ctx, t) is k:
                    return _canon_pow(Pow(k.ctx, k.a, k.b + 1, k.arg))
        return t

    return go(body)


def _canon_pow(p: Pow) -> Node:
    ctx, a, b, arg = p.ctx, p.a, p.b, p.arg
    while True:
        if isinstance(arg, Pow) and arg.ctx == ctx:
            a, b, arg = a + arg.a, b + arg.b, arg.arg
            continue
        if not isinstance(arg, Rec) and not pows(arg):
            inner = match_ctx(ctx, arg)
            if inner is not None and not isinstance(arg, Rec):
                b, arg = b + 1, inner
                continue
        break
    if not pows(arg) and not isinstance(arg, (Omega,)) and bisimilar(arg, c_omega(ctx)):
        return c_omega(ctx)
    if a == 0 and b == 0:
        return arg
    return Pow(ctx, a, b, arg)


def schema_eq(x: Node, y: Node) -> bool:
    """Equality of two schema bodies as families (exact for canonical affine bodies)."""
    return bisimilar(canonical(x), canonical(y))


def peel(body: Node, name: str, arity: int) -> list[Node] | None:
    """Bodies ``b_1..b_m`` with ``body[i:=n] == name(b_1[n], ..., b_m[n])`` for every n."""
    t = head(body)
    if isinstance(t, Fun):
        if t.name == name and len(t.args) == arity:
            return list(t.args)
        return None
    if isinstance(t, Comp):
        left = peel(t.left, name, arity)
        right = peel(t.right, name, arity) if left is not None else None
        if right is None:
            return None
        return [Comp(x, y) for x, y in zip(left, right)]
    if isinstance(t, Pow):
        if t.b >= 1:
            inner = _canon_pow(Pow(t.ctx, t.a, t.b - 1, t.arg))
            return peel(fill(t.ctx, [inner]), name, arity)
        if t.a == 0:
            return peel(t.arg, name, arity)
        return None
    return None


def make_omega(body: Node) -> Node:
    """``comp i. body``, or the constant itself when the family is a rule-free constant."""
    if not has_rules(body):
        # a rule-free chained family is constant
        return instantiate(body, 0)
    return Omega(canonical(body))


def omega_eq(x: Omega, y: Omega) -> bool:
    return schema_eq(x.body, y.body)


def shift_distance(x: Omega, y: Omega, limit: int = 8) -> int | None:
    """``k >= 1`` with ``y == shift(x, k)``, if any up to ``limit``."""
    cx = canonical(x.body)
    cy = canonical(y.body)
    for k in range(1, limit + 1):
        if bisimilar(canonical(shift_body(cx, k)), cy):
            return k
    return None
