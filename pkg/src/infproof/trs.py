"""Left-linear term rewriting systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .terms import Fun, Node, Rule, RuleSymbol, TermError, Var


class TRSError(TermError):
    pass


@dataclass(frozen=True)
class TRS:
    """Signature (function symbol arities) plus named rule symbols."""

    rules: Mapping[str, RuleSymbol]
    signature: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_rules(cls, rules: Iterable[RuleSymbol], signature: Mapping[str, int] | None = None) -> "TRS":
        table: dict[str, RuleSymbol] = {}
        sig: dict[str, int] = dict(signature or {})
        for r in rules:
            if r.name in table:
                raise TRSError(f"duplicate rule name {r.name!r}")
            table[r.name] = r
            for side in (r.lhs, r.rhs):
                _collect_signature(side, sig)
        clash = set(table) & set(sig)
        if clash:
            raise TRSError(f"names used both as rule and function symbol: {sorted(clash)}")
        return cls(table, sig)

    def rule(self, name: str) -> RuleSymbol:
        try:
            return self.rules[name]
        except KeyError:
            raise TRSError(f"unknown rule symbol {name!r}") from None

    def __iter__(self):
        return iter(self.rules.values())

    def __len__(self) -> int:
        return len(self.rules)


def _collect_signature(t: Node, sig: dict[str, int]) -> None:
    if isinstance(t, Var):
        return
    if isinstance(t, Fun):
        known = sig.setdefault(t.name, len(t.args))
        if known != len(t.args):
            raise TRSError(f"arity mismatch for {t.name!r}: {known} vs {len(t.args)}")
        for a in t.args:
            _collect_signature(a, sig)
        return
    raise TRSError(f"unexpected node in rule: {t}")


def check_signature(t: Node, trs: TRS) -> list[str]:
    """Arity problems of ``t`` relative to the TRS signature (unknown symbols are allowed)."""
    problems: list[str] = []
    seen: set[int] = set()

    def go(u: Node) -> None:
        if id(u) in seen:
            return
        seen.add(id(u))
        if isinstance(u, Fun):
            n = trs.signature.get(u.name)
            if n is not None and n != len(u.args):
                problems.append(f"{u.name} expects {n} arguments, got {len(u.args)}")
        if isinstance(u, Rule) and len(u.args) != u.symbol.arity:
            problems.append(f"{u.symbol.name} expects {u.symbol.arity} arguments, got {len(u.args)}")
        for k in u.kids:
            go(k)

    go(t)
    return problems


def overlaps(a: RuleSymbol, b: RuleSymbol) -> bool:
    """Do the left-hand sides overlap (critical pair), excluding a rule with itself at the root?"""
    from .terms import pattern_positions, subterm_at

    for o in pattern_positions(b):
        if a.name == b.name and o == ():
            continue
        if _unifiable(a.lhs, subterm_at(b.lhs, o)):
            return True
    return False


def _unifiable(s: Node, t: Node) -> bool:
    # linear patterns with disjoint variables unify iff their symbol skeletons agree
    if isinstance(s, Var) or isinstance(t, Var):
        return True
    assert isinstance(s, Fun) and isinstance(t, Fun)
    return s.name == t.name and len(s.args) == len(t.args) and all(
        _unifiable(x, y) for x, y in zip(s.args, t.args)
    )


def is_orthogonal(trs: TRS) -> bool:
    rules = list(trs)
    return not any(overlaps(a, b) for a in rules for b in rules)
