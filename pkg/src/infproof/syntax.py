"""Text formats: terms, rules, proof terms and workspace files.

Proof-term syntax, in brief::

    f(a, b)            function or rule application (rule names come from the TRS)
    f^omega            rec X. f(X); also accepted for rule symbols (mu^omega)
    f^3(t)             f(f(f(t)))
    rec X. t           rational term, X uppercase
    psi . phi          composition, right-associative
    comp i. body       omega-composition of body[i := 0, 1, ...]
    g^{2*i+1}(t)       affine power of a unary context inside a comp body
    [j(_, a)]^{i}(t)   affine power of a general one-hole context
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .terms import (
    CUT,
    is_guarded,
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
    RuleSymbol,
    TermError,
    Var,
    free_recvars,
    holes,
)
from .trs import TRS, TRSError

_DEFAULT_VAR = re.compile(r"[u-z][0-9']*\Z")


class ParseError(TermError):
    def __init__(self, msg: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<num>\d+)
  | (?P<ident>[^\W\d][\w']*)
  | (?P<arrow>->|→)
  | (?P<op>[(),.:^{}\[\]*+=@_□⊙·;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1) -> list[Tok]:
    out: list[Tok] = []
    pos = 0
    col0 = 0
    while pos < len(text):
        if text[pos] == "\n":
            line += 1
            pos += 1
            col0 = pos
            continue
        if text[pos] == "#":
            nl = text.find("\n", pos)
            pos = len(text) if nl < 0 else nl
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if tok in ("□", "_"):
                kind = "hole"
            elif tok == "⊙":
                kind, tok = "ident", "comp"
            elif tok == "·":
                tok = "."
            elif tok == "→":
                tok = "->"
            if kind == "ident" and tok == "_":
                kind = "hole"
            out.append(Tok(kind, tok, line, pos - col0 + 1))
        pos = m.end()
    out.append(Tok("eof", "", line, pos - col0 + 1))
    return out


# ---------------------------------------------------------------------------
# parser


class Parser:
    def __init__(
        self,
        text: str,
        trs: TRS | None = None,
        is_var: Callable[[str], bool] | None = None,
        line: int = 1,
        allow_holes: bool = False,
    ):
        self.toks = tokenize(text, line)
        self.i = 0
        self.trs = trs
        self.is_var = is_var or (lambda _n: False)
        self.allow_holes = allow_holes
        self.index_vars: list[str] = []

    # helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Tok | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        t = self.tok
        if t.text != text or t.kind == "eof":
            raise self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def expect_kind(self, kind: str) -> Tok:
        t = self.tok
        if t.kind != kind:
            raise self.error(f"expected {kind}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # grammar
    def term(self) -> Node:
        t = self.tok
        if t.kind == "ident" and t.text == "comp":
            self.i += 1
            var = self.expect_kind("ident").text
            self.expect(".")
            self.index_vars.append(var)
            try:
                body = self.term()
            finally:
                self.index_vars.pop()
            return Omega(body)
        if t.kind == "ident" and t.text == "rec":
            self.i += 1
            var = self.expect_kind("ident")
            if not var.text[0].isupper():
                raise self.error("rec-variables must start with an uppercase letter", var)
            self.expect(".")
            return Rec(var.text, self.term())
        left = self.atom()
        if self.accept("."):
            return Comp(left, self.term())
        return left

    def atom(self) -> Node:
        t = self.tok
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "hole":
            if not self.allow_holes:
                raise self.error("hole outside a context")
            self.i += 1
            return HOLE
        if self.accept("["):
            saved, self.allow_holes = self.allow_holes, True
            ctx = self.term()
            self.allow_holes = saved
            self.expect("]")
            if len(holes(ctx)) != 1:
                raise self.error("a powered context needs exactly one hole", t)
            self.expect("^")
            return self.power(ctx, t)
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text or 'end of input'!r}")
        self.i += 1
        name = t.text
        if name[0].isupper():
            return RecVar(name)
        if self.tok.text == "^":
            self.i += 1
            if self.tok.text in ("omega", "ω"):
                self.i += 1
                return Rec("X", self.make(name, (RecVar("X"),), t))
            return self.power(self.make(name, (HOLE,), t), t)
        args: tuple[Node, ...] = ()
        if self.accept("("):
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            self.expect(")")
            args = tuple(items)
        if not args and self.is_var(name):
            return Var(name)
        return self.make(name, args, t)

    def make(self, name: str, args: tuple[Node, ...], tok: Tok) -> Node:
        if self.trs is not None and name in self.trs.rules:
            sym = self.trs.rules[name]
            if len(args) != sym.arity:
                raise self.error(f"rule {name} takes {sym.arity} arguments, got {len(args)}", tok)
            return Rule(sym, args)
        if self.trs is not None:
            n = self.trs.signature.get(name)
            if n is not None and n != len(args):
                raise self.error(f"{name} takes {n} arguments, got {len(args)}", tok)
        if name == CUT.name:
            raise self.error("reserved symbol", tok)
        return Fun(name, args)

    def power(self, ctx: Node, tok: Tok) -> Node:
        if self.tok.kind == "num":
            n = int(self.tok.text)
            self.i += 1
            arg = self.paren_arg()
            from .schema import ctx_power

            return ctx_power(ctx, n, arg)
        if self.accept("{"):
            a, b = self.affine()
            self.expect("}")
        elif self.tok.kind == "ident" and self.index_vars and self.tok.text == self.index_vars[-1]:
            self.i += 1
            a, b = 1, 0
        else:
            raise self.error("expected exponent")
        if not self.index_vars:
            if a:
                raise self.error("index variable outside comp", tok)
            from .schema import ctx_power

            return ctx_power(ctx, b, self.paren_arg())
        return Pow(ctx, a, b, self.paren_arg())

    def paren_arg(self) -> Node:
        self.expect("(")
        arg = self.term()
        self.expect(")")
        return arg

    def affine(self) -> tuple[int, int]:
        a = b = 0
        while True:
            t = self.tok
            if t.kind == "num":
                self.i += 1
                n = int(t.text)
                if self.accept("*") or (self.tok.kind == "ident" and self.tok.text in self.index_vars[-1:]):
                    self.index_var()
                    a += n
                else:
                    b += n
            elif t.kind == "ident":
                self.index_var()
                a += 1
            else:
                raise self.error("bad exponent")
            if not self.accept("+"):
                return a, b

    def index_var(self) -> None:
        t = self.expect_kind("ident")
        if not self.index_vars or t.text != self.index_vars[-1]:
            raise self.error(f"unknown index variable {t.text!r}", t)


def default_is_var(name: str) -> bool:
    return bool(_DEFAULT_VAR.match(name))


def parse_term(text: str, trs: TRS | None = None, is_var: Callable[[str], bool] | None = None) -> Node:
    """Parse an object term, a pattern (with ``is_var``) or a proof term (with ``trs``)."""
    p = Parser(text, trs, is_var)
    t = p.term()
    p.done()
    unbound = free_recvars(t)
    if unbound:
        raise ParseError(f"unbound rec-variables {sorted(unbound)}")
    if not is_guarded(t):
        raise ParseError("unguarded rec-binder")
    return t


def parse_context(text: str, trs: TRS | None = None) -> Node:
    p = Parser(text, trs, allow_holes=True)
    t = p.term()
    p.done()
    return t


def parse_proof_term(text: str, trs: TRS) -> Node:
    return parse_term(text, trs)


def _parse_rule_line(line: str, lineno: int, is_var: Callable[[str], bool]) -> RuleSymbol:
    m = re.match(r"\s*([^\W\d][\w']*)\s*:(?!=)(.*)", line)
    if not m:
        raise ParseError("expected 'name : lhs -> rhs'", lineno, 1)
    name, body = m.group(1), m.group(2)
    parts = re.split(r"->|→", body)
    if len(parts) != 2:
        raise ParseError("expected exactly one '->'", lineno, m.start(2) + 1)
    col = m.start(2) + 1
    try:
        lhs = _pattern(parts[0], lineno, col, is_var)
        rhs = _pattern(parts[1], lineno, col + len(parts[0]) + 2, is_var)
        return RuleSymbol(name, lhs, rhs)
    except ParseError:
        raise
    except TermError as e:
        raise ParseError(str(e), lineno, 1) from None


def _pattern(text: str, lineno: int, col: int, is_var: Callable[[str], bool]) -> Node:
    p = Parser(text, None, is_var, line=lineno)
    p.toks = [Tok(t.kind, t.text, t.line, t.col + col - 1) for t in p.toks]
    t = p.term()
    p.done()
    if free_recvars(t):
        raise ParseError("unbound rec-variable in rule", lineno, col)
    return t


@dataclass
class Workspace:
    trs: TRS
    terms: dict[str, Node] = field(default_factory=dict)
    options: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Node:
        try:
            return self.terms[name]
        except KeyError:
            raise ParseError(f"unknown proof term {name!r}") from None


def _lines(text: str | bytes) -> Iterator[tuple[int, str]]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            yield n, line


def parse_trs(text: str | bytes) -> TRS:
    """Parse rule lines ``name : lhs -> rhs``; ``let`` and ``option`` lines are ignored."""
    return _parse_rules(text)[0]


def _parse_rules(text: str | bytes) -> tuple[TRS, list[tuple[int, str]]]:
    is_var: Callable[[str], bool] = default_is_var
    rules: list[RuleSymbol] = []
    rest: list[tuple[int, str]] = []
    for n, line in _lines(text):
        s = line.strip()
        if s.startswith("vars:"):
            names = set(s[5:].replace(",", " ").split())
            is_var = names.__contains__
        elif s.startswith(("let ", "option ")):
            rest.append((n, s))
        else:
            rules.append(_parse_rule_line(line, n, is_var))
    try:
        return TRS.from_rules(rules), rest
    except TRSError as e:
        raise ParseError(str(e)) from None


def parse_workspace(text: str | bytes) -> Workspace:
    """Rules, ``let name = proof-term`` lines and ``option key = value`` lines."""
    trs, rest = _parse_rules(text)
    ws = Workspace(trs)
    for n, s in rest:
        m = re.match(r"(let|option)\s+([\w']+)\s*=\s*(.*)\Z", s)
        if not m:
            raise ParseError("expected 'let name = term' or 'option key = value'", n, 1)
        kind, name, value = m.groups()
        if kind == "option":
            ws.options[name] = value.strip()
            continue
        col = s.index(value) + 1
        p = Parser(value, trs, line=n)
        p.toks = [Tok(t.kind, t.text, t.line, t.col + col - 1) for t in p.toks]
        t = p.term()
        p.done()
        if free_recvars(t):
            raise ParseError("unbound rec-variable", n, col)
        if not is_guarded(t):
            raise ParseError("unguarded rec-binder", n, col)
        ws.terms[name] = t
    return ws


# ---------------------------------------------------------------------------
# printer

_INDEX_NAMES = "ijklmn"


def fmt_affine(a: int, b: int, var: str = "i") -> str:
    if a == 0:
        return str(b)
    s = var if a == 1 else f"{a}*{var}"
    return f"{s}+{b}" if b else s


def show(t: Node, _depth: int = 0) -> str:
    return _Printer().show(t, _depth)


class _Printer:
    def show(self, t: Node, depth: int = 0) -> str:
        if isinstance(t, (Fun, Rule)):
            name = t.name
            if not t.args:
                return name
            return f"{name}({', '.join(self.show(a, depth) for a in t.args)})"
        if isinstance(t, Var):
            return t.name
        if isinstance(t, RecVar):
            return t.name
        if isinstance(t, Hole):
            return "_"
        if isinstance(t, Rec):
            b = t.body
            if (
                t.var == "X"
                and isinstance(b, (Fun, Rule))
                and len(b.args) == 1
                and b.args[0] == RecVar("X")
            ):
                return f"{b.name}^omega"
            return f"rec {t.var}. {self.show(b, depth)}"
        if isinstance(t, Comp):
            left = self.show(t.left, depth)
            if isinstance(t.left, (Comp, Omega)) or (isinstance(t.left, Rec) and left.startswith("rec ")):
                left = f"({left})"
            return f"{left} . {self.show(t.right, depth)}"
        if isinstance(t, Omega):
            var = _INDEX_NAMES[depth % len(_INDEX_NAMES)]
            return f"comp {var}. {self.show(t.body, depth + 1)}"
        if isinstance(t, Pow):
            var = _INDEX_NAMES[(depth - 1) % len(_INDEX_NAMES)]
            e = fmt_affine(t.a, t.b, var)
            c = t.ctx
            if isinstance(c, Fun) and len(c.args) == 1 and isinstance(c.args[0], Hole):
                head = c.name
            else:
                head = f"[{self.show(c, depth)}]"
            return f"{head}^{{{e}}}({self.show(t.arg, depth)})"
        raise TermError(f"cannot print {type(t).__name__}")
