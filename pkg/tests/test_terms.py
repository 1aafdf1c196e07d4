from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infproof.syntax import ParseError, default_is_var, parse_context, parse_term, parse_trs, show
from infproof.terms import (
    CUT,
    PositionError,
    TermError,
    apply_subst,
    format_position,
    is_prefix,
    is_prefix_closed,
    match_pattern,
    parse_position,
    pattern_positions,
    replace_at,
    subterm_at,
    term_eq,
    unfold,
)

T = parse_term


def pat(text: str):
    return parse_term(text, is_var=default_is_var)


# ---------------------------------------------------------------------------
# rule files


def test_parse_unary_rule():
    trs = parse_trs("mu : f(x) -> g(x)")
    mu = trs.rule("mu")
    assert mu.arity == 1
    assert show(mu.lhs) == "f(x)"


def test_parse_constant_rule():
    assert parse_trs("pi : a -> b").rule("pi").arity == 0


def test_non_left_linear_rejected():
    with pytest.raises(ParseError, match="left-linear"):
        parse_trs("bad : h(x,x) -> x")


def test_arity_mismatch_rejected():
    with pytest.raises(ParseError):
        parse_trs("mu : f(x) -> g(x)\nnu : f(x, y) -> g(x)")


def test_syntax_error_has_location():
    with pytest.raises(ParseError) as info:
        parse_trs("mu : f(x) -> g(x)\nnu : g(x -> k(x)")
    assert info.value.line == 2


def test_comments_and_blank_lines():
    trs = parse_trs("# rules\n\nmu : f(x) -> g(x)   # the only one\n")
    assert len(trs) == 1


# ---------------------------------------------------------------------------
# positions and subterms


def test_subterm_direct():
    assert term_eq(subterm_at(T("f(g(a))"), (1,)), T("g(a)"))
    assert term_eq(subterm_at(T("j(m(f(a)),m(b))"), (1, 1)), T("f(a)"))


def test_subterm_of_rational_term():
    fw = T("rec X. f(X)")
    assert term_eq(subterm_at(fw, (1, 1, 1)), fw)


def test_subterm_out_of_range():
    with pytest.raises(PositionError):
        subterm_at(T("f(a)"), (2,))


def test_replace():
    assert term_eq(replace_at(T("f(a)"), (1,), T("b")), T("f(b)"))
    assert term_eq(replace_at(T("rec X. f(X)"), (), T("a")), T("a"))


def test_replace_unfolds_once():
    out = replace_at(T("rec X. f(X)"), (1,), T("g(a)"))
    assert unfold(out, 3) == unfold(T("f(g(a))"), 3)


def test_positions_roundtrip():
    for p in [(), (1,), (2, 1, 3)]:
        assert parse_position(format_position(p)) == p
    assert parse_position("ε") == ()
    with pytest.raises(PositionError):
        parse_position("0.1")


def test_prefix_order():
    assert is_prefix((), (1, 2))
    assert is_prefix((1,), (1, 2))
    assert not is_prefix((2,), (1, 2))


# ---------------------------------------------------------------------------
# rational equality


def test_term_eq_unfolding():
    assert term_eq(T("rec X. f(X)"), T("f(rec X. f(X))"))


def test_term_eq_period():
    assert term_eq(T("rec X. f(X)"), T("rec X. f(f(X))"))
    assert unfold(T("rec X. f(X)"), 8) == unfold(T("rec X. f(f(X))"), 8)


def test_term_eq_distinguishes():
    assert not term_eq(T("rec X. f(X)"), T("rec X. g(X)"))


def test_omega_shorthand():
    assert term_eq(T("f^omega"), T("rec X. f(X)"))


def test_unguarded_rec_rejected():
    with pytest.raises((ParseError, TermError)):
        T("rec X. X")


# ---------------------------------------------------------------------------
# matching


def test_match_rho_pattern():
    sigma = match_pattern(pat("j(g(x),y)"), T("j(g(b), n(d))"))
    assert sigma is not None
    assert term_eq(sigma["x"], T("b")) and term_eq(sigma["y"], T("n(d)"))


def test_match_fails():
    assert match_pattern(pat("f(x)"), T("g(a)")) is None


def test_match_rational():
    fw = T("rec X. f(X)")
    sigma = match_pattern(pat("f(x)"), fw)
    assert sigma is not None and term_eq(sigma["x"], fw)


def test_pattern_positions():
    trs = parse_trs("mu: f(x) -> g(x)\nrho: j(g(x),y) -> j(x,y)\nkap: h(m(x),m(y)) -> k(x)")
    assert pattern_positions(trs.rule("mu")) == {()}
    assert pattern_positions(trs.rule("rho")) == {(), (1,)}
    assert pattern_positions(trs.rule("kap")) == {(), (1,), (2,)}


# ---------------------------------------------------------------------------
# unfolding and contexts


def test_unfold():
    assert show(unfold(T("rec X. f(X)"), 2)) == "f(f(✂))"
    assert unfold(T("a"), 5) == T("a")
    assert show(unfold(T("rec X. g(f(X))"), 3)) == "g(f(g(✂)))"
    assert unfold(T("f(a)"), 0) is CUT


def test_context_holes():
    ctx = parse_context("j(g(_), □)")
    assert show(ctx) == "j(g(_), _)"


# ---------------------------------------------------------------------------
# properties over random rational terms

_names = st.sampled_from(["f", "g"])


@st.composite
def rational_terms(draw, depth=3):
    """Finite spines over f, g ending in a constant or a cycle."""
    prefix = draw(st.lists(_names, max_size=depth))
    end = draw(st.one_of(st.just("a"), st.lists(_names, min_size=1, max_size=3).map(lambda c: c)))
    if end == "a":
        body = "a"
    else:
        body = "rec X. " + "".join(f"{n}(" for n in end) + "X" + ")" * len(end)
    return T("".join(f"{n}(" for n in prefix) + body + ")" * len(prefix))


@settings(max_examples=60, deadline=None)
@given(rational_terms(), st.lists(st.integers(1, 1), max_size=5))
def test_replace_with_own_subterm(t, pos):
    p = tuple(pos)
    try:
        s = subterm_at(t, p)
    except PositionError:
        return
    assert term_eq(replace_at(t, p, s), t)


@settings(max_examples=60, deadline=None)
@given(rational_terms(), rational_terms())
def test_term_eq_implies_equal_unfoldings(t, u):
    assert term_eq(t, t)
    if term_eq(t, u):
        assert all(unfold(t, d) == unfold(u, d) for d in range(17))
        assert term_eq(u, t)


@settings(max_examples=40, deadline=None)
@given(rational_terms())
def test_match_then_apply(t):
    sigma = match_pattern(pat("f(x)"), t)
    if sigma is not None:
        assert term_eq(apply_subst(pat("f(x)"), sigma), t)


def test_pattern_positions_prefix_closed():
    trs = parse_trs("rho: j(g(x),m(h(y))) -> j(x,y)")
    assert is_prefix_closed(pattern_positions(trs.rule("rho")))
