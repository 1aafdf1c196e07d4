from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infproof.oracle import random_instance
from infproof.proofterm import (
    ComposabilityError,
    Truncated,
    Undefined,
    expand_schema,
    is_convergent,
    limit_of_targets,
    mind,
    normalize,
    spine,
    src,
    stepwise,
    tgt,
    validate,
)
from infproof.syntax import parse_proof_term, parse_trs, show
from infproof.terms import has_rules, is_object_term, term_eq, unfold


def test_src_examples(unary):
    assert term_eq(src(unary("mu(a)")), unary("f(a)"))
    assert term_eq(src(unary("rec X. mu(X)")), unary("rec X. f(X)"))
    assert term_eq(src(unary("f(nu(a)) . mu(k(a))")), unary("f(g(a))"))


def test_tgt_examples(unary):
    assert term_eq(tgt(unary("mu(a)")), unary("g(a)"))
    assert term_eq(tgt(unary("comp i. g^{i}(mu(f^omega))")), unary("rec X. g(X)"))


def test_collapsing_tower_undefined():
    trs = parse_trs("kappa: i(x) -> x")
    t = tgt(parse_proof_term("rec X. kappa(X)", trs))
    assert isinstance(t, Undefined)
    assert not t


def test_mind_examples():
    trs = parse_trs("mu: f(x) -> g(x)")
    P = lambda s: parse_proof_term(s, trs)  # noqa: E731
    assert mind(P("f(mu(a)) . mu(g(a))")) == 0
    assert mind(P("m(f(mu(a))) . m(mu(g(a)))")) == 1
    assert mind(P("g(a)")) == math.inf


def test_validate_examples(unary):
    assert validate(unary("f(nu(a)) . mu(k(a))")) == []
    bad = validate(unary("mu(a) . mu(a)"))
    assert len(bad) == 1 and "g(a)" in str(bad[0]) and "f(a)" in str(bad[0])
    assert validate(unary("comp i. g^{i}(mu(f^omega))")) == []


def test_convergence(unary):
    cert = is_convergent(unary("comp i. g^{i}(mu(f^omega))"))
    assert cert.verdict == "convergent"
    assert [cert.witness(n) for n in range(5)] == [n + 1 for n in range(5)]
    assert is_convergent(unary("comp i. mu(g^omega)")).verdict == "divergent"
    assert is_convergent(unary("mu(b)"))


def test_expand(unary):
    om = unary("comp i. g^{i}(mu(f^omega))")
    assert term_eq(expand_schema(om, 0), unary("mu(f^omega)"))
    assert term_eq(expand_schema(om, 2), unary("g(g(mu(f^omega)))"))
    two = unary("comp i. g^{2*i}(f(mu(f^omega))) . g^{2*i}(mu(g(f^omega)))")
    got = expand_schema(two, 1)
    assert show(normalize(got)) == "g(g(f(mu(f^omega)))) . g(g(mu(g(f^omega))))"


def test_limits(unary):
    assert term_eq(limit_of_targets(unary("comp i. g^{i}(mu(f^omega))"), 8), unary("g^omega"))
    assert term_eq(limit_of_targets(unary("comp i. k^{i}(mu(f^omega) . nu(f^omega))"), 8), unary("k^omega"))


def test_constant_family_limit():
    # every component but the first is the identity on g(b)
    trs = parse_trs("pi: a -> b")
    om = parse_proof_term("comp i. g^{i+1}(pi)", trs)
    lim = limit_of_targets(om, 8)
    assert not isinstance(lim, Truncated)


def test_stepwise(unary):
    out = stepwise([unary("f(nu(a))"), unary("mu(k(a))")])
    assert show(out) == "f(nu(a)) . mu(k(a))"
    assert term_eq(stepwise([], unary("f(a)")), unary("f(a)"))
    om = unary("comp i. g^{i}(mu(f^omega))")
    assert stepwise(om) is om


def test_stepwise_reports_index(unary):
    with pytest.raises(ComposabilityError) as info:
        stepwise([unary("mu(a)"), unary("mu(a)")])
    assert info.value.index == 1


def test_normalize_identities(unary):
    assert term_eq(normalize(unary("f(a) . mu(a)")), unary("mu(a)"))
    a, b, c = unary("mu(a)"), unary("nu(a)"), unary("k(a)")
    from infproof.terms import Comp

    nested = normalize(Comp(Comp(a, b), c))
    assert spine(nested) == spine(normalize(Comp(a, Comp(b, c))))


def test_omega_two_target(unary):
    t = tgt(unary("(comp i. g^{i}(mu(f^omega))) . comp i. k^{i}(nu(g^omega))"))
    assert term_eq(t, unary("k^omega"))


# ---------------------------------------------------------------------------
# properties on random finitary proof terms


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_src_tgt_are_object_terms(seed):
    inst = random_instance(seed)
    if inst is None:
        return
    psi = inst.psi
    assert validate(psi) == []
    assert is_object_term(src(psi)) and is_object_term(tgt(psi))
    parts = spine(psi)
    assert term_eq(src(psi), src(parts[0])) and term_eq(tgt(psi), tgt(parts[-1]))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_mind_infinite_iff_rule_free(seed):
    inst = random_instance(seed)
    if inst is None:
        return
    assert mind(inst.psi) < math.inf
    assert mind(src(inst.psi)) == math.inf
    assert has_rules(inst.phi)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_normalize_idempotent(seed):
    inst = random_instance(seed)
    if inst is None:
        return
    n = normalize(inst.psi)
    assert normalize(n) == n
    assert term_eq(src(n), src(inst.psi)) and term_eq(tgt(n), tgt(inst.psi))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_one_step_changes_below_position(seed):
    from infproof.oracle import one_step_of
    from infproof.terms import replace_at, subterm_at

    inst = random_instance(seed)
    if inst is None:
        return
    pos, _ = one_step_of(inst.phi)
    s, t = src(inst.phi), tgt(inst.phi)
    assert term_eq(replace_at(s, pos, subterm_at(t, pos)), t)


def test_limit_agrees_with_expansions(unary):
    om = unary("comp i. g^{i}(mu(f^omega))")
    lim = limit_of_targets(om, 8)
    w = is_convergent(om).witness
    for k in range(9):
        n = w(k)
        # composing components 0..n-1 lands on src of component n
        assert unfold(lim, k) == unfold(src(expand_schema(om, n)), k)
