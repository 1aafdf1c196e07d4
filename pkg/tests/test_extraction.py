from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infproof.derivation import Builder, check_derivation
from infproof.extraction import (
    ExtractablePair,
    ExtractionError,
    NotExtractable,
    check_step_survives,
    check_step_absorbed,
    check_pair,
    efp_derivation,
    ers,
    ers_trace_forward,
    extraction_derivation,
    guard_set,
    insert_rule,
    respects,
    verify_extraction_confluence,
)
from infproof.oracle import random_instance, redexes
from infproof.projection import efp_term, is_fixed_prefix
from infproof.proofterm import normalize, pt_eq, src
from infproof.syntax import parse_context, show
from infproof.terms import head, symbol_context, term_eq


def _pairs(result):
    return {(x.r, x.p) for x in result}


# ---------------------------------------------------------------------------
# respects


def test_respects_examples(mixed):
    assert respects(mixed("mu(a)"), [])
    assert respects(mixed("m(mu(a))"), [()])
    assert not respects(mixed("m(mu(a))"), [(), (1,)])
    assert respects(mixed("f(pi) . f(b)"), [()])


def test_respects_needs_prefix_closure(mixed):
    assert not respects(mixed("m(f(a))"), [(1,)])
    assert respects(mixed("m(f(a))"), [(), (1,)])


def test_respects_out_of_range(mixed):
    # a composition under f is not a multistep, yet position 2 still does not exist
    assert not respects(mixed("f(mu(a) . nu(a))"), [(), (2,)])
    assert not respects(mixed("f(a)"), [(), (2,)])


def test_guard_set(mixed):
    rho = mixed.rule("rho")
    assert guard_set((2,), rho) == {(), (2,), (2, 1)}


# ---------------------------------------------------------------------------
# ers


def test_ers_single_head(mixed):
    assert _pairs(ers(mixed("mu(a) . nu(pi)"))) == {((), (1,))}


def test_ers_both_occurrences(mixed):
    got = ers(mixed("mu(pi) . nu(b)"))
    assert {x.rule.name for x in got} == {"mu", "pi"}


def test_ers_parallel(mixed):
    got = ers(mixed("j(mu(pi),sigma(c))"))
    assert len(got) == 3 and got.complete


def test_ers_bound_is_reported(mixed):
    got = ers(mixed("rec X. mu(X)"), 6)
    assert not got.complete and got.bound == 6
    assert ((), ()) in got


def test_every_pair_is_well_formed(mixed):
    for text in ["mu(pi) . nu(b)", "j(mu(pi),sigma(c))", "m(f(pi)) . m(mu(b))", "comp i. g^{i}(mu(f^omega))"]:
        t = mixed(text)
        assert all(check_pair(t, x) for x in ers(t, 8))


# ---------------------------------------------------------------------------
# insertion and tracing


def test_insert(mixed):
    mu = mixed.rule("mu")
    assert pt_eq(insert_rule(mixed("f(a)"), mu, ()), mixed("mu(a)"))
    assert pt_eq(insert_rule(mixed("m(f(a))"), mu, (1,)), mixed("m(mu(a))"))
    assert pt_eq(insert_rule(mixed("f^omega"), mu, ()), mixed("mu(f^omega)"))
    with pytest.raises(ExtractionError):
        insert_rule(mixed("g(a)"), mu, ())


def test_trace_forward(mixed):
    psi = mixed("m(f(pi)) . m(mu(b))")
    pair = ers(psi).find((1,), (2, 1))
    assert pair is not None
    moved = ers_trace_forward(psi, pair, "m")
    assert (moved.r, moved.p) == ((1,), (1, 2))
    assert moved in ers(efp_term(psi, parse_context("m(_)")))


def test_trace_forward_function_headed(mixed):
    psi = mixed("j(mu(pi),sigma(c))")
    pair = next(x for x in ers(psi) if x.rule.name == "sigma")
    assert ers_trace_forward(psi, pair, "j") == pair


def test_step_survives_example(jr):
    psi = jr("j(g(sigma(c)) . g(n(tau)), b)")
    assert check_step_survives(psi, jr.rule("rho"), ())


def test_step_survives_rule_free(jr):
    assert check_step_survives(jr("j(g(a), b)"), jr.rule("rho"), ())


# ---------------------------------------------------------------------------
# the extraction square


def test_confluence_omega_head(fonly):
    rep = verify_extraction_confluence(fonly("comp i. g^{i}(mu(f^omega))"), ((), (1,)))
    assert pt_eq(rep.phi, fonly("mu(f^omega)"))
    assert check_derivation(rep.left) and check_derivation(rep.right)


def test_confluence_finite(mixed):
    rep = verify_extraction_confluence(mixed("mu(a) . nu(pi)"), ((), (1,)))
    assert pt_eq(rep.phi, mixed("mu(a)"))
    assert pt_eq(rep.psi_over_phi, mixed("nu(pi)"))
    assert check_derivation(rep.left) and check_derivation(rep.right)


def test_confluence_mu_omega(fonly):
    rep = verify_extraction_confluence(fonly("rec X. mu(X)"), ((), ()))
    assert pt_eq(rep.phi, fonly("mu(f^omega)"))
    assert "OutIn" in rep.left.equations()
    assert check_derivation(rep.left)


def test_confluence_rejects_foreign_pair(mixed):
    with pytest.raises(NotExtractable):
        verify_extraction_confluence(mixed("mu(a) . nu(pi)"), ((1,), (2, 1)))


GOLDEN_INFINITARY = [
    "comp i. g^{i}(mu(f^omega))",
    "rec X. mu(X)",
    "(comp i. g^{i}(mu(f^omega))) . comp i. k^{i}(nu(g^omega))",
    "comp i. k^{i}(mu(f^omega) . nu(f^omega))",
    "f(mu^omega)",
    "mu(f(mu(f^omega)))",
]


@pytest.mark.parametrize("text", GOLDEN_INFINITARY)
def test_confluence_on_golden_infinitary(unary, text):
    t = unary(text)
    for pair in list(ers(t, 8))[:5]:
        rep = verify_extraction_confluence(t, pair, depth=4, bound=8)
        assert check_derivation(rep.left), (str(pair), check_derivation(rep.left).message)
        assert check_derivation(rep.right)


def test_efp_derivation_is_structural(mixed):
    d = efp_derivation(mixed("m(f(pi)) . m(mu(b))"), parse_context("m(_)"))
    assert d.is_structural() and check_derivation(d)
    assert pt_eq(d.end, mixed("m(f(pi) . mu(b))"))


# ---------------------------------------------------------------------------
# extraction properties over the random corpus


@pytest.fixture(scope="module")
def random_corpus():
    from infproof.oracle import corpus

    return corpus(500)


def test_pairs_are_extractable_and_absorbed(random_corpus):
    failures = []
    for inst in random_corpus:
        for x in ers(inst.psi):
            if not check_pair(inst.psi, x) or not check_step_absorbed(inst.psi, x):
                failures.append((inst.seed, str(x)))
    assert failures == []


def test_fixed_prefix_factoring_is_structural(random_corpus):
    failures, tried = [], 0
    for inst in random_corpus:
        root = head(src(inst.psi))
        ctx = symbol_context(root.name, len(root.args)) if root.args else None
        if ctx is None or not is_fixed_prefix(ctx, inst.psi):
            continue
        tried += 1
        d = efp_derivation(inst.psi, ctx)
        if not (d.is_structural() and check_derivation(d)):
            failures.append(inst.seed)
    assert tried > 50 and failures == []


def test_pairs_trace_through_fixed_prefix(random_corpus):
    failures, tried = [], 0
    for inst in random_corpus:
        root = head(src(inst.psi))
        if not root.args:
            continue
        ctx = symbol_context(root.name, len(root.args))
        if not is_fixed_prefix(ctx, inst.psi):
            continue
        target = ers(efp_term(inst.psi, ctx))
        for x in ers(inst.psi):
            if x.r:
                tried += 1
                if ers_trace_forward(inst.psi, x, root.name) not in target:
                    failures.append((inst.seed, str(x)))
    assert tried > 50 and failures == []


def test_respecting_step_survives_projection(random_corpus):
    from infproof.proofterm import from_spine, spine

    failures, tried = [], 0
    for inst in random_corpus:
        parts = spine(normalize(inst.psi))
        # every suffix of the reduction is a proof term of its own
        for n in range(len(parts)):
            psi = from_spine(parts[n:])
            for pos, mu in redexes(inst.trs, src(psi)):
                if respects(psi, guard_set(pos, mu)):
                    tried += 1
                    if not check_step_survives(psi, mu, pos):
                        failures.append((inst.seed, pos, mu.name))
    assert tried > 50 and failures == []


def test_extraction_square_closes(random_corpus):
    failures, pairs = [], 0
    for inst in random_corpus:
        for x in ers(inst.psi):
            pairs += 1
            rep = verify_extraction_confluence(inst.psi, x)
            if not (check_derivation(rep.left) and check_derivation(rep.right)):
                failures.append((inst.seed, str(x)))
    assert pairs >= 500 and failures == []


# ---------------------------------------------------------------------------
# respects under the equations


def _prefix_closed_sets(depth=2, arity=2):
    positions = [p for n in range(depth + 1) for p in itertools.product(range(1, arity + 1), repeat=n)]
    out = []
    for size in range(1, 4):
        for combo in itertools.combinations(positions, size):
            s = set(combo)
            if all(p[:-1] in s for p in s if p):
                out.append(frozenset(s))
    return out


SETS = _prefix_closed_sets()


def _golden_derivations(mixed):
    yield efp_derivation(mixed("m(f(pi)) . m(mu(b))"), parse_context("m(_)"))
    b = Builder(mixed("f(nu(a)) . mu(k(a))"))
    b.step("InOut", "rl", ())
    b.step("OutIn", "lr", ())
    yield b.build()
    b = Builder(mixed("m(f(nu(a))) . m(mu(k(a)))"))
    for s in [("Struct", "lr", ()), ("InOut", "rl", (1,)), ("OutIn", "lr", (1,)), ("Struct", "rl", ())]:
        b.step(*s)
    yield b.build()
    for text in ["mu(pi) . nu(b)", "j(mu(pi),sigma(c))", "j(g(sigma(c)) . g(n(tau)), b) . rho(n(d),b)"]:
        t = mixed(text)
        for x in ers(t):
            yield extraction_derivation(t, x)


def test_respects_is_invariant(mixed):
    checked = 0
    for d in _golden_derivations(mixed):
        for s in d.steps:
            for P in SETS:
                assert respects(s.before, P) == respects(s.after, P), (s.describe(), show(s.before), sorted(P))
                checked += 1
    assert checked > 100


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20_000))
def test_respects_invariant_random(seed):
    inst = random_instance(seed)
    if inst is None:
        return
    for x in list(ers(inst.psi))[:3]:
        d = extraction_derivation(inst.psi, x)
        for s in d.steps:
            for P in SETS[:20]:
                assert respects(s.before, P) == respects(s.after, P)
