"""Shared rule systems for the test suite."""
from __future__ import annotations

from pathlib import Path

import pytest

from infproof.syntax import parse_proof_term, parse_term, parse_trs

GOLDEN = Path(__file__).parent / "golden"

# mu/nu: the two unary rules used for the commuting-steps examples
UNARY = """
mu: f(x) -> g(x)
nu: g(x) -> k(x)
"""

# the rule table of the finitary projection examples
JRULES = """
rho: j(g(x),y) -> j(x,y)
mu: f(x) -> g(x)
pi: a -> b
tau: c -> d
sigma: m(x) -> n(x)
"""

# a non-erasing rule whose contractum keeps a copy of its redex
GROW = """
rho: g(x) -> f(g(x))
pi: a -> b
"""

MIXED = """
mu: f(x) -> g(x)
nu: g(x) -> k(x)
pi: a -> b
rho: j(g(x),y) -> j(x,y)
tau: c -> d
sigma: m(x) -> n(x)
"""


class Lang:
    def __init__(self, rules: str):
        self.trs = parse_trs(rules)

    def __call__(self, text: str):
        return parse_proof_term(text, self.trs)

    def term(self, text: str):
        return parse_term(text, self.trs)

    def rule(self, name: str):
        return self.trs.rule(name)


@pytest.fixture(scope="session")
def unary() -> Lang:
    return Lang(UNARY)


@pytest.fixture(scope="session")
def jr() -> Lang:
    return Lang(JRULES)


@pytest.fixture(scope="session")
def grow() -> Lang:
    return Lang(GROW)


@pytest.fixture(scope="session")
def mixed() -> Lang:
    return Lang(MIXED)


@pytest.fixture(scope="session")
def fonly() -> Lang:
    return Lang("mu: f(x) -> g(x)")


# acceptance lines collected by test_acceptance and echoed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
