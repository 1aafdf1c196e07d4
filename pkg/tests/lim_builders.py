"""Hand-built Lim derivations for the two infinitary equivalence examples.

Each block factors both sides so that the common prefix covers every step
above depth k.  The step positions refer to normalized proof terms.
"""
from __future__ import annotations

from infproof.derivation import Builder, LimDerivation
from infproof.proofterm import normalize, spine
from infproof.terms import subterm_at

# psi = (comp i. g^i mu f^w) . (comp i. k^i nu g^w); one pass exposes the first mu and nu steps
_PSI_ROUND = [
    ("InfStruct", "lr", (1, 2)),
    ("InfStruct", "lr", (2, 2, 2)),
    ("InOut", "rl", (2,)),
    ("OutIn", "lr", (2, 1)),
    ("Struct", "lr", (2, 2)),
]


def _omega2_psi(psi, k: int) -> Builder:
    b = Builder(psi)
    for s in _PSI_ROUND:
        b.step(*s)
    if k == 0:
        return b
    sub = _omega2_psi(psi, k - 1)
    for s in sub.steps:
        b.step(s.eq, s.dir, (2, 2, 1) + s.pos)
    m = len(spine(subterm_at(b.cur, (2, 2, 1))))
    for j in range(m - 1):
        b.step("Struct", "rl", (2,) * (2 + j))
    return b


def _omega2_phi(phi, k: int) -> Builder:
    b = Builder(phi)
    for j in range(1, k + 1):
        n = len(spine(b.cur))
        base = (2,) * (n - 1) + ((2, 1) if n == 1 else (1,))
        for d in range(j - 1, -1, -1):
            b.step("Struct", "rl", base + (1,) * d)
    return b


def omega2_lim(psi, phi, top: int = 3) -> LimDerivation:
    blocks = {k: (_omega2_psi(psi, k).build(), _omega2_phi(phi, k).build()) for k in range(top + 1)}
    return LimDerivation(normalize(psi), normalize(phi), blocks)


def _mu_omega_phi(phi, k: int) -> Builder:
    b = Builder(phi)
    for j in range(k + 1):
        last = (2,) * (len(spine(b.cur)) - 1)
        b.step("OutIn", "lr", last + (1,) * j)
        for d in range(j - 1, -1, -1):
            b.step("Struct", "rl", last + (1,) * d)
    return b


def mu_omega_lim(psi, phi, top: int = 4) -> LimDerivation:
    """``comp i. g^i mu f^w`` against ``mu^w``: the left side needs no steps."""
    blocks = {k: (Builder(psi).build(), _mu_omega_phi(phi, k).build()) for k in range(top + 1)}
    return LimDerivation(normalize(psi), normalize(phi), blocks)
