"""Infinitary proof terms for left-linear rewriting: projection, extraction
and permutation equivalence."""
from .terms import HOLE, Comp, Fun, Hole, Node, Omega, Pow, Rec, RecVar, Rule, RuleSymbol, Var
from .trs import TRS
from .syntax import parse_proof_term, parse_term, parse_trs

__all__ = [
    "HOLE",
    "Comp",
    "Fun",
    "Hole",
    "Node",
    "Omega",
    "Pow",
    "Rec",
    "RecVar",
    "Rule",
    "RuleSymbol",
    "TRS",
    "Var",
    "parse_proof_term",
    "parse_term",
    "parse_trs",
]
__version__ = "0.1.0"
