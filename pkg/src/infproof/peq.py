"""Deciding and certifying permutation equivalence.

Both procedures build evidence by extracting the same steps from the two
sides: if ``psi ~ chi_1 . ... . chi_n . psi'`` and ``phi ~ chi_1 . ... .
chi_n . phi'`` with matching one-steps ``chi_i``, the derivations for the two
sides share a prefix.  The finitary check runs this until nothing is left;
the bounded check stops each round once the remaining activity lies deeper
than ``k`` and packages the rounds as a Lim derivation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .derivation import (
    Builder,
    Derivation,
    LimDerivation,
    TailCtx,
    check_derivation,
    concat,
    reverse,
)
from .extraction import (
    DEFAULT_BOUND,
    ExtractablePair,
    ExtractionError,
    ers,
    extracted_step,
    extraction_derivation,
)
from .projection import NotCoinitial, ProjectionError, check_mutual_orthogonality, project
from .proofterm import Undefined, mind, normalize, src, tgt
from .terms import CUT, Comp, Node, Omega, Rec, TermError, contains, has_rules, term_eq, unfold

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not-equivalent"
UNKNOWN = "unknown"

normalize_reduction_identities = normalize


class OrthogonalityViolation(TermError):
    pass


@dataclass
class PeqVerdict:
    value: str
    evidence: object = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.value == EQUIVALENT


@dataclass
class ProjectionWitness:
    """Both projections, kept when no derivation was assembled."""

    psi_over_phi: Node
    phi_over_psi: Node


@dataclass
class Counterexample:
    kind: str  # "source", "target" or "projection"
    left: Node
    right: Node


def is_finitary(t: Node) -> bool:
    return not contains(t, (Omega, Rec))


def _coinitial(a: Node, b: Node) -> None:
    if not term_eq(src(a), src(b)):
        raise NotCoinitial(f"sources differ: {src(a)} vs {src(b)}")


# ---------------------------------------------------------------------------
# common extraction


@dataclass
class _Side:
    builder: Builder
    rest: Node
    prefix: list[Node] = field(default_factory=list)

    def extract(self, pair: ExtractablePair, bound: int) -> None:
        step = extracted_step(self.rest, pair)
        res = project(self.rest, step)
        if not res.closed:
            raise ExtractionError("projection over the extracted step does not close")
        d = extraction_derivation(self.rest, pair, bound)
        self.builder.lift(reverse(d), TailCtx(self.prefix))
        self.prefix.append(step)
        self.rest = normalize(res.term)

    def snapshot(self) -> Derivation:
        b = self.builder
        return Derivation(b.start, b.cur, list(b.steps))


def _order(x: ExtractablePair):
    return (len(x.r), x.r, len(x.p), x.p)


def _common_pair(a: Node, b: Node, max_depth: int | None, bound: int) -> tuple[ExtractablePair, ExtractablePair] | None:
    left = ers(a, bound)
    right = ers(b, bound)
    index: dict = {}
    for y in sorted(right, key=_order):
        index.setdefault((y.r, y.rule), y)
    for x in sorted(left, key=_order):
        if max_depth is not None and len(x.r) > max_depth:
            continue
        y = index.get((x.r, x.rule))
        if y is not None:
            return x, y
    # the right side may hold a shallower step that the left also offers
    return None


def _sides(psi: Node, phi: Node) -> tuple[_Side, _Side]:
    bp, bf = Builder(psi), Builder(phi)
    return _Side(bp, bp.start), _Side(bf, bf.start)


# ---------------------------------------------------------------------------
# finitary


def peq_decide_finitary(psi: Node, phi: Node, bound: int = DEFAULT_BOUND) -> PeqVerdict:
    """Equivalent iff the targets agree and both projections are empty."""
    if not (is_finitary(psi) and is_finitary(phi)):
        raise TermError("peq_decide_finitary needs finitary proof terms")
    _coinitial(psi, phi)
    problems = check_mutual_orthogonality(psi, phi)
    if problems:
        raise OrthogonalityViolation("; ".join(problems))
    ta, tb = tgt(psi), tgt(phi)
    if not term_eq(ta, tb):
        return PeqVerdict(NOT_EQUIVALENT, Counterexample("target", ta, tb), "targets differ")
    ab, ba = project(psi, phi), project(phi, psi)
    if not (ab.closed and ba.closed):
        return PeqVerdict(UNKNOWN, None, "a projection did not close")
    if has_rules(ab.term) or has_rules(ba.term):
        return PeqVerdict(
            NOT_EQUIVALENT, Counterexample("projection", ab.term, ba.term), "a projection is not empty"
        )
    d = _finitary_derivation(psi, phi, bound)
    if d is not None and check_derivation(d):
        return PeqVerdict(EQUIVALENT, d, "common extraction")
    return PeqVerdict(EQUIVALENT, ProjectionWitness(ab.term, ba.term), "both projections are empty")


def _finitary_derivation(psi: Node, phi: Node, bound: int) -> Derivation | None:
    sp, sf = _sides(psi, phi)
    try:
        while has_rules(sp.rest) or has_rules(sf.rest):
            found = _common_pair(sp.rest, sf.rest, None, bound)
            if found is None:
                return None
            sp.extract(found[0], bound)
            sf.extract(found[1], bound)
    except (ExtractionError, ProjectionError):
        return None
    return concat(sp.snapshot(), reverse(sf.snapshot()))


# ---------------------------------------------------------------------------
# bounded infinitary


def _stable_prefix_differs(a: Node, b: Node, depth: int) -> bool:
    if isinstance(a, Undefined) or isinstance(b, Undefined):
        return False
    ua, ub = unfold(a, depth), unfold(b, depth)
    return _differs(ua, ub)


def _differs(a: Node, b: Node) -> bool:
    if a is CUT or b is CUT:
        return False
    if type(a) is not type(b) or getattr(a, "name", None) != getattr(b, "name", None):
        return True
    return any(_differs(x, y) for x, y in zip(a.kids, b.kids))


def peq_upto_depth(psi: Node, phi: Node, n: int, bound: int = DEFAULT_BOUND) -> PeqVerdict:
    """Lim evidence for depths ``0..n`` built by greedy common extraction."""
    psi, phi = normalize(psi), normalize(phi)
    sa, sb = src(psi), src(phi)
    if not term_eq(sa, sb):
        return PeqVerdict(NOT_EQUIVALENT, Counterexample("source", sa, sb), "sources differ")
    if _stable_prefix_differs(tgt(psi), tgt(phi), n + 1):
        return PeqVerdict(NOT_EQUIVALENT, Counterexample("target", tgt(psi), tgt(phi)), "targets differ")
    sp, sf = _sides(psi, phi)
    lim = LimDerivation(psi, phi)
    for k in range(n + 1):
        try:
            while mind(sp.rest) <= k or mind(sf.rest) <= k:
                found = _common_pair(sp.rest, sf.rest, k, bound)
                if found is None:
                    return PeqVerdict(UNKNOWN, lim if lim.blocks else None, f"no common step at depth {k}")
                sp.extract(found[0], bound)
                sf.extract(found[1], bound)
        except (ExtractionError, ProjectionError) as e:
            return PeqVerdict(UNKNOWN, lim if lim.blocks else None, f"extraction failed at depth {k}: {e}")
        lim.blocks[k] = (sp.snapshot(), sf.snapshot())
    res = check_derivation(lim)
    if not res:
        return PeqVerdict(UNKNOWN, lim, f"assembled evidence was rejected: {res.message}")
    return PeqVerdict(EQUIVALENT, lim, f"Lim blocks k=0..{n}")
