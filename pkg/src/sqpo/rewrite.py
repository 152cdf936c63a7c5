"""Sesqui-pushout rules, their application, reversal and composition."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

from .category import (Cospan, Span, Square, final_pbc, fpbc_mediator, is_final_pbc,
                       is_pushout, po_mediator, pullback, pushout)
from .errors import (DomainMismatch, InstanceMismatch, InvalidRule, MediatorIllDefined,
                     NotMono, NotReversible)
from .graph import (Graph, Homomorphism, analyze_homomorphism, compose, empty_graph,
                    hom_problems, identity)

__all__ = [
    "Rule", "make_rule", "identity_rule", "empty_rule", "reverse_rule", "classify_rule",
    "RewriteRecord", "apply_rule", "is_reversible", "revert", "Overlap", "compute_overlap",
    "is_sequentially_independent", "CompositionTrace", "compose_rules", "apply_composed",
    "restrictive_square", "expansive_square",
]


@dataclass(frozen=True, eq=False)
class Rule:
    """Span ``lhs <-r_minus- p -r_plus-> rhs``."""

    lhs: Graph
    p: Graph
    rhs: Graph
    r_minus: Homomorphism
    r_plus: Homomorphism

    def __eq__(self, other):
        if not isinstance(other, Rule):
            return NotImplemented
        return (self.lhs == other.lhs and self.p == other.p and self.rhs == other.rhs
                and dict(self.r_minus.node_map) == dict(other.r_minus.node_map)
                and dict(self.r_plus.node_map) == dict(other.r_plus.node_map))

    __hash__ = None

    def size(self) -> int:
        return sum(len(g.nodes) + len(g.edges) for g in (self.lhs, self.p, self.rhs))

    def is_identity(self) -> bool:
        return (self.lhs == self.p == self.rhs
                and all(k == v for k, v in self.r_minus.node_map.items())
                and all(k == v for k, v in self.r_plus.node_map.items()))


def make_rule(lhs: Graph, p: Graph, rhs: Graph, p_lhs: Mapping[str, str],
              p_rhs: Mapping[str, str]) -> Rule:
    """Build and validate a rule from its three graphs and two node maps."""
    r_minus = p_lhs if isinstance(p_lhs, Homomorphism) else Homomorphism(p, lhs, dict(p_lhs))
    r_plus = p_rhs if isinstance(p_rhs, Homomorphism) else Homomorphism(p, rhs, dict(p_rhs))
    for name, leg, target in (("left leg", r_minus, lhs), ("right leg", r_plus, rhs)):
        if leg.source != p or leg.target != target:
            raise InvalidRule("%s does not connect the rule graphs" % name)
        problems = hom_problems(leg)
        if problems:
            raise InvalidRule("%s: %s" % (name, problems[0]))
    return Rule(lhs, p, rhs, r_minus, r_plus)


def identity_rule(g: Graph) -> Rule:
    return Rule(g, g, g, identity(g), identity(g))


def empty_rule() -> Rule:
    return identity_rule(empty_graph())


def reverse_rule(r: Rule) -> Rule:
    return Rule(r.rhs, r.p, r.lhs, r.r_plus, r.r_minus)


def classify_rule(r: Rule) -> Dict[str, Dict[str, str]]:
    """Label lhs nodes as preserved/cloned/deleted and rhs nodes as preserved/merged/added."""
    lhs = {}
    for n in r.lhs.nodes:
        k = len(r.r_minus.preimages(n))
        lhs[n] = "deleted" if k == 0 else "cloned" if k > 1 else "preserved"
    rhs = {}
    for n in r.rhs.nodes:
        k = len(r.r_plus.preimages(n))
        rhs[n] = "added" if k == 0 else "merged" if k > 1 else "preserved"
    return {"lhs": lhs, "rhs": rhs}


@dataclass(frozen=True, eq=False)
class RewriteRecord:
    """Every object and arrow of one rule application.

    ::

        L <--r_minus-- P --r_plus--> R
        |m             |m_minus      |m_plus
        v              v             v
        G <-g_arrow_minus- G- -g_arrow_plus-> G+
    """

    rule: Rule
    g: Graph
    g_minus: Graph
    g_plus: Graph
    m: Homomorphism
    m_minus: Homomorphism
    m_plus: Homomorphism
    g_arrow_minus: Homomorphism
    g_arrow_plus: Homomorphism


def _check_instance(g: Graph, r: Rule, m: Homomorphism) -> None:
    if m.source != r.lhs:
        raise InstanceMismatch("instance does not start at the rule's left-hand side")
    if m.target != g:
        raise InstanceMismatch("instance does not end in the graph being rewritten")
    if not analyze_homomorphism(m).mono:
        raise NotMono("instance is not a monomorphism")


def apply_rule(g: Graph, r: Rule, m: Homomorphism,
               rhs_names: Optional[Mapping[str, str]] = None) -> RewriteRecord:
    """Apply ``r`` to ``g`` at instance ``m``.

    The restrictive phase is a final pullback complement, the expansive phase
    a pushout. ``rhs_names`` optionally fixes the result id of rhs nodes.
    """
    _check_instance(g, r, m)
    m_minus, g_arrow_minus = final_pbc(r.r_minus, m)
    legs, g_plus = pushout(Span(m_minus, r.r_plus), rhs_names)
    return RewriteRecord(r, g, g_arrow_minus.source, g_plus, m, m_minus, legs.right,
                         g_arrow_minus, legs.left)


def restrictive_square(rec: RewriteRecord) -> Square:
    return Square(rec.rule.r_minus, rec.m_minus, rec.m, rec.g_arrow_minus)


def expansive_square(rec: RewriteRecord) -> Square:
    return Square(rec.rule.r_plus, rec.m_minus, rec.m_plus, rec.g_arrow_plus)


def is_reversible(rec: RewriteRecord) -> bool:
    """Restrictive square is also a pushout and expansive square a final PBC."""
    return is_pushout(restrictive_square(rec)) and is_final_pbc(expansive_square(rec))


def revert(rec: RewriteRecord) -> RewriteRecord:
    """Apply the reversed rule at the rhs instance, restoring the original ids."""
    if not is_reversible(rec):
        raise NotReversible("rewrite is not reversible")
    return apply_rule(rec.g_plus, reverse_rule(rec.rule), rec.m_plus, dict(rec.m.node_map))


@dataclass(frozen=True, eq=False)
class Overlap:
    """Pullback ``R1 <-x- D -y-> L2`` of the first rhs instance and the second instance."""

    d: Graph
    x: Homomorphism
    y: Homomorphism


def compute_overlap(rec1: RewriteRecord, m2: Homomorphism) -> Overlap:
    if m2.target != rec1.g_plus:
        raise DomainMismatch("second instance does not target the first result")
    if not analyze_homomorphism(m2).mono:
        raise NotMono("second instance is not a monomorphism")
    legs, d = pullback(Cospan(rec1.m_plus, m2))
    return Overlap(d, legs.left, legs.right)


def is_sequentially_independent(o: Overlap, r1: Rule) -> bool:
    """Whether the overlap lies in the part preserved by ``r1``."""
    if o.x.target != r1.rhs:
        raise DomainMismatch("overlap does not live in the rule's right-hand side")
    legs, _ = pullback(Cospan(o.x, r1.r_plus))
    return analyze_homomorphism(legs.left).iso


@dataclass(frozen=True, eq=False)
class CompositionTrace:
    """All intermediate objects of composing two consecutive rewrites."""

    H: Graph
    m_H: Homomorphism
    r1_H: Homomorphism
    l2_H: Homomorphism
    P1_H: Graph
    P2_H: Graph
    p1_H: Homomorphism
    p2_H: Homomorphism
    h1_plus: Homomorphism
    h2_minus: Homomorphism
    m1_H: Homomorphism
    m2_H: Homomorphism
    L: Graph
    R: Graph
    l1_H: Homomorphism
    h1_minus: Homomorphism
    r2_H: Homomorphism
    h2_plus: Homomorphism
    P: Graph
    p_prime: Homomorphism
    p_dblprime: Homomorphism
    composed: Rule
    m: Homomorphism
    m_plus: Homomorphism


def compose_rules(rec1: RewriteRecord, o: Overlap, rec2: RewriteRecord) -> CompositionTrace:
    """Compose a reversible rewrite with the next one along their overlap.

    Applying ``composed`` to ``rec1.g`` at ``m`` (with rhs ids taken from
    ``m_plus``) reproduces ``rec2.g_plus``.
    """
    if rec2.g != rec1.g_plus:
        raise DomainMismatch("second rewrite does not start where the first ends")
    if o.x.target != rec1.rule.rhs or o.y.target != rec2.rule.lhs:
        raise DomainMismatch("overlap does not connect the two rules")
    if not is_reversible(rec1):
        raise NotReversible("the first rewrite is not reversible")
    r1, r2 = rec1.rule, rec2.rule

    po_h = Span(o.x, o.y)
    legs_h, H = pushout(po_h)
    r1_H, l2_H = legs_h.left, legs_h.right
    m_H = po_mediator((po_h, legs_h), Cospan(rec1.m_plus, rec2.m))

    p1_H, h1_plus = final_pbc(r1.r_plus, r1_H)
    p2_H, h2_minus = final_pbc(r2.r_minus, l2_H)
    try:
        m1_H = fpbc_mediator((rec1.m_minus, rec1.g_arrow_plus), p1_H, compose(h1_plus, m_H))
    except MediatorIllDefined as exc:
        raise NotReversible("no instance of the preserved part in the first result: %s"
                            % exc) from None
    m2_H = fpbc_mediator((rec2.m_minus, rec2.g_arrow_minus), p2_H, compose(h2_minus, m_H))

    span_l = Span(r1.r_minus, p1_H)
    legs_l, L = pushout(span_l)
    l1_H, h1_minus = legs_l.left, legs_l.right
    m = po_mediator((span_l, legs_l),
                    Cospan(rec1.m, compose(m1_H, rec1.g_arrow_minus)))

    span_r = Span(r2.r_plus, p2_H)
    legs_r, R = pushout(span_r)
    r2_H, h2_plus = legs_r.left, legs_r.right
    m_plus = po_mediator((span_r, legs_r),
                         Cospan(rec2.m_plus, compose(m2_H, rec2.g_arrow_plus)))

    legs_p, P = pullback(Cospan(h1_plus, h2_minus))
    p_prime, p_dblprime = legs_p.left, legs_p.right
    composed = make_rule(L, P, R, compose(p_prime, h1_minus), compose(p_dblprime, h2_plus))
    return CompositionTrace(H, m_H, r1_H, l2_H, p1_H.target, p2_H.target, p1_H, p2_H,
                            h1_plus, h2_minus, m1_H, m2_H, L, R, l1_H, h1_minus, r2_H,
                            h2_plus, P, p_prime, p_dblprime, composed, m, m_plus)


def apply_composed(rec1: RewriteRecord, trace: CompositionTrace) -> RewriteRecord:
    """Apply a composed rule to the first rewrite's input with its induced instances."""
    return apply_rule(rec1.g, trace.composed, trace.m, dict(trace.m_plus.node_map))
