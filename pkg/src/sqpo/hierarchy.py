"""Hierarchies of graphs and of rules, and their rewriting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from . import attrs as A
from .category import (Cospan, Span, final_pbc, image_factorization, pb_mediator,
                       po_mediator, pullback, pushout)
from .errors import (CommutativityViolation, CycleDetected, DomainMismatch, InvalidRule,
                     MediatorIllDefined, NotApplicable, NotReversible, PropagationConflict,
                     RuleHomViolation)
from .graph import (Graph, Homomorphism, analyze_homomorphism, compose, hom_problems,
                    identity, inclusion)
from .rewrite import (CompositionTrace, Overlap, RewriteRecord, Rule, apply_rule,
                      compose_rules, compute_overlap, empty_rule, identity_rule, is_reversible,
                      make_rule, reverse_rule)

Edge = Tuple[str, str]

__all__ = [
    "Skeleton", "Hierarchy", "make_hierarchy", "RuleHomomorphism", "check_rule_hom",
    "RuleHierarchy", "make_rule_hierarchy", "identity_rule_hierarchy", "Applicability",
    "check_applicability", "HierarchyRewriteRecord", "apply_rule_hierarchy",
    "reverse_rule_hierarchy", "is_hierarchy_rewrite_reversible", "revert_hierarchy_rewrite",
    "LiftingResult", "lifting_rule", "ProjectionResult", "projection_rule",
    "induced_rule_hierarchy", "HierarchyOverlap", "hierarchy_overlap",
    "HierarchyComposition", "compose_rule_hierarchies", "apply_composed_hierarchy",
    "complement_arrows",
]


# -- skeletons and hierarchies ------------------------------------------------

@dataclass(frozen=True)
class Skeleton:
    """A DAG naming the objects of a hierarchy."""

    nodes: Tuple[str, ...]
    edges: Tuple[Edge, ...]

    @classmethod
    def of(cls, nodes: Iterable[str], edges: Iterable[Edge] = ()) -> "Skeleton":
        sk = cls(tuple(sorted(set(nodes))), tuple(sorted(set(map(tuple, edges)))))
        sk.validate()
        return sk

    def validate(self) -> None:
        known = set(self.nodes)
        for s, t in self.edges:
            if s not in known or t not in known:
                raise DomainMismatch("skeleton edge (%s, %s) uses an unknown node" % (s, t))
            if s == t:
                raise CycleDetected("self-loop at %s" % s)
        self.topological_order()

    def successors(self, v: str) -> List[str]:
        return [t for s, t in self.edges if s == v]

    def predecessors(self, v: str) -> List[str]:
        return [s for s, t in self.edges if t == v]

    def topological_order(self) -> List[str]:
        indegree = {v: 0 for v in self.nodes}
        for _, t in self.edges:
            indegree[t] += 1
        ready = sorted(v for v, d in indegree.items() if d == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for t in self.successors(v):
                indegree[t] -= 1
                if indegree[t] == 0:
                    ready.append(t)
                    ready.sort()
        if len(order) != len(self.nodes):
            raise CycleDetected("skeleton has a cycle through %s"
                                % sorted(set(self.nodes) - set(order)))
        return order

    def descendants(self, v: str) -> set:
        seen, stack = set(), [v]
        while stack:
            for t in self.successors(stack.pop()):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def ancestors(self, v: str) -> set:
        seen, stack = set(), [v]
        while stack:
            for s in self.predecessors(stack.pop()):
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        return seen


def _check_paths(skeleton: Skeleton, arrow, compose_fn, same) -> None:
    """Check that all path composites agree; ``arrow(s, t)`` gives an edge value."""
    reach: Dict[str, Dict[str, tuple]] = {}
    for s in reversed(skeleton.topological_order()):
        table: Dict[str, tuple] = {}
        for u in sorted(skeleton.successors(s)):
            first = arrow(s, u)
            candidates = [(u, first, (s, u))]
            for t, (later, path) in reach[u].items():
                candidates.append((t, compose_fn(first, later), (s,) + path))
            for t, value, path in candidates:
                if t in table:
                    if not same(table[t][0], value):
                        raise CommutativityViolation(
                            "paths %s and %s from %s to %s disagree"
                            % ("->".join(table[t][1]), "->".join(path), s, t))
                else:
                    table[t] = (value, path)
        reach[s] = table


@dataclass(frozen=True, eq=False)
class Hierarchy:
    skeleton: Skeleton
    graphs: Mapping[str, Graph]
    homs: Mapping[Edge, Homomorphism]

    def __eq__(self, other):
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return (self.skeleton == other.skeleton and dict(self.graphs) == dict(other.graphs)
                and {e: dict(h.node_map) for e, h in self.homs.items()}
                == {e: dict(h.node_map) for e, h in other.homs.items()})

    __hash__ = None

    def composite(self, s: str, t: str) -> Homomorphism:
        """The arrow ``G_s -> G_t`` along any path (identity when ``s == t``)."""
        if s == t:
            return identity(self.graphs[s])
        path = _find_path(self.skeleton, s, t)
        if path is None:
            raise DomainMismatch("no path from %s to %s" % (s, t))
        result = self.homs[(path[0], path[1])]
        for a, b in zip(path[1:], path[2:]):
            result = compose(result, self.homs[(a, b)])
        return result


def _find_path(skeleton: Skeleton, s: str, t: str) -> Optional[List[str]]:
    stack = [[s]]
    while stack:
        path = stack.pop()
        if path[-1] == t:
            return path
        for u in sorted(skeleton.successors(path[-1]), reverse=True):
            stack.append(path + [u])
    return None


def _same_map(f: Homomorphism, g: Homomorphism) -> bool:
    return dict(f.node_map) == dict(g.node_map)


def make_hierarchy(skeleton: Optional[Skeleton], graphs: Mapping[str, Graph],
                   homs: Mapping[Edge, Homomorphism]) -> Hierarchy:
    """Validate and build a hierarchy; homs may be given as node maps."""
    if skeleton is None:
        skeleton = Skeleton.of(graphs, homs)
    else:
        skeleton.validate()
    if set(graphs) != set(skeleton.nodes) or set(homs) != set(skeleton.edges):
        raise DomainMismatch("graphs and homomorphisms do not match the skeleton")
    arrows = {}
    for (s, t), h in homs.items():
        if not isinstance(h, Homomorphism):
            h = Homomorphism(graphs[s], graphs[t], dict(h))
        if h.source != graphs[s] or h.target != graphs[t]:
            raise DomainMismatch("arrow %s->%s does not connect its graphs" % (s, t))
        problems = hom_problems(h)
        if problems:
            raise DomainMismatch("arrow %s->%s: %s" % (s, t, problems[0]))
        arrows[(s, t)] = h
    _check_paths(skeleton, lambda s, t: arrows[(s, t)], compose, _same_map)
    return Hierarchy(skeleton, dict(graphs), arrows)


# -- rule homomorphisms and rule hierarchies -----------------------------------

@dataclass(frozen=True, eq=False)
class RuleHomomorphism:
    lam: Homomorphism
    pi: Homomorphism
    rho: Homomorphism


def compose_rule_homs(f: RuleHomomorphism, g: RuleHomomorphism) -> RuleHomomorphism:
    return RuleHomomorphism(compose(f.lam, g.lam), compose(f.pi, g.pi), compose(f.rho, g.rho))


def _same_rule_hom(f: RuleHomomorphism, g: RuleHomomorphism) -> bool:
    return _same_map(f.lam, g.lam) and _same_map(f.pi, g.pi) and _same_map(f.rho, g.rho)


def check_rule_hom(r1: Rule, r2: Rule, f: RuleHomomorphism, where: str = "") -> None:
    """Raise ``RuleHomViolation`` unless ``f`` is a rule homomorphism ``r1 -> r2``."""
    for name, arrow, src, tgt in (("lambda", f.lam, r1.lhs, r2.lhs),
                                  ("pi", f.pi, r1.p, r2.p),
                                  ("rho", f.rho, r1.rhs, r2.rhs)):
        if arrow.source != src or arrow.target != tgt:
            raise RuleHomViolation("%s%s does not connect the rule graphs" % (where, name))
        problems = hom_problems(arrow)
        if problems:
            raise RuleHomViolation("%s%s: %s" % (where, name, problems[0]))
    if not _same_map(compose(r1.r_minus, f.lam), compose(f.pi, r2.r_minus)):
        raise RuleHomViolation("%sleft square does not commute" % where)
    if not _same_map(compose(f.pi, r2.r_plus), compose(r1.r_plus, f.rho)):
        raise RuleHomViolation("%sright square does not commute" % where)


@dataclass(frozen=True, eq=False)
class RuleHierarchy:
    skeleton: Skeleton
    rules: Mapping[str, Rule]
    homs: Mapping[Edge, RuleHomomorphism]


def make_rule_hierarchy(skeleton: Skeleton, rules: Mapping[str, Rule],
                        homs: Mapping[Edge, RuleHomomorphism]) -> RuleHierarchy:
    skeleton.validate()
    if set(rules) != set(skeleton.nodes) or set(homs) != set(skeleton.edges):
        raise DomainMismatch("rules and rule homomorphisms do not match the skeleton")
    for (s, t), f in homs.items():
        check_rule_hom(rules[s], rules[t], f, "edge %s->%s: " % (s, t))
    try:
        _check_paths(skeleton, lambda s, t: homs[(s, t)], compose_rule_homs, _same_rule_hom)
    except CommutativityViolation as exc:
        raise RuleHomViolation(str(exc)) from None
    return RuleHierarchy(skeleton, dict(rules), dict(homs))


def identity_rule_hierarchy(h: Hierarchy) -> Tuple[RuleHierarchy, Dict[str, Homomorphism]]:
    """Empty rules everywhere, instantiated at the initial arrows."""
    rule = empty_rule()
    g0 = rule.lhs
    rules = {v: rule for v in h.skeleton.nodes}
    homs = {e: RuleHomomorphism(identity(g0), identity(g0), identity(g0))
            for e in h.skeleton.edges}
    instances = {v: Homomorphism(g0, h.graphs[v], {}) for v in h.skeleton.nodes}
    return RuleHierarchy(h.skeleton, rules, homs), instances


def reverse_rule_hierarchy(r: RuleHierarchy) -> RuleHierarchy:
    return RuleHierarchy(r.skeleton, {v: reverse_rule(x) for v, x in r.rules.items()},
                         {e: RuleHomomorphism(f.rho, f.pi, f.lam) for e, f in r.homs.items()})


# -- applicability and application ---------------------------------------------

def complement_arrows(src: Tuple[Homomorphism, Homomorphism],
                      tgt: Tuple[Homomorphism, Homomorphism], base: Homomorphism,
                      pi: Homomorphism, limit: int = 2) -> List[Dict[str, str]]:
    """Arrows ``k: X_s- -> X_t-`` between two complements that commute with the cube.

    ``src = (m_s: P_s >-> X_s-, g_s: X_s- -> X_s)`` and likewise ``tgt``;
    ``k`` must satisfy ``g_t ∘ k = base ∘ g_s`` and ``k ∘ m_s = m_t ∘ pi``.
    Matched nodes are forced; every other node ranges over the fibre of its
    image. Returns up to ``limit`` solutions.
    """
    m_s, g_s = src
    m_t, g_t = tgt
    xs, xt = g_s.source, g_t.source
    fixed: Dict[str, str] = {}
    for p, u in m_s.node_map.items():
        image = m_t(pi(p))
        if fixed.setdefault(u, image) != image:
            return []
    fibre: Dict[str, List[str]] = {}
    for w in sorted(xt.nodes):
        fibre.setdefault(g_t(w), []).append(w)
    for u, w in fixed.items():
        if g_t(w) != base(g_s(u)) or not A.included(xs.nodes[u], xt.nodes[w]):
            return []
    free = sorted(u for u in xs.nodes if u not in fixed)
    options = {u: [w for w in fibre.get(base(g_s(u)), [])
                   if A.included(xs.nodes[u], xt.nodes[w])] for u in free}
    free.sort(key=lambda u: (len(options[u]), u))
    mapping = dict(fixed)
    solutions: List[Dict[str, str]] = []

    def edges_ok(u):
        w = mapping[u]
        for v in xs.successors(u):
            if v in mapping:
                e = (w, mapping[v])
                if e not in xt.edges or not A.included(xs.edges[(u, v)], xt.edges[e]):
                    return False
        for v in xs.predecessors(u):
            if v in mapping:
                e = (mapping[v], w)
                if e not in xt.edges or not A.included(xs.edges[(v, u)], xt.edges[e]):
                    return False
        return True

    if not all(edges_ok(u) for u in fixed):
        return []

    def search(i):
        if len(solutions) >= limit:
            return
        if i == len(free):
            solutions.append(dict(mapping))
            return
        u = free[i]
        for w in options[u]:
            mapping[u] = w
            if edges_ok(u):
                search(i + 1)
            del mapping[u]

    search(0)
    return solutions


@dataclass(frozen=True, eq=False)
class Applicability:
    applicable: bool
    failures: Mapping[Edge, str]
    homs_minus: Mapping[Edge, Homomorphism]
    complements: Mapping[str, Tuple[Homomorphism, Homomorphism]]

    def __bool__(self):
        return self.applicable


def check_applicability(h: Hierarchy, r: RuleHierarchy,
                        instances: Mapping[str, Homomorphism]) -> Applicability:
    """Check that instances commute and the restrictive arrows exist uniquely."""
    failures: Dict[Edge, str] = {}
    if h.skeleton != r.skeleton or set(instances) != set(h.skeleton.nodes):
        return Applicability(False, {("*", "*"): "skeletons or instance families differ"}, {}, {})
    complements = {}
    for v in h.skeleton.nodes:
        m = instances[v]
        if m.source != r.rules[v].lhs or m.target != h.graphs[v]:
            failures[(v, v)] = "instance at %s does not connect rule and graph" % v
            continue
        if not analyze_homomorphism(m).mono:
            failures[(v, v)] = "instance at %s is not a monomorphism" % v
            continue
        complements[v] = final_pbc(r.rules[v].r_minus, m)
    if failures:
        return Applicability(False, failures, {}, complements)
    homs_minus = {}
    for (s, t) in h.skeleton.edges:
        f = r.homs[(s, t)]
        if not _same_map(compose(instances[s], h.homs[(s, t)]),
                         compose(f.lam, instances[t])):
            failures[(s, t)] = "instances do not commute with the typing arrow"
            continue
        found = complement_arrows(complements[s], complements[t], h.homs[(s, t)], f.pi)
        if not found:
            failures[(s, t)] = "no arrow between the restricted graphs"
        elif len(found) > 1:
            failures[(s, t)] = "arrow between the restricted graphs is not unique"
        else:
            homs_minus[(s, t)] = Homomorphism(complements[s][1].source,
                                              complements[t][1].source, found[0])
    return Applicability(not failures, failures, homs_minus, complements)


@dataclass(frozen=True, eq=False)
class HierarchyRewriteRecord:
    hierarchy: Hierarchy
    rule: RuleHierarchy
    instances: Mapping[str, Homomorphism]
    records: Mapping[str, RewriteRecord]
    homs_minus: Mapping[Edge, Homomorphism]
    homs_plus: Mapping[Edge, Homomorphism]
    result: Hierarchy

    def rhs_instances(self) -> Dict[str, Homomorphism]:
        return {v: rec.m_plus for v, rec in self.records.items()}


def apply_rule_hierarchy(h: Hierarchy, r: RuleHierarchy, instances: Mapping[str, Homomorphism],
                         rhs_names: Optional[Mapping[str, Mapping[str, str]]] = None
                         ) -> HierarchyRewriteRecord:
    report = check_applicability(h, r, instances)
    if not report.applicable:
        detail = "; ".join("%s->%s: %s" % (s, t, why)
                           for (s, t), why in sorted(report.failures.items()))
        raise NotApplicable("rule hierarchy is not applicable: " + detail, report)
    records = {}
    legs = {}
    for v in h.skeleton.nodes:
        rule = r.rules[v]
        m_minus, g_minus = report.complements[v]
        names = rhs_names.get(v) if rhs_names else None
        span = Span(m_minus, rule.r_plus)
        cospan, g_plus = pushout(span, names)
        legs[v] = (span, cospan)
        records[v] = RewriteRecord(rule, h.graphs[v], g_minus.source, g_plus, instances[v],
                                   m_minus, cospan.right, g_minus, cospan.left)
    homs_plus = {}
    for (s, t) in h.skeleton.edges:
        rec_t = records[t]
        cocone = Cospan(compose(report.homs_minus[(s, t)], rec_t.g_arrow_plus),
                        compose(r.homs[(s, t)].rho, rec_t.m_plus))
        homs_plus[(s, t)] = po_mediator(legs[s], cocone)
    result = make_hierarchy(h.skeleton, {v: rec.g_plus for v, rec in records.items()},
                            homs_plus)
    return HierarchyRewriteRecord(h, r, dict(instances), records, report.homs_minus,
                                  homs_plus, result)


def is_hierarchy_rewrite_reversible(rec: HierarchyRewriteRecord) -> bool:
    """Every object's rewrite is reversible and the reversed hierarchy applies."""
    if not all(is_reversible(x) for x in rec.records.values()):
        return False
    return check_applicability(rec.result, reverse_rule_hierarchy(rec.rule),
                               rec.rhs_instances()).applicable


def revert_hierarchy_rewrite(rec: HierarchyRewriteRecord) -> HierarchyRewriteRecord:
    """Apply the reversed rule hierarchy at the rhs instances, restoring ids."""
    if not is_hierarchy_rewrite_reversible(rec):
        raise NotReversible("hierarchy rewrite is not reversible")
    names = {v: dict(m.node_map) for v, m in rec.instances.items()}
    return apply_rule_hierarchy(rec.result, reverse_rule_hierarchy(rec.rule),
                                rec.rhs_instances(), names)


# -- canonical propagation ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LiftingResult:
    rule: Rule
    instance: Homomorphism
    hom_to_origin: RuleHomomorphism
    h_minus: Homomorphism           # H- -> H
    to_origin_minus: Homomorphism   # H- -> G-
    restricted_pb: Span             # legs of P_H (to H-, to P)


def lifting_rule(h: Homomorphism, rec: RewriteRecord) -> LiftingResult:
    """Backward propagation of the restrictive phase of ``rec`` along ``h: H -> G``."""
    if h.target != rec.g:
        raise DomainMismatch("lifting: arrow does not end at the rewritten graph")
    cospan_minus = Cospan(h, rec.g_arrow_minus)
    legs_minus, h_minus_graph = pullback(cospan_minus)
    cospan_l = Cospan(h, rec.m)
    legs_l, l_h = pullback(cospan_l)
    legs_p, p_h = pullback(Cospan(legs_minus.right, rec.m_minus))
    cone = Span(compose(legs_p.left, legs_minus.left), legs_p.right)
    r_minus = pb_mediator((cospan_l, legs_l), Span(cone.left, compose(cone.right,
                                                                      rec.rule.r_minus)))
    rule = make_rule(l_h, p_h, p_h, r_minus, identity(p_h))
    hom = RuleHomomorphism(legs_l.right, legs_p.right, compose(legs_p.right, rec.rule.r_plus))
    return LiftingResult(rule, legs_l.left, hom, legs_minus.left, legs_minus.right, legs_p)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    rule: Rule
    instance: Homomorphism
    hom_from_origin: RuleHomomorphism
    t_plus: Homomorphism            # T -> T+
    h_plus: Homomorphism            # G+ -> T+
    pushout_legs: Tuple[Span, Cospan]


def projection_rule(h: Homomorphism, rec: RewriteRecord) -> ProjectionResult:
    """Forward propagation of the expansive phase of ``rec`` along ``h: G -> T``.

    The projected rule is ``P_T <- P_T -> R_T`` where ``P_T`` is the image of
    the whole lhs in ``T`` (so deleted nodes still have somewhere to go) and
    ``R_T`` is the image of ``P_T`` and ``R`` in ``T+``.
    """
    if h.source != rec.g:
        raise DomainMismatch("projection: arrow does not start at the rewritten graph")
    span = Span(compose(rec.g_arrow_minus, h), rec.g_arrow_plus)
    cospan, t_plus_graph = pushout(span)
    t_plus, h_plus = cospan.left, cospan.right
    epi_l, mono_l = image_factorization(compose(rec.m, h))
    p_t = mono_l.source
    # image of P_T and R inside T+
    node_attrs: Dict[str, list] = {}
    edge_attrs: Dict[tuple, list] = {}
    for x, a in p_t.nodes.items():
        node_attrs.setdefault(t_plus(x), []).append(a)
    for (x, y), a in p_t.edges.items():
        edge_attrs.setdefault((t_plus(x), t_plus(y)), []).append(a)
    rho_map = {}
    for n, a in rec.rule.rhs.nodes.items():
        image = h_plus(rec.m_plus(n))
        rho_map[n] = image
        node_attrs.setdefault(image, []).append(a)
    for (x, y), a in rec.rule.rhs.edges.items():
        edge_attrs.setdefault((rho_map[x], rho_map[y]), []).append(a)
    r_t = Graph._make({n: A.union(*a) for n, a in node_attrs.items()},
                      {e: A.union(*a) for e, a in edge_attrs.items()})
    r_plus = Homomorphism(p_t, r_t, {x: t_plus(x) for x in p_t.nodes})
    rule = make_rule(p_t, p_t, r_t, identity(p_t), r_plus)
    lam = Homomorphism(rec.rule.lhs, p_t, dict(epi_l.node_map))
    pi = compose(rec.rule.r_minus, lam)
    rho = Homomorphism(rec.rule.rhs, r_t, rho_map)
    return ProjectionResult(rule, mono_l, RuleHomomorphism(lam, pi, rho), t_plus, h_plus,
                            (span, cospan))


def _corestrict(h: Homomorphism, target: Graph) -> Homomorphism:
    if not set(h.node_map.values()) <= set(target.nodes):
        raise PropagationConflict("image leaves the propagated rule")
    k = Homomorphism(h.source, target, dict(h.node_map))
    if not k.is_valid():
        raise PropagationConflict("propagated arrow is not a homomorphism: %s"
                                  % hom_problems(k)[0])
    return k


def _preimage_arrow(f: Homomorphism, mono: Homomorphism) -> Dict[str, str]:
    back = {v: k for k, v in mono.node_map.items()}
    try:
        return {x: back[y] for x, y in f.node_map.items()}
    except KeyError:
        raise PropagationConflict("image leaves the propagated rule") from None


def induced_rule_hierarchy(h: Hierarchy, origin: str, r: Rule, m: Homomorphism
                           ) -> Tuple[RuleHierarchy, Dict[str, Homomorphism]]:
    """Propagate a rewrite of ``G_origin`` canonically to the whole hierarchy.

    Ancestors receive liftings of the restrictive phase, descendants
    projections of the expansive phase and the remaining objects identity
    rules on the part touched from above.
    """
    sk = h.skeleton
    if origin not in sk.nodes:
        raise DomainMismatch("unknown skeleton node %s" % origin)
    rec = apply_rule(h.graphs[origin], r, m)
    above = sk.ancestors(origin)
    below = sk.descendants(origin)
    rules: Dict[str, Rule] = {origin: r}
    inst: Dict[str, Homomorphism] = {origin: m}
    lifts: Dict[str, LiftingResult] = {}
    projs: Dict[str, ProjectionResult] = {}
    for v in above:
        lifts[v] = lifting_rule(h.composite(v, origin), rec)
        rules[v], inst[v] = lifts[v].rule, lifts[v].instance
    for v in below:
        projs[v] = projection_rule(h.composite(origin, v), rec)
        rules[v], inst[v] = projs[v].rule, projs[v].instance
    for v in sk.topological_order():
        if v in rules:
            continue
        # identity rule on everything reaching v from above
        node_attrs: Dict[str, list] = {}
        edge_attrs: Dict[tuple, list] = {}
        for s in sk.predecessors(v):
            f = compose(inst[s], h.homs[(s, v)])
            epi, _ = image_factorization(f)
            for n, a in epi.target.nodes.items():
                node_attrs.setdefault(n, []).append(a)
            for e, a in epi.target.edges.items():
                edge_attrs.setdefault(e, []).append(a)
        lhs = Graph._make({n: A.union(*a) for n, a in node_attrs.items()},
                          {e: A.union(*a) for e, a in edge_attrs.items()})
        rules[v] = identity_rule(lhs)
        inst[v] = inclusion(lhs, h.graphs[v])

    def kind(v):
        return "o" if v == origin else "a" if v in above else "d" if v in below else "x"

    homs: Dict[Edge, RuleHomomorphism] = {}
    try:
        for (s, t) in sk.edges:
            homs[(s, t)] = _propagated_hom(h, s, t, kind(s), kind(t), rules, inst,
                                           lifts, projs)
    except (MediatorIllDefined, DomainMismatch, InvalidRule) as exc:
        raise PropagationConflict(str(exc)) from None
    try:
        rh = make_rule_hierarchy(sk, rules, homs)
    except RuleHomViolation as exc:
        raise PropagationConflict(str(exc)) from None
    report = check_applicability(h, rh, inst)
    if not report.applicable:
        raise NotApplicable("propagated rule hierarchy is not applicable", report)
    return rh, inst


def _pair_index(f: Homomorphism, g: Homomorphism) -> Dict[tuple, str]:
    return {(f(x), g(x)): x for x in f.source.nodes}


def _lookup(index: Dict[tuple, str], key: tuple) -> str:
    if key not in index:
        raise PropagationConflict("no propagated element over %s" % (key,))
    return index[key]


def _propagated_hom(h, s, t, ks, kt, rules, inst, lifts, projs):
    rs, rt = rules[s], rules[t]
    h_st = h.homs[(s, t)]
    if ks == "a" and kt == "o":
        return lifts[s].hom_to_origin
    if ks == "o" and kt == "d":
        return projs[t].hom_from_origin
    if ks == "a" and kt == "d":
        return compose_rule_homs(lifts[s].hom_to_origin, projs[t].hom_from_origin)
    if ks == "a" and kt == "a":
        ls, lt = lifts[s], lifts[t]
        l_index = _pair_index(lt.instance, lt.hom_to_origin.lam)
        lam = {x: _lookup(l_index, (h_st(ls.instance(x)), ls.hom_to_origin.lam(x)))
               for x in rs.lhs.nodes}
        h_index = _pair_index(lt.h_minus, lt.to_origin_minus)
        k = {u: _lookup(h_index, (h_st(ls.h_minus(u)), ls.to_origin_minus(u)))
             for u in ls.h_minus.source.nodes}
        p_index = _pair_index(lt.restricted_pb.left, lt.restricted_pb.right)
        pi = {p: _lookup(p_index, (k[ls.restricted_pb.left(p)], ls.restricted_pb.right(p)))
              for p in rs.p.nodes}
        pi_arrow = Homomorphism(rs.p, rt.p, pi)
        return RuleHomomorphism(Homomorphism(rs.lhs, rt.lhs, lam), pi_arrow,
                                Homomorphism(rs.rhs, rt.rhs, pi))
    if ks == "d" and kt == "d":
        ps, pt = projs[s], projs[t]
        lam = _corestrict(Homomorphism(rs.lhs, rt.lhs, {x: h_st(x) for x in rs.lhs.nodes}),
                          rt.lhs)
        k = po_mediator(ps.pushout_legs, Cospan(compose(h_st, pt.t_plus), pt.h_plus))
        rho = _corestrict(Homomorphism(rs.rhs, rt.rhs, {x: k(x) for x in rs.rhs.nodes}),
                          rt.rhs)
        return RuleHomomorphism(lam, lam, rho)
    # s is a lifted or identity rule (identity right leg), t an identity or
    # projected rule (identity left leg)
    lam = _corestrict(Homomorphism(rs.lhs, rt.lhs,
                                   {x: h_st(inst[s](x)) for x in rs.lhs.nodes}), rt.lhs)
    pi = _corestrict(compose(rs.r_minus, lam), rt.p)
    rho = _corestrict(Homomorphism(rs.rhs, rt.rhs,
                                   {x: rt.r_plus(pi(x)) for x in rs.rhs.nodes}), rt.rhs)
    return RuleHomomorphism(lam, pi, rho)


# -- overlap and composition of hierarchy rewrites -----------------------------

@dataclass(frozen=True, eq=False)
class HierarchyOverlap:
    overlaps: Mapping[str, Overlap]
    homs: Mapping[Edge, Homomorphism]


def hierarchy_overlap(rec1: HierarchyRewriteRecord, rule2: RuleHierarchy,
                      instances2: Mapping[str, Homomorphism]) -> HierarchyOverlap:
    """Per-object overlaps of the first result with the second instances.

    The arrows between overlaps need the second rule hierarchy's ``lambda``
    components, hence the extra argument.
    """
    if rule2.skeleton != rec1.result.skeleton:
        raise DomainMismatch("second rule hierarchy uses a different skeleton")
    overlaps = {v: compute_overlap(rec1.records[v], instances2[v])
                for v in rec1.result.skeleton.nodes}
    homs = {}
    for (s, t) in rec1.result.skeleton.edges:
        os_, ot = overlaps[s], overlaps[t]
        cospan = Cospan(rec1.records[t].m_plus, instances2[t])
        cone = Span(compose(os_.x, rec1.rule.homs[(s, t)].rho),
                    compose(os_.y, rule2.homs[(s, t)].lam))
        homs[(s, t)] = pb_mediator((cospan, Span(ot.x, ot.y)), cone)
    return HierarchyOverlap(overlaps, homs)


@dataclass(frozen=True, eq=False)
class HierarchyComposition:
    rule: RuleHierarchy
    instances: Mapping[str, Homomorphism]
    rhs_names: Mapping[str, Mapping[str, str]]
    traces: Mapping[str, CompositionTrace]


def _through_mono(f: Homomorphism, mono: Homomorphism, source: Graph, target: Graph
                  ) -> Homomorphism:
    """The arrow ``k`` with ``mono ∘ k = f``."""
    back = {v: k for k, v in mono.node_map.items()}
    try:
        k = Homomorphism(source, target, {x: back[y] for x, y in f.node_map.items()})
    except KeyError:
        raise MediatorIllDefined("arrow does not factor through the instance") from None
    if not k.is_valid():
        raise MediatorIllDefined("factored arrow is not a homomorphism: %s"
                                 % hom_problems(k)[0])
    return k


def compose_rule_hierarchies(rec1: HierarchyRewriteRecord, o: HierarchyOverlap,
                             rec2: HierarchyRewriteRecord) -> HierarchyComposition:
    """Compose two consecutive hierarchy rewrites into one rule hierarchy."""
    if rec2.hierarchy != rec1.result:
        raise DomainMismatch("second rewrite does not start where the first ends")
    if not is_hierarchy_rewrite_reversible(rec1):
        raise NotReversible("the first hierarchy rewrite is not reversible")
    sk = rec1.result.skeleton
    traces = {v: compose_rules(rec1.records[v], o.overlaps[v], rec2.records[v])
              for v in sk.nodes}
    homs = {}
    for (s, t) in sk.edges:
        ts, tt = traces[s], traces[t]
        f1, f2 = rec1.rule.homs[(s, t)], rec2.rule.homs[(s, t)]
        os_ = o.overlaps[s]
        h_arrow = po_mediator((Span(os_.x, os_.y), Cospan(ts.r1_H, ts.l2_H)),
                              Cospan(compose(f1.rho, tt.r1_H), compose(f2.lam, tt.l2_H)))
        k1 = _through_mono(compose(ts.m1_H, rec1.homs_minus[(s, t)]), tt.m1_H,
                           ts.P1_H, tt.P1_H)
        k2 = _through_mono(compose(ts.m2_H, rec2.homs_minus[(s, t)]), tt.m2_H,
                           ts.P2_H, tt.P2_H)
        for name, k, upper, lower in (("first", k1, ts.h1_plus, tt.h1_plus),
                                      ("second", k2, ts.h2_minus, tt.h2_minus)):
            if not _same_map(compose(upper, h_arrow), compose(k, lower)):
                raise MediatorIllDefined("%s preserved part does not commute over %s->%s"
                                         % (name, s, t))
        r1s, r2s = rec1.rule.rules[s], rec2.rule.rules[s]
        lam = po_mediator((Span(r1s.r_minus, ts.p1_H), Cospan(ts.l1_H, ts.h1_minus)),
                          Cospan(compose(f1.lam, tt.l1_H), compose(k1, tt.h1_minus)))
        rho = po_mediator((Span(r2s.r_plus, ts.p2_H), Cospan(ts.r2_H, ts.h2_plus)),
                          Cospan(compose(f2.rho, tt.r2_H), compose(k2, tt.h2_plus)))
        pi = pb_mediator((Cospan(tt.h1_plus, tt.h2_minus), Span(tt.p_prime, tt.p_dblprime)),
                         Span(compose(ts.p_prime, k1), compose(ts.p_dblprime, k2)))
        homs[(s, t)] = RuleHomomorphism(lam, pi, rho)
    rule = make_rule_hierarchy(sk, {v: tr.composed for v, tr in traces.items()}, homs)
    return HierarchyComposition(rule, {v: tr.m for v, tr in traces.items()},
                                {v: dict(tr.m_plus.node_map) for v, tr in traces.items()},
                                traces)


def apply_composed_hierarchy(rec1: HierarchyRewriteRecord, comp: HierarchyComposition
                             ) -> HierarchyRewriteRecord:
    return apply_rule_hierarchy(rec1.hierarchy, comp.rule, comp.instances, comp.rhs_names)
