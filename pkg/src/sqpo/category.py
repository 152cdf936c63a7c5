"""Pushouts, pullbacks, final pullback complements and their mediators.

All constructions are elementwise and deterministic. Id policy:

* pushout: a node of the left target that is alone in its class keeps its
  id; a class with several left-target members is named by the sorted
  member ids joined by ``_``; a class with only a right-target member keeps
  that id. Clashes get a ``#k`` suffix.
* pullback: the node for the pair ``(b, c)`` is named ``b&c``.
* final pullback complement: a matched node with one preimage keeps its id,
  ``k > 1`` preimages become ``<id>_c1 .. <id>_ck`` in sorted preimage order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from . import attrs as A
from .errors import (IdCollision, InvalidCospan, InvalidSpan, MediatorIllDefined,
                     NonCommutingSquare, NotMono)
from .graph import (Graph, Homomorphism, analyze_homomorphism, compose, empty_graph,
                    fresh_id, hom_problems, initial_arrow)

__all__ = [
    "Span", "Cospan", "Square", "pushout", "pullback", "final_pbc", "po_mediator",
    "pb_mediator", "fpbc_mediator", "is_pushout", "is_pullback", "is_final_pbc",
    "image_factorization", "empty_graph", "initial_arrow",
]


@dataclass(frozen=True, eq=False)
class Span:
    """``B <-left- A -right-> C``."""

    left: Homomorphism
    right: Homomorphism

    @property
    def apex(self) -> Graph:
        return self.left.source


@dataclass(frozen=True, eq=False)
class Cospan:
    """``B -left-> D <-right- C``."""

    left: Homomorphism
    right: Homomorphism

    @property
    def apex(self) -> Graph:
        return self.left.target


@dataclass(frozen=True, eq=False)
class Square:
    """Commutative square ``right ∘ top = bottom ∘ left``.

    ::

        A --top--> B
        |          |
       left      right
        v          v
        C -bottom-> D
    """

    top: Homomorphism
    left: Homomorphism
    right: Homomorphism
    bottom: Homomorphism

    def commutes(self) -> bool:
        if (self.top.source != self.left.source or self.top.target != self.right.source
                or self.left.target != self.bottom.source
                or self.right.target != self.bottom.target):
            return False
        return all(self.right(self.top(a)) == self.bottom(self.left(a))
                   for a in self.top.source.nodes)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _check_span(span: Span) -> None:
    for leg in (span.left, span.right):
        problems = hom_problems(leg)
        if problems:
            raise InvalidSpan("span leg is not a homomorphism: %s" % problems[0])
    if span.left.source != span.right.source:
        raise InvalidSpan("span legs do not share their source")


def _check_cospan(cospan: Cospan) -> None:
    for leg in (cospan.left, cospan.right):
        problems = hom_problems(leg)
        if problems:
            raise InvalidCospan("cospan leg is not a homomorphism: %s" % problems[0])
    if cospan.left.target != cospan.right.target:
        raise InvalidCospan("cospan legs do not share their target")


def pushout(span: Span, right_names: Optional[Mapping[str, str]] = None
            ) -> Tuple[Cospan, Graph]:
    """Pushout of ``B <- A -> C``.

    ``right_names`` optionally fixes the id of the class containing a given
    node of ``C``; this is how rewriting keeps ids stable across reversal.
    """
    _check_span(span)
    B, C = span.left.target, span.right.target
    uf = _UnionFind()
    for b in B.nodes:
        uf.add(("B", b))
    for c in C.nodes:
        uf.add(("C", c))
    for a in span.apex.nodes:
        uf.union(("B", span.left(a)), ("C", span.right(a)))

    classes: Dict[tuple, List[tuple]] = {}
    for x in sorted(uf.parent):
        classes.setdefault(uf.find(x), []).append(x)

    names: Dict[tuple, str] = {}
    used = set()
    if right_names:
        for root, members in classes.items():
            wanted = {right_names[c] for side, c in members if side == "C" and c in right_names}
            if len(wanted) > 1:
                raise IdCollision("inconsistent names %s for one pushout class" % sorted(wanted))
            if wanted:
                name = wanted.pop()
                if name in used:
                    raise IdCollision("name %r requested for two pushout classes" % name)
                names[root] = name
                used.add(name)
    pending = [root for root in classes if root not in names]
    # singleton left members keep their ids
    for root in pending:
        b_members = [x for side, x in classes[root] if side == "B"]
        if len(b_members) == 1:
            if b_members[0] in used:
                raise IdCollision("requested name %r clashes with a kept node" % b_members[0])
            names[root] = b_members[0]
            used.add(b_members[0])
    rest = []
    for root in pending:
        if root in names:
            continue
        b_members = sorted(x for side, x in classes[root] if side == "B")
        if b_members:
            rest.append((0, "_".join(b_members), root))
        else:
            c_members = sorted(x for side, x in classes[root] if side == "C")
            rest.append((1, "_".join(c_members), root))
    for _, base, root in sorted(rest):
        name = fresh_id(base, used)
        names[root] = name
        used.add(name)

    node_attrs: Dict[str, list] = {}
    for root, members in classes.items():
        node_attrs[names[root]] = [(B if side == "B" else C).nodes[x] for side, x in members]
    b_map = {b: names[uf.find(("B", b))] for b in B.nodes}
    c_map = {c: names[uf.find(("C", c))] for c in C.nodes}
    edge_attrs: Dict[tuple, list] = {}
    for graph, mapping in ((B, b_map), (C, c_map)):
        for (s, t), a in graph.edges.items():
            edge_attrs.setdefault((mapping[s], mapping[t]), []).append(a)
    apex = Graph._make({n: A.union(*a) for n, a in node_attrs.items()},
                       {e: A.union(*a) for e, a in edge_attrs.items()})
    return Cospan(Homomorphism(B, apex, b_map), Homomorphism(C, apex, c_map)), apex


def pullback(cospan: Cospan) -> Tuple[Span, Graph]:
    """Pullback of ``B -> D <- C``; the pair ``(b, c)`` becomes node ``b&c``."""
    _check_cospan(cospan)
    B, C = cospan.left.source, cospan.right.source
    by_image: Dict[str, List[str]] = {}
    for c in sorted(C.nodes):
        by_image.setdefault(cospan.right(c), []).append(c)
    pairs = []
    for b in sorted(B.nodes):
        for c in by_image.get(cospan.left(b), []):
            pairs.append((b, c))
    used = set()
    pair_id = {}
    for b, c in pairs:
        name = fresh_id("%s&%s" % (b, c), used)
        used.add(name)
        pair_id[(b, c)] = name
    nodes = {pair_id[(b, c)]: A.intersection(B.nodes[b], C.nodes[c]) for b, c in pairs}
    by_b: Dict[str, List[tuple]] = {}
    for b, c in pairs:
        by_b.setdefault(b, []).append((b, c))
    edges = {}
    for (b1, b2), battrs in B.edges.items():
        for p1 in by_b.get(b1, []):
            for p2 in by_b.get(b2, []):
                ce = (p1[1], p2[1])
                if ce in C.edges:
                    edges[(pair_id[p1], pair_id[p2])] = A.intersection(battrs, C.edges[ce])
    apex = Graph._make(nodes, edges)
    left = Homomorphism(apex, B, {pair_id[p]: p[0] for p in pairs})
    right = Homomorphism(apex, C, {pair_id[p]: p[1] for p in pairs})
    return Span(left, right), apex


def final_pbc(r: Homomorphism, m: Homomorphism) -> Tuple[Homomorphism, Homomorphism]:
    """Final pullback complement of ``P -r-> L >-m-> G``.

    Returns ``(m_minus: P >-> G-, g_minus: G- -> G)``. Matched nodes are
    cloned once per preimage in ``P`` (or deleted if there is none), their
    incident edges are copied to every clone, and the attributes and edges
    removed by ``r`` are removed from the clones.
    """
    if r.target != m.source:
        raise InvalidSpan("final_pbc: r does not end where m starts")
    problems = hom_problems(r) + hom_problems(m)
    if problems:
        raise InvalidSpan("final_pbc: %s" % problems[0])
    if not analyze_homomorphism(m).mono:
        raise NotMono("final_pbc: the instance is not a monomorphism")
    P, L, G = r.source, r.target, m.target
    matched = {m(l): l for l in L.nodes}

    used = {n for n in G.nodes if n not in matched}
    p_image: Dict[str, str] = {}
    origin: Dict[str, str] = {}          # G- node -> G node
    p_of: Dict[str, str] = {}            # G- node -> P node (matched part)
    copies: Dict[str, List[str]] = {n: [n] for n in used}
    for n in used:
        origin[n] = n
    for g_node in sorted(matched):
        pre = r.preimages(matched[g_node])
        copies[g_node] = []
        if len(pre) == 1:
            names = [g_node]
        else:
            names = ["%s_c%d" % (g_node, k + 1) for k in range(len(pre))]
        for p, base in zip(pre, names):
            name = base if base not in used and base not in origin else fresh_id(
                base, used | set(origin))
            used.add(name)
            origin[name] = g_node
            p_of[name] = p
            p_image[p] = name
            copies[g_node].append(name)

    nodes = {}
    for u, g_node in origin.items():
        if u in p_of:
            p = p_of[u]
            removed = A.difference(L.nodes[r(p)], P.nodes[p])
            nodes[u] = A.difference(G.nodes[g_node], removed)
        else:
            nodes[u] = G.nodes[g_node]
    edges = {}
    for (a, b), gattrs in G.edges.items():
        for u in copies.get(a, []):
            for v in copies.get(b, []):
                if u in p_of and v in p_of:
                    pu, pv = p_of[u], p_of[v]
                    l_edge = (r(pu), r(pv))
                    if l_edge in L.edges:
                        if (pu, pv) not in P.edges:
                            continue
                        removed = A.difference(L.edges[l_edge], P.edges[(pu, pv)])
                        edges[(u, v)] = A.difference(gattrs, removed)
                        continue
                edges[(u, v)] = gattrs
    g_minus_graph = Graph._make(nodes, edges)
    m_minus = Homomorphism(P, g_minus_graph, p_image)
    g_minus = Homomorphism(g_minus_graph, G, origin)
    return m_minus, g_minus


def _checked(h: Homomorphism, what: str) -> Homomorphism:
    problems = hom_problems(h)
    if problems:
        raise MediatorIllDefined("%s is not a homomorphism: %s" % (what, problems[0]))
    return h


def po_mediator(po: Tuple[Span, Cospan], cocone: Cospan) -> Homomorphism:
    """Unique arrow from the pushout apex to the cocone target."""
    span, legs = po
    if (cocone.left.source != legs.left.source or cocone.right.source != legs.right.source
            or cocone.left.target != cocone.right.target):
        raise MediatorIllDefined("cocone does not fit the pushout legs")
    for a in span.apex.nodes:
        if cocone.left(span.left(a)) != cocone.right(span.right(a)):
            raise MediatorIllDefined("cocone does not commute with the span at %s" % a)
    mapping: Dict[str, str] = {}
    for leg, other in ((legs.left, cocone.left), (legs.right, cocone.right)):
        for x, q in leg.node_map.items():
            image = other(x)
            if mapping.setdefault(q, image) != image:
                raise MediatorIllDefined("class of %s has members with different images" % q)
    apex = legs.left.target
    if set(mapping) != set(apex.nodes):
        raise MediatorIllDefined("pushout legs are not jointly surjective")
    return _checked(Homomorphism(apex, cocone.left.target, mapping), "pushout mediator")


def pb_mediator(pb: Tuple[Cospan, Span], cone: Span) -> Homomorphism:
    """Unique arrow from the cone apex to the pullback apex."""
    cospan, legs = pb
    if (cone.left.target != legs.left.target or cone.right.target != legs.right.target
            or cone.left.source != cone.right.source):
        raise MediatorIllDefined("cone does not fit the pullback legs")
    index: Dict[tuple, str] = {}
    for d in legs.apex.nodes:
        key = (legs.left(d), legs.right(d))
        if key in index:
            raise MediatorIllDefined("pullback legs are not jointly injective")
        index[key] = d
    mapping = {}
    for x in cone.apex.nodes:
        b, c = cone.left(x), cone.right(x)
        if cospan.left(b) != cospan.right(c):
            raise MediatorIllDefined("cone does not commute with the cospan at %s" % x)
        if (b, c) not in index:
            raise MediatorIllDefined("no pullback element over (%s, %s)" % (b, c))
        mapping[x] = index[(b, c)]
    return _checked(Homomorphism(cone.apex, legs.apex, mapping), "pullback mediator")


def fpbc_mediator(fpbc: Tuple[Homomorphism, Homomorphism], top: Homomorphism,
                  bottom: Homomorphism) -> Homomorphism:
    """Arrow ``k: X -> G-`` into a final pullback complement.

    ``fpbc = (m_minus: P >-> G-, g_minus: G- -> G)``; the competitor is
    ``top: P -> X`` and ``bottom: X -> G``. ``k`` satisfies
    ``k ∘ top = m_minus`` and ``g_minus ∘ k = bottom``.
    """
    m_minus, g_minus = fpbc
    if top.source != m_minus.source or bottom.target != g_minus.target or top.target != bottom.source:
        raise MediatorIllDefined("competitor does not fit the complement")
    matched = m_minus.image()
    over: Dict[str, List[str]] = {}
    for u in sorted(g_minus.source.nodes):
        if u not in matched:
            over.setdefault(g_minus(u), []).append(u)
    from_top: Dict[str, set] = {}
    for p, x in top.node_map.items():
        from_top.setdefault(x, set()).add(m_minus(p))
    mapping = {}
    for x in top.target.nodes:
        if x in from_top:
            images = from_top[x]
            if len(images) != 1:
                raise MediatorIllDefined("%s would need several images" % x)
            mapping[x] = next(iter(images))
        else:
            candidates = over.get(bottom(x), [])
            if len(candidates) != 1:
                raise MediatorIllDefined("%s has %d candidate images" % (x, len(candidates)))
            mapping[x] = candidates[0]
    k = _checked(Homomorphism(top.target, g_minus.source, mapping), "complement mediator")
    for x in top.target.nodes:
        if g_minus(mapping[x]) != bottom(x):
            raise MediatorIllDefined("complement mediator does not commute at %s" % x)
    return k


def _require_commuting(sq: Square) -> None:
    if not sq.commutes():
        raise NonCommutingSquare("square does not commute")


def is_pushout(sq: Square) -> bool:
    """Whether ``sq`` is a pushout of its top and left arrows."""
    _require_commuting(sq)
    span = Span(sq.top, sq.left)
    legs, _ = pushout(span)
    try:
        k = po_mediator((span, legs), Cospan(sq.right, sq.bottom))
    except MediatorIllDefined:
        return False
    return analyze_homomorphism(k).iso


def is_pullback(sq: Square) -> bool:
    """Whether ``sq`` is a pullback of its right and bottom arrows."""
    _require_commuting(sq)
    cospan = Cospan(sq.right, sq.bottom)
    legs, _ = pullback(cospan)
    try:
        k = pb_mediator((cospan, legs), Span(sq.top, sq.left))
    except MediatorIllDefined:
        return False
    return analyze_homomorphism(k).iso


def is_final_pbc(sq: Square) -> bool:
    """Whether ``(left, bottom)`` is the final pullback complement of ``(top, right)``."""
    _require_commuting(sq)
    if not analyze_homomorphism(sq.right).mono:
        return False
    if not is_pullback(sq):
        return False
    canonical = final_pbc(sq.top, sq.right)
    try:
        k = fpbc_mediator(canonical, sq.left, sq.bottom)
    except MediatorIllDefined:
        return False
    return analyze_homomorphism(k).iso


def image_factorization(f: Homomorphism) -> Tuple[Homomorphism, Homomorphism]:
    """Split ``f`` as ``mono ∘ epi`` through its image subgraph."""
    node_attrs: Dict[str, list] = {}
    for n, m in f.node_map.items():
        node_attrs.setdefault(m, []).append(f.source.nodes[n])
    edge_attrs: Dict[tuple, list] = {}
    for (s, t), a in f.source.edges.items():
        edge_attrs.setdefault((f(s), f(t)), []).append(a)
    image = Graph._make({n: A.union(*a) for n, a in node_attrs.items()},
                        {e: A.union(*a) for e, a in edge_attrs.items()})
    epi = Homomorphism(f.source, image, dict(f.node_map))
    mono = Homomorphism(image, f.target, {n: n for n in image.nodes})
    return epi, mono


def compose_square_check(f: Homomorphism, g: Homomorphism, h: Homomorphism,
                         k: Homomorphism) -> bool:
    """``g ∘ f == k ∘ h`` pointwise."""
    return dict(compose(f, g).node_map) == dict(compose(h, k).node_map)
