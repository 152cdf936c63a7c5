"""Backtracking search for monomorphisms and isomorphisms."""
from __future__ import annotations

from typing import Dict, Iterator, List, Optional

from . import attrs as A
from .graph import Graph, Homomorphism


def _order(pattern: Graph) -> List[str]:
    # most constrained first, then grow along already placed neighbours
    remaining = set(pattern.nodes)
    order: List[str] = []
    placed = set()
    while remaining:
        def score(n):
            linked = len((pattern.successors(n) | pattern.predecessors(n)) & placed)
            return (-linked, -pattern.degree(n), -len(pattern.nodes[n]), n)
        best = min(remaining, key=score)
        order.append(best)
        placed.add(best)
        remaining.discard(best)
    return order


def _attrs_ok(a, b, exact: bool) -> bool:
    return A.equal(a, b) if exact else A.included(a, b)


def iter_monomorphisms(pattern: Graph, host: Graph, exact: bool = False,
                       partial: Optional[Dict[str, str]] = None) -> Iterator[Dict[str, str]]:
    """Yield injective node maps ``pattern -> host`` in search order.

    With ``exact`` the attribute sets of matched nodes and edges must be
    equal rather than included. ``partial`` pins some images in advance.
    """
    order = _order(pattern)
    mapping: Dict[str, str] = {}
    used = set()
    if partial:
        for p, h in partial.items():
            if h in used or h not in host.nodes or p not in pattern.nodes:
                return
            mapping[p] = h
            used.add(h)
        order = [n for n in order if n not in mapping]
        if not _consistent(pattern, host, mapping, list(mapping), exact):
            return

    def candidates(node):
        for nb in pattern.predecessors(node):
            if nb in mapping:
                return sorted(host.successors(mapping[nb]))
        for nb in pattern.successors(node):
            if nb in mapping:
                return sorted(host.predecessors(mapping[nb]))
        return sorted(host.nodes)

    def fits(node, image):
        if image in used or not _attrs_ok(pattern.nodes[node], host.nodes[image], exact):
            return False
        if pattern.has_edge(node, node):
            if not host.has_edge(image, image) or not _attrs_ok(
                    pattern.edges[(node, node)], host.edges[(image, image)], exact):
                return False
        elif exact and host.has_edge(image, image):
            return False
        for nb in pattern.successors(node):
            if nb in mapping and nb != node:
                e = (image, mapping[nb])
                if e not in host.edges or not _attrs_ok(pattern.edges[(node, nb)],
                                                        host.edges[e], exact):
                    return False
        for nb in pattern.predecessors(node):
            if nb in mapping and nb != node:
                e = (mapping[nb], image)
                if e not in host.edges or not _attrs_ok(pattern.edges[(nb, node)],
                                                        host.edges[e], exact):
                    return False
        return True

    def search(i):
        if i == len(order):
            yield dict(mapping)
            return
        node = order[i]
        for image in candidates(node):
            if fits(node, image):
                mapping[node] = image
                used.add(image)
                yield from search(i + 1)
                del mapping[node]
                used.discard(image)

    yield from search(0)


def _consistent(pattern, host, mapping, nodes, exact):
    for n in nodes:
        if not _attrs_ok(pattern.nodes[n], host.nodes[mapping[n]], exact):
            return False
    for (s, t), a in pattern.edges.items():
        if s in mapping and t in mapping:
            e = (mapping[s], mapping[t])
            if e not in host.edges or not _attrs_ok(a, host.edges[e], exact):
                return False
    return True


def _sort_key(pattern: Graph):
    keys = sorted(pattern.nodes)
    return lambda m: tuple(m[k] for k in keys)


def find_monomorphisms(pattern: Graph, host: Graph) -> List[Homomorphism]:
    """All monomorphisms ``pattern >-> host``, sorted by image tuple.

    The image tuple lists the images of the pattern nodes in sorted id order.
    """
    maps = sorted(iter_monomorphisms(pattern, host), key=_sort_key(pattern))
    return [Homomorphism(pattern, host, m) for m in maps]


def find_isomorphism(g1: Graph, g2: Graph) -> Optional[Homomorphism]:
    """An isomorphism ``g1 -> g2`` or ``None``; the first one in mono order."""
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return None
    if g1 == g2:
        return Homomorphism(g1, g2, {n: n for n in g1.nodes})
    maps = sorted(iter_monomorphisms(g1, g2, exact=True), key=_sort_key(g1))
    if not maps:
        return None
    return Homomorphism(g1, g2, maps[0])


def is_isomorphic(g1: Graph, g2: Graph) -> bool:
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return False
    if g1 == g2:
        return True
    return next(iter_monomorphisms(g1, g2, exact=True), None) is not None
