"""Simple directed graphs with attributes and homomorphisms between them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Tuple

from . import attrs as A
from .errors import DomainMismatch, InvalidHomomorphism

NodeId = str
Edge = Tuple[NodeId, NodeId]

SEPARATOR = "|"


class Graph:
    """Immutable simple directed graph with finite-set-valued attributes.

    ``nodes`` maps node ids to attribute sets and ``edges`` maps ordered
    node pairs to attribute sets. At most one edge exists per ordered pair.

    Parameters
    ----------
    nodes : mapping or iterable
        Either ``{id: attrs}`` or an iterable of ids.
    edges : mapping or iterable
        Either ``{(s, t): attrs}`` or an iterable of ``(s, t)`` or
        ``(s, t, attrs)`` tuples.

    Graphs built through the constructor are not validated, so that
    :func:`validate_graph` can report problems; the constructions in this
    package always produce valid graphs.
    """

    __slots__ = ("nodes", "edges", "_succ", "_pred")

    def __init__(self, nodes=(), edges=()):
        if isinstance(nodes, Mapping):
            node_map = {n: A.normalize(a, drop_empty=False) for n, a in nodes.items()}
        else:
            node_map = {n: {} for n in nodes}
        if isinstance(edges, Mapping):
            edge_map = {tuple(e): A.normalize(a, drop_empty=False) for e, a in edges.items()}
        else:
            edge_map = {}
            for e in edges:
                if len(e) == 3:
                    edge_map[(e[0], e[1])] = A.normalize(e[2], drop_empty=False)
                else:
                    edge_map[(e[0], e[1])] = {}
        self._init(node_map, edge_map)

    @classmethod
    def _make(cls, nodes: Dict[NodeId, A.AttrSet], edges: Dict[Edge, A.AttrSet]) -> "Graph":
        # trusted constructor: attribute sets are already normalized
        g = cls.__new__(cls)
        g._init(nodes, edges)
        return g

    def _init(self, nodes, edges):
        self.nodes = nodes
        self.edges = edges
        succ: Dict[NodeId, set] = {}
        pred: Dict[NodeId, set] = {}
        for s, t in edges:
            succ.setdefault(s, set()).add(t)
            pred.setdefault(t, set()).add(s)
        self._succ = succ
        self._pred = pred

    def attrs(self, node: NodeId) -> A.AttrSet:
        return self.nodes[node]

    def edge_attrs(self, s: NodeId, t: NodeId) -> A.AttrSet:
        return self.edges[(s, t)]

    def has_node(self, node: NodeId) -> bool:
        return node in self.nodes

    def has_edge(self, s: NodeId, t: NodeId) -> bool:
        return (s, t) in self.edges

    def successors(self, node: NodeId) -> set:
        return self._succ.get(node, set())

    def predecessors(self, node: NodeId) -> set:
        return self._pred.get(node, set())

    def degree(self, node: NodeId) -> int:
        return len(self.successors(node)) + len(self.predecessors(node))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self.nodes)

    def __contains__(self, node) -> bool:
        return node in self.nodes

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    __hash__ = None

    def __repr__(self):
        nodes = sorted(self.nodes)
        edges = sorted(self.edges)
        return "Graph(nodes=%r, edges=%r)" % (nodes, edges)

    def to_plain(self) -> dict:
        """Untagged nested dict, convenient for display and comparisons."""
        return {
            "nodes": {n: A.plain(a) for n, a in sorted(self.nodes.items())},
            "edges": {e: A.plain(a) for e, a in sorted(self.edges.items())},
        }

    def subgraph(self, nodes: Iterable[NodeId]) -> "Graph":
        keep = set(nodes)
        return Graph._make(
            {n: a for n, a in self.nodes.items() if n in keep},
            {e: a for e, a in self.edges.items() if e[0] in keep and e[1] in keep})

    def relabel(self, mapping: Mapping[NodeId, NodeId]) -> "Graph":
        """Rename nodes; ids missing from ``mapping`` are kept."""
        new = {mapping.get(n, n): a for n, a in self.nodes.items()}
        if len(new) != len(self.nodes):
            raise ValueError("relabeling is not injective")
        return Graph._make(new, {(mapping.get(s, s), mapping.get(t, t)): a
                                 for (s, t), a in self.edges.items()})


def validate_graph(g: Graph) -> List[str]:
    """Return a list of invariant violations (empty if ``g`` is valid)."""
    problems = []
    for n, attrs in g.nodes.items():
        if not isinstance(n, str) or not n:
            problems.append("node id %r must be a non-empty string" % (n,))
        elif SEPARATOR in n:
            problems.append("node id %r contains reserved separator %r" % (n, SEPARATOR))
        for key, values in attrs.items():
            if not values:
                problems.append("empty value set at node %s, key %s" % (n, key))
    for (s, t), attrs in g.edges.items():
        for end in (s, t):
            if end not in g.nodes:
                problems.append("dangling endpoint %s of edge (%s, %s)" % (end, s, t))
        for key, values in attrs.items():
            if not values:
                problems.append("empty value set at edge (%s, %s), key %s" % (s, t, key))
    return problems


def empty_graph() -> Graph:
    return Graph._make({}, {})


@dataclass(frozen=True, eq=False)
class Homomorphism:
    """Node map between two graphs; edges follow their endpoints."""

    source: Graph
    target: Graph
    node_map: Mapping[NodeId, NodeId]

    def __call__(self, node: NodeId) -> NodeId:
        return self.node_map[node]

    def __eq__(self, other):
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return (dict(self.node_map) == dict(other.node_map)
                and self.source == other.source and self.target == other.target)

    __hash__ = None

    def __repr__(self):
        return "Homomorphism(%r)" % (dict(sorted(self.node_map.items())),)

    def image(self) -> set:
        return set(self.node_map.values())

    def preimages(self, node: NodeId) -> List[NodeId]:
        return sorted(n for n, m in self.node_map.items() if m == node)

    def fibers(self) -> Dict[NodeId, List[NodeId]]:
        result: Dict[NodeId, List[NodeId]] = {}
        for n in sorted(self.node_map):
            result.setdefault(self.node_map[n], []).append(n)
        return result

    def is_valid(self) -> bool:
        return not hom_problems(self)

    def check(self) -> "Homomorphism":
        problems = hom_problems(self)
        if problems:
            raise InvalidHomomorphism("; ".join(problems[:5]))
        return self

    def is_mono(self) -> bool:
        return self.is_valid() and len(set(self.node_map.values())) == len(self.node_map)


def hom_problems(h: Homomorphism) -> List[str]:
    src, tgt, f = h.source, h.target, h.node_map
    problems = []
    missing = [n for n in src.nodes if n not in f]
    if missing:
        problems.append("not total: no image for %s" % sorted(missing))
    extra = [n for n in f if n not in src.nodes]
    if extra:
        problems.append("maps unknown source nodes %s" % sorted(extra))
    for n, m in f.items():
        if n not in src.nodes:
            continue
        if m not in tgt.nodes:
            problems.append("image %s of %s is not a target node" % (m, n))
        elif not A.included(src.nodes[n], tgt.nodes[m]):
            problems.append("attributes of node %s not included in %s" % (n, m))
    if problems:
        return problems
    for (s, t), attrs in src.edges.items():
        image = (f[s], f[t])
        if image not in tgt.edges:
            problems.append("edge (%s, %s) has no image (%s, %s)" % (s, t, image[0], image[1]))
        elif not A.included(attrs, tgt.edges[image]):
            problems.append("attributes of edge (%s, %s) not included in image" % (s, t))
    return problems


@dataclass(frozen=True)
class HomAnalysis:
    valid: bool
    mono: bool
    epi: bool
    iso: bool


def analyze_homomorphism(h: Homomorphism) -> HomAnalysis:
    """Classify ``h`` as valid / mono / epi / iso."""
    if not h.is_valid():
        return HomAnalysis(False, False, False, False)
    f = h.node_map
    mono = len(set(f.values())) == len(f)
    fibers = h.fibers()
    epi = set(fibers) == set(h.target.nodes) and all(
        A.equal(A.union(*(h.source.nodes[n] for n in pre)), h.target.nodes[m])
        for m, pre in fibers.items())
    iso = False
    if mono and len(f) == len(h.target.nodes) and len(h.source.edges) == len(h.target.edges):
        iso = all(A.equal(a, h.target.nodes[f[n]]) for n, a in h.source.nodes.items()) and all(
            A.equal(a, h.target.edges[(f[s], f[t])]) for (s, t), a in h.source.edges.items())
    return HomAnalysis(True, mono, epi, iso)


def identity(g: Graph) -> Homomorphism:
    return Homomorphism(g, g, {n: n for n in g.nodes})


def inclusion(sub: Graph, g: Graph) -> Homomorphism:
    return Homomorphism(sub, g, {n: n for n in sub.nodes})


def initial_arrow(g: Graph) -> Homomorphism:
    """The unique arrow from the empty graph into ``g``."""
    return Homomorphism(empty_graph(), g, {})


def compose(f: Homomorphism, g: Homomorphism) -> Homomorphism:
    """Return ``g ∘ f`` (first ``f``, then ``g``)."""
    if f.target is not g.source and f.target != g.source:
        raise DomainMismatch("cannot compose: target of first arrow differs from "
                             "source of second")
    return Homomorphism(f.source, g.target, {n: g.node_map[m] for n, m in f.node_map.items()})


def compose_all(*arrows: Homomorphism) -> Homomorphism:
    result = arrows[0]
    for arrow in arrows[1:]:
        result = compose(result, arrow)
    return result


def same_map(f: Homomorphism, g: Homomorphism) -> bool:
    """Pointwise equality of node maps (endpoints are assumed compatible)."""
    return dict(f.node_map) == dict(g.node_map)


def restrict_target(h: Homomorphism, target: Graph) -> Homomorphism:
    """Same node map with a different codomain (typically a subgraph)."""
    return Homomorphism(h.source, target, dict(h.node_map))


def fresh_id(base: str, used, start: int = 1) -> str:
    """``base`` if unused, else the first free ``base#k``."""
    if base not in used:
        return base
    k = start
    while "%s#%d" % (base, k) in used:
        k += 1
    return "%s#%d" % (base, k)


def edge_key(s: NodeId, t: NodeId) -> str:
    return "%s%s%s" % (s, SEPARATOR, t)


def check_same(a: Graph, b: Graph, what: str) -> None:
    if a is not b and a != b:
        raise DomainMismatch("%s: graphs differ" % what)
