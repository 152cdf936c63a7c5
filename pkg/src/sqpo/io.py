"""Canonical JSON encodings for graphs, homomorphisms, rules and hierarchies.

Graph document::

    {"nodes": {"<id>": {"<key>": [v, ...]}},
     "edges": {"<src>|<tgt>": {"<key>": [v, ...]}}}

Keys are sorted and value arrays are sorted, so equal values encode to
identical bytes.
"""
from __future__ import annotations

import json
from typing import Any, Dict, Mapping

from . import attrs as A
from .errors import ParseError, SchemaError
from .graph import SEPARATOR, Graph, Homomorphism, edge_key, hom_problems, validate_graph


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def loads(data) -> Any:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid UTF-8: %s" % exc.reason, exc.start) from None
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from None


def _attrs_doc(attrs: Mapping) -> Dict[str, list]:
    return A.plain(attrs)


def graph_to_doc(g: Graph) -> dict:
    return {
        "nodes": {n: _attrs_doc(a) for n, a in g.nodes.items()},
        "edges": {edge_key(s, t): _attrs_doc(a) for (s, t), a in g.edges.items()},
    }


def encode_graph(g: Graph) -> bytes:
    return dumps(graph_to_doc(g)).encode("utf-8")


def _attrs_from_doc(doc, field: str) -> A.AttrSet:
    if not isinstance(doc, dict):
        raise SchemaError("%s: attributes must be an object" % field, field)
    result = {}
    for key, values in doc.items():
        sub = "%s.%s" % (field, key)
        if not isinstance(values, list):
            raise SchemaError("%s: attribute values must be an array" % sub, sub)
        tagged = set()
        for v in values:
            if not isinstance(v, (str, int, bool)) or isinstance(v, float):
                raise SchemaError("%s: unsupported value %r" % (sub, v), sub)
            tagged.add(A.tag(v))
        if not tagged:
            raise SchemaError("%s: empty value set" % sub, sub)
        result[key] = frozenset(tagged)
    return result


def graph_from_doc(doc, field: str = "graph") -> Graph:
    if not isinstance(doc, dict):
        raise SchemaError("%s: expected an object" % field, field)
    unknown = set(doc) - {"nodes", "edges"}
    if unknown:
        name = "%s.%s" % (field, sorted(unknown)[0])
        raise SchemaError("%s: unexpected field" % name, name)
    if "nodes" not in doc:
        raise SchemaError("%s.nodes: missing" % field, field + ".nodes")
    nodes_doc = doc["nodes"]
    edges_doc = doc.get("edges", {})
    if not isinstance(nodes_doc, dict):
        raise SchemaError("%s.nodes: expected an object" % field, field + ".nodes")
    if not isinstance(edges_doc, dict):
        raise SchemaError("%s.edges: expected an object" % field, field + ".edges")
    nodes = {}
    for n, a in nodes_doc.items():
        sub = "%s.nodes.%s" % (field, n)
        if not n or SEPARATOR in n:
            raise SchemaError("%s: invalid node id" % sub, sub)
        nodes[n] = _attrs_from_doc(a, sub)
    edges = {}
    for key, a in edges_doc.items():
        sub = "%s.edges.%s" % (field, key)
        parts = key.split(SEPARATOR)
        if len(parts) != 2:
            raise SchemaError("%s: edge key must be '<src>%s<tgt>'" % (sub, SEPARATOR), sub)
        for end in parts:
            if end not in nodes:
                raise SchemaError("%s: unknown node %r" % (sub, end), sub)
        edges[(parts[0], parts[1])] = _attrs_from_doc(a, sub)
    g = Graph._make(nodes, edges)
    problems = validate_graph(g)
    if problems:
        raise SchemaError("%s: %s" % (field, problems[0]), field)
    return g


def decode_graph(data) -> Graph:
    return graph_from_doc(loads(data))


def map_from_doc(doc, field: str = "instance") -> Dict[str, str]:
    if not isinstance(doc, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in doc.items()):
        raise SchemaError("%s: expected an object of node id strings" % field, field)
    return dict(doc)


def hom_from_doc(doc, source: Graph, target: Graph, field: str) -> Homomorphism:
    mapping = map_from_doc(doc, field)
    h = Homomorphism(source, target, mapping)
    if not h.is_valid():
        raise SchemaError("%s: %s" % (field, hom_problems(h)[0]), field)
    return h


def hom_to_doc(h: Homomorphism) -> Dict[str, str]:
    return dict(h.node_map)


# -- rules ----------------------------------------------------------------------

def rule_to_doc(r) -> dict:
    return {
        "lhs": graph_to_doc(r.lhs), "p": graph_to_doc(r.p), "rhs": graph_to_doc(r.rhs),
        "p_lhs": hom_to_doc(r.r_minus), "p_rhs": hom_to_doc(r.r_plus),
    }


def rule_from_doc(doc, field: str = "rule"):
    from .errors import InvalidRule
    from .rewrite import make_rule
    if not isinstance(doc, dict):
        raise SchemaError("%s: expected an object" % field, field)
    expected = {"lhs", "p", "rhs", "p_lhs", "p_rhs"}
    for name in sorted(expected - set(doc)):
        raise SchemaError("%s.%s: missing" % (field, name), "%s.%s" % (field, name))
    for name in sorted(set(doc) - expected):
        raise SchemaError("%s.%s: unexpected field" % (field, name), "%s.%s" % (field, name))
    lhs = graph_from_doc(doc["lhs"], field + ".lhs")
    p = graph_from_doc(doc["p"], field + ".p")
    rhs = graph_from_doc(doc["rhs"], field + ".rhs")
    p_lhs = map_from_doc(doc["p_lhs"], field + ".p_lhs")
    p_rhs = map_from_doc(doc["p_rhs"], field + ".p_rhs")
    try:
        return make_rule(lhs, p, rhs, p_lhs, p_rhs)
    except InvalidRule as exc:
        raise SchemaError("%s: %s" % (field, exc), field) from None


def encode_rule(r) -> bytes:
    return dumps(rule_to_doc(r)).encode("utf-8")


def decode_rule(data):
    return rule_from_doc(loads(data))


# -- hierarchies ------------------------------------------------------------------

ARROW = "->"


def _edge_name(s: str, t: str) -> str:
    return s + ARROW + t


def _split_edge(key: str, nodes, field: str):
    parts = key.split(ARROW)
    if len(parts) != 2 or parts[0] not in nodes or parts[1] not in nodes:
        raise SchemaError("%s: edge key must be '<s>%s<t>' over known nodes" % (field, ARROW),
                          field)
    return parts[0], parts[1]


def _object_keys(doc, members: str, arrows: str, field: str):
    if not isinstance(doc, dict):
        raise SchemaError("%s: expected an object" % field, field)
    for name in sorted({members, arrows} - set(doc)):
        raise SchemaError("%s.%s: missing" % (field, name), "%s.%s" % (field, name))
    for name in sorted(set(doc) - {members, arrows}):
        raise SchemaError("%s.%s: unexpected field" % (field, name), "%s.%s" % (field, name))
    for name in (members, arrows):
        if not isinstance(doc[name], dict):
            sub = "%s.%s" % (field, name)
            raise SchemaError("%s: expected an object" % sub, sub)
    for v in doc[members]:
        if not v or ARROW in v:
            sub = "%s.%s.%s" % (field, members, v)
            raise SchemaError("%s: invalid hierarchy node name" % sub, sub)


def hierarchy_to_doc(h) -> dict:
    return {
        "graphs": {v: graph_to_doc(g) for v, g in h.graphs.items()},
        "typing": {_edge_name(s, t): hom_to_doc(f) for (s, t), f in h.homs.items()},
    }


def hierarchy_from_doc(doc, field: str = "hierarchy"):
    from .errors import CommutativityViolation, CycleDetected, DomainMismatch
    from .hierarchy import Skeleton, make_hierarchy
    _object_keys(doc, "graphs", "typing", field)
    graphs = {v: graph_from_doc(g, "%s.graphs.%s" % (field, v))
              for v, g in doc["graphs"].items()}
    homs = {}
    for key, mapping in doc["typing"].items():
        sub = "%s.typing.%s" % (field, key)
        s, t = _split_edge(key, graphs, sub)
        homs[(s, t)] = hom_from_doc(mapping, graphs[s], graphs[t], sub)
    try:
        return make_hierarchy(Skeleton.of(graphs, homs), graphs, homs)
    except (CycleDetected, CommutativityViolation, DomainMismatch) as exc:
        raise SchemaError("%s: %s" % (field, exc), field) from None


def encode_hierarchy(h) -> bytes:
    return dumps(hierarchy_to_doc(h)).encode("utf-8")


def decode_hierarchy(data):
    return hierarchy_from_doc(loads(data))


def rule_hierarchy_to_doc(r) -> dict:
    return {
        "rules": {v: rule_to_doc(x) for v, x in r.rules.items()},
        "typing": {_edge_name(s, t): {"lambda": hom_to_doc(f.lam), "pi": hom_to_doc(f.pi),
                                      "rho": hom_to_doc(f.rho)}
                   for (s, t), f in r.homs.items()},
    }


def rule_hierarchy_from_doc(doc, field: str = "rule_hierarchy"):
    from .errors import CycleDetected, DomainMismatch, RuleHomViolation
    from .hierarchy import RuleHomomorphism, Skeleton, make_rule_hierarchy
    _object_keys(doc, "rules", "typing", field)
    rules = {v: rule_from_doc(x, "%s.rules.%s" % (field, v)) for v, x in doc["rules"].items()}
    homs = {}
    for key, parts in doc["typing"].items():
        sub = "%s.typing.%s" % (field, key)
        s, t = _split_edge(key, rules, sub)
        if not isinstance(parts, dict) or set(parts) != {"lambda", "pi", "rho"}:
            raise SchemaError("%s: expected lambda, pi and rho" % sub, sub)
        rs, rt = rules[s], rules[t]
        homs[(s, t)] = RuleHomomorphism(
            hom_from_doc(parts["lambda"], rs.lhs, rt.lhs, sub + ".lambda"),
            hom_from_doc(parts["pi"], rs.p, rt.p, sub + ".pi"),
            hom_from_doc(parts["rho"], rs.rhs, rt.rhs, sub + ".rho"))
    try:
        return make_rule_hierarchy(Skeleton.of(rules, homs), rules, homs)
    except (CycleDetected, DomainMismatch, RuleHomViolation) as exc:
        raise SchemaError("%s: %s" % (field, exc), field) from None


def encode_rule_hierarchy(r) -> bytes:
    return dumps(rule_hierarchy_to_doc(r)).encode("utf-8")


def decode_rule_hierarchy(data):
    return rule_hierarchy_from_doc(loads(data))
