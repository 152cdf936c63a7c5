import json
import random

import pytest

from gen import random_graph, random_hierarchy_application, random_rule, random_two_level
from sqpo import io
from sqpo.errors import ParseError, SchemaError
from sqpo.graph import Graph
from sqpo.rewrite import make_rule


def clone_rule():
    l = Graph({"c": {"shape": "circle"}})
    p = Graph({"c1": {"shape": "circle"}, "c2": {}})
    return make_rule(l, p, p, {"c1": "c", "c2": "c"}, {"c1": "c1", "c2": "c2"})


def test_rule_round_trips_byte_identically():
    data = io.encode_rule(clone_rule())
    assert io.decode_rule(data) == clone_rule()
    assert io.encode_rule(io.decode_rule(data)) == data


def test_random_rules_round_trip():
    rng = random.Random(2)
    for _ in range(60):
        r = random_rule(rng, random_graph(rng, rng.randint(0, 4)))
        assert io.decode_rule(io.encode_rule(r)) == r


def test_rule_with_missing_field_names_it():
    doc = io.rule_to_doc(clone_rule())
    del doc["p_rhs"]
    with pytest.raises(SchemaError) as exc:
        io.rule_from_doc(doc)
    assert exc.value.field == "rule.p_rhs"


def test_rule_with_invalid_leg_is_schema_error():
    doc = io.rule_to_doc(clone_rule())
    doc["p_lhs"] = {"c1": "c", "c2": "missing"}
    with pytest.raises(SchemaError):
        io.rule_from_doc(doc)


def test_rule_with_unexpected_field_is_rejected():
    doc = dict(io.rule_to_doc(clone_rule()), extra=1)
    with pytest.raises(SchemaError) as exc:
        io.rule_from_doc(doc)
    assert exc.value.field == "rule.extra"


def test_hierarchies_round_trip():
    rng = random.Random(4)
    for _ in range(40):
        h = random_two_level(rng)
        data = io.encode_hierarchy(h)
        assert io.decode_hierarchy(data) == h
        assert io.encode_hierarchy(io.decode_hierarchy(data)) == data


def test_rule_hierarchies_round_trip():
    rng = random.Random(6)
    done = 0
    for _ in range(40):
        rec = random_hierarchy_application(rng, random_two_level(rng))
        if rec is None:
            continue
        data = io.encode_rule_hierarchy(rec.rule)
        back = io.decode_rule_hierarchy(data)
        assert back.rules == rec.rule.rules
        assert io.encode_rule_hierarchy(back) == data
        done += 1
    assert done > 30


def test_hierarchy_edge_key_must_name_known_nodes():
    doc = {"graphs": {"G": {"nodes": {"a": {}}}}, "typing": {"G->X": {"a": "a"}}}
    with pytest.raises(SchemaError) as exc:
        io.hierarchy_from_doc(doc)
    assert exc.value.field == "hierarchy.typing.G->X"


def test_hierarchy_typing_must_be_a_homomorphism():
    doc = {"graphs": {"G": {"nodes": {"a": {}, "b": {}}, "edges": {"a|b": {}}},
                      "T": {"nodes": {"x": {}, "y": {}}}},
           "typing": {"G->T": {"a": "x", "b": "y"}}}
    with pytest.raises(SchemaError) as exc:
        io.hierarchy_from_doc(doc)
    assert exc.value.field == "hierarchy.typing.G->T"


def test_cyclic_hierarchy_is_schema_error():
    g = {"nodes": {"a": {}}}
    doc = {"graphs": {"A": g, "B": g}, "typing": {"A->B": {"a": "a"}, "B->A": {"a": "a"}}}
    with pytest.raises(SchemaError, match="cycle"):
        io.hierarchy_from_doc(doc)


def test_rule_hierarchy_needs_all_three_components():
    r = io.rule_to_doc(clone_rule())
    doc = {"rules": {"G": r, "T": r}, "typing": {"G->T": {"lambda": {"c": "c"}}}}
    with pytest.raises(SchemaError, match="lambda, pi and rho"):
        io.rule_hierarchy_from_doc(doc)


def test_canonical_json_is_compact_and_sorted():
    assert io.dumps({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
    assert json.loads(io.dumps({"x": "é"})) == {"x": "é"}


def test_truncated_document_is_parse_error():
    with pytest.raises(ParseError):
        io.decode_rule(io.encode_rule(clone_rule())[:-3])
