"""Finite-set-valued attributes.

An attribute set maps string keys to non-empty frozensets of scalar values.
Scalars are stored tagged with their type so that ``1``, ``True`` and ``"1"``
are three distinct values (Python would otherwise collapse ``1`` and ``True``).
"""
from __future__ import annotations

from typing import Any, Dict, FrozenSet, Iterable, Mapping, Tuple

Value = Tuple[str, Any]
AttrSet = Dict[str, FrozenSet[Value]]

_TAGS = {"b": bool, "i": int, "s": str}


def tag(value) -> Value:
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, int):
        return ("i", value)
    if isinstance(value, str):
        return ("s", value)
    raise TypeError("unsupported attribute value %r (expected str, int or bool)" % (value,))


def untag(value: Value):
    return value[1]


def is_tagged(value) -> bool:
    return (isinstance(value, tuple) and len(value) == 2 and value[0] in _TAGS
            and isinstance(value[1], _TAGS[value[0]])
            and (value[0] == "b" or not isinstance(value[1], bool)))


def sort_key(value: Value):
    return value


def normalize(attrs: Mapping[str, Any] | None, drop_empty: bool = True) -> AttrSet:
    """Build an attribute set from plain python data.

    Values may be a single scalar or an iterable of scalars; already tagged
    values are accepted as-is.
    """
    result: AttrSet = {}
    if not attrs:
        return result
    for key, values in attrs.items():
        if not isinstance(key, str):
            raise TypeError("attribute keys must be strings, got %r" % (key,))
        if isinstance(values, (str, int, bool)) or is_tagged(values):
            values = [values]
        tagged = frozenset(v if is_tagged(v) else tag(v) for v in values)
        if tagged or not drop_empty:
            result[key] = tagged
    return result


def plain(attrs: Mapping[str, FrozenSet[Value]]) -> Dict[str, list]:
    """Untagged, sorted view of an attribute set (for display and JSON)."""
    return {k: [untag(v) for v in sorted(vals, key=sort_key)]
            for k, vals in sorted(attrs.items())}


def union(*sets: Mapping[str, FrozenSet[Value]]) -> AttrSet:
    result: Dict[str, set] = {}
    for attrs in sets:
        for key, values in attrs.items():
            result.setdefault(key, set()).update(values)
    return {k: frozenset(v) for k, v in result.items() if v}


def intersection(a: Mapping[str, FrozenSet[Value]],
                 b: Mapping[str, FrozenSet[Value]]) -> AttrSet:
    result = {}
    for key, values in a.items():
        common = values & b.get(key, frozenset())
        if common:
            result[key] = frozenset(common)
    return result


def difference(a: Mapping[str, FrozenSet[Value]],
               b: Mapping[str, FrozenSet[Value]]) -> AttrSet:
    result = {}
    for key, values in a.items():
        rest = values - b.get(key, frozenset())
        if rest:
            result[key] = frozenset(rest)
    return result


def included(a: Mapping[str, FrozenSet[Value]],
             b: Mapping[str, FrozenSet[Value]]) -> bool:
    """True if every value of ``a`` is present under the same key of ``b``."""
    for key, values in a.items():
        if values and not values <= b.get(key, frozenset()):
            return False
    return True


def equal(a: Mapping[str, FrozenSet[Value]],
          b: Mapping[str, FrozenSet[Value]]) -> bool:
    return included(a, b) and included(b, a)


def iter_values(attrs: Mapping[str, Iterable[Value]]):
    for key, values in attrs.items():
        for value in values:
            yield key, value
