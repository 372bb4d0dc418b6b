"""The interpreter against an independent list-based oracle."""
import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcsb import constants
from nrcsb.core import (
    BagComp,
    BagUnion,
    Const,
    Dedup,
    EmptyBag,
    EmptySet,
    Project,
    Promote,
    Record,
    SetComp,
    SingletonBag,
    SingletonSet,
    Union,
    Var,
    WhereBag,
    WhereSet,
)
from nrcsb.propgen import GenConfig, Generator
from nrcsb.semantics import (
    BagV,
    DatabaseError,
    EvalError,
    Rec,
    SetV,
    bag_leq,
    database_to_json,
    evaluate,
    load_database,
    render_value,
    value_to_json,
)
from nrcsb.syntax import parse_term


def to_oracle(v):
    if isinstance(v, Rec):
        return ("rec", tuple((l, to_oracle(x)) for l, x in v.fields))
    if isinstance(v, SetV):
        return ("set", tuple(sorted({to_oracle(x) for x in v.elems}, key=repr)))
    if isinstance(v, BagV):
        out = []
        for x, n in v.items:
            out += [to_oracle(x)] * n
        return ("bag", tuple(sorted(out, key=repr)))
    return v


def mk_set(items):
    return ("set", tuple(sorted(set(items), key=repr)))


def mk_bag(items):
    return ("bag", tuple(sorted(items, key=repr)))


def oracle(env, t):
    """Bags as lists of occurrences, sets as duplicate-free lists."""
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        args = [oracle(env, a) for a in t.args]
        ops = {
            "and": lambda a, b: a and b,
            "or": lambda a, b: a or b,
            "not": lambda a: not a,
            "=": lambda a, b: a == b,
            "!=": lambda a, b: a != b,
            "<": lambda a, b: a < b,
        }
        if not args:
            return constants.literal_value(t.c)
        return ops[t.c](*args)
    if isinstance(t, Record):
        return ("rec", tuple(sorted((l, oracle(env, m)) for l, m in t.fields)))
    if isinstance(t, Project):
        return dict(oracle(env, t.term)[1])[t.label]
    if isinstance(t, EmptySet):
        return mk_set([])
    if isinstance(t, EmptyBag):
        return mk_bag([])
    if isinstance(t, SingletonSet):
        return mk_set([oracle(env, t.elem)])
    if isinstance(t, SingletonBag):
        return mk_bag([oracle(env, t.elem)])
    if isinstance(t, Union):
        return mk_set(oracle(env, t.left)[1] + oracle(env, t.right)[1])
    if isinstance(t, BagUnion):
        return mk_bag(oracle(env, t.left)[1] + oracle(env, t.right)[1])
    if isinstance(t, (WhereSet, WhereBag)):
        if oracle(env, t.cond):
            return oracle(env, t.body)
        return mk_set([]) if isinstance(t, WhereSet) else mk_bag([])
    if isinstance(t, SetComp):
        out = []
        for x in oracle(env, t.source)[1]:
            out += oracle({**env, t.var: x}, t.body)[1]
        return mk_set(out)
    if isinstance(t, BagComp):
        out = []
        for x in oracle(env, t.source)[1]:  # one iteration per occurrence
            out += oracle({**env, t.var: x}, t.body)[1]
        return mk_bag(out)
    if isinstance(t, Dedup):
        return mk_set(oracle(env, t.term)[1])
    if isinstance(t, Promote):
        return mk_bag(oracle(env, t.term)[1])
    raise TypeError(t)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 100_000))
def test_evaluate_agrees_with_oracle(seed):
    g = Generator(GenConfig(seed=seed, allow_iota_in_bag_comp=True, nested_records=True, allow_nonflat=True))
    schema = g.schema()
    t, _ = g.query(schema)
    db = g.database(schema)
    expected = oracle({k: to_oracle(v) for k, v in db.items()}, t)
    assert to_oracle(evaluate(db, t)) == expected


def test_bag_multiplicities():
    T = BagV.of(Rec.of({"a": 1}), Rec.of({"a": 1}), Rec.of({"a": 2}))
    out = evaluate({"T": T}, parse_term("for x in T, y in T yield bag {|<a = x.a>|}"))
    assert out.counts == {Rec.of({"a": 1}): 6, Rec.of({"a": 2}): 3}
    assert evaluate({"T": T}, parse_term("delta T")) == SetV.of(Rec.of({"a": 1}), Rec.of({"a": 2}))
    assert len(evaluate({"T": T}, parse_term("iota delta T unionall T"))) == 5
    assert bag_leq(evaluate({"T": T}, parse_term("iota delta T")), T)


def test_eval_errors():
    with pytest.raises(EvalError):
        evaluate({}, parse_term("x"))
    with pytest.raises(EvalError):
        evaluate({"T": 3}, parse_term("delta T"))


def test_render_and_json_are_canonical():
    v = BagV.of(Rec.of({"b": "x", "a": 2}), Rec.of({"a": 1, "b": "y"}), Rec.of({"a": 1, "b": "y"}))
    assert render_value(v) == '{|<a = 1, b = "y">, <a = 1, b = "y">, <a = 2, b = "x">|}'
    assert value_to_json(v) == {
        "bag": [{"value": {"a": 1, "b": "y"}, "count": 2}, {"value": {"a": 2, "b": "x"}, "count": 1}]
    }


def test_database_round_trip(samples):
    db = load_database(samples / "join.json")
    again = load_database(database_to_json(db.types, db.values))
    assert again.types == db.types and again.values == db.values


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"tables": {"T": {"rows": []}}},
        {"tables": {"T": {"schema": {"a": "Float"}, "rows": []}}},
        {"tables": {"T": {"schema": {"a": "Int"}, "rows": [{"b": 1}]}}},
        {"tables": {"T": {"schema": {"a": "Int"}, "rows": [{"a": "1"}]}}},
        {"tables": {"T": {"schema": {"a": "Int"}, "rows": [{"a": True}]}}},
        {"tables": {"T": {"schema": {"a": "Int"}}}},
        {"tables": {"T": {"schema": {"a": "Int"}, "kind": "list", "rows": []}}},
    ],
)
def test_database_errors(doc):
    with pytest.raises(DatabaseError):
        load_database(doc)


def test_schema_without_rows(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"tables": {"T": {"schema": {"a": "Int"}, "kind": "set"}}}))
    db = load_database(path, require_rows=False)
    assert str(db.types["T"]) == "{<a : Int>}" and db.values == {}
