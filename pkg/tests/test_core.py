import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcsb.core import (
    INT,
    STRING,
    BagType,
    Const,
    Project,
    Record,
    RecordType,
    SetComp,
    SetType,
    SingletonSet,
    Var,
    alpha_eq,
    fresh,
    is_flat_collection,
    rename_binder,
    replace_at,
    subst,
    subterm,
    walk,
)
from nrcsb.syntax import parse_term

from conftest import raw_terms


def nameless(t, env=()):
    """Locally nameless form: bound variables become indices, free ones stay names."""
    if isinstance(t, Var):
        for i, name in enumerate(reversed(env)):
            if name == t.name:
                return ("bound", i)
        return ("free", t.name)
    if isinstance(t, SetComp) or type(t).__name__ == "BagComp":
        return (type(t).__name__, nameless(t.source, env), nameless(t.body, env + (t.var,)))
    if isinstance(t, Record):
        return ("Record", tuple(sorted((l, nameless(m, env)) for l, m in t.fields)))
    extra = t.label if isinstance(t, Project) else t.c if isinstance(t, Const) else None
    return (type(t).__name__, extra, tuple(nameless(k, env) for k in t.children()))


def nameless_subst(n, x, r):
    """Substitution on the nameless form needs no renaming and, as ``r`` is
    locally closed, no shifting."""
    if n[0] == "free":
        return r if n[1] == x else n
    if n[0] == "bound":
        return n
    if n[0] in ("SetComp", "BagComp"):
        return (n[0], nameless_subst(n[1], x, r), nameless_subst(n[2], x, r))
    if n[0] == "Record":
        return ("Record", tuple((l, nameless_subst(m, x, r)) for l, m in n[1]))
    return (n[0], n[1], tuple(nameless_subst(k, x, r) for k in n[2]))


@settings(max_examples=300, deadline=None)
@given(raw_terms, st.sampled_from(("x", "y", "z")), raw_terms)
def test_subst_agrees_with_nameless_oracle(t, x, r):
    assert nameless(subst(t, x, r)) == nameless_subst(nameless(t), x, nameless(r))


@settings(max_examples=200, deadline=None)
@given(raw_terms)
def test_alpha_eq_matches_nameless_equality(t):
    assert alpha_eq(t, t)
    for path, node in walk(t):
        if isinstance(node, SetComp) or type(node).__name__ == "BagComp":
            renamed = rename_binder(node, fresh(node.var, t.names))
            other = replace_at(t, path, renamed)
            assert alpha_eq(t, other)
            assert nameless(t) == nameless(other)


@settings(max_examples=200, deadline=None)
@given(raw_terms, raw_terms)
def test_alpha_eq_is_nameless_equality(a, b):
    # annotations of empties are ignored by both sides
    assert alpha_eq(a, b) == (nameless(a) == nameless(b))


def test_subst_avoids_capture():
    t = parse_term("for y in T yield set {<a = x, b = y>}")
    out = subst(t, "x", Var("y"))
    assert out.var != "y"
    assert "y" in out.fv
    assert alpha_eq(out, parse_term("for y1 in T yield set {<a = y, b = y1>}"))


def test_subst_stops_at_shadowing_binder():
    t = parse_term("for x in x yield set {x}")
    out = subst(t, "x", Var("T"))
    assert alpha_eq(out, parse_term("for x in T yield set {x}"))


def test_free_vars_and_names():
    t = parse_term("for x in T, y in U yield set where set x.a = z.a do {y}")
    assert t.fv == {"T", "U", "z"}
    assert {"x", "y"} <= t.names


@pytest.mark.parametrize(
    "base,avoid,expected",
    [("x", {"x"}, "x1"), ("x", {"x", "x1"}, "x2"), ("x3", {"x3"}, "x1"), ("t", set(), "t1")],
)
def test_fresh_uses_smallest_free_suffix(base, avoid, expected):
    assert fresh(base, avoid) == expected


def test_record_type_equality_ignores_field_order():
    a = RecordType((("a", INT), ("b", STRING)))
    b = RecordType((("b", STRING), ("a", INT)))
    assert a == b and hash(a) == hash(b)
    with pytest.raises(ValueError):
        RecordType((("a", INT), ("a", INT)))


def test_flatness():
    flat = RecordType((("a", INT),))
    assert is_flat_collection(SetType(flat))
    assert is_flat_collection(BagType(flat))
    assert not is_flat_collection(SetType(RecordType((("a", SetType(flat)),))))


def test_paths():
    t = parse_term("{<a = 1>} union {<a = 2>}")
    assert subterm(t, (1, 0, 0)) == Const("2")
    t2 = replace_at(t, (1, 0, 0), Const("3"))
    assert subterm(t2, (1, 0, 0)) == Const("3")
    assert subterm(t, (1, 0, 0)) == Const("2")
    assert [p for p, _ in walk(SingletonSet(Var("x")))] == [(), (0,)]
