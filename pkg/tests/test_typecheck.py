import pytest

from nrcsb.core import INT, STRING, BagType, RecordType, SetType
from nrcsb.semantics import load_database
from nrcsb.syntax import parse_term, parse_type
from nrcsb.typecheck import (
    NrcTypeError,
    UnannotatedEmpty,
    annotate_empties,
    check_flat_delta_iota,
    check_no_iota_in_bag_comprehension,
    infer_types,
    typecheck,
)

ENV = {
    "T": parse_type("{|<A : Int, B : String>|}"),
    "S": parse_type("{<A : Int>}"),
    "N": parse_type("{<A : Int, F : {<A : Int>}>}"),
}


def test_ecommerce_sample(samples):
    db = load_database(samples / "ecommerce.json")
    t = parse_term((samples / "ecommerce.nrc").read_text())
    assert typecheck(db.types, t) == BagType(RecordType((("Id", INT),)))


@pytest.mark.parametrize(
    "text,expected",
    [
        ("for x in T yield bag {|<B = x.B>|}", "{|<B : String>|}"),
        ("delta T", "{<A : Int, B : String>}"),
        ("iota S unionall T.A", None),
        ("for x in N, y in x.F yield set {y}", "{<A : Int>}"),
        ("where set 1 < 2 and \"a\" = \"b\" do S", "{<A : Int>}"),
        ("S union empty", "{<A : Int>}"),
        ("emptybag unionall iota S", "{|<A : Int>|}"),
        ("<a = 1, b = true>.b", "Bool"),
    ],
)
def test_types(text, expected):
    t = parse_term(text)
    if expected is None:
        with pytest.raises(NrcTypeError):
            typecheck(ENV, t)
    else:
        assert str(typecheck(ENV, t)) == str(parse_type(expected))


@pytest.mark.parametrize(
    "text,rule",
    [
        ("Q", "var"),
        ("<a = 1>.b", "project"),
        ("for x in T yield set {x}", "set-comp"),
        ("for x in S yield bag {|x|}", "bag-comp"),
        ("S unionall S", "bag-union"),
        ("T union T", "union"),
        ("delta S", "delta"),
        ("iota T", "iota"),
        ("where set 1 do S", "subsumption"),
        ("where bag true do S", "where-bag"),
        ("1 = \"a\"", "subsumption"),
        ("S = S", "const"),
        ("true < false", "const"),
        ("{1, \"a\"}", "subsumption"),
    ],
)
def test_errors_name_the_rule(text, rule):
    with pytest.raises(NrcTypeError) as info:
        typecheck(ENV, parse_term(text))
    assert info.value.rule == rule


def test_unannotated_empty_needs_context():
    with pytest.raises(UnannotatedEmpty):
        typecheck({}, parse_term("empty"))
    assert typecheck({}, parse_term("empty"), SetType(INT)) == SetType(INT)


def test_annotate_empties_fills_types():
    t = annotate_empties(ENV, parse_term("S union empty"))
    assert t.right.ty == RecordType((("A", INT),))


def test_infer_types_records_every_path():
    t = parse_term("for x in S yield set {<B = x.A>}")
    types = infer_types(ENV, t)
    assert types[()] == SetType(RecordType((("B", INT),)))
    assert types[(1, 0, 0)] == INT


def test_error_position():
    with pytest.raises(NrcTypeError) as info:
        typecheck(ENV, parse_term("for x in S\n yield set {x.Z}"))
    assert info.value.pos.line == 2


def test_flatness_lint():
    diags = check_flat_delta_iota(ENV, parse_term("iota N"))
    assert [d.rule for d in diags] == ["flat-delta-iota"]
    assert not check_flat_delta_iota(ENV, parse_term("iota S"))


def test_iota_in_bag_comprehension_lint():
    t = parse_term("for x in T, y in iota S yield bag {|y|}")
    diags = check_no_iota_in_bag_comprehension(t)
    assert [d.rule for d in diags] == ["no-iota-in-bag-comprehension"]
    assert not check_no_iota_in_bag_comprehension(parse_term("iota S unionall T"))
    assert "iota occurs inside a bag comprehension" in diags[0].render("q.nrc")
