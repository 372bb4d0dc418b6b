import sqlite3
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcsb.core import BOOL, BagType, RecordType
from nrcsb.pipeline import compile_to_sql
from nrcsb.propgen import GenConfig, Generator, SqlGenerator
from nrcsb.semantics import BagV, SetV, evaluate, load_database
from nrcsb.sqlbridge import (
    BinOp,
    Column,
    FromItem,
    Literal,
    Not,
    NotTranslatable,
    Select,
    SqlError,
    SqlSyntaxError,
    SqlUnion,
    Table,
    UnknownColumn,
    UnknownTable,
    nrc_to_sql,
    parse_sql,
    print_expr,
    print_sql,
    quote_ident,
    sql_to_nrc,
)
from nrcsb.syntax import parse_term, parse_type, pretty_print
from nrcsb.typecheck import typecheck

SCHEMA = {
    "T": parse_type("{|<A : Int, B : String>|}"),
    "U": parse_type("{|<A : Int, C : String>|}"),
    "S": parse_type("{<A : Int>}"),
}


# -- parsing and printing


def test_parse_select():
    q = parse_sql("select distinct x.A as A, x.B from T as x, U y where x.A = y.A and not x.B <> 'q';")
    assert q == Select(
        True,
        ((Column("x", "A"), "A"), (Column("x", "B"), "B")),
        (FromItem(Table("T"), "x"), FromItem(Table("U"), "y")),
        BinOp("AND", BinOp("=", Column("x", "A"), Column("y", "A")), Not(BinOp("<>", Column("x", "B"), Literal("q")))),
    )


def test_union_associates_left_and_accepts_bare_tables():
    q = parse_sql("T UNION ALL (SELECT t.A AS A, t.B AS B FROM T AS t) UNION T")
    assert isinstance(q, SqlUnion) and not q.all and q.right == Table("T")
    assert isinstance(q.left, SqlUnion) and q.left.all


def test_star_is_desugared_with_schema():
    q = parse_sql("SELECT * FROM T AS x", SCHEMA)
    assert q.projections == ((Column("x", "A"), "A"), (Column("x", "B"), "B"))


def test_star_with_duplicate_columns_is_rejected():
    with pytest.raises(SqlError):
        parse_sql("SELECT * FROM T AS x, U AS y", SCHEMA)


@pytest.mark.parametrize(
    "text,exc",
    [
        ("SELECT x.A AS A FROM Nope AS x", UnknownTable),
        ("SELECT x.Z AS A FROM T AS x", UnknownColumn),
        ("SELECT q.A AS A FROM T AS x", UnknownColumn),
        ("SELECT x.A AS A FROM T AS x WHERE", SqlSyntaxError),
        ("SELECT A AS A FROM T AS x", SqlSyntaxError),
        ("SELECT x.A AS A, x.A AS A FROM T AS x", SqlError),
        ("SELECT x.A AS A FROM T AS x, U AS x", SqlError),
        ("SELECT 'unterminated AS A", SqlSyntaxError),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_sql(text, SCHEMA)


def test_syntax_error_position():
    with pytest.raises(SqlSyntaxError) as info:
        parse_sql("SELECT x.A AS A\nFROM T AS x WHERE x.A =")
    assert info.value.line == 2


def test_quoting():
    assert quote_ident("select") == '"select"'
    assert quote_ident('we"ird') == '"we""ird"'
    assert quote_ident("plain_1") == "plain_1"
    q = parse_sql('SELECT "from"."x y" AS "a""b" FROM "T" AS "from" -- comment\n')
    assert parse_sql(print_sql(q)) == q
    assert print_expr(Literal("it's")) == "'it''s'"


def test_expression_precedence():
    e = BinOp("AND", BinOp("OR", Literal(True), Literal(False)), Not(BinOp("=", Literal(1), Literal(2))))
    assert print_expr(e) == "(TRUE OR FALSE) AND NOT 1 = 2"


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 100_000))
def test_print_parse_round_trip(seed):
    g = Generator(GenConfig(seed=seed))
    schema = g.schema()
    sg = SqlGenerator(g, schema)
    q = sg.query(sg.row_type())
    assert parse_sql(print_sql(q), schema) == q


# -- translation


def test_sql_to_nrc_shapes():
    t = sql_to_nrc(parse_sql("SELECT DISTINCT x.A AS A FROM T AS x WHERE x.A = 1"))
    assert pretty_print(t) == "iota delta (for x in T yield bag where bag x.A = 1 do {|<A = x.A>|})"
    t = sql_to_nrc(parse_sql("T UNION U"))
    assert pretty_print(t) == "iota delta (T unionall U)"


def test_sql_to_nrc_promotes_set_tables_and_renames_clashing_aliases():
    t = sql_to_nrc(parse_sql("SELECT T.A AS A FROM S AS T, T AS x"), SCHEMA)
    assert typecheck(SCHEMA, t) == BagType(RecordType((("A", parse_type("Int")),)))
    assert t.var not in ("T", "S") and pretty_print(t.source) == "iota S"


def test_sql_to_nrc_rejects_non_nrc_names():
    with pytest.raises(SqlError):
        sql_to_nrc(parse_sql('SELECT x.A AS "for" FROM T AS x'))


def test_nrc_to_sql_requires_translatable_normal_form():
    t = parse_term("for x in T, y in iota S yield bag {|<A = x.A>|}")
    with pytest.raises(NotTranslatable):
        nrc_to_sql(t, SCHEMA)
    assert "FROM T AS x, S AS y" in print_sql(nrc_to_sql(t, SCHEMA, extension=True))


def test_empty_query():
    q = compile_to_sql(parse_term("emptybag : {|<A : Int, B : String>|}"), {}).query
    assert print_sql(q) == "SELECT 0 AS A, '' AS B WHERE FALSE"


# -- an independent engine: execute the emitted SQL in SQLite


def sqlite_text(q):
    """SQLite lacks bare-table and parenthesized UNION operands; wrap them."""
    if isinstance(q, Table):
        return f"SELECT * FROM {quote_ident(q.name)}"
    if isinstance(q, SqlUnion):
        # compound selects associate to the left, so only a right operand needs wrapping
        op = "UNION ALL" if q.all else "UNION"
        right = sqlite_text(q.right)
        if not isinstance(q.right, Select):
            right = f"SELECT * FROM ({right})"
        return f"{sqlite_text(q.left)} {op} {right}"
    parts = ["SELECT"]
    if q.distinct:
        parts.append("DISTINCT")
    parts.append(", ".join(f"{print_expr(e)} AS {quote_ident(a)}" for e, a in q.projections))
    if q.from_:
        items = []
        for item in q.from_:
            src = quote_ident(item.source.name) if isinstance(item.source, Table) else f"({sqlite_text(item.source)})"
            items.append(f"{src} AS {quote_ident(item.alias)}")
        parts.append("FROM " + ", ".join(items))
    if q.where is not None:
        parts.append("WHERE " + print_expr(q.where))
    return " ".join(parts)


def run_sqlite(q, schema, db, row_type):
    con = sqlite3.connect(":memory:")
    for name, ty in schema.items():
        labels = [l for l, _ in ty.elem.fields]
        con.execute(f"CREATE TABLE {quote_ident(name)} ({', '.join(map(quote_ident, labels))})")
        value = db[name]
        rows = value.items if isinstance(value, BagV) else ((r, 1) for r in value.elems)
        for rec, n in rows:
            for _ in range(n):
                con.execute(
                    f"INSERT INTO {quote_ident(name)} VALUES ({', '.join('?' * len(labels))})",
                    [rec[l] for l in labels],
                )
    cur = con.execute(sqlite_text(q))
    names = [d[0] for d in cur.description]
    types = dict(row_type.fields)
    out = Counter()
    for row in cur.fetchall():
        out[tuple(sorted((n, bool(v) if types[n] == BOOL else v) for n, v in zip(names, row)))] += 1
    return out


def as_counter(value):
    return Counter({tuple(sorted(rec.fields)): n for rec, n in value.items})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 100_000))
def test_generated_sql_agrees_with_sqlite(seed):
    g = Generator(GenConfig(seed=seed))
    schema = g.schema()
    sg = SqlGenerator(g, schema)
    q = sg.query(sg.row_type())
    t = sql_to_nrc(q, schema)
    ty = typecheck(schema, t)
    db = g.database(schema)
    assert run_sqlite(q, schema, db, ty.elem) == as_counter(evaluate(db, t))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 100_000))
def test_compiled_nrc_agrees_with_sqlite(seed):
    g = Generator(GenConfig(seed=seed))
    schema = g.schema()
    t, ty = g.query(schema)
    q = compile_to_sql(t, schema).query
    db = g.database(schema)
    value = evaluate(db, t)
    if isinstance(value, SetV):
        expected = Counter({tuple(sorted(r.fields)): 1 for r in value.elems})
    else:
        expected = as_counter(value)
    assert run_sqlite(q, schema, db, ty.elem) == expected


def test_join_sample_in_sqlite(samples):
    db = load_database(samples / "join.json")
    t = parse_term((samples / "join.nrc").read_text())
    q = compile_to_sql(t, db.types, extension=True).query
    ty = typecheck(db.types, t)
    assert run_sqlite(q, db.types, db.values, ty.elem) == as_counter(evaluate(db.values, t))
