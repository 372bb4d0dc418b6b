"""Recursive-descent parser for the SQL fragment (grammar in ``docs/grammar.md``)."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from ..core import Type
from .ast import BinOp, Column, FromItem, Literal, Not, Query, Select, SqlUnion, Table, columns_of
from .printer import SQL_KEYWORDS


class SqlError(Exception):
    pass


class SqlSyntaxError(SqlError):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class UnknownTable(SqlError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown table {name!r}")


class UnknownColumn(SqlError):
    def __init__(self, alias: str, column: str):
        self.alias = alias
        self.column = column
        super().__init__(f"unknown column {alias}.{column}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<int>-?\d+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<qident>"(?:[^"]|"")+")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym><>|!=|[(),.*=<;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "kw", "ident", "int", "string", "sym", "eof"
    text: str
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind, raw = m.lastgroup, m.group()
        if kind == "ident" and raw.upper() in SQL_KEYWORDS:
            out.append(_Tok("kw", raw.upper(), None, line, col))
        elif kind == "ident":
            out.append(_Tok("ident", raw, raw, line, col))
        elif kind == "qident":
            out.append(_Tok("ident", raw, raw[1:-1].replace('""', '"'), line, col))
        elif kind == "int":
            out.append(_Tok("int", raw, int(raw), line, col))
        elif kind == "string":
            out.append(_Tok("string", raw, raw[1:-1].replace("''", "'"), line, col))
        elif kind == "sym":
            out.append(_Tok("sym", "<>" if raw == "!=" else raw, None, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = pos + raw.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", None, line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str, schema: Optional[Mapping[str, Type]]):
        self.toks = _tokenize(text)
        self.i = 0
        self.schema = schema

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("kw", "sym") and tok.text in texts

    def advance(self) -> _Tok:
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message: str):
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise SqlSyntaxError(f"{message}, found {found}", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def ident(self) -> str:
        if self.peek().kind != "ident":
            self.fail("expected an identifier")
        return self.advance().value

    # -- queries

    def query(self) -> Query:
        left = self.operand()
        while self.at("UNION"):
            self.advance()
            all_ = self.at("ALL")
            if all_:
                self.advance()
            left = SqlUnion(all_, left, self.operand())
        return left

    def operand(self) -> Query:
        if self.at("("):
            self.advance()
            q = self.query()
            self.expect(")")
            return q
        if self.at("SELECT"):
            return self.select()
        if self.peek().kind == "ident":
            return Table(self.ident())
        self.fail("expected SELECT, a table name or '('")

    def select(self) -> Select:
        self.expect("SELECT")
        distinct = self.at("DISTINCT")
        if distinct:
            self.advance()
        star_tok = None
        raw_projections = []
        if self.at("*"):
            star_tok = self.advance()
        else:
            raw_projections.append(self.projection())
            while self.at(","):
                self.advance()
                raw_projections.append(self.projection())
        from_ = []
        if self.at("FROM"):
            self.advance()
            from_.append(self.from_item())
            while self.at(","):
                self.advance()
                from_.append(self.from_item())
        where = None
        if self.at("WHERE"):
            self.advance()
            where = self.expr()
        aliases = [item.alias for item in from_]
        for a in aliases:
            if aliases.count(a) > 1:
                raise SqlSyntaxError(f"duplicate FROM alias {a!r}", self.peek().line, self.peek().col)
        known = {item.alias: self._columns(item.source) for item in from_}
        if star_tok is not None:
            projections = []
            for item in from_:
                if known[item.alias] is None:
                    raise UnknownTable(item.source.name)
                projections.extend((Column(item.alias, c), c) for c in known[item.alias])
            if not projections:
                raise SqlSyntaxError("SELECT * needs a FROM clause", star_tok.line, star_tok.col)
        else:
            projections = []
            for expr, alias, tok in raw_projections:
                if alias is None:
                    if not isinstance(expr, Column):
                        raise SqlSyntaxError("computed projection needs an AS alias", tok.line, tok.col)
                    alias = expr.field
                projections.append((expr, alias))
        labels = [a for _, a in projections]
        for a in labels:
            if labels.count(a) > 1:
                raise SqlSyntaxError(f"duplicate output column {a!r}", self.peek().line, self.peek().col)
        for expr, _ in projections:
            self._check_columns(expr, known)
        if where is not None:
            self._check_columns(where, known)
        return Select(distinct, tuple(projections), tuple(from_), where)

    def _columns(self, source: Query):
        """Columns of ``source``; ``None`` when there is no schema to consult."""
        if self.schema is None:
            return None
        return columns_of(source, self.schema)

    def _check_columns(self, e, known):
        if isinstance(e, Column):
            if e.alias not in known:
                raise UnknownColumn(e.alias, e.field)
            cols = known[e.alias]
            if cols is not None and e.field not in cols:
                raise UnknownColumn(e.alias, e.field)
        elif isinstance(e, BinOp):
            self._check_columns(e.left, known)
            self._check_columns(e.right, known)
        elif isinstance(e, Not):
            self._check_columns(e.arg, known)

    def projection(self):
        tok = self.peek()
        expr = self.expr()
        alias = None
        if self.at("AS"):
            self.advance()
            alias = self.ident()
        return expr, alias, tok

    def from_item(self) -> FromItem:
        if self.at("("):
            self.advance()
            source = self.query()
            self.expect(")")
            if self.at("AS"):
                self.advance()
            if self.peek().kind != "ident":
                self.fail("a FROM subquery needs an alias")
            return FromItem(source, self.ident())
        name = self.ident()
        alias = name
        if self.at("AS"):
            self.advance()
            alias = self.ident()
        elif self.peek().kind == "ident":
            alias = self.ident()
        return FromItem(Table(name), alias)

    # -- expressions

    def expr(self):
        left = self.conj()
        while self.at("OR"):
            self.advance()
            left = BinOp("OR", left, self.conj())
        return left

    def conj(self):
        left = self.neg()
        while self.at("AND"):
            self.advance()
            left = BinOp("AND", left, self.neg())
        return left

    def neg(self):
        if self.at("NOT"):
            self.advance()
            return Not(self.neg())
        return self.comparison()

    def comparison(self):
        left = self.atom()
        if self.at("=", "<>", "<"):
            op = self.advance().text
            left = BinOp(op, left, self.atom())
            if self.at("=", "<>", "<"):
                self.fail("comparisons do not associate; add parentheses")
        return left

    def atom(self):
        tok = self.peek()
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("TRUE", "FALSE"):
            self.advance()
            return Literal(tok.text == "TRUE")
        if tok.kind in ("int", "string"):
            self.advance()
            return Literal(tok.value)
        if tok.kind == "ident":
            alias = self.ident()
            if not self.at("."):
                self.fail(f"column references must be qualified, as in {alias}.column")
            self.advance()
            return Column(alias, self.ident())
        self.fail("expected a column, literal or '('")


def parse_sql(text: str, schema: Optional[Mapping[str, Type]] = None) -> Query:
    """Parse one query; ``schema`` maps table names to collection types.

    With a schema, ``SELECT *`` is expanded to named projections and column
    references are checked against the known columns.
    """
    p = _Parser(text, schema)
    q = p.query()
    if p.at(";"):
        p.advance()
    if p.peek().kind != "eof":
        p.fail("unexpected trailing input")
    return q
