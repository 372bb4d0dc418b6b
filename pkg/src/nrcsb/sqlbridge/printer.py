"""Deterministic single-line rendering of SQL queries."""
from __future__ import annotations

import re

from .ast import BinOp, Column, Expr, FromItem, Literal, Not, Query, Select, SqlUnion, Table

SQL_KEYWORDS = frozenset(
    "SELECT DISTINCT FROM WHERE AS UNION ALL AND OR NOT TRUE FALSE".split()
)
_PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# precedence levels, loosest first
_OR, _AND, _NOT, _CMP, _ATOM = range(5)
_LEVEL = {"OR": _OR, "AND": _AND, "=": _CMP, "<>": _CMP, "<": _CMP}


def quote_ident(name: str) -> str:
    if _PLAIN.match(name) and name.upper() not in SQL_KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _literal(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, int):
        return str(value)
    return "'" + value.replace("'", "''") + "'"


def print_expr(e: Expr, level: int = _OR) -> str:
    if isinstance(e, Column):
        return f"{quote_ident(e.alias)}.{quote_ident(e.field)}"
    if isinstance(e, Literal):
        return _literal(e.value)
    if isinstance(e, Not):
        text, mine = "NOT " + print_expr(e.arg, _NOT), _NOT
    else:
        mine = _LEVEL[e.op]
        if mine == _CMP:
            # comparisons do not associate: both operands one level tighter
            text = f"{print_expr(e.left, _CMP + 1)} {e.op} {print_expr(e.right, _CMP + 1)}"
        else:
            text = f"{print_expr(e.left, mine)} {e.op} {print_expr(e.right, mine + 1)}"
    return f"({text})" if mine < level else text


def _from_item(item: FromItem) -> str:
    if isinstance(item.source, Table):
        src = quote_ident(item.source.name)
    else:
        src = f"({print_sql(item.source)})"
    return f"{src} AS {quote_ident(item.alias)}"


def _operand(q: Query) -> str:
    return quote_ident(q.name) if isinstance(q, Table) else f"({print_sql(q)})"


def print_sql(q: Query) -> str:
    if isinstance(q, Table):
        return quote_ident(q.name)
    if isinstance(q, SqlUnion):
        op = "UNION ALL" if q.all else "UNION"
        return f"{_operand(q.left)} {op} {_operand(q.right)}"
    parts = ["SELECT"]
    if q.distinct:
        parts.append("DISTINCT")
    parts.append(", ".join(f"{print_expr(e)} AS {quote_ident(a)}" for e, a in q.projections))
    if q.from_:
        parts.append("FROM " + ", ".join(_from_item(i) for i in q.from_))
    if q.where is not None:
        parts.append("WHERE " + print_expr(q.where))
    return " ".join(parts)
