"""AST of the SQL fragment ``SELECT [DISTINCT] … FROM … WHERE …`` with ``UNION [ALL]``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union as TUnion


@dataclass(frozen=True)
class Column:
    """``alias.field``."""

    alias: str
    field: str


@dataclass(frozen=True)
class Literal:
    value: TUnion[bool, int, str]


@dataclass(frozen=True)
class BinOp:
    """``op`` is one of ``=``, ``<>``, ``<``, ``AND``, ``OR``."""

    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


Expr = TUnion[Column, Literal, BinOp, Not]


@dataclass(frozen=True)
class Table:
    """A table name used as a query, e.g. a ``UNION`` operand or FROM source."""

    name: str


@dataclass(frozen=True)
class FromItem:
    source: "Query"
    alias: str


@dataclass(frozen=True)
class Select:
    distinct: bool
    projections: tuple[tuple[Expr, str], ...]
    from_: tuple[FromItem, ...]
    where: Optional[Expr] = None

    def __post_init__(self):
        aliases = [item.alias for item in self.from_]
        if len(set(aliases)) != len(aliases):
            raise ValueError(f"duplicate FROM aliases {aliases}")


@dataclass(frozen=True)
class SqlUnion:
    all: bool
    left: "Query"
    right: "Query"


Query = TUnion[Table, Select, SqlUnion]
SqlQuery = Query


def columns_of(q: Query, schema) -> tuple[str, ...]:
    """Output column names of ``q``; ``schema`` maps table names to row types."""
    if isinstance(q, Table):
        if schema is None or q.name not in schema:
            from .parser import UnknownTable

            raise UnknownTable(q.name)
        return schema[q.name].elem.labels
    if isinstance(q, Select):
        return tuple(alias for _, alias in q.projections)
    return columns_of(q.left, schema)
