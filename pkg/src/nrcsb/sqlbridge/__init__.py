"""Bridge between the SQL fragment and NRC(Set,Bag)."""
from .ast import BinOp, Column, FromItem, Literal, Not, Query, Select, SqlQuery, SqlUnion, Table, columns_of
from .parser import SqlError, SqlSyntaxError, UnknownColumn, UnknownTable, parse_sql
from .printer import print_expr, print_sql, quote_ident
from .translate import NotTranslatable, nrc_to_sql, sql_to_nrc

__all__ = [
    "BinOp",
    "Column",
    "FromItem",
    "Literal",
    "Not",
    "NotTranslatable",
    "Query",
    "Select",
    "SqlError",
    "SqlQuery",
    "SqlSyntaxError",
    "SqlUnion",
    "Table",
    "UnknownColumn",
    "UnknownTable",
    "columns_of",
    "nrc_to_sql",
    "parse_sql",
    "print_expr",
    "print_sql",
    "quote_ident",
    "sql_to_nrc",
]
