"""Translations between the SQL fragment and NRC(Set,Bag) terms.

SQL to NRC follows the bag semantics of SQL::

    ⟦T⟧                                  = T              (ιT for set-typed T)
    ⟦SELECT R FROM Q1 AS z1, … WHERE B⟧  = ⨄⟅… ⨄⟅where_bag ⟦B⟧ ⟅⟦R⟧⟆ | z2 ← ⟦Q2⟧⟆ … | z1 ← ⟦Q1⟧⟆
    ⟦SELECT DISTINCT …⟧                  = ιδ⟦SELECT …⟧
    ⟦Q1 UNION ALL Q2⟧                    = ⟦Q1⟧ ⊎ ⟦Q2⟧
    ⟦Q1 UNION Q2⟧                        = ιδ(⟦Q1⟧ ⊎ ⟦Q2⟧)

NRC to SQL maps normal forms clause by clause: set clauses become
``SELECT DISTINCT``, bag clauses plain ``SELECT``, ``∪``/``⊎`` become
``UNION``/``UNION ALL`` and ``ιP`` generators become FROM subqueries.
"""
from __future__ import annotations

import re
from typing import Mapping, Optional

from .. import constants
from ..core import (
    BOOL,
    INT,
    STRING,
    TRUE,
    BagComp,
    BagUnion,
    Const,
    Dedup,
    Project,
    Promote,
    Record,
    RecordType,
    SetType,
    SingletonBag,
    Term,
    Type,
    Var,
    WhereBag,
    fresh,
    lit,
)
from ..normalform import BagClause, BagNF, Blocker, IotaClause, SetNF, TranslatabilityReport, translatable_to_sql
from ..syntax import KEYWORDS
from ..typecheck import NrcTypeError, typecheck
from .ast import BinOp, Column, FromItem, Literal, Not, Query, Select, SqlUnion, Table
from .parser import SqlError

_NRC_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_TO_NRC_OP = {"=": "=", "<>": "!=", "<": "<", "AND": "and", "OR": "or"}
_TO_SQL_OP = {v: k for k, v in _TO_NRC_OP.items()}


class NotTranslatable(Exception):
    def __init__(self, report: TranslatabilityReport):
        self.report = report
        reasons = "; ".join(b.reason for b in report.blockers) or report.verdict
        super().__init__(f"not translatable to SQL: {reasons}")


# ---------------------------------------------------------------------------
# SQL -> NRC


def _nrc_name(name: str, what: str) -> str:
    if not _NRC_IDENT.match(name) or name in KEYWORDS:
        raise SqlError(f"{what} {name!r} is not a valid NRC identifier")
    return name


def _table_names(q: Query, out: set) -> set:
    if isinstance(q, Table):
        out.add(q.name)
    elif isinstance(q, SqlUnion):
        _table_names(q.left, out)
        _table_names(q.right, out)
    else:
        for item in q.from_:
            _table_names(item.source, out)
    return out


def _aliases(q: Query, out: set) -> set:
    if isinstance(q, SqlUnion):
        _aliases(q.left, out)
        _aliases(q.right, out)
    elif isinstance(q, Select):
        for item in q.from_:
            out.add(item.alias)
            _aliases(item.source, out)
    return out


def sql_to_nrc(q: Query, schema: Optional[Mapping[str, Type]] = None) -> Term:
    """NRC term with the same bag semantics as ``q``.

    Table names become free variables; set-typed tables in ``schema`` are
    promoted with ``ι``.  Aliases that coincide with a table name (or are not
    NRC identifiers) are renamed so no binder shadows a table.
    """
    tables = _table_names(q, set())
    for name in sorted(tables):
        _nrc_name(name, "table name")
    avoid = tables | _aliases(q, set())
    return _to_nrc(q, dict(schema or {}), tables, avoid)


def _to_nrc(q: Query, schema, tables, avoid) -> Term:
    if isinstance(q, Table):
        var = Var(q.name)
        return Promote(var) if isinstance(schema.get(q.name), SetType) else var
    if isinstance(q, SqlUnion):
        both = BagUnion(_to_nrc(q.left, schema, tables, avoid), _to_nrc(q.right, schema, tables, avoid))
        return both if q.all else Promote(Dedup(both))
    names = {}
    for item in q.from_:
        name = item.alias
        if name in tables or not _NRC_IDENT.match(name) or name in KEYWORDS:
            name = fresh("a" if not _NRC_IDENT.match(name) or name in KEYWORDS else name, avoid)
            avoid.add(name)
        names[item.alias] = name
    row = Record(tuple((_nrc_name(a, "column name"), _expr_to_nrc(e, names)) for e, a in q.projections))
    cond = _expr_to_nrc(q.where, names) if q.where is not None else TRUE
    body: Term = WhereBag(cond, SingletonBag(row))
    for item in reversed(q.from_):
        body = BagComp(body, names[item.alias], _to_nrc(item.source, schema, tables, avoid))
    return Promote(Dedup(body)) if q.distinct else body


def _expr_to_nrc(e, names) -> Term:
    if isinstance(e, Column):
        return Project(Var(names[e.alias]), _nrc_name(e.field, "column name"))
    if isinstance(e, Literal):
        return lit(e.value)
    if isinstance(e, Not):
        return Const("not", (_expr_to_nrc(e.arg, names),))
    return Const(_TO_NRC_OP[e.op], (_expr_to_nrc(e.left, names), _expr_to_nrc(e.right, names)))


# ---------------------------------------------------------------------------
# NRC -> SQL

_DEFAULTS = {INT: 0, STRING: "", BOOL: False}


class _Emitter:
    def __init__(self, t: Term, env: Optional[Mapping[str, Type]]):
        self.t = t
        self.env = env
        self.used = set(t.names) | set(env or ())
        self.counter = 0

    def synth_alias(self) -> str:
        while True:
            self.counter += 1
            name = f"a{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name

    def fail(self, reason: str):
        raise NotTranslatable(TranslatabilityReport("not-translatable", [Blocker((), self.t.pos, reason)]))

    def row_type(self) -> RecordType:
        try:
            ty = typecheck(self.env or {}, self.t)
        except NrcTypeError:
            self.fail("cannot determine the row type of an empty query; supply table schemas")
        if not isinstance(ty.elem, RecordType) or not ty.elem.fields:
            self.fail(f"row type {ty.elem} is not a non-empty flat record")
        return ty.elem

    def empty_select(self, distinct: bool) -> Select:
        rt = self.row_type()
        projections = tuple((Literal(_DEFAULTS[fty]), label) for label, fty in rt.fields)
        return Select(distinct, projections, (), Literal(False))

    def expr(self, x: Term, aliases) -> object:
        if isinstance(x, Project):
            return Column(aliases[x.term.name], x.label)
        if not x.args:
            return Literal(constants.literal_value(x.c))
        if x.c == "not":
            return Not(self.expr(x.args[0], aliases))
        return BinOp(_TO_SQL_OP[x.c], self.expr(x.args[0], aliases), self.expr(x.args[1], aliases))

    def select(self, distinct, gens, cond, row, guard=None) -> Select:
        """``gens`` is a list of ``(var, source query)`` in binding order."""
        if not row.fields:
            self.fail("SQL rows need at least one column")
        aliases, items = {}, []
        for i, (var, source) in enumerate(gens):
            shadowed = any(v == var for v, _ in gens[i + 1 :])
            alias = self.synth_alias() if shadowed else var
            aliases[var] = alias
            items.append(FromItem(source, alias))
        projections = tuple((self.expr(m, aliases), label) for label, m in row.fields)
        where = self.expr(cond, aliases) if cond is not None else None
        if guard is not None:
            g = self.expr(guard, aliases)
            where = g if where is None else BinOp("AND", g, where)
        return Select(distinct, projections, tuple(items), where)

    def collapse(self, clause) -> Optional[Table]:
        if self.env is None or len(clause.generators) != 1 or clause.cond is not None:
            return None
        gen = clause.generators[0]
        ty = self.env.get(gen.table)
        if ty is None or not isinstance(ty.elem, RecordType):
            return None
        expected = tuple((label, Project(Var(gen.var), label)) for label in ty.elem.labels)
        return Table(gen.table) if clause.row.fields == expected else None

    def set_query(self, nf: SetNF, guard: Optional[Term] = None) -> Query:
        if not nf.clauses:
            return self.empty_select(True)
        parts = []
        for clause in nf.clauses:
            table = self.collapse(clause) if len(nf.clauses) > 1 and guard is None else None
            if table is not None:
                parts.append(table)
                continue
            gens = [(g.var, Table(g.table)) for g in clause.generators]
            parts.append(self.select(True, gens, clause.cond, clause.row, guard))
        return _fold(parts, all_=False)

    def bag_query(self, nf: BagNF) -> Query:
        if not nf.clauses:
            return self.empty_select(False)
        parts = []
        for clause in nf.clauses:
            if isinstance(clause, IotaClause):
                parts.append(self.set_query(clause.query, clause.guard))
                continue
            gens = []
            for g in clause.generators:
                gens.append((g.var, Table(g.table) if g.table is not None else self.set_query(g.query)))
            parts.append(self.select(False, gens, clause.cond, clause.row))
        return _fold(parts, all_=True)


def _fold(parts: list, all_: bool) -> Query:
    out = parts[0]
    for q in parts[1:]:
        out = SqlUnion(all_, out, q)
    return out


def nrc_to_sql(t: Term, env: Optional[Mapping[str, Type]] = None, extension: bool = False) -> Query:
    """SQL query for the normal form ``t``; raises :class:`NotTranslatable`.

    ``env`` (table types) is optional.  With it, a query with no clauses can
    be emitted and ``SELECT DISTINCT`` of whole tables inside a ``UNION``
    prints as the bare table name.
    """
    report = translatable_to_sql(t, extension=extension)
    if not report.ok:
        raise NotTranslatable(report)
    emitter = _Emitter(t, env)
    if isinstance(report.form, SetNF):
        return emitter.set_query(report.form)
    return emitter.bag_query(report.form)
