"""Reference interpreter over finite sets and bags.

Values are Python atoms (``bool``, ``int``, ``str``), :class:`Rec`, :class:`SetV`
and :class:`BagV`.  All are immutable and hashable with structural equality, so
sets of records and bags of sets behave as expected.  A bag is stored as a map
from each distinct element to its (strictly positive) multiplicity.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Union as TUnion

from . import constants
from .core import (
    BOOL,
    INT,
    STRING,
    Atom,
    BagComp,
    BagType,
    BagUnion,
    Const,
    Dedup,
    EmptyBag,
    EmptySet,
    Project,
    Promote,
    Record,
    RecordType,
    SetComp,
    SetType,
    SingletonBag,
    SingletonSet,
    Term,
    Type,
    Union,
    Var,
    WhereBag,
    WhereSet,
    quote_string,
)


class EvalError(Exception):
    pass


class UnboundVariable(EvalError):
    pass


class DynamicTypeMismatch(EvalError):
    pass


@dataclass(frozen=True)
class Rec:
    fields: tuple  # ((label, value), ...) sorted by label

    @classmethod
    def of(cls, mapping: Mapping[str, "Value"]) -> "Rec":
        return cls(tuple(sorted(mapping.items())))

    @cached_property
    def mapping(self) -> dict:
        return dict(self.fields)

    def __getitem__(self, label):
        return self.mapping[label]


@dataclass(frozen=True)
class SetV:
    elems: frozenset = frozenset()

    @classmethod
    def of(cls, *elems) -> "SetV":
        return cls(frozenset(elems))

    def __iter__(self):
        return iter(self.elems)

    def __len__(self):
        return len(self.elems)


@dataclass(frozen=True)
class BagV:
    items: frozenset = frozenset()  # {(value, multiplicity)}

    @classmethod
    def from_counts(cls, counts: Mapping) -> "BagV":
        return cls(frozenset((v, n) for v, n in counts.items() if n > 0))

    @classmethod
    def of(cls, *elems) -> "BagV":
        return cls.from_counts(Counter(elems))

    @cached_property
    def counts(self) -> dict:
        return dict(self.items)

    def __iter__(self):
        """Distinct elements."""
        return (v for v, _ in self.items)

    def __len__(self):
        """Total number of occurrences."""
        return sum(n for _, n in self.items)


Value = TUnion[bool, int, str, Rec, SetV, BagV]


def dedup_value(b: BagV) -> SetV:
    return SetV(frozenset(v for v, n in b.items if n > 0))


def promote_value(s: SetV) -> BagV:
    return BagV(frozenset((v, 1) for v in s.elems))


def bag_leq(a: BagV, b: BagV) -> bool:
    counts = b.counts
    return all(n <= counts.get(v, 0) for v, n in a.items)


def set_subset(a: SetV, b: SetV) -> bool:
    return a.elems <= b.elems


def bag_sum(bags: Iterable[tuple[BagV, int]]) -> BagV:
    """Multiplicity-weighted sum of ``(bag, weight)`` pairs."""
    total = Counter()
    for bag, weight in bags:
        for v, n in bag.items:
            total[v] += n * weight
    return BagV.from_counts(total)


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(env: Mapping[str, Value], t: Term) -> Value:
    """Denotation of ``t`` with free variables bound by ``env``."""
    return _eval(env, t)


def _expect(value, cls, what):
    if not isinstance(value, cls):
        raise DynamicTypeMismatch(f"{what}: expected {cls.__name__}, got {value!r}")
    return value


def _eval(env, t):
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise UnboundVariable(t.name) from None
    if isinstance(t, Const):
        try:
            sig = constants.lookup(t.c, len(t.args))
        except KeyError:
            raise DynamicTypeMismatch(f"unknown constant {t.c!r}") from None
        args = [_eval(env, a) for a in t.args]
        for a in args:
            if not isinstance(a, (bool, int, str)):
                raise DynamicTypeMismatch(f"constant {t.c!r} applied to non-atom {a!r}")
        if sig.arg_types is None and type(args[0]) is not type(args[1]):
            raise DynamicTypeMismatch(f"{t.c!r} compares {args[0]!r} with {args[1]!r}")
        try:
            return sig.fn(*args)
        except TypeError as exc:
            raise DynamicTypeMismatch(str(exc)) from None
    if isinstance(t, Record):
        return Rec.of({l: _eval(env, m) for l, m in t.fields})
    if isinstance(t, Project):
        rec = _expect(_eval(env, t.term), Rec, "projection")
        try:
            return rec[t.label]
        except KeyError:
            raise DynamicTypeMismatch(f"record has no field {t.label!r}") from None
    if isinstance(t, WhereSet):
        if _expect(_eval(env, t.cond), bool, "where condition"):
            return _expect(_eval(env, t.body), SetV, "where_set body")
        return SetV()
    if isinstance(t, WhereBag):
        if _expect(_eval(env, t.cond), bool, "where condition"):
            return _expect(_eval(env, t.body), BagV, "where_bag body")
        return BagV()
    if isinstance(t, EmptySet):
        return SetV()
    if isinstance(t, EmptyBag):
        return BagV()
    if isinstance(t, SingletonSet):
        return SetV.of(_eval(env, t.elem))
    if isinstance(t, SingletonBag):
        return BagV.of(_eval(env, t.elem))
    if isinstance(t, Union):
        a = _expect(_eval(env, t.left), SetV, "union")
        b = _expect(_eval(env, t.right), SetV, "union")
        return SetV(a.elems | b.elems)
    if isinstance(t, BagUnion):
        a = _expect(_eval(env, t.left), BagV, "bag union")
        b = _expect(_eval(env, t.right), BagV, "bag union")
        return bag_sum([(a, 1), (b, 1)])
    if isinstance(t, SetComp):
        src = _expect(_eval(env, t.source), SetV, "set comprehension generator")
        out = set()
        for v in src.elems:
            out |= _expect(_eval({**env, t.var: v}, t.body), SetV, "set comprehension body").elems
        return SetV(frozenset(out))
    if isinstance(t, BagComp):
        src = _expect(_eval(env, t.source), BagV, "bag comprehension generator")
        return bag_sum(
            (_expect(_eval({**env, t.var: v}, t.body), BagV, "bag comprehension body"), n)
            for v, n in src.items
        )
    if isinstance(t, Dedup):
        return dedup_value(_expect(_eval(env, t.term), BagV, "delta"))
    if isinstance(t, Promote):
        return promote_value(_expect(_eval(env, t.term), SetV, "iota"))
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Canonical text


def sort_key(v):
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    if isinstance(v, str):
        return (2, v)
    if isinstance(v, Rec):
        return (3, tuple((l, sort_key(x)) for l, x in v.fields))
    if isinstance(v, SetV):
        return (4, tuple(sorted(sort_key(x) for x in v.elems)))
    if isinstance(v, BagV):
        return (5, tuple(sorted((sort_key(x), n) for x, n in v.items)))
    raise TypeError(f"not a value: {v!r}")


def render_value(v) -> str:
    """Canonical text; closed values print as parseable terms."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return quote_string(v)
    if isinstance(v, Rec):
        return "<" + ", ".join(f"{l} = {render_value(x)}" for l, x in v.fields) + ">"
    if isinstance(v, SetV):
        if not v.elems:
            return "empty"
        return "{" + ", ".join(render_value(x) for x in sorted(v.elems, key=sort_key)) + "}"
    if isinstance(v, BagV):
        if not v.items:
            return "emptybag"
        parts = []
        for x, n in sorted(v.items, key=lambda p: sort_key(p[0])):
            parts.extend([render_value(x)] * n)
        return "{|" + ", ".join(parts) + "|}"
    raise TypeError(f"not a value: {v!r}")


def value_to_json(v):
    if isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, Rec):
        return {l: value_to_json(x) for l, x in v.fields}
    if isinstance(v, SetV):
        return {"set": [value_to_json(x) for x in sorted(v.elems, key=sort_key)]}
    if isinstance(v, BagV):
        return {
            "bag": [
                {"value": value_to_json(x), "count": n}
                for x, n in sorted(v.items, key=lambda p: sort_key(p[0]))
            ]
        }
    raise TypeError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# Databases

ATOM_NAMES = {"Int": INT, "String": STRING, "Bool": BOOL}


class DatabaseError(Exception):
    pass


@dataclass
class Database:
    """Table variables with their types and (optionally) contents."""

    types: dict[str, Type]
    values: dict[str, Value]


def _conforms(value, ty: Type) -> bool:
    if ty == BOOL:
        return isinstance(value, bool)
    if ty == INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if ty == STRING:
        return isinstance(value, str)
    return False


def load_database(source: TUnion[str, Path, Mapping], require_rows: bool = True) -> Database:
    """Load ``{"tables": {T: {"schema": {...}, "rows": [...], "kind": "bag"|"set"}}}``.

    Rows are a bag unless ``kind`` is ``"set"``; duplicate rows are kept.
    """
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DatabaseError(f"{source}: invalid JSON: {exc}") from None
        except OSError as exc:
            raise DatabaseError(f"cannot read {source}: {exc.strerror}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or not isinstance(doc.get("tables"), dict):
        raise DatabaseError("expected an object with a 'tables' object")
    types, values = {}, {}
    for name, table in doc["tables"].items():
        schema = table.get("schema")
        if not isinstance(schema, dict):
            raise DatabaseError(f"table {name!r}: missing 'schema' object")
        fields = []
        for col, tname in schema.items():
            if tname not in ATOM_NAMES:
                raise DatabaseError(f"table {name!r}: unknown column type {tname!r}")
            fields.append((col, ATOM_NAMES[tname]))
        row_type = RecordType(tuple(fields))
        kind = table.get("kind", "bag")
        if kind not in ("bag", "set"):
            raise DatabaseError(f"table {name!r}: kind must be 'bag' or 'set'")
        types[name] = BagType(row_type) if kind == "bag" else SetType(row_type)
        rows = table.get("rows")
        if rows is None:
            if require_rows:
                raise DatabaseError(f"table {name!r}: missing 'rows'")
            continue
        recs = []
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or set(row) != set(schema):
                raise DatabaseError(f"table {name!r}: row {i} does not match the schema columns")
            for col, ty in fields:
                if not _conforms(row[col], ty):
                    raise DatabaseError(f"table {name!r}: row {i} column {col!r} is not {ty}")
            recs.append(Rec.of(row))
        values[name] = BagV.of(*recs) if kind == "bag" else SetV(frozenset(recs))
    return Database(types, values)


def database_to_json(types: Mapping[str, Type], values: Mapping[str, Value]) -> dict:
    """Inverse of :func:`load_database` for flat tables."""
    tables = {}
    for name, ty in types.items():
        row_type = ty.elem
        table = {
            "schema": {l: str(t) for l, t in row_type.fields},
            "kind": "bag" if isinstance(ty, BagType) else "set",
        }
        if name in values:
            v = values[name]
            if isinstance(v, BagV):
                rows = []
                for x, n in sorted(v.items, key=lambda p: sort_key(p[0])):
                    rows.extend([value_to_json(x)] * n)
            else:
                rows = [value_to_json(x) for x in sorted(v.elems, key=sort_key)]
            table["rows"] = rows
        tables[name] = table
    return {"tables": tables}

