"""Abstract syntax of NRC(Set,Bag) and binding-aware term utilities.

Terms and types are frozen dataclasses.  Every term node exposes its immediate
subterms through :meth:`Term.children` (in a fixed left-to-right order) and can
be rebuilt with :meth:`Term.with_children`; positions into a term are tuples of
child indices following that order.  Comprehensions list their generator
source before their body, mirroring ``for x in N yield set M``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import ClassVar, Iterable, Optional

# ---------------------------------------------------------------------------
# Types


class Type:
    """Base class of NRC types."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Type):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class RecordType(Type):
    """Record type; field order is kept for printing but ignored by equality."""

    fields: tuple[tuple[str, Type], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.fields]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate record labels in {labels}")

    @cached_property
    def mapping(self) -> dict[str, Type]:
        return dict(self.fields)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.fields)

    def __eq__(self, other):
        return isinstance(other, RecordType) and self.mapping == other.mapping

    def __hash__(self):
        return hash(frozenset(self.fields))

    def __str__(self) -> str:
        return "<" + ", ".join(f"{l} : {t}" for l, t in self.fields) + ">"


@dataclass(frozen=True)
class SetType(Type):
    elem: Type

    def __str__(self) -> str:
        return "{" + str(self.elem) + "}"


@dataclass(frozen=True)
class BagType(Type):
    elem: Type

    def __str__(self) -> str:
        return "{|" + str(self.elem) + "|}"


INT = Atom("Int")
STRING = Atom("String")
BOOL = Atom("Bool")


def record_type(**fields: Type) -> RecordType:
    return RecordType(tuple(fields.items()))


def is_flat_record(ty: Type) -> bool:
    return isinstance(ty, RecordType) and all(isinstance(t, Atom) for _, t in ty.fields)


def is_flat_collection(ty: Type) -> bool:
    """Set or bag of atoms or of records with atomic fields."""
    if not isinstance(ty, (SetType, BagType)):
        return False
    return isinstance(ty.elem, Atom) or is_flat_record(ty.elem)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _same(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(x is y for x, y in zip(a, b))


@dataclass(frozen=True)
class Term:
    pos: Optional[Pos] = field(default=None, compare=False, repr=False, kw_only=True)

    _kids: ClassVar[tuple[str, ...]] = ()

    def children(self) -> tuple["Term", ...]:
        return tuple(getattr(self, name) for name in self._kids)

    def with_children(self, kids: Iterable["Term"]) -> "Term":
        kids = tuple(kids)
        if _same(kids, self.children()):
            return self
        return replace(self, **dict(zip(self._kids, kids)))

    @cached_property
    def fv(self) -> frozenset[str]:
        return _free_vars(self)

    @cached_property
    def names(self) -> frozenset[str]:
        """Every variable name occurring in the term, bound or free."""
        out = set()
        for kid in self.children():
            out |= kid.names
        if isinstance(self, Var):
            out.add(self.name)
        elif isinstance(self, (SetComp, BagComp)):
            out.add(self.var)
        return frozenset(out)

    @cached_property
    def size(self) -> int:
        return 1 + sum(kid.size for kid in self.children())

    def __str__(self) -> str:
        from .syntax import pretty_print

        return pretty_print(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    """Applied constant ``c(args)``; literals are nullary constants.

    ``c`` is the constant symbol: ``true``, ``false``, a decimal integer, a
    double-quoted string literal, or one of ``= != < and or not``.
    """

    c: str
    args: tuple[Term, ...] = ()

    def children(self):
        return self.args

    def with_children(self, kids):
        kids = tuple(kids)
        if _same(kids, self.args):
            return self
        return replace(self, args=kids)


@dataclass(frozen=True)
class Record(Term):
    fields: tuple[tuple[str, Term], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.fields]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate record labels in {labels}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.fields)

    def children(self):
        return tuple(term for _, term in self.fields)

    def with_children(self, kids):
        kids = tuple(kids)
        if _same(kids, self.children()):
            return self
        return replace(self, fields=tuple((l, k) for (l, _), k in zip(self.fields, kids)))


@dataclass(frozen=True)
class Project(Term):
    term: Term
    label: str
    _kids = ("term",)


@dataclass(frozen=True)
class WhereSet(Term):
    cond: Term
    body: Term
    _kids = ("cond", "body")


@dataclass(frozen=True)
class WhereBag(Term):
    cond: Term
    body: Term
    _kids = ("cond", "body")


@dataclass(frozen=True)
class EmptySet(Term):
    """``∅``; ``ty`` optionally annotates the element type."""

    ty: Optional[Type] = None


@dataclass(frozen=True)
class SingletonSet(Term):
    elem: Term
    _kids = ("elem",)


@dataclass(frozen=True)
class Union(Term):
    left: Term
    right: Term
    _kids = ("left", "right")


@dataclass(frozen=True)
class SetComp(Term):
    """``⋃{body | var ← source}``."""

    body: Term
    var: str
    source: Term
    _kids = ("source", "body")


@dataclass(frozen=True)
class EmptyBag(Term):
    ty: Optional[Type] = None


@dataclass(frozen=True)
class SingletonBag(Term):
    elem: Term
    _kids = ("elem",)


@dataclass(frozen=True)
class BagUnion(Term):
    left: Term
    right: Term
    _kids = ("left", "right")


@dataclass(frozen=True)
class BagComp(Term):
    """``⨄⟅body | var ← source⟆``."""

    body: Term
    var: str
    source: Term
    _kids = ("source", "body")


@dataclass(frozen=True)
class Dedup(Term):
    """``δ term``: bag to set, duplicate elimination."""

    term: Term
    _kids = ("term",)


@dataclass(frozen=True)
class Promote(Term):
    """``ι term``: set to bag, every element with multiplicity one."""

    term: Term
    _kids = ("term",)


Comp = (SetComp, BagComp)

TRUE = Const("true")
FALSE = Const("false")


def lit(value) -> Const:
    """Literal constant for a Python bool, int or str."""
    if isinstance(value, bool):
        return TRUE if value else FALSE
    if isinstance(value, int):
        return Const(str(value))
    if isinstance(value, str):
        return Const(quote_string(value))
    raise TypeError(f"no literal for {value!r}")


def quote_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def unquote_string(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", lambda m: "\n" if m.group(1) == "n" else m.group(1), body)


def conj(a: Term, b: Term) -> Const:
    return Const("and", (a, b))


def eq(a: Term, b: Term) -> Const:
    return Const("=", (a, b))


def set_comp(body: Term, *gens: tuple[str, Term]) -> Term:
    """Multi-generator sugar: ``set_comp(M, (x, N), (y, R))`` is ``⋃{M | x ← N, y ← R}``."""
    for var, src in reversed(gens):
        body = SetComp(body, var, src)
    return body


def bag_comp(body: Term, *gens: tuple[str, Term]) -> Term:
    for var, src in reversed(gens):
        body = BagComp(body, var, src)
    return body


def set_literal(*elems: Term) -> Term:
    out = SingletonSet(elems[0])
    for e in elems[1:]:
        out = Union(out, SingletonSet(e))
    return out


def bag_literal(*elems: Term) -> Term:
    out = SingletonBag(elems[0])
    for e in elems[1:]:
        out = BagUnion(out, SingletonBag(e))
    return out


# ---------------------------------------------------------------------------
# Binding utilities


def _free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Comp):
        return t.source.fv | (t.body.fv - {t.var})
    out = frozenset()
    for kid in t.children():
        out |= kid.fv
    return out


def free_vars(t: Term) -> frozenset[str]:
    return t.fv


_SUFFIX = re.compile(r"\d+$")


def fresh(base: str, avoid) -> str:
    """``base`` with the smallest numeric suffix not in ``avoid``."""
    stem = _SUFFIX.sub("", base) or "v"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def rename_binder(comp: Term, new: str) -> Term:
    """Alpha-rename the binder of a comprehension to ``new``."""
    body = subst(comp.body, comp.var, Var(new))
    return replace(comp, var=new, body=body)


def subst(t: Term, x: str, r: Term) -> Term:
    """Capture-avoiding substitution ``t[r/x]``."""
    if x not in t.fv:
        return t
    if isinstance(t, Var):
        return r
    if isinstance(t, Comp):
        source = subst(t.source, x, r)
        if t.var == x:
            return replace(t, source=source)
        body, var = t.body, t.var
        if var in r.fv:
            var = fresh(var, t.names | r.names | {x})
            body = subst(body, t.var, Var(var))
        return replace(t, var=var, source=source, body=subst(body, x, r))
    return t.with_children(subst(k, x, r) for k in t.children())


def alpha_eq(a: Term, b: Term) -> bool:
    """Syntactic equality up to renaming of bound variables.

    Record literals compare label-keyed; empty-collection annotations are
    ignored.
    """
    return _alpha(a, b, {}, {}, 0)


def _alpha(a: Term, b: Term, ea: dict, eb: dict, depth: int) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = ea.get(a.name), eb.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, Comp):
        if not _alpha(a.source, b.source, ea, eb, depth):
            return False
        return _alpha(a.body, b.body, {**ea, a.var: depth}, {**eb, b.var: depth}, depth + 1)
    if isinstance(a, Const):
        return a.c == b.c and len(a.args) == len(b.args) and all(
            _alpha(x, y, ea, eb, depth) for x, y in zip(a.args, b.args)
        )
    if isinstance(a, Record):
        fa, fb = dict(a.fields), dict(b.fields)
        return fa.keys() == fb.keys() and all(_alpha(fa[l], fb[l], ea, eb, depth) for l in fa)
    if isinstance(a, Project) and a.label != b.label:
        return False
    ka, kb = a.children(), b.children()
    return len(ka) == len(kb) and all(_alpha(x, y, ea, eb, depth) for x, y in zip(ka, kb))


# ---------------------------------------------------------------------------
# Positions


def subterm(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = t.children()[i]
    return t


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    kids = list(t.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return t.with_children(kids)


def walk(t: Term, path: tuple[int, ...] = ()):
    """Pre-order iteration over ``(path, subterm)`` pairs."""
    yield path, t
    for i, kid in enumerate(t.children()):
        yield from walk(kid, path + (i,))


def is_binding_child(t: Term, index: int) -> bool:
    """Whether child ``index`` of ``t`` lies in the scope of ``t``'s binder."""
    return isinstance(t, Comp) and index == 1
