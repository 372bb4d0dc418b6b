"""Typing rules for NRC(Set,Bag) and the two syntactic side conditions.

The collection rules follow the usual presentation (``∅ : {T}``, ``δ : ⟅T⟆ →
{T}``, ``ι : {T} → ⟅T⟆``, where-conditions of type ``Bool``).  Constants,
records and projections get the standard rules.  Checking is bidirectional
only as far as needed to type unannotated empty collections from context.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import constants
from .core import (
    BOOL,
    Atom,
    BagComp,
    BagType,
    BagUnion,
    Const,
    Dedup,
    EmptyBag,
    EmptySet,
    Pos,
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
    is_flat_collection,
    replace_at,
)

TypeEnv = Mapping[str, Type]
Path = tuple[int, ...]


class NrcTypeError(Exception):
    def __init__(self, rule: str, message: str, path: Path = (), pos: Optional[Pos] = None):
        self.rule = rule
        self.message = message
        self.path = path
        self.pos = pos
        super().__init__(f"{message} [{rule}]")

    def diagnostic(self) -> "Diagnostic":
        return Diagnostic("error", self.path, self.pos, self.message, self.rule)


class UnannotatedEmpty(NrcTypeError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    path: Path
    pos: Optional[Pos]
    message: str
    rule: str

    def render(self, filename: str = "<input>") -> str:
        where = str(self.pos) if self.pos else "path " + ".".join(map(str, self.path)) if self.path else "1:1"
        return f"{filename}:{where}: {self.severity}: {self.message} [{self.rule}]"

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "path": list(self.path),
            "line": self.pos.line if self.pos else None,
            "col": self.pos.col if self.pos else None,
            "message": self.message,
            "rule": self.rule,
        }


class _Checker:
    def __init__(self, record_types: bool):
        self.types: Optional[dict[Path, Type]] = {} if record_types else None

    def fail(self, rule, message, path, pos, cls=NrcTypeError):
        raise cls(rule, message, path, pos)

    def tc(self, env: dict, t: Term, expected: Optional[Type], path: Path, pos) -> Type:
        pos = t.pos or pos
        ty = self._tc(env, t, expected, path, pos)
        if expected is not None and ty != expected:
            self.fail("subsumption", f"expected type {expected}, found {ty}", path, pos)
        if self.types is not None:
            self.types[path] = ty
        return ty

    def _tc(self, env, t, expected, path, pos) -> Type:
        tc = self.tc
        if isinstance(t, Var):
            if t.name not in env:
                self.fail("var", f"unbound variable {t.name!r}", path, pos)
            return env[t.name]

        if isinstance(t, Const):
            try:
                sig = constants.lookup(t.c, len(t.args))
            except KeyError:
                self.fail("const", f"unknown constant {t.c!r}/{len(t.args)}", path, pos)
            if sig.arg_types is None:
                left = tc(env, t.args[0], None, path + (0,), pos)
                if not isinstance(left, Atom):
                    self.fail("const", f"{t.c!r} compares atomic values, found {left}", path, pos)
                if t.c == "<" and left == BOOL:
                    self.fail("const", "'<' is not defined on Bool", path, pos)
                tc(env, t.args[1], left, path + (1,), pos)
            else:
                for i, (arg, want) in enumerate(zip(t.args, sig.arg_types)):
                    tc(env, arg, want, path + (i,), pos)
            return sig.result

        if isinstance(t, Record):
            hint = expected.mapping if isinstance(expected, RecordType) else {}
            return RecordType(
                tuple(
                    (label, tc(env, m, hint.get(label), path + (i,), pos))
                    for i, (label, m) in enumerate(t.fields)
                )
            )

        if isinstance(t, Project):
            rec = tc(env, t.term, None, path + (0,), pos)
            if not isinstance(rec, RecordType) or t.label not in rec.mapping:
                self.fail("project", f"type {rec} has no field {t.label!r}", path, pos)
            return rec.mapping[t.label]

        if isinstance(t, (WhereSet, WhereBag)):
            rule = "where-set" if isinstance(t, WhereSet) else "where-bag"
            want = SetType if isinstance(t, WhereSet) else BagType
            tc(env, t.cond, BOOL, path + (0,), pos)
            body = tc(env, t.body, expected, path + (1,), pos)
            if not isinstance(body, want):
                self.fail(rule, f"body of {rule} must be a {_kind(want)}, found {body}", path, pos)
            return body

        if isinstance(t, (EmptySet, EmptyBag)):
            want = SetType if isinstance(t, EmptySet) else BagType
            if t.ty is not None:
                return want(t.ty)
            if isinstance(expected, want):
                return expected
            self.fail(
                "empty",
                f"cannot determine the element type of this empty {_kind(want)}; add an annotation",
                path,
                pos,
                UnannotatedEmpty,
            )

        if isinstance(t, (SingletonSet, SingletonBag)):
            want = SetType if isinstance(t, SingletonSet) else BagType
            hint = expected.elem if isinstance(expected, want) else None
            return want(tc(env, t.elem, hint, path + (0,), pos))

        if isinstance(t, (Union, BagUnion)):
            want = SetType if isinstance(t, Union) else BagType
            rule = "union" if want is SetType else "bag-union"
            hint = expected if isinstance(expected, want) else None
            try:
                left = tc(env, t.left, hint, path + (0,), pos)
            except UnannotatedEmpty:
                right = tc(env, t.right, hint, path + (1,), pos)
                left = tc(env, t.left, right, path + (0,), pos)
            else:
                right = tc(env, t.right, left, path + (1,), pos)
            if not isinstance(left, want):
                self.fail(rule, f"operands of {rule} must be {_kind(want)}s, found {left}", path, pos)
            return left

        if isinstance(t, (SetComp, BagComp)):
            want = SetType if isinstance(t, SetComp) else BagType
            rule = "set-comp" if want is SetType else "bag-comp"
            src = tc(env, t.source, None, path + (0,), pos)
            if not isinstance(src, want):
                self.fail(rule, f"generator of {rule} must be a {_kind(want)}, found {src}", path, pos)
            hint = expected if isinstance(expected, want) else None
            body = tc({**env, t.var: src.elem}, t.body, hint, path + (1,), pos)
            if not isinstance(body, want):
                self.fail(rule, f"body of {rule} must be a {_kind(want)}, found {body}", path, pos)
            return body

        if isinstance(t, Dedup):
            hint = BagType(expected.elem) if isinstance(expected, SetType) else None
            arg = tc(env, t.term, hint, path + (0,), pos)
            if not isinstance(arg, BagType):
                self.fail("delta", f"delta expects a bag, found {arg}", path, pos)
            return SetType(arg.elem)

        if isinstance(t, Promote):
            hint = SetType(expected.elem) if isinstance(expected, BagType) else None
            arg = tc(env, t.term, hint, path + (0,), pos)
            if not isinstance(arg, SetType):
                self.fail("iota", f"iota expects a set, found {arg}", path, pos)
            return BagType(arg.elem)

        raise TypeError(f"not a term: {t!r}")


def _kind(cls) -> str:
    return "set" if cls is SetType else "bag"


def typecheck(env: TypeEnv, t: Term, expected: Optional[Type] = None) -> Type:
    """Type of ``t`` under ``env``; raises :class:`NrcTypeError` on failure."""
    return _Checker(False).tc(dict(env), t, expected, (), None)


def infer_types(env: TypeEnv, t: Term, expected: Optional[Type] = None) -> dict[Path, Type]:
    """Types of every subterm of ``t``, keyed by position."""
    checker = _Checker(True)
    checker.tc(dict(env), t, expected, (), None)
    return checker.types


def annotate_empties(env: TypeEnv, t: Term, expected: Optional[Type] = None) -> Term:
    """Copy of ``t`` with every empty collection carrying its element type."""
    types = infer_types(env, t, expected)
    out = t
    for path, ty in types.items():
        node = _at(t, path)
        if isinstance(node, (EmptySet, EmptyBag)) and node.ty is None:
            out = replace_at(out, path, type(node)(ty.elem, pos=node.pos))
    return out


def _at(t: Term, path: Path) -> Term:
    for i in path:
        t = t.children()[i]
    return t


def check_flat_delta_iota(env: TypeEnv, t: Term) -> list[Diagnostic]:
    """Diagnostics for every ``δ``/``ι`` applied to a non-flat collection."""
    types = infer_types(env, t)
    out = []
    for path in sorted(types):
        node = _at(t, path)
        if isinstance(node, (Dedup, Promote)):
            arg = types[path + (0,)]
            if not is_flat_collection(arg):
                name = "delta" if isinstance(node, Dedup) else "iota"
                out.append(
                    Diagnostic(
                        "error",
                        path,
                        _nearest_pos(t, path),
                        f"{name} applied to non-flat collection of type {arg}",
                        "flat-delta-iota",
                    )
                )
    return out


def check_no_iota_in_bag_comprehension(t: Term) -> list[Diagnostic]:
    """Diagnostics for every ``ι`` occurring inside a bag comprehension."""
    out = []

    def visit(node: Term, path: Path, inside: bool, pos):
        pos = node.pos or pos
        if isinstance(node, Promote) and inside:
            out.append(
                Diagnostic(
                    "error",
                    path,
                    pos,
                    "iota occurs inside a bag comprehension",
                    "no-iota-in-bag-comprehension",
                )
            )
        inside = inside or isinstance(node, BagComp)
        for i, kid in enumerate(node.children()):
            visit(kid, path + (i,), inside, pos)

    visit(t, (), False, None)
    return out


def _nearest_pos(t: Term, path: Path) -> Optional[Pos]:
    pos = t.pos
    for i in path:
        t = t.children()[i]
        pos = t.pos or pos
    return pos
