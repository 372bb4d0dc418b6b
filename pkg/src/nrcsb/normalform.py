"""Recognizers for SQL-shaped normal forms and the translatability decision.

Set queries in normal form are unions of clauses ::

    P ::= C1 ∪ ... ∪ Cn         C ::= ⋃{H | z1 ← F1, ..., zk ← Fk}
    F ::= x | δx                 H ::= {R} | where_set X {R}
    R ::= ⟨l = X, ...⟩           X ::= z.l | c(X, ...)

and bag queries are ⊎-unions of ``ιP`` or bag comprehensions whose generators
are table variables, ``ιx`` or ``ιP`` and whose head is ``ιP``, ``⟅R⟆`` or
``where_bag X ⟅R⟆``.  Generator sources ``x`` must be table variables, i.e.
free in the whole query.  The recognizers are purely syntactic.

Some liberties are taken because the rewrite rules leave these shapes in
normal forms: ``∅``/``⟅⟆`` operands of a union count as zero clauses, a
clause may have no generators at all, and at the top of a bag query
``where_bag X ιP`` with a closed condition is accepted as a guarded ``ιP``
clause.  A bag generator ``z ← ιx`` over a set-typed table counts as a table
generator (it is still an ``ι`` inside a bag comprehension).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union as TUnion

from .core import (
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
    fresh,
    subterm,
)
from .typecheck import check_no_iota_in_bag_comprehension, typecheck

Path = tuple[int, ...]

TRANSLATABLE = "translatable"
NOT_TRANSLATABLE = "not-translatable"
WITH_EXTENSION = "translatable-with-extension"


@dataclass(frozen=True)
class SetGenerator:
    """``var ← table`` or ``var ← δ table`` in a set clause."""

    var: str
    table: str
    dedup: bool


@dataclass(frozen=True)
class SetClause:
    generators: tuple[SetGenerator, ...]
    cond: Optional[Term]
    row: Record
    path: Path = ()


@dataclass(frozen=True)
class SetNF:
    clauses: tuple[SetClause, ...]
    term: Term = field(compare=False, repr=False, default=None)


@dataclass(frozen=True)
class BagGenerator:
    """``var ← table`` or ``var ← ιP``; exactly one of ``table``/``query`` is set."""

    var: str
    table: Optional[str] = None
    query: Optional[SetNF] = None
    path: Path = ()


@dataclass(frozen=True)
class BagClause:
    generators: tuple[BagGenerator, ...]
    cond: Optional[Term]
    row: Optional[Record]
    head_query: Optional[SetNF] = None  # head ``ιP`` instead of ``⟅R⟆``
    path: Path = ()


@dataclass(frozen=True)
class IotaClause:
    query: SetNF
    guard: Optional[Term] = None
    path: Path = ()


@dataclass(frozen=True)
class BagNF:
    clauses: tuple[TUnion[BagClause, IotaClause], ...]


class _NoMatch(Exception):
    def __init__(self, path: Path, reason: str):
        self.path = path
        self.reason = reason


def _operands(t: Term, union, empty, path: Path) -> list[tuple[Term, Path]]:
    if isinstance(t, union):
        return _operands(t.left, union, empty, path + (0,)) + _operands(t.right, union, empty, path + (1,))
    if isinstance(t, empty):
        return []
    return [(t, path)]


def _check_x(t: Term, bound: frozenset, path: Path):
    if isinstance(t, Project) and isinstance(t.term, Var) and t.term.name in bound:
        return
    if isinstance(t, Const):
        for i, a in enumerate(t.args):
            _check_x(a, bound, path + (i,))
        return
    raise _NoMatch(path, "expected a field of a generator variable or a constant application")


def _row(t: Term, bound: frozenset, path: Path) -> Record:
    if not isinstance(t, Record):
        raise _NoMatch(path, "expected a record of fields and constants")
    for i, (_, m) in enumerate(t.fields):
        _check_x(m, bound, path + (i,))
    return t


def _set_nf(t: Term, path: Path, outer: frozenset) -> SetNF:
    clauses = []
    for clause, cpath in _operands(t, Union, EmptySet, path):
        gens, bound = [], set()
        while isinstance(clause, SetComp):
            src = clause.source
            scope = outer | bound
            if isinstance(src, Var) and src.name not in scope:
                gens.append(SetGenerator(clause.var, src.name, False))
            elif isinstance(src, Dedup) and isinstance(src.term, Var) and src.term.name not in scope:
                gens.append(SetGenerator(clause.var, src.term.name, True))
            else:
                raise _NoMatch(cpath + (0,), "set generator must be a table variable x or delta x")
            bound.add(clause.var)
            clause, cpath = clause.body, cpath + (1,)
        scope = frozenset(outer | bound)
        cond = None
        if isinstance(clause, WhereSet):
            _check_x(clause.cond, scope, cpath + (0,))
            cond = clause.cond
            clause, cpath = clause.body, cpath + (1,)
        if not isinstance(clause, SingletonSet):
            raise _NoMatch(cpath, "set clause head must be {R} or where_set X {R}")
        row = _row(clause.elem, scope, cpath + (0,))
        clauses.append(SetClause(tuple(gens), cond, row, path=cpath))
    return SetNF(tuple(clauses), term=t)


def _bag_nf(t: Term, path: Path) -> BagNF:
    clauses = []
    for clause, cpath in _operands(t, BagUnion, EmptyBag, path):
        if isinstance(clause, Promote):
            clauses.append(IotaClause(_set_nf(clause.term, cpath + (0,), frozenset()), path=cpath))
            continue
        if isinstance(clause, WhereBag) and isinstance(clause.body, Promote) and not clause.cond.fv:
            _check_x(clause.cond, frozenset(), cpath + (0,))
            query = _set_nf(clause.body.term, cpath + (1, 0), frozenset())
            clauses.append(IotaClause(query, guard=clause.cond, path=cpath))
            continue
        gens, bound = [], set()
        start = cpath
        while isinstance(clause, BagComp):
            src = clause.source
            if isinstance(src, Var) and src.name not in bound:
                gens.append(BagGenerator(clause.var, table=src.name, path=cpath + (0,)))
            elif isinstance(src, Promote) and isinstance(src.term, Var) and src.term.name not in bound:
                # ι of a set-typed table: in SQL simply the table
                gens.append(BagGenerator(clause.var, table=src.term.name, path=cpath + (0,)))
            elif isinstance(src, Promote):
                query = _set_nf(src.term, cpath + (0, 0), frozenset(bound))
                gens.append(BagGenerator(clause.var, query=query, path=cpath + (0,)))
            else:
                raise _NoMatch(cpath + (0,), "bag generator must be a table variable or iota P")
            bound.add(clause.var)
            clause, cpath = clause.body, cpath + (1,)
        scope = frozenset(bound)
        if isinstance(clause, Promote):
            query = _set_nf(clause.term, cpath + (0,), scope)
            clauses.append(BagClause(tuple(gens), None, None, head_query=query, path=start))
            continue
        cond = None
        if isinstance(clause, WhereBag):
            _check_x(clause.cond, scope, cpath + (0,))
            cond = clause.cond
            clause, cpath = clause.body, cpath + (1,)
        if not isinstance(clause, SingletonBag):
            raise _NoMatch(cpath, "bag clause head must be iota P, {|R|} or where_bag X {|R|}")
        row = _row(clause.elem, scope, cpath + (0,))
        clauses.append(BagClause(tuple(gens), cond, row, path=start))
    return BagNF(tuple(clauses))


def is_set_normal(t: Term) -> Optional[SetNF]:
    try:
        return _set_nf(t, (), frozenset())
    except _NoMatch:
        return None


def is_bag_normal(t: Term) -> Optional[BagNF]:
    try:
        return _bag_nf(t, ())
    except _NoMatch:
        return None


def explain_mismatch(t: Term) -> tuple[Path, str]:
    """Position and reason why ``t`` matches neither normal-form grammar."""
    failures = []
    for recognize in (lambda: _set_nf(t, (), frozenset()), lambda: _bag_nf(t, ())):
        try:
            recognize()
            return (), "matches"
        except _NoMatch as exc:
            failures.append(exc)
    # the deeper failure is the more specific explanation
    best = max(failures, key=lambda e: len(e.path))
    return best.path, best.reason


# ---------------------------------------------------------------------------
# Translatability


@dataclass(frozen=True)
class Blocker:
    path: Path
    pos: Optional[Pos]
    reason: str

    def to_json(self) -> dict:
        return {
            "path": list(self.path),
            "line": self.pos.line if self.pos else None,
            "col": self.pos.col if self.pos else None,
            "reason": self.reason,
        }


@dataclass
class TranslatabilityReport:
    verdict: str
    blockers: list[Blocker] = field(default_factory=list)
    form: Optional[TUnion[SetNF, BagNF]] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.verdict != NOT_TRANSLATABLE

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "blockers": [b.to_json() for b in self.blockers]}

    def render(self, filename: str = "<input>") -> str:
        lines = [f"verdict: {self.verdict}"]
        for b in self.blockers:
            where = str(b.pos) if b.pos else "path " + (".".join(map(str, b.path)) or "(root)")
            lines.append(f"{filename}:{where}: blocker: {b.reason}")
        return "\n".join(lines)


class NotNormalForm(Exception):
    pass


def _pos_at(t: Term, path: Path) -> Optional[Pos]:
    pos = t.pos
    for i in path:
        t = t.children()[i]
        pos = t.pos or pos
    return pos


def translatable_to_sql(t: Term, extension: bool = False) -> TranslatabilityReport:
    """Decide whether the normal form ``t`` maps onto the SQL fragment.

    Without ``extension`` this is the ι-free-bag-comprehension criterion; with
    it, bag queries whose ``ιP`` generators do not depend on earlier
    generators are also accepted.
    """
    from .rewrite import rewrite_step

    if rewrite_step(t) is not None:
        raise NotNormalForm("term still contains a redex")
    snf = is_set_normal(t)
    if snf is not None:
        return TranslatabilityReport(TRANSLATABLE, form=snf)
    bnf = is_bag_normal(t)
    if bnf is None:
        path, reason = explain_mismatch(t)
        return TranslatabilityReport(
            NOT_TRANSLATABLE, [Blocker(path, _pos_at(t, path), f"not a SQL normal form: {reason}")]
        )
    iotas = check_no_iota_in_bag_comprehension(t)
    if not iotas:
        return TranslatabilityReport(TRANSLATABLE, form=bnf)
    blockers = [Blocker(d.path, d.pos, d.message) for d in iotas]
    if extension:
        report = generator_independence(t, bnf)
        if report.verdict == WITH_EXTENSION:
            return report
        blockers = report.blockers
    return TranslatabilityReport(NOT_TRANSLATABLE, blockers, form=bnf)


def generator_independence(t: Term, bnf: Optional[BagNF] = None) -> TranslatabilityReport:
    """Accept bag normal forms whose ``ιP`` generators are uncorrelated.

    Each ``ιP`` generator becomes a derived table in FROM, which SQL only
    allows when ``P`` mentions no earlier generator variable of the same
    clause.  A ``ιP`` in head position has no SQL counterpart and blocks.
    """
    if bnf is None:
        bnf = is_bag_normal(t)
        if bnf is None:
            raise ValueError("term is not a bag normal form")
    blockers = []
    for clause in bnf.clauses:
        if not isinstance(clause, BagClause):
            continue
        seen = []
        for gen in clause.generators:
            if gen.query is not None:
                dep = sorted(gen.query.term.fv & set(seen))
                if dep:
                    blockers.append(
                        Blocker(
                            gen.path,
                            _pos_at(t, gen.path),
                            f"generator for {gen.var} depends on earlier generator variable(s) {', '.join(dep)}",
                        )
                    )
            seen.append(gen.var)
        if clause.head_query is not None:
            path = clause.path + (1,) * len(clause.generators)
            blockers.append(Blocker(path, _pos_at(t, path), "iota P in the head of a bag comprehension"))
    verdict = WITH_EXTENSION if not blockers else NOT_TRANSLATABLE
    return TranslatabilityReport(verdict, blockers, form=bnf)


# ---------------------------------------------------------------------------
# Eta expansion


def eta_expand(env: Mapping[str, Type], t: Term) -> Term:
    """Expand table and record variables into SQL-shaped terms.

    A table variable ``T`` used other than as a generator source (or under
    ``δ``/``ι`` as one) becomes ``⋃{{⟨l = z.l, ...⟩} | z ← T}`` (or its bag
    analogue), and a record variable used other than under a projection
    becomes ``⟨l = x.l, ...⟩``.  The result is equivalent to ``t``; after
    normalization every column access then has the ``z.l`` shape the SQL
    grammar needs.
    """
    avoid = set(t.names) | set(env)

    def new_name(base: str) -> str:
        name = base if base not in avoid else fresh(base, avoid)
        avoid.add(name)
        return name

    def expand_record(term: Term, ty: RecordType) -> Record:
        fields = []
        for label, fty in ty.fields:
            proj = Project(term, label)
            fields.append((label, expand_record(proj, fty) if isinstance(fty, RecordType) else proj))
        return Record(tuple(fields), pos=term.pos)

    def go(node: Term, local: dict, ctx: str) -> Term:
        if isinstance(node, Var):
            is_table = node.name not in local
            ty = local[node.name] if not is_table else env.get(node.name)
            if isinstance(ty, RecordType) and ctx != "project":
                return expand_record(node, ty)
            if is_table and isinstance(ty, (SetType, BagType)) and ctx != "source":
                z = new_name(node.name[:1].lower() or "z")
                head = expand_record(Var(z), ty.elem) if isinstance(ty.elem, RecordType) else Var(z)
                if isinstance(ty, SetType):
                    return SetComp(SingletonSet(head), z, node, pos=node.pos)
                return BagComp(SingletonBag(head), z, node, pos=node.pos)
            return node
        if isinstance(node, (Dedup, Promote)) and isinstance(node.term, Var) and ctx == "source":
            return node
        if isinstance(node, Project):
            return node.with_children([go(node.term, local, "project")])
        if isinstance(node, (SetComp, BagComp)):
            source = go(node.source, local, "source")
            elem = typecheck({**env, **local}, node.source).elem
            body = go(node.body, {**local, node.var: elem}, "other")
            return node.with_children([source, body])
        return node.with_children([go(k, local, "other") for k in node.children()])

    return go(t, {}, "other")
