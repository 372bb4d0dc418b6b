"""Normalization by rewriting.

The rule set covers set and bag comprehensions, both ``where`` forms, ``δ``,
``ι`` and record projection.  Rules are tried at the leftmost-innermost redex
(children in :meth:`Term.children` order, then the node itself, rules in
catalogue order), which makes every normalization deterministic.

Rules that produce an empty collection out of nothing (``⋃{M | x ← ∅}``,
``where false``) need the element type of the result to keep the term
annotated; when a type environment is supplied it is computed from the
binders enclosing the redex, otherwise the empty is left unannotated.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .core import (
    BagComp,
    BagUnion,
    Const,
    Dedup,
    EmptyBag,
    EmptySet,
    Project,
    Promote,
    Record,
    SetComp,
    SingletonBag,
    SingletonSet,
    Term,
    Type,
    Union,
    Var,
    WhereBag,
    WhereSet,
    conj,
    fresh,
    is_binding_child,
    replace_at,
    subst,
    subterm,
)
from .typecheck import NrcTypeError, annotate_empties, typecheck

DEFAULT_FUEL = 100_000

Path = tuple[int, ...]


class Ctx:
    """Typing context of a redex: the outer environment plus enclosing binders."""

    def __init__(self, env: Optional[Mapping[str, Type]], scope: tuple = ()):
        self.env = env
        self.scope = scope

    @cached_property
    def local_env(self) -> Optional[dict]:
        if self.env is None:
            return None
        env = dict(self.env)
        try:
            for var, source in self.scope:
                env[var] = typecheck(env, source).elem
        except NrcTypeError:
            return None
        return env

    def elem_type(self, t: Term, extra: Sequence[tuple[str, Type]] = ()) -> Optional[Type]:
        """Element type of the collection term ``t`` at the redex, if computable."""
        env = self.local_env
        if env is None:
            return None
        try:
            return typecheck({**env, **dict(extra)}, t).elem
        except NrcTypeError:
            return None


@dataclass(frozen=True)
class Rule:
    name: str
    family: str
    lhs: str
    rhs: str
    head: type
    apply: Callable[[Term, Ctx], Optional[Term]] = field(repr=False, compare=False)


def _is_lit(t: Term, c: str) -> bool:
    return isinstance(t, Const) and t.c == c and not t.args


def _unbind(var: str, body: Term, *avoid: Term) -> tuple[str, Term]:
    """Rename binder ``var`` of ``body`` so it is not free in any of ``avoid``."""
    if not any(var in a.fv for a in avoid):
        return var, body
    names = set(body.names)
    for a in avoid:
        names |= a.names
    new = fresh(var, names)
    return new, subst(body, var, Var(new))


def _comp_rules(comp, empty, single, union, where, kind: str, bag: bool):
    """The seven comprehension rules and six where rules for one collection kind."""
    U = "⨄" if bag else "⋃"
    L, R = ("⟅", "⟆") if bag else ("{", "}")
    E = "⟅⟆" if bag else "∅"
    cup = "⊎" if bag else "∪"
    W = "where_bag" if bag else "where_set"
    prefix = "bagcomp" if bag else "setcomp"
    wprefix = "wherebag" if bag else "whereset"

    def body_empty(t, ctx):
        if isinstance(t.body, empty):
            return empty(t.body.ty)

    def src_empty(t, ctx):
        if isinstance(t.source, empty):
            ty = None
            if t.source.ty is not None:
                ty = ctx.elem_type(t.body, [(t.var, t.source.ty)])
            return empty(ty)

    def src_singleton(t, ctx):
        if isinstance(t.source, single):
            return subst(t.body, t.var, t.source.elem)

    def body_union(t, ctx):
        if isinstance(t.body, union):
            return union(comp(t.body.left, t.var, t.source), comp(t.body.right, t.var, t.source))

    def src_union(t, ctx):
        if isinstance(t.source, union):
            return union(comp(t.body, t.var, t.source.left), comp(t.body, t.var, t.source.right))

    def src_comp(t, ctx):
        if isinstance(t.source, comp):
            inner = t.source
            # the inner binder moves over the outer body and must not capture there
            x, inner_body = inner.var, inner.body
            if x != t.var and x in t.body.fv:
                x = fresh(x, t.body.names | inner.names | {t.var})
                inner_body = subst(inner.body, inner.var, Var(x))
            return comp(comp(t.body, t.var, inner_body), x, inner.source)

    def src_where(t, ctx):
        if isinstance(t.source, where):
            cond = t.source.cond
            var, body = _unbind(t.var, t.body, cond)
            return comp(where(cond, body), var, t.source.body)

    def w_true(t, ctx):
        if _is_lit(t.cond, "true"):
            return t.body

    def w_false(t, ctx):
        if _is_lit(t.cond, "false"):
            return empty(ctx.elem_type(t.body))

    def w_union(t, ctx):
        if isinstance(t.body, union):
            return union(where(t.cond, t.body.left), where(t.cond, t.body.right))

    def w_empty(t, ctx):
        if isinstance(t.body, empty):
            return t.body

    def w_and(t, ctx):
        if isinstance(t.body, where):
            return where(conj(t.cond, t.body.cond), t.body.body)

    def w_comp(t, ctx):
        if isinstance(t.body, comp):
            inner = t.body
            var, body = _unbind(inner.var, inner.body, t.cond)
            return comp(where(t.cond, body), var, inner.source)

    return [
        Rule(f"{prefix}-body-empty", kind, f"{U}{L}{E} | x ← M{R}", E, comp, body_empty),
        Rule(f"{prefix}-src-empty", kind, f"{U}{L}M | x ← {E}{R}", E, comp, src_empty),
        Rule(f"{prefix}-src-singleton", kind, f"{U}{L}M | x ← {L}N{R}{R}", "M[N/x]", comp, src_singleton),
        Rule(
            f"{prefix}-body-union",
            kind,
            f"{U}{L}M {cup} N | x ← R{R}",
            f"({U}{L}M | x ← R{R}) {cup} ({U}{L}N | x ← R{R})",
            comp,
            body_union,
        ),
        Rule(
            f"{prefix}-src-union",
            kind,
            f"{U}{L}M | x ← N {cup} R{R}",
            f"{U}{L}M | x ← N{R} {cup} {U}{L}M | x ← R{R}",
            comp,
            src_union,
        ),
        Rule(
            f"{prefix}-src-comp",
            kind,
            f"{U}{L}M | y ← {U}{L}R | x ← N{R}{R}",
            f"{U}{L}M | x ← N, y ← R{R}",
            comp,
            src_comp,
        ),
        Rule(
            f"{prefix}-src-where",
            kind,
            f"{U}{L}M | x ← {W} N do R{R}",
            f"{U}{L}{W} N do M | x ← R{R}",
            comp,
            src_where,
        ),
        Rule(f"{wprefix}-true", kind, f"{W} true do M", "M", where, w_true),
        Rule(f"{wprefix}-false", kind, f"{W} false do M", E, where, w_false),
        Rule(
            f"{wprefix}-union",
            kind,
            f"{W} M do (N {cup} R)",
            f"({W} M do N) {cup} ({W} M do R)",
            where,
            w_union,
        ),
        Rule(f"{wprefix}-empty", kind, f"{W} M do {E}", E, where, w_empty),
        Rule(f"{wprefix}-and", kind, f"{W} M do {W} N do R", f"{W} (M ∧ N) do R", where, w_and),
        Rule(
            f"{wprefix}-comp",
            kind,
            f"{W} M do {U}{L}N | x ← R{R}",
            f"{U}{L}{W} M do N | x ← R{R}",
            where,
            w_comp,
        ),
    ]


def _delta_rules():
    def d_empty(t, ctx):
        if isinstance(t.term, EmptyBag):
            return EmptySet(t.term.ty)

    def d_single(t, ctx):
        if isinstance(t.term, SingletonBag):
            return SingletonSet(t.term.elem)

    def d_union(t, ctx):
        if isinstance(t.term, BagUnion):
            return Union(Dedup(t.term.left), Dedup(t.term.right))

    def d_comp(t, ctx):
        if isinstance(t.term, BagComp):
            c = t.term
            return SetComp(Dedup(c.body), c.var, Dedup(c.source))

    def d_iota(t, ctx):
        if isinstance(t.term, Promote):
            return t.term.term

    def d_where(t, ctx):
        if isinstance(t.term, WhereBag):
            return WhereSet(t.term.cond, Dedup(t.term.body))

    fam = "delta"
    return [
        Rule("delta-empty", fam, "δ⟅⟆", "∅", Dedup, d_empty),
        Rule("delta-singleton", fam, "δ⟅M⟆", "{M}", Dedup, d_single),
        Rule("delta-bagunion", fam, "δ(M ⊎ N)", "δM ∪ δN", Dedup, d_union),
        Rule("delta-bagcomp", fam, "δ⨄⟅M | x ← N⟆", "⋃{δM | x ← δN}", Dedup, d_comp),
        Rule("delta-iota", fam, "διM", "M", Dedup, d_iota),
        Rule("delta-wherebag", fam, "δ(where_bag M do N)", "where_set M do δN", Dedup, d_where),
    ]


def _iota_rules():
    def i_empty(t, ctx):
        if isinstance(t.term, EmptySet):
            return EmptyBag(t.term.ty)

    def i_single(t, ctx):
        if isinstance(t.term, SingletonSet):
            return SingletonBag(t.term.elem)

    def i_where(t, ctx):
        if isinstance(t.term, WhereSet):
            return WhereBag(t.term.cond, Promote(t.term.body))

    fam = "iota"
    return [
        Rule("iota-empty", fam, "ι∅", "⟅⟆", Promote, i_empty),
        Rule("iota-singleton", fam, "ι{M}", "⟅M⟆", Promote, i_single),
        Rule("iota-where", fam, "ι(where_set M do N)", "where_bag M do ιN", Promote, i_where),
    ]


def _project_rule():
    def proj(t, ctx):
        if isinstance(t.term, Record):
            for label, m in t.term.fields:
                if label == t.label:
                    return m

    return [Rule("project", "record", "⟨…, ℓ = M, …⟩.ℓ", "M", Project, proj)]


_SET = _comp_rules(SetComp, EmptySet, SingletonSet, Union, WhereSet, "set", bag=False)
_BAG = _comp_rules(BagComp, EmptyBag, SingletonBag, BagUnion, WhereBag, "bag", bag=True)

RULES: tuple[Rule, ...] = tuple(_SET + _delta_rules() + _BAG + _iota_rules() + _project_rule())
RULE_COUNT = 36
assert len(RULES) == RULE_COUNT and len({r.name for r in RULES}) == RULE_COUNT


def rule_catalogue() -> list[Rule]:
    """Every rewrite rule, in the order the strategy tries them."""
    return list(RULES)


def rule(name: str) -> Rule:
    for r in RULES:
        if r.name == name:
            return r
    raise KeyError(name)


# ---------------------------------------------------------------------------
# Strategy


@dataclass(frozen=True)
class Step:
    rule: str
    path: Path
    before: Term
    after: Term

    def to_json(self) -> dict:
        return {"rule": self.rule, "path": list(self.path), "before": str(self.before), "after": str(self.after)}


@dataclass
class RewriteTrace:
    initial: Term
    steps: list[Step]
    final: Term
    fuel_remaining: int

    @property
    def step_count(self) -> int:
        return len(self.steps)

    def replay(self) -> Term:
        t = self.initial
        for s in self.steps:
            if subterm(t, s.path) != s.before:
                raise ValueError(f"trace does not replay at step {s.rule} {s.path}")
            t = replace_at(t, s.path, s.after)
        return t

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json(), ensure_ascii=False) + "\n" for s in self.steps)


class FuelExhausted(Exception):
    def __init__(self, trace: RewriteTrace):
        self.trace = trace
        super().__init__(f"normalization did not finish within {len(trace.steps)} steps")


class _Engine:
    def __init__(self, rules: Iterable[Rule], env):
        self.by_head: dict[type, list[Rule]] = {}
        for r in rules:
            self.by_head.setdefault(r.head, []).append(r)
        self.env = env
        # ids of subterms known to contain no redex; the terms are kept alive
        self.normal: dict[int, Term] = {}

    def find(self, t: Term, scope: tuple):
        if id(t) in self.normal:
            return None
        kids = t.children()
        for i, kid in enumerate(kids):
            inner = scope + ((t.var, t.source),) if is_binding_child(t, i) else scope
            hit = self.find(kid, inner)
            if hit is not None:
                new_kid, r, path, before, after = hit
                new = t.with_children(kids[:i] + (new_kid,) + kids[i + 1 :])
                return new, r, (i,) + path, before, after
        rules = self.by_head.get(type(t))
        if rules:
            ctx = Ctx(self.env, scope)
            for r in rules:
                out = r.apply(t, ctx)
                if out is not None:
                    return out, r, (), t, out
        self.normal[id(t)] = t
        return None


def rewrite_step(t: Term, env: Optional[Mapping[str, Type]] = None, rules: Optional[Iterable[Rule]] = None):
    """One leftmost-innermost step: ``(term, rule_name, path)`` or ``None``."""
    hit = _Engine(RULES if rules is None else rules, env).find(t, ())
    if hit is None:
        return None
    new, r, path, _, _ = hit
    return new, r.name, path


def normalize(
    t: Term,
    fuel: int = DEFAULT_FUEL,
    env: Optional[Mapping[str, Type]] = None,
    rules: Optional[Iterable[Rule]] = None,
) -> tuple[Term, RewriteTrace]:
    """Rewrite ``t`` to a normal form.

    With ``env`` the term is first annotated so empties stay typed throughout.
    Raises :class:`FuelExhausted` after ``fuel`` steps without reaching a
    normal form.
    """
    if env is not None:
        try:
            t = annotate_empties(env, t)
        except NrcTypeError:
            pass
    engine = _Engine(RULES if rules is None else rules, env)
    initial, steps = t, []
    while True:
        hit = engine.find(t, ())
        if hit is None:
            return t, RewriteTrace(initial, steps, t, fuel - len(steps))
        if len(steps) >= fuel:
            raise FuelExhausted(RewriteTrace(initial, steps, t, 0))
        t, r, path, before, after = hit
        steps.append(Step(r.name, path, before, after))
