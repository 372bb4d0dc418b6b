"""Random generation of well-typed terms, databases and SQL queries.

Everything is driven by a :class:`random.Random` seeded from
:class:`GenConfig`, so one configuration always yields one sequence.  Atom
domains are tiny on purpose: collisions are what tell set semantics from bag
semantics apart.

``max_depth`` bounds the nesting of collection-valued constructors; atom and
record expressions below them add at most three more levels.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from .core import (
    BOOL,
    FALSE,
    INT,
    STRING,
    TRUE,
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
    is_flat_collection,
    lit,
    replace_at,
    subterm,
    walk,
)
from .rewrite import DEFAULT_FUEL, RULES, Ctx, FuelExhausted, Rule, RewriteTrace, normalize
from .semantics import BagV, EvalError, Rec, SetV, evaluate
from .typecheck import NrcTypeError, check_flat_delta_iota, check_no_iota_in_bag_comprehension, infer_types, typecheck

LABELS = ("a", "b", "c")
BINDERS = ("x", "y", "z")
TABLES = ("T", "U", "V")


class GenerationExhausted(Exception):
    pass


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 6
    max_size: int = 4
    int_max: int = 3  # integers 0..int_max
    strings: tuple[str, ...] = ("a", "b", "c")
    dup_rate: float = 0.3  # chance that a bag row repeats an earlier one
    allow_iota_in_bag_comp: bool = False
    allow_nonflat: bool = False
    nested_records: bool = False

    def derive(self, index: int) -> "GenConfig":
        """Configuration for the ``index``-th case of a run."""
        return replace(self, seed=self.seed * 1_000_003 + index)


# ---------------------------------------------------------------------------
# Types and values


class Generator:
    """Stateful generator; all randomness comes from ``self.rng``."""

    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)

    # -- types

    def atom_type(self) -> Atom:
        return self.rng.choices((INT, STRING, BOOL), (5, 2, 1))[0]

    def record_type(self, allow_nested: Optional[bool] = None) -> RecordType:
        nested = self.cfg.nested_records if allow_nested is None else allow_nested
        labels = self.rng.sample(LABELS, self.rng.randint(1, len(LABELS)))
        fields = []
        for label in sorted(labels):
            if nested and self.rng.random() < 0.25:
                inner = self.record_type(allow_nested=False)
                fty = self.rng.choice((inner, SetType(inner), BagType(inner)))
            else:
                fty = self.atom_type()
            fields.append((label, fty))
        return RecordType(tuple(fields))

    def elem_type(self, env: Mapping[str, Type] = ()) -> Type:
        """Element type for a new collection, biased towards types already in scope."""
        known = []
        for ty in dict(env).values():
            if isinstance(ty, (SetType, BagType)):
                known.append(ty.elem)
            elif isinstance(ty, RecordType):
                known.append(ty)
        if self.cfg.allow_nonflat and self.rng.random() < 0.15:
            inner = self.record_type()
            return self.rng.choice((SetType(inner), BagType(inner)))
        if known and self.rng.random() < 0.7:
            return self.rng.choice(known)
        return self.record_type()

    def schema(self, n_tables: Optional[int] = None) -> dict[str, Type]:
        """Flat table types; some tables share a row type so unions and joins line up."""
        n = n_tables if n_tables is not None else self.rng.randint(2, 3)
        shared = self.record_type(allow_nested=False)
        out = {}
        for name in TABLES[:n]:
            row = shared if self.rng.random() < 0.5 else self.record_type(allow_nested=False)
            out[name] = self.rng.choice((BagType, BagType, SetType))(row)
        return out

    # -- values

    def atom_value(self, ty: Atom):
        if ty == INT:
            return self.rng.randint(0, self.cfg.int_max)
        if ty == STRING:
            return self.rng.choice(self.cfg.strings)
        if ty == BOOL:
            return self.rng.random() < 0.5
        raise GenerationExhausted(f"no values of atomic type {ty}")

    def value(self, ty: Type, size: Optional[int] = None):
        if isinstance(ty, Atom):
            return self.atom_value(ty)
        if isinstance(ty, RecordType):
            return Rec.of({label: self.value(fty, size) for label, fty in ty.fields})
        limit = self.cfg.max_size if size is None else size
        n = self.rng.randint(0, limit)
        elems = []
        for _ in range(n):
            if elems and self.rng.random() < self.cfg.dup_rate:
                elems.append(self.rng.choice(elems))
            else:
                elems.append(self.value(ty.elem, min(limit, 2)))
        if isinstance(ty, SetType):
            return SetV(frozenset(elems))
        return BagV.of(*elems)

    def database(self, env: Mapping[str, Type]) -> dict:
        """A value for every variable of ``env``."""
        return {name: self.value(ty) for name, ty in sorted(env.items())}

    # -- terms

    def term(self, goal: Type, env: Mapping[str, Type], depth: Optional[int] = None, in_bag: bool = False) -> Term:
        depth = self.cfg.max_depth if depth is None else depth
        if isinstance(goal, Atom):
            if goal not in (INT, STRING, BOOL):
                raise GenerationExhausted(f"no terms of atomic type {goal}")
            return self.atom_term(goal, env, 2)
        if isinstance(goal, RecordType):
            return self.record_term(goal, env, depth, in_bag)
        if isinstance(goal, (SetType, BagType)):
            return self.coll_term(goal, env, depth, in_bag)
        raise GenerationExhausted(f"cannot generate terms of type {goal}")

    def _pick(self, options):
        options = [(w, f) for w, f in options if w > 0]
        weights = [w for w, _ in options]
        return self.rng.choices([f for _, f in options], weights)[0]()

    def projections(self, goal: Type, env: Mapping[str, Type]) -> list[Term]:
        out = []
        for name, ty in sorted(env.items()):
            if isinstance(ty, RecordType):
                for label, fty in ty.fields:
                    if fty == goal:
                        out.append(Project(Var(name), label))
                    elif isinstance(fty, RecordType) and self.cfg.nested_records:
                        for l2, f2 in fty.fields:
                            if f2 == goal:
                                out.append(Project(Project(Var(name), label), l2))
        return out

    def atom_term(self, goal: Atom, env, budget: int) -> Term:
        projs = self.projections(goal, env)

        def literal():
            return lit(self.atom_value(goal))

        def compare():
            ty = self.rng.choice((INT, INT, STRING))
            op = self.rng.choice(("=", "=", "!=", "<"))
            return Const(op, (self.atom_term(ty, env, budget - 1), self.atom_term(ty, env, budget - 1)))

        def logic():
            op = self.rng.choice(("and", "or", "not"))
            if op == "not":
                return Const("not", (self.atom_term(BOOL, env, budget - 1),))
            return Const(op, (self.atom_term(BOOL, env, budget - 1), self.atom_term(BOOL, env, budget - 1)))

        def project_record():
            label = self.rng.choice(LABELS)
            others = [l for l in LABELS if l != label and self.rng.random() < 0.5]
            fields = [(label, self.atom_term(goal, env, budget - 1))]
            fields += [(l, self.atom_term(self.atom_type(), env, budget - 1)) for l in others]
            self.rng.shuffle(fields)
            return Project(Record(tuple(fields)), label)

        deeper = budget > 0
        is_bool = goal == BOOL
        return self._pick(
            [
                (2, literal),
                (5 if projs else 0, lambda: self.rng.choice(projs)),
                (4 if is_bool and deeper else 0, compare),
                (1 if is_bool and deeper else 0, logic),
                (0.3 if deeper else 0, project_record),
            ]
        )

    def cond(self, env) -> Term:
        return self.atom_term(BOOL, env, 2)

    def record_term(self, goal: RecordType, env, depth: int, in_bag: bool) -> Term:
        same = [Var(n) for n, ty in sorted(env.items()) if ty == goal]

        def literal():
            fields = []
            for label, fty in goal.fields:
                if isinstance(fty, Atom):
                    fields.append((label, self.atom_term(fty, env, 2)))
                else:
                    fields.append((label, self.term(fty, env, max(depth - 1, 1), in_bag)))
            return Record(tuple(fields))

        return self._pick([(3 if same else 0, lambda: self.rng.choice(same)), (3, literal)])

    def coll_term(self, goal, env, depth: int, in_bag: bool) -> Term:
        is_set = isinstance(goal, SetType)
        elem = goal.elem
        comp, empty, single, union, where = (
            (SetComp, EmptySet, SingletonSet, Union, WhereSet)
            if is_set
            else (BagComp, EmptyBag, SingletonBag, BagUnion, WhereBag)
        )
        tables = [Var(n) for n, ty in sorted(env.items()) if ty == goal]
        other = SetType(elem) if not is_set else BagType(elem)
        converted_tables = [Var(n) for n, ty in sorted(env.items()) if ty == other]
        deeper = depth > 1
        flat_ok = self.cfg.allow_nonflat or is_flat_collection(goal)
        iota_ok = not in_bag or self.cfg.allow_iota_in_bag_comp

        def comprehension():
            table_elems = [ty.elem for n, ty in sorted(env.items()) if isinstance(ty, (SetType, BagType))]
            if table_elems and self.rng.random() < 0.6:
                src_elem = self.rng.choice(table_elems)
            else:
                src_elem = self.elem_type(env)
            src_kind = SetType if is_set else BagType
            inside = in_bag or not is_set
            source = self.coll_term(src_kind(src_elem), env, depth - 1, inside)
            var = self.rng.choice(BINDERS)
            body = self.coll_term(goal, {**env, var: src_elem}, depth - 1, inside)
            return comp(body, var, source)

        def converted_table():
            table = self.rng.choice(converted_tables)
            return Dedup(table) if is_set else Promote(table)

        def converted():
            if is_set:
                return Dedup(self.coll_term(BagType(elem), env, depth - 1, in_bag))
            return Promote(self.coll_term(SetType(elem), env, depth - 1, in_bag))

        return self._pick(
            [
                (6 if tables else 0, lambda: self.rng.choice(tables)),
                (3 if converted_tables and flat_ok and (is_set or iota_ok) else 0, converted_table),
                (0.3, lambda: empty(elem)),
                (2, lambda: single(self.term(elem, env, depth - 1, in_bag))),
                (2 if deeper else 0, lambda: union(
                    self.coll_term(goal, env, depth - 1, in_bag), self.coll_term(goal, env, depth - 1, in_bag)
                )),
                (3 + 2 * depth if deeper else 0, comprehension),
                (2 if deeper else 0, lambda: where(self.cond(env), self.coll_term(goal, env, depth - 1, in_bag))),
                (2 if deeper and flat_ok and (is_set or iota_ok) else 0, converted),
            ]
        )

    def query(self, env: Mapping[str, Type]) -> tuple[Term, Type]:
        """A flat-typed query over the tables of ``env`` and its type."""
        table_elems = [ty.elem for _, ty in sorted(env.items()) if isinstance(ty, (SetType, BagType))]
        if table_elems and self.rng.random() < 0.7:
            elem = self.rng.choice(table_elems)
        else:
            elem = self.record_type(allow_nested=False)
        if not isinstance(elem, RecordType):
            elem = self.record_type(allow_nested=False)
        goal = self.rng.choice((SetType, BagType))(elem)
        return self.term(goal, env), goal


def gen_term(cfg: GenConfig, goal: Type, env: Mapping[str, Type]) -> Term:
    """One term of type ``goal`` under ``env``, honoring the toggles of ``cfg``."""
    g = Generator(cfg)
    t = g.term(goal, env)
    typecheck(env, t, goal)
    if not cfg.allow_nonflat:
        assert not check_flat_delta_iota(env, t)
    if not cfg.allow_iota_in_bag_comp:
        assert not check_no_iota_in_bag_comprehension(t)
    return t


def gen_database(cfg: GenConfig, env: Mapping[str, Type]) -> dict:
    """Random contents for the table variables of ``env``."""
    return Generator(cfg).database(env)


# ---------------------------------------------------------------------------
# Rule instances


@dataclass
class RuleInstance:
    rule: str
    term: Term
    types: dict[str, Type]  # tables and free record variables


def default_term(ty: Type) -> Term:
    """Closed term of type ``ty``, used by mutations."""
    if ty == INT:
        return lit(0)
    if ty == STRING:
        return lit("")
    if ty == BOOL:
        return FALSE
    if isinstance(ty, RecordType):
        return Record(tuple((l, default_term(f)) for l, f in ty.fields))
    if isinstance(ty, SetType):
        return EmptySet(ty.elem)
    if isinstance(ty, BagType):
        return EmptyBag(ty.elem)
    raise GenerationExhausted(f"no default for {ty}")


class _Kind:
    def __init__(self, is_set: bool):
        if is_set:
            self.comp, self.empty, self.single, self.union, self.where, self.coll = (
                SetComp, EmptySet, SingletonSet, Union, WhereSet, SetType
            )
        else:
            self.comp, self.empty, self.single, self.union, self.where, self.coll = (
                BagComp, EmptyBag, SingletonBag, BagUnion, WhereBag, BagType
            )


def rule_instance(g: Generator, rule_name: str) -> RuleInstance:
    """A random redex of ``rule_name`` at the root, plus the types of its free variables.

    Free record variables reuse the binder names, so generated subterms
    regularly mention an outer ``x`` under a binder ``x``; capture mistakes in
    a rule then change the result.
    """
    types: dict[str, Type] = dict(g.schema())
    for name in BINDERS:
        if g.rng.random() < 0.8:
            types[name] = g.record_type()
    d = max(g.cfg.max_depth - 2, 2)
    elem = g.elem_type(types)
    rng = g.rng

    def sub(goal, env=types):
        return g.term(goal, env, d)

    def binder():
        return rng.choice(BINDERS)

    def mention(body: Term, env, bound: str) -> Term:
        """Sometimes guard ``body`` with a condition over an outer record variable."""
        outer = {n: ty for n, ty in types.items() if isinstance(ty, RecordType) and n != bound}
        projs = [p for ty in (INT, STRING) for p in g.projections(ty, outer)]
        if not projs or rng.random() < 0.5:
            return body
        p = rng.choice(projs)
        cond = Const("=", (p, lit(g.atom_value(typecheck(outer, p)))))
        where = WhereSet if isinstance(typecheck(env, body), SetType) else WhereBag
        return where(cond, body)

    if rule_name.startswith(("setcomp", "bagcomp", "whereset", "wherebag")):
        k = _Kind(rule_name.startswith(("setcomp", "whereset")))
        goal = k.coll(elem)
        suffix = rule_name.split("-", 1)[1]
        if rule_name.startswith(("setcomp", "bagcomp")):
            x = binder()
            s_elem = g.elem_type(types)
            inner = {**types, x: s_elem}
            if suffix == "body-empty":
                t = k.comp(k.empty(elem), x, sub(k.coll(s_elem)))
            elif suffix == "src-empty":
                t = k.comp(sub(goal, inner), x, k.empty(s_elem))
            elif suffix == "src-singleton":
                t = k.comp(sub(goal, inner), x, k.single(sub(s_elem)))
            elif suffix == "body-union":
                t = k.comp(k.union(sub(goal, inner), sub(goal, inner)), x, sub(k.coll(s_elem)))
            elif suffix == "src-union":
                t = k.comp(sub(goal, inner), x, k.union(sub(k.coll(s_elem)), sub(k.coll(s_elem))))
            elif suffix == "src-comp":
                y = binder()
                r_elem = g.elem_type(inner)
                body_env = {**types, y: r_elem}
                m = mention(sub(goal, body_env), body_env, y)
                t = k.comp(m, y, k.comp(sub(k.coll(r_elem), inner), x, sub(k.coll(s_elem))))
            elif suffix == "src-where":
                t = k.comp(mention(sub(goal, inner), inner, x), x, k.where(g.cond(types), sub(k.coll(s_elem))))
            else:
                raise KeyError(rule_name)
        else:
            if suffix == "true":
                t = k.where(TRUE, sub(goal))
            elif suffix == "false":
                t = k.where(FALSE, sub(goal))
            elif suffix == "union":
                t = k.where(g.cond(types), k.union(sub(goal), sub(goal)))
            elif suffix == "empty":
                t = k.where(g.cond(types), k.empty(elem))
            elif suffix == "and":
                t = k.where(g.cond(types), k.where(g.cond(types), sub(goal)))
            elif suffix == "comp":
                x = binder()
                s_elem = g.elem_type(types)
                inner = {**types, x: s_elem}
                t = k.where(g.cond(types), k.comp(sub(goal, inner), x, sub(k.coll(s_elem))))
            else:
                raise KeyError(rule_name)
    elif rule_name.startswith("delta-"):
        bag = BagType(elem)
        suffix = rule_name[len("delta-"):]
        if suffix == "empty":
            arg = EmptyBag(elem)
        elif suffix == "singleton":
            arg = SingletonBag(sub(elem))
        elif suffix == "bagunion":
            arg = BagUnion(sub(bag), sub(bag))
        elif suffix == "bagcomp":
            x = binder()
            s_elem = g.elem_type(types)
            arg = BagComp(sub(bag, {**types, x: s_elem}), x, sub(BagType(s_elem)))
        elif suffix == "iota":
            arg = Promote(sub(SetType(elem)))
        elif suffix == "wherebag":
            arg = WhereBag(g.cond(types), sub(bag))
        else:
            raise KeyError(rule_name)
        t = Dedup(arg)
    elif rule_name.startswith("iota-"):
        suffix = rule_name[len("iota-"):]
        if suffix == "empty":
            arg = EmptySet(elem)
        elif suffix == "singleton":
            arg = SingletonSet(sub(elem))
        elif suffix == "where":
            arg = WhereSet(g.cond(types), sub(SetType(elem)))
        else:
            raise KeyError(rule_name)
        t = Promote(arg)
    elif rule_name == "project":
        labels = rng.sample(LABELS, rng.randint(1, len(LABELS)))
        fields = []
        for label in labels:
            ty = rng.choice((INT, INT, STRING, g.record_type(), SetType(elem), BagType(elem)))
            fields.append((label, sub(ty)))
        # several fields of one type make a wrong label visible
        if len(fields) > 1 and rng.random() < 0.5:
            ty = INT
            fields = [(l, sub(ty)) for l, _ in fields]
        t = Project(Record(tuple(fields)), rng.choice(labels))
    else:
        raise KeyError(rule_name)
    typecheck(types, t)
    return RuleInstance(rule_name, t, types)


# ---------------------------------------------------------------------------
# Mutations


def _elem(ctx: Ctx, t: Term) -> Type:
    ty = ctx.elem_type(t)
    if ty is None:
        raise GenerationExhausted("mutation needs a typed context")
    return ty


def _mutate(name: str, t: Term, out: Term, ctx: Ctx) -> Term:
    suffix = name.split("-", 1)[1] if "-" in name else name
    if name.startswith(("setcomp", "bagcomp", "whereset", "wherebag")):
        k = _Kind(name.startswith(("setcomp", "whereset")))
        if suffix in ("body-empty", "src-empty", "empty"):
            return k.single(default_term(_elem(ctx, t)))
        if suffix == "src-singleton":
            return t.body  # forgets the substitution
        if suffix in ("body-union", "src-union"):
            return out.left
        if suffix == "src-comp":
            inner = t.source
            if k.comp is SetComp:
                # forgets to rename the moved binder
                return SetComp(SetComp(t.body, t.var, inner.body), inner.var, inner.source)
            return Promote(Dedup(out))
        if suffix == "src-where":
            return k.comp(out.body.body, out.var, out.source)
        if suffix == "true":
            return k.empty(_elem(ctx, t))
        if suffix == "false":
            return t.body
        if suffix == "union":
            return k.union(out.left, t.body.right)
        if suffix == "and":
            return k.where(t.cond, t.body.body)
        if suffix == "comp":
            return k.comp(out.body.body, out.var, out.source)
    if name == "delta-empty":
        return SingletonSet(default_term(_elem(ctx, t)))
    if name in ("delta-singleton", "delta-bagcomp", "delta-iota"):
        return EmptySet(_elem(ctx, t))
    if name == "delta-bagunion":
        return out.left
    if name == "delta-wherebag":
        return out.body
    if name == "iota-empty":
        return SingletonBag(default_term(_elem(ctx, t)))
    if name == "iota-singleton":
        return BagUnion(out, out)
    if name == "iota-where":
        return out.body
    if name == "project":
        env = ctx.local_env or {}
        try:
            want = typecheck(env, out)
        except NrcTypeError:
            return default_term(INT)
        for label, m in reversed(t.term.fields):
            if label != t.label:
                try:
                    if typecheck(env, m) == want:
                        return m
                except NrcTypeError:
                    pass
        if want == INT:
            return lit(1) if out == lit(0) else lit(0)
        return default_term(want)
    raise KeyError(name)


def mutate_rule(r: Rule) -> Rule:
    """A copy of ``r`` whose right-hand side is deliberately wrong."""

    def apply(t: Term, ctx: Ctx):
        out = r.apply(t, ctx)
        if out is None:
            return None
        return _mutate(r.name, t, out, ctx)

    return replace(r, apply=apply)


def mutated_catalogue(name: str) -> list[Rule]:
    return [mutate_rule(r) if r.name == name else r for r in RULES]


# ---------------------------------------------------------------------------
# Oracles


def _eval_or_error(env, t):
    try:
        return evaluate(env, t)
    except (EvalError, RecursionError, TypeError, KeyError) as exc:
        return exc


def _differs(a, b) -> bool:
    if isinstance(a, Exception) or isinstance(b, Exception):
        return True
    return a != b


@dataclass
class RuleCheck:
    rule: str
    instances: int
    failures: list = field(default_factory=list)  # (RuleInstance, db, before, after)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_rule(
    rule_obj: Rule, cfg: GenConfig, instances: int = 200, dbs_per_instance: int = 2, stop_at_first: bool = False
) -> RuleCheck:
    """Apply ``rule_obj`` at the root of random redexes and compare results."""
    result = RuleCheck(rule_obj.name, 0)
    icfg = replace(cfg, allow_iota_in_bag_comp=True)
    for i in range(instances):
        g = Generator(icfg.derive(i))
        inst = rule_instance(g, rule_obj.name)
        out = rule_obj.apply(inst.term, Ctx(inst.types))
        result.instances += 1
        if out is None:
            result.failures.append((inst, None, "rule did not fire on its own redex", None))
            continue
        try:
            if typecheck(inst.types, out) != typecheck(inst.types, inst.term):
                result.failures.append((inst, None, "type changed", out))
                continue
        except NrcTypeError as exc:
            result.failures.append((inst, None, f"ill-typed right-hand side: {exc}", out))
            continue
        for _ in range(dbs_per_instance):
            db = g.database(inst.types)
            before, after = _eval_or_error(db, inst.term), _eval_or_error(db, out)
            if _differs(before, after):
                result.failures.append((inst, db, before, after))
                break
        if stop_at_first and result.failures:
            break
    return result


@dataclass
class Counterexample:
    term: Term
    db: dict
    expected: object
    actual: object
    trace: Optional[RewriteTrace]


@dataclass
class PreservationResult:
    passed: bool
    counterexample: Optional[Counterexample] = None
    shrunk: Optional[Counterexample] = None
    trace: Optional[RewriteTrace] = None


def _fails(t, db, fuel, types, rules):
    """A counterexample if normalizing ``t`` changes its value on ``db``."""
    nf, trace = normalize(t, fuel=fuel, env=types, rules=rules)
    expected, actual = _eval_or_error(db, t), _eval_or_error(db, nf)
    if _differs(expected, actual):
        return Counterexample(t, db, expected, actual, trace)
    return None


def check_preservation(
    t: Term,
    envs: Sequence[Mapping],
    fuel: int = DEFAULT_FUEL,
    types: Optional[Mapping[str, Type]] = None,
    rules: Optional[Sequence[Rule]] = None,
    shrink: bool = True,
) -> PreservationResult:
    """Whether ``normalize`` preserves the value of ``t`` on every database in ``envs``.

    On failure the term and database are shrunk to a smaller counterexample
    that still fails.  :class:`FuelExhausted` propagates with its trace.
    """
    nf, trace = normalize(t, fuel=fuel, env=types, rules=rules)
    for db in envs:
        expected, actual = _eval_or_error(db, t), _eval_or_error(db, nf)
        if _differs(expected, actual):
            cex = Counterexample(t, dict(db), expected, actual, trace)
            small = shrink_counterexample(cex, fuel, types, rules) if shrink else cex
            return PreservationResult(False, cex, small, trace)
    return PreservationResult(True, trace=trace)


def _term_candidates(t: Term, types: Optional[Mapping[str, Type]]):
    """Smaller well-typed variants of ``t``, roughly largest reduction first."""
    try:
        typed = infer_types(types or {}, t)
    except NrcTypeError:
        typed = {}
    nodes = sorted(walk(t), key=lambda pt: -pt[1].size)
    for path, node in nodes:
        if isinstance(node, (Union, BagUnion)):
            yield replace_at(t, path, node.left)
            yield replace_at(t, path, node.right)
        if isinstance(node, (WhereSet, WhereBag)):
            yield replace_at(t, path, node.body)
        if isinstance(node, (SetComp, BagComp)) and node.var not in node.body.fv:
            yield replace_at(t, path, node.body)
        ty = typed.get(path)
        if isinstance(ty, SetType) and not isinstance(node, EmptySet):
            yield replace_at(t, path, EmptySet(ty.elem))
        if isinstance(ty, BagType) and not isinstance(node, EmptyBag):
            yield replace_at(t, path, EmptyBag(ty.elem))


def _db_candidates(db: Mapping):
    for name in sorted(db):
        v = db[name]
        if isinstance(v, BagV):
            for x, _ in sorted(v.items, key=lambda p: repr(p[0])):
                counts = dict(v.counts)
                counts[x] -= 1
                yield {**db, name: BagV.from_counts({k: n for k, n in counts.items() if n})}
        elif isinstance(v, SetV):
            for x in sorted(v.elems, key=repr):
                yield {**db, name: SetV(v.elems - {x})}


def shrink_counterexample(cex: Counterexample, fuel=DEFAULT_FUEL, types=None, rules=None) -> Counterexample:
    """Greedy structural shrinking; every step strictly shrinks the term or the database."""
    current = cex
    progress = True
    while progress:
        progress = False
        for cand in _term_candidates(current.term, types):
            if cand.size >= current.term.size:
                continue
            try:
                if types is not None:
                    typecheck(types, cand)
                found = _fails(cand, current.db, fuel, types, rules)
            except (NrcTypeError, FuelExhausted):
                continue
            if found is not None:
                current, progress = found, True
                break
        if progress:
            continue
        for cand_db in _db_candidates(current.db):
            try:
                found = _fails(current.term, cand_db, fuel, types, rules)
            except FuelExhausted:
                continue
            if found is not None:
                current, progress = found, True
                break
    return current


# ---------------------------------------------------------------------------
# SQL queries

from .sqlbridge.ast import BinOp, Column, FromItem, Literal, Not, Query, Select, SqlUnion, Table  # noqa: E402


class SqlGenerator:
    """Random queries of the SQL fragment over a flat schema."""

    def __init__(self, g: Generator, schema: Mapping[str, Type]):
        self.g = g
        self.rng = g.rng
        self.schema = dict(schema)

    def row_type(self) -> RecordType:
        if self.rng.random() < 0.6:
            return self.rng.choice([ty.elem for _, ty in sorted(self.schema.items())])
        return self.g.record_type(allow_nested=False)

    def expr(self, ty: Atom, cols: list, budget: int = 2):
        matching = [Column(a, l) for a, l, t in cols if t == ty]
        options = [(2, lambda: Literal(self.g.atom_value(ty)))]
        if matching:
            options.append((5, lambda: self.rng.choice(matching)))
        if ty == BOOL and budget > 0:
            def compare():
                cty = self.rng.choice((INT, INT, STRING))
                op = self.rng.choice(("=", "=", "<>", "<"))
                return BinOp(op, self.expr(cty, cols, 0), self.expr(cty, cols, 0))

            def logic():
                op = self.rng.choice(("AND", "OR", "NOT"))
                if op == "NOT":
                    return Not(self.expr(BOOL, cols, budget - 1))
                return BinOp(op, self.expr(BOOL, cols, budget - 1), self.expr(BOOL, cols, budget - 1))

            options += [(4, compare), (1, logic)]
        return self.g._pick(options)

    def query(self, row: RecordType, depth: int = 3, operand: bool = False) -> Query:
        tables = [n for n, ty in sorted(self.schema.items()) if ty.elem.fields == row.fields]
        options = [(6, lambda: self.select(row, depth))]
        if depth > 1:
            options.append((2, lambda: SqlUnion(
                self.rng.random() < 0.5, self.query(row, depth - 1, True), self.query(row, depth - 1, True)
            )))
        if tables and operand:
            options.append((2, lambda: Table(self.rng.choice(tables))))
        return self.g._pick(options)

    def select(self, row: RecordType, depth: int) -> Select:
        n_from = self.rng.choice((1, 1, 2, 2, 3)) if self.rng.random() > 0.05 else 0
        items, cols = [], []
        for alias in BINDERS[:n_from]:
            if depth > 1 and self.rng.random() < 0.3:
                sub_row = self.row_type()
                source = self.query(sub_row, depth - 1, True)
                fields = sub_row.fields
            else:
                name = self.rng.choice(sorted(self.schema))
                source = Table(name)
                fields = self.schema[name].elem.fields
            items.append(FromItem(source, alias))
            cols += [(alias, l, t) for l, t in fields]
        projections = tuple((self.expr(t, cols), l) for l, t in row.fields)
        where = self.expr(BOOL, cols) if self.rng.random() < 0.6 else None
        return Select(self.rng.random() < 0.4, projections, tuple(items), where)


def gen_sql_query(cfg: GenConfig, schema: Mapping[str, Type]) -> Query:
    g = Generator(cfg)
    s = SqlGenerator(g, schema)
    return s.query(s.row_type(), depth=3)
