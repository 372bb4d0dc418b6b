"""Property suites run by ``nrcsb check`` and the acceptance tests.

Every suite takes a :class:`~nrcsb.propgen.GenConfig` and a case count,
derives one configuration per case, and returns a :class:`SuiteResult` whose
failures carry enough to reproduce them (term, tables, trace).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .core import BagComp, BagType, BagUnion, Dedup, Promote, SetComp, SetType, Term, Union, Var
from .normalform import is_bag_normal, is_set_normal
from .pipeline import compile_to_sql
from .propgen import (
    BINDERS,
    GenConfig,
    Generator,
    SqlGenerator,
    check_preservation,
    check_rule,
    mutate_rule,
    mutated_catalogue,
)
from .rewrite import RULES, FuelExhausted, RewriteTrace, normalize
from .semantics import BagV, SetV, bag_leq, database_to_json, dedup_value, evaluate, promote_value, render_value, set_subset
from .sqlbridge import parse_sql, print_sql, sql_to_nrc
from .syntax import pretty_print
from .typecheck import check_flat_delta_iota, check_no_iota_in_bag_comprehension


@dataclass
class SuiteFailure:
    case: str
    message: str
    term: Optional[Term] = None
    types: Optional[dict] = None
    db: Optional[dict] = None
    trace: Optional[RewriteTrace] = None
    extra: dict = field(default_factory=dict)

    def dump(self, directory: Path) -> Path:
        """Write ``term.nrc``, ``db.json``, ``trace.jsonl`` and ``failure.txt``."""
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "failure.txt").write_text(self.message + "\n", encoding="utf-8")
        if self.term is not None:
            (directory / "term.nrc").write_text(pretty_print(self.term) + "\n", encoding="utf-8")
        if self.types is not None:
            tables = {n: ty for n, ty in self.types.items() if isinstance(ty, (SetType, BagType))}
            values = {n: v for n, v in (self.db or {}).items() if n in tables}
            (directory / "db.json").write_text(
                json.dumps(database_to_json(tables, values), indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            others = {n: v for n, v in (self.db or {}).items() if n not in tables}
            if others:
                lines = [f"{n} = {render_value(v)}" for n, v in sorted(others.items())]
                (directory / "bindings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if self.trace is not None:
            (directory / "trace.jsonl").write_text(self.trace.to_jsonl(), encoding="utf-8")
        for name, text in sorted(self.extra.items()):
            (directory / name).write_text(text, encoding="utf-8")
        return directory


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list[SuiteFailure] = field(default_factory=list)
    elapsed: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.cases} cases, {len(self.failures)} failures"

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "ok": self.ok,
            "cases": self.cases,
            "failures": [{"case": f.case, "message": f.message} for f in self.failures],
            "notes": self.notes,
        }


def _timed(fn):
    def run(cfg: GenConfig, cases: int, **kw) -> SuiteResult:
        start = time.perf_counter()
        result = fn(cfg, cases, **kw)
        result.elapsed = time.perf_counter() - start
        return result

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def suite_rules(cfg: GenConfig, cases: int = 200, dbs: int = 2) -> SuiteResult:
    """Each rule preserves values on ``cases`` random redexes."""
    result = SuiteResult("rules")
    for r in RULES:
        check = check_rule(r, cfg, instances=cases, dbs_per_instance=dbs)
        result.cases += check.instances
        for inst, db, before, after in check.failures:
            result.failures.append(
                SuiteFailure(f"{r.name}", f"rule {r.name}: {before!r} vs {after!r}", inst.term, inst.types, db)
            )
    return result


def _query_case(cfg: GenConfig, i: int):
    g = Generator(cfg.derive(i))
    schema = g.schema()
    t, ty = g.query(schema)
    return g, schema, t


@_timed
def suite_preservation(cfg: GenConfig, cases: int = 1000, dbs: int = 5, rules=None) -> SuiteResult:
    """Normalization preserves the value of generated flat queries."""
    result = SuiteResult("preservation")
    for i in range(cases):
        g, schema, t = _query_case(cfg, i)
        envs = [g.database(schema) for _ in range(dbs)]
        result.cases += 1
        try:
            res = check_preservation(t, envs, types=schema, rules=rules)
        except FuelExhausted as exc:
            result.failures.append(SuiteFailure(str(i), "fuel exhausted", t, schema, None, exc.trace))
            continue
        if not res.passed:
            small = res.shrunk
            msg = f"value changed: {render_value(small.expected) if not isinstance(small.expected, Exception) else small.expected}" \
                f" became {render_value(small.actual) if not isinstance(small.actual, Exception) else small.actual}"
            result.failures.append(SuiteFailure(str(i), msg, small.term, schema, small.db, small.trace))
    return result


@_timed
def suite_translation(cfg: GenConfig, cases: int = 500) -> SuiteResult:
    """Flat queries without ι in bag comprehensions normalize to SQL-shaped terms."""
    result = SuiteResult("translation")
    for i in range(cases):
        _, schema, t = _query_case(cfg, i)
        result.cases += 1
        if check_flat_delta_iota(schema, t) or check_no_iota_in_bag_comprehension(t):
            result.failures.append(SuiteFailure(str(i), "generator violated the side conditions", t, schema))
            continue
        try:
            compiled = compile_to_sql(t, schema)
        except Exception as exc:  # any failure here refutes the property
            result.failures.append(SuiteFailure(str(i), f"{type(exc).__name__}: {exc}", t, schema))
            continue
        if is_set_normal(compiled.normal_form) is None and is_bag_normal(compiled.normal_form) is None:
            result.failures.append(SuiteFailure(str(i), "normal form not recognized", compiled.normal_form, schema))
    return result


@_timed
def suite_galois(cfg: GenConfig, cases: int = 1000) -> SuiteResult:
    """``ι ⊣ δ``: ``ιM ⊑ N`` iff ``M ⊆ δN``, and ``διM = M``."""
    result = SuiteResult("galois")
    holds = 0
    for i in range(cases):
        g = Generator(cfg.derive(i))
        elem = g.record_type(allow_nested=False)
        m = g.value(SetType(elem))
        n = g.value(BagType(elem))
        if g.rng.random() < 0.5:
            # make the relation hold often enough to test both directions
            extra = [x for x in m.elems if g.rng.random() < 0.8]
            n = BagV.from_counts({**n.counts, **{x: n.counts.get(x, 0) + 1 for x in extra}})
        result.cases += 1
        left = bag_leq(promote_value(m), n)
        right = set_subset(m, dedup_value(n))
        holds += left
        if left != right:
            result.failures.append(
                SuiteFailure(str(i), f"ι{render_value(m)} ⊑ {render_value(n)} is {left} but ⊆ is {right}")
            )
        if dedup_value(promote_value(m)) != m:
            result.failures.append(SuiteFailure(str(i), f"δι{render_value(m)} differs"))
    result.notes["relation_held"] = holds
    return result


@_timed
def suite_simulation(cfg: GenConfig, cases: int = 500) -> SuiteResult:
    """Set union and comprehension agree with their bag encodings through ι and δ."""
    result = SuiteResult("simulation")
    for i in range(cases):
        g = Generator(cfg.derive(i))
        schema = g.schema()
        elem = g.record_type(allow_nested=False)
        depth = max(cfg.max_depth - 2, 1)
        m = g.term(SetType(elem), schema, depth)
        n = g.term(SetType(elem), schema, depth)
        x = g.rng.choice(BINDERS)
        body = g.term(SetType(elem), {**schema, x: elem}, depth)
        pairs = [
            (Union(m, n), Dedup(BagUnion(Promote(m), Promote(n)))),
            (SetComp(body, x, n), Dedup(BagComp(Promote(body), x, Promote(n)))),
        ]
        db = g.database(schema)
        result.cases += 1
        for lhs, rhs in pairs:
            a, b = evaluate(db, lhs), evaluate(db, rhs)
            if a != b:
                result.failures.append(
                    SuiteFailure(str(i), f"{render_value(a)} vs {render_value(b)}", lhs, schema, db)
                )
    return result


@_timed
def suite_idempotence(cfg: GenConfig, cases: int = 500) -> SuiteResult:
    """Normal forms take zero further steps; reruns are byte-identical."""
    result = SuiteResult("idempotence")
    for i in range(cases):
        _, schema, t = _query_case(cfg, i)
        result.cases += 1
        n1, tr1 = normalize(t, env=schema)
        n2, tr2 = normalize(n1, env=schema)
        n3, tr3 = normalize(t, env=schema)
        if tr2.step_count != 0:
            result.failures.append(SuiteFailure(str(i), f"second run took {tr2.step_count} steps", n1, schema))
        if pretty_print(n1) != pretty_print(n3) or tr1.to_jsonl() != tr3.to_jsonl():
            result.failures.append(SuiteFailure(str(i), "normalization is not deterministic", t, schema))
    return result


@_timed
def suite_sql(cfg: GenConfig, cases: int = 300, dbs: int = 5) -> SuiteResult:
    """SQL → NRC → normalize → SQL → NRC keeps the bag of rows."""
    result = SuiteResult("sql")
    for i in range(cases):
        g = Generator(cfg.derive(i))
        schema = g.schema()
        sg = SqlGenerator(g, schema)
        q = sg.query(sg.row_type(), depth=3)
        result.cases += 1
        text = print_sql(q)
        try:
            if parse_sql(text, schema) != q:
                result.failures.append(SuiteFailure(str(i), f"print/parse mismatch: {text}"))
                continue
            t1 = sql_to_nrc(q, schema)
            compiled = compile_to_sql(t1, schema, extension=True)
            out = print_sql(compiled.query)
            q2 = parse_sql(out, schema)
            if q2 != compiled.query:
                result.failures.append(SuiteFailure(str(i), f"print/parse mismatch: {out}"))
                continue
            t2 = sql_to_nrc(q2, schema)
        except Exception as exc:
            result.failures.append(SuiteFailure(str(i), f"{type(exc).__name__}: {exc} in {text}", types=schema))
            continue
        for _ in range(dbs):
            db = g.database(schema)
            a, b = evaluate(db, t1), evaluate(db, t2)
            if a != b:
                result.failures.append(
                    SuiteFailure(
                        str(i),
                        f"{text}  ⇒  {out}: {render_value(a)} vs {render_value(b)}",
                        t1,
                        schema,
                        db,
                        extra={"input.sql": text + "\n", "output.sql": out + "\n"},
                    )
                )
                break
    return result


@_timed
def suite_mutation(cfg: GenConfig, cases: int = 200) -> SuiteResult:
    """Every corrupted rule is caught by the rule suite or the preservation suite."""
    result = SuiteResult("mutation")
    caught_by = {}
    for r in RULES:
        result.cases += 1
        if check_rule(mutate_rule(r), cfg, instances=cases, stop_at_first=True).failures:
            caught_by[r.name] = "rules"
            continue
        pres = suite_preservation(cfg, cases, dbs=5, rules=mutated_catalogue(r.name))
        if pres.failures:
            caught_by[r.name] = "preservation"
            continue
        result.failures.append(SuiteFailure(r.name, f"mutation of {r.name} went undetected"))
    result.notes["caught_by"] = caught_by
    return result


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "rules": suite_rules,
    "preservation": suite_preservation,
    "translation": suite_translation,
    "galois": suite_galois,
    "simulation": suite_simulation,
    "idempotence": suite_idempotence,
    "sql": suite_sql,
    "mutation": suite_mutation,
}

DEFAULT_CASES = {
    "rules": 200,
    "preservation": 1000,
    "translation": 500,
    "galois": 1000,
    "simulation": 500,
    "idempotence": 500,
    "sql": 300,
    "mutation": 200,
}
