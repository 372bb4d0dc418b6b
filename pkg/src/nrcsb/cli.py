"""``nrcsb`` command-line interface.

Exit status: 0 success, 1 diagnostics or blockers, 2 usage errors,
3 normalization ran out of fuel.  Artifacts go to stdout (or ``-o``); all
diagnostics go to stderr.  ``--format json`` prints one JSON envelope on
stdout instead.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .core import Term
from .normalform import NOT_TRANSLATABLE
from .pipeline import FlatnessError, analyze
from .propgen import GenConfig
from .rewrite import DEFAULT_FUEL, FuelExhausted, RewriteTrace, normalize
from .semantics import DatabaseError, evaluate, EvalError, load_database, render_value, value_to_json
from .sqlbridge import NotTranslatable, SqlError, nrc_to_sql, parse_sql, print_sql, sql_to_nrc
from .suites import DEFAULT_CASES, SUITES
from .syntax import ParseError, parse_term, pretty_print, print_type
from .typecheck import Diagnostic, NrcTypeError, check_flat_delta_iota, check_no_iota_in_bag_comprehension, typecheck

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_USAGE, EXIT_FUEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Out:
    """Collects the artifact and diagnostics of one invocation."""

    def __init__(self, args):
        self.args = args
        self.json = args.format == "json"
        self.diagnostics: list[dict] = []
        self.result = None
        self.extra: dict = {}

    def diag(self, text: str, record: Optional[dict] = None):
        self.diagnostics.append(record or {"message": text})
        if not self.json:
            print(text, file=sys.stderr)

    def finish(self, code: int) -> int:
        if self.json:
            envelope = {
                "command": self.args.command,
                "ok": code == EXIT_OK,
                "exit_code": code,
                "result": self.result,
                "diagnostics": self.diagnostics,
                **self.extra,
            }
            text = json.dumps(envelope, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
            _emit(text, getattr(self.args, "output", None))
        return code

    def artifact(self, text: str, json_value=None):
        self.result = text if json_value is None else json_value
        if not self.json:
            _emit(text if text.endswith("\n") else text + "\n", getattr(self.args, "output", None))


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _fuel(args) -> int:
    if getattr(args, "fuel_value", None) is not None:
        return args.fuel_value
    if args.fuel is not None:
        return args.fuel
    raw = os.environ.get("NRCSB_FUEL")
    if raw is None:
        return DEFAULT_FUEL
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"NRCSB_FUEL must be an integer, got {raw!r}") from None
    if value < 0:
        raise UsageError("NRCSB_FUEL must not be negative")
    return value


def _schema(args, required_rows: bool = False):
    path = getattr(args, "schema", None) or getattr(args, "db", None)
    if not path:
        return {}
    try:
        return load_database(path, require_rows=required_rows).types
    except DatabaseError as exc:
        raise UsageError(str(exc)) from None


def _term(out: _Out, path: str) -> Optional[Term]:
    try:
        return parse_term(_read(path))
    except ParseError as exc:
        out.diag(f"{path}:{exc.line}:{exc.col}: error: {exc.message}", _parse_json(exc))
        return None


def _parse_json(exc: ParseError) -> dict:
    return {"severity": "error", "line": exc.line, "col": exc.col, "message": exc.message, "rule": "parse"}


def _type_error(out: _Out, path: str, exc: NrcTypeError):
    d = exc.diagnostic()
    out.diag(d.render(path), d.to_json())


def _diagnostic(out: _Out, path: str, d: Diagnostic):
    out.diag(d.render(path), d.to_json())


def _trace_lines(trace: RewriteTrace) -> str:
    lines = []
    for i, s in enumerate(trace.steps, 1):
        where = ".".join(map(str, s.path)) or "root"
        lines.append(f"step {i}: {s.rule} at {where}: {pretty_print(s.before)}  ==>  {pretty_print(s.after)}")
    return "\n".join(lines)


def _report_trace(out: _Out, trace: RewriteTrace):
    if out.args.trace:
        if out.json:
            out.extra["trace"] = [s.to_json() for s in trace.steps]
        elif trace.steps:
            print(_trace_lines(trace), file=sys.stderr)


def _fuel_exhausted(out: _Out, exc: FuelExhausted) -> int:
    out.diag(f"error: normalization ran out of fuel after {exc.trace.step_count} steps (raise --fuel or NRCSB_FUEL)")
    _report_trace(out, exc.trace)
    out.extra["partial"] = pretty_print(exc.trace.final)
    return EXIT_FUEL


# ---------------------------------------------------------------------------
# Subcommands


def cmd_typecheck(args, out: _Out) -> int:
    env = _schema(args)
    t = _term(out, args.file)
    if t is None:
        return EXIT_DIAGNOSTICS
    try:
        ty = typecheck(env, t)
    except NrcTypeError as exc:
        _type_error(out, args.file, exc)
        return EXIT_DIAGNOSTICS
    lints = check_flat_delta_iota(env, t) + check_no_iota_in_bag_comprehension(t)
    for d in lints:
        d = Diagnostic("warning", d.path, d.pos, d.message, d.rule)
        _diagnostic(out, args.file, d)
    out.artifact(print_type(ty))
    return EXIT_OK


def cmd_normalize(args, out: _Out) -> int:
    env = _schema(args)
    t = _term(out, args.file)
    if t is None:
        return EXIT_DIAGNOSTICS
    typed_env = None
    if env or not t.fv:
        try:
            typecheck(env, t)
            typed_env = env
        except NrcTypeError as exc:
            _type_error(out, args.file, exc)
            return EXIT_DIAGNOSTICS
    try:
        nf, trace = normalize(t, fuel=_fuel(args), env=typed_env)
    except FuelExhausted as exc:
        return _fuel_exhausted(out, exc)
    _report_trace(out, trace)
    out.extra["steps"] = trace.step_count
    out.artifact(pretty_print(nf))
    return EXIT_OK


def cmd_to_sql(args, out: _Out) -> int:
    env = _schema(args)
    t = _term(out, args.file)
    if t is None:
        return EXIT_DIAGNOSTICS
    try:
        nf, trace, report, _ = analyze(t, env, extension=args.extension, fuel=_fuel(args))
    except NrcTypeError as exc:
        _type_error(out, args.file, exc)
        return EXIT_DIAGNOSTICS
    except FlatnessError as exc:
        for d in exc.diagnostics:
            _diagnostic(out, args.file, d)
        return EXIT_DIAGNOSTICS
    except FuelExhausted as exc:
        return _fuel_exhausted(out, exc)
    _report_trace(out, trace)
    out.extra["verdict"] = report.verdict
    out.extra["normal_form"] = pretty_print(nf)
    if report.verdict == NOT_TRANSLATABLE:
        out.extra["blockers"] = [b.to_json() for b in report.blockers]
        if not out.json:
            print(report.render(args.file), file=sys.stderr)
            print(f"normal form: {pretty_print(nf)}", file=sys.stderr)
            if not args.extension and any("iota" in b.reason for b in report.blockers):
                print("hint: --extension accepts iota generators that do not depend on earlier generators",
                      file=sys.stderr)
        return EXIT_DIAGNOSTICS
    try:
        query = nrc_to_sql(nf, env, extension=args.extension)
    except NotTranslatable as exc:
        out.extra["blockers"] = [b.to_json() for b in exc.report.blockers]
        out.diag(exc.report.render(args.file))
        return EXIT_DIAGNOSTICS
    out.artifact(print_sql(query))
    return EXIT_OK


def cmd_from_sql(args, out: _Out) -> int:
    schema = _schema(args)
    text = _read(args.file)
    try:
        q = parse_sql(text, schema or None)
        t = sql_to_nrc(q, schema)
    except SqlError as exc:
        line, col = getattr(exc, "line", None), getattr(exc, "col", None)
        where = f"{line}:{col}:" if line else ""
        out.diag(f"{args.file}:{where} error: {getattr(exc, 'message', str(exc))}",
                 {"severity": "error", "line": line, "col": col, "message": str(exc), "rule": "sql"})
        return EXIT_DIAGNOSTICS
    out.artifact(pretty_print(t))
    return EXIT_OK


def cmd_eval(args, out: _Out) -> int:
    try:
        db = load_database(args.db)
    except DatabaseError as exc:
        raise UsageError(str(exc)) from None
    t = _term(out, args.file)
    if t is None:
        return EXIT_DIAGNOSTICS
    try:
        typecheck(db.types, t)
    except NrcTypeError as exc:
        _type_error(out, args.file, exc)
        return EXIT_DIAGNOSTICS
    try:
        value = evaluate(db.values, t)
    except EvalError as exc:
        out.diag(f"{args.file}: error: {exc}")
        return EXIT_DIAGNOSTICS
    out.artifact(render_value(value), value_to_json(value))
    return EXIT_OK


def cmd_check(args, out: _Out) -> int:
    names = list(SUITES) if "all" in args.suite else args.suite
    cfg = GenConfig(seed=args.seed, max_depth=args.max_depth, max_size=args.max_size)
    results = []
    failed = False
    for name in names:
        cases = args.cases if args.cases is not None else DEFAULT_CASES[name]
        result = SUITES[name](cfg, cases)
        results.append(result)
        if not out.json:
            print(result.summary())
        # timings vary between runs, so they stay off stdout
        print(f"{name}: {result.elapsed:.1f}s", file=sys.stderr)
        for f in result.failures:
            failed = True
            out.diag(f"{name} case {f.case}: {f.message}")
            if args.repro_dir:
                where = f.dump(Path(args.repro_dir) / name / str(f.case))
                out.diag(f"  reproduction written to {where}")
    out.result = [r.to_json() for r in results]
    return EXIT_DIAGNOSTICS if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _nonneg(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    common.add_argument("-o", "--output", help="write the result to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="nrcsb", description="NRC(Set,Bag) typechecker, normalizer and SQL bridge")
    parser.add_argument("--version", action="version", version=f"nrcsb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("typecheck", parents=[common], help="print the type of a term")
    p.add_argument("file")
    p.add_argument("--schema", help="JSON file with table schemas")
    p.set_defaults(run=cmd_typecheck)

    for name, fn, helptext in (
        ("normalize", cmd_normalize, "rewrite a term to normal form"),
        ("to-sql", cmd_to_sql, "normalize a term and emit SQL"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("file")
        p.add_argument("--schema", help="JSON file with table schemas")
        p.add_argument("--fuel", type=_nonneg, help=f"maximum rewrite steps (default $NRCSB_FUEL or {DEFAULT_FUEL})")
        p.add_argument("--trace", action="store_true", help="report every rewrite step on stderr")
        if name == "to-sql":
            p.add_argument("--extension", action="store_true",
                           help="accept iota generators that are independent of earlier generators")
        p.set_defaults(run=fn)

    p = sub.add_parser("from-sql", parents=[common], help="translate SQL to a term")
    p.add_argument("file")
    p.add_argument("--schema", help="JSON file with table schemas (needed for SELECT * and set tables)")
    p.set_defaults(run=cmd_from_sql)

    p = sub.add_parser("eval", parents=[common], help="evaluate a term over a database")
    p.add_argument("file")
    p.add_argument("--db", required=True, help="JSON database file")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("check", parents=[common], help="run property suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES) + ["all"], help="suite to run (repeatable)")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--cases", type=_nonneg, help="cases per suite (default: the suite's own)")
    p.add_argument("--max-depth", type=_nonneg, default=GenConfig.max_depth)
    p.add_argument("--max-size", type=_nonneg, default=GenConfig.max_size)
    p.add_argument("--repro-dir", help="directory for reproductions of failing cases")
    p.set_defaults(run=cmd_check)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "suite", None) is None and args.command == "check":
        args.suite = ["all"]
    out = _Out(args)
    try:
        if hasattr(args, "fuel"):
            args.fuel_value = _fuel(args)
        code = args.run(args, out)
    except UsageError as exc:
        if out.json:
            out.diag(f"nrcsb: error: {exc}", {"severity": "error", "message": str(exc), "rule": "usage"})
        else:
            print(f"nrcsb: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    return out.finish(code)


if __name__ == "__main__":
    sys.exit(main())
