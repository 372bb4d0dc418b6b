"""Concrete ASCII syntax for NRC(Set,Bag) terms and types.

See ``docs/grammar.md`` for the EBNF.  Summary, loosest binding first::

    for x in N, y in R yield set M      where set C do M     (extend right)
    M union N      M unionall N                               (left assoc)
    M or N         M and N         not M
    M = N          M != N          M < N                      (non assoc)
    delta M        iota M
    M.l
    x   42   "s"   true   false   (M)   <l = M, ...>
    {M}   {|M|}   {M1, M2}   empty   emptybag   empty : {T}   emptybag : {|T|}
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
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
    quote_string,
    unquote_string,
)

KEYWORDS = frozenset(
    "for in yield set bag where do union unionall delta iota empty emptybag "
    "true false and or not".split()
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, string, kw, sym, eof
    text: str
    line: int
    col: int

    @property
    def pos(self) -> Pos:
        return Pos(self.line, self.col)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>-?\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>\{\||\|\}|!=|[(){}<>=,.:])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident" and m.group() in KEYWORDS:
            tokens.append(Token("kw", m.group(), line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind in ("kw", "sym") and tok.text in texts

    def advance(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}", {text})
        return self.advance()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail("expected an identifier", {"identifier"})
        return self.advance()

    def fail(self, message: str, expected=()):
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col, expected)

    # -- terms

    def term(self) -> Term:
        tok = self.peek()
        if self.at("for"):
            self.advance()
            gens = [self.generator()]
            while self.at(","):
                self.advance()
                gens.append(self.generator())
            self.expect("yield")
            kind = self.collection_kind()
            body = self.term()
            cls = SetComp if kind == "set" else BagComp
            for var, src, pos in reversed(gens):
                body = cls(body, var, src, pos=pos)
            return body
        if self.at("where"):
            self.advance()
            kind = self.collection_kind()
            cond = self.unions()
            self.expect("do")
            body = self.term()
            cls = WhereSet if kind == "set" else WhereBag
            return cls(cond, body, pos=tok.pos)
        return self.unions()

    def collection_kind(self) -> str:
        if not self.at("set", "bag"):
            self.fail("expected 'set' or 'bag'", {"set", "bag"})
        return self.advance().text

    def generator(self):
        name = self.ident()
        self.expect("in")
        return name.text, self.unions(), name.pos

    def unions(self) -> Term:
        left = self.disj()
        while self.at("union", "unionall"):
            op = self.advance()
            right = self.disj()
            cls = Union if op.text == "union" else BagUnion
            left = cls(left, right, pos=op.pos)
        return left

    def disj(self) -> Term:
        left = self.conj()
        while self.at("or"):
            op = self.advance()
            left = Const("or", (left, self.conj()), pos=op.pos)
        return left

    def conj(self) -> Term:
        left = self.neg()
        while self.at("and"):
            op = self.advance()
            left = Const("and", (left, self.neg()), pos=op.pos)
        return left

    def neg(self) -> Term:
        if self.at("not"):
            op = self.advance()
            return Const("not", (self.neg(),), pos=op.pos)
        return self.comparison()

    def comparison(self) -> Term:
        left = self.prefix()
        if self.at("=", "!=", "<"):
            op = self.advance()
            left = Const(op.text, (left, self.prefix()), pos=op.pos)
        return left

    def prefix(self) -> Term:
        if self.at("delta", "iota"):
            op = self.advance()
            arg = self.prefix()
            return (Dedup if op.text == "delta" else Promote)(arg, pos=op.pos)
        return self.postfix()

    def postfix(self) -> Term:
        t = self.primary()
        while self.at("."):
            dot = self.advance()
            t = Project(t, self.ident().text, pos=dot.pos)
        return t

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return Var(tok.text, pos=tok.pos)
        if tok.kind in ("int", "string"):
            self.advance()
            text = str(int(tok.text)) if tok.kind == "int" else quote_string(unquote_string(tok.text))
            return Const(text, pos=tok.pos)
        if self.at("true", "false"):
            self.advance()
            return Const(tok.text, pos=tok.pos)
        if self.at("("):
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        if self.at("empty", "emptybag"):
            self.advance()
            ty = None
            if self.at(":"):
                self.advance()
                ty = self.type_()
                want = SetType if tok.text == "empty" else BagType
                if not isinstance(ty, want):
                    raise ParseError(
                        f"annotation of {tok.text} must be a {'set' if want is SetType else 'bag'} type",
                        tok.line,
                        tok.col,
                    )
                ty = ty.elem
            return (EmptySet if tok.text == "empty" else EmptyBag)(ty, pos=tok.pos)
        if self.at("<"):
            self.advance()
            fields = []
            if not self.at(">"):
                fields.append(self.field())
                while self.at(","):
                    self.advance()
                    fields.append(self.field())
            self.expect(">")
            labels = [l for l, _ in fields]
            if len(set(labels)) != len(labels):
                raise ParseError("duplicate record label", tok.line, tok.col)
            return Record(tuple(fields), pos=tok.pos)
        if self.at("{", "{|"):
            self.advance()
            close, single, union = (
                ("}", SingletonSet, Union) if tok.text == "{" else ("|}", SingletonBag, BagUnion)
            )
            elems = [self.term()]
            while self.at(","):
                self.advance()
                elems.append(self.term())
            self.expect(close)
            out = single(elems[0], pos=tok.pos)
            for e in elems[1:]:
                out = union(out, single(e, pos=tok.pos), pos=tok.pos)
            return out
        self.fail(
            "expected a term",
            {"identifier", "literal", "(", "<", "{", "{|", "empty", "emptybag", "for", "where"},
        )

    def field(self):
        label = self.ident().text
        self.expect("=")
        return label, self.term()

    # -- types

    def type_(self) -> Type:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return Atom(tok.text)
        if self.at("{", "{|"):
            self.advance()
            elem = self.type_()
            if tok.text == "{":
                self.expect("}")
                return SetType(elem)
            self.expect("|}")
            return BagType(elem)
        if self.at("<"):
            self.advance()
            fields = []
            if not self.at(">"):
                fields.append(self.type_field())
                while self.at(","):
                    self.advance()
                    fields.append(self.type_field())
            self.expect(">")
            try:
                return RecordType(tuple(fields))
            except ValueError as exc:
                raise ParseError(str(exc), tok.line, tok.col) from None
        self.fail("expected a type", {"identifier", "{", "{|", "<"})

    def type_field(self):
        label = self.ident().text
        self.expect(":")
        return label, self.type_()

    def finish(self):
        if self.peek().kind != "eof":
            self.fail("unexpected trailing input", {"end of input"})


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    p.finish()
    return t


def parse_type(text: str) -> Type:
    p = _Parser(text)
    ty = p.type_()
    p.finish()
    return ty


# ---------------------------------------------------------------------------
# Printing

# Precedence levels; a subterm printed where a higher level is required is
# parenthesized.
_TOP, _UNION, _OR, _AND, _NOT, _CMP, _PREFIX, _POSTFIX, _ATOM = range(9)
_INFIX = {"=": _CMP, "!=": _CMP, "<": _CMP, "and": _AND, "or": _OR}


def print_type(ty: Type) -> str:
    return str(ty)


def _level(t: Term) -> int:
    if isinstance(t, (SetComp, BagComp, WhereSet, WhereBag)):
        return _TOP
    if isinstance(t, (Union, BagUnion)):
        return _UNION
    if isinstance(t, Const):
        if t.c in _INFIX and len(t.args) == 2:
            return _INFIX[t.c]
        if t.c == "not":
            return _NOT
        return _ATOM
    if isinstance(t, (Dedup, Promote)):
        return _PREFIX
    if isinstance(t, Project):
        return _POSTFIX
    return _ATOM


def pretty_print(t: Term) -> str:
    return _pp(t, _TOP)


def _pp(t: Term, need: int) -> str:
    text = _pp_raw(t)
    return f"({text})" if _level(t) < need else text


def _pp_raw(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        if t.c in _INFIX and len(t.args) == 2:
            lvl = _INFIX[t.c]
            if lvl == _CMP:
                return f"{_pp(t.args[0], _PREFIX)} {t.c} {_pp(t.args[1], _PREFIX)}"
            return f"{_pp(t.args[0], lvl)} {t.c} {_pp(t.args[1], lvl + 1)}"
        if t.c == "not" and len(t.args) == 1:
            return f"not {_pp(t.args[0], _NOT)}"
        if t.args:
            raise ValueError(f"constant {t.c!r} has no surface syntax with {len(t.args)} arguments")
        return t.c
    if isinstance(t, Record):
        return "<" + ", ".join(f"{l} = {_pp(m, _TOP)}" for l, m in t.fields) + ">"
    if isinstance(t, Project):
        return f"{_pp(t.term, _POSTFIX)}.{t.label}"
    if isinstance(t, (WhereSet, WhereBag)):
        kind = "set" if isinstance(t, WhereSet) else "bag"
        return f"where {kind} {_pp(t.cond, _UNION)} do {_pp(t.body, _TOP)}"
    if isinstance(t, EmptySet):
        return "empty" if t.ty is None else f"(empty : {{{t.ty}}})"
    if isinstance(t, EmptyBag):
        return "emptybag" if t.ty is None else f"(emptybag : {{|{t.ty}|}})"
    if isinstance(t, SingletonSet):
        return "{" + _pp(t.elem, _TOP) + "}"
    if isinstance(t, SingletonBag):
        return "{|" + _pp(t.elem, _TOP) + "|}"
    if isinstance(t, (Union, BagUnion)):
        op = "union" if isinstance(t, Union) else "unionall"
        return f"{_pp(t.left, _UNION)} {op} {_pp(t.right, _OR)}"
    if isinstance(t, (SetComp, BagComp)):
        kind = "set" if isinstance(t, SetComp) else "bag"
        gens = []
        body = t
        while isinstance(body, type(t)):
            gens.append(f"{body.var} in {_pp(body.source, _UNION)}")
            body = body.body
        return f"for {', '.join(gens)} yield {kind} {_pp(body, _TOP)}"
    if isinstance(t, Dedup):
        return f"delta {_pp(t.term, _PREFIX)}"
    if isinstance(t, Promote):
        return f"iota {_pp(t.term, _PREFIX)}"
    raise TypeError(f"not a term: {t!r}")
