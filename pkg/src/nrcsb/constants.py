"""The fixed constant language: literals plus ``= != < and or not``."""
from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Optional

from .core import BOOL, INT, STRING, Atom, Type, unquote_string


@dataclass(frozen=True)
class ConstSig:
    """Signature of a constant symbol.

    ``arg_types`` of ``None`` marks the comparison operators, which accept two
    arguments of any one atomic type.
    """

    name: str
    arity: int
    arg_types: Optional[tuple[Type, ...]]
    result: Type
    fn: Callable


def _cmp_lt(a, b):
    if isinstance(a, bool):
        raise TypeError("'<' is not defined on Bool")
    return a < b


OPERATORS = {
    "=": ConstSig("=", 2, None, BOOL, operator.eq),
    "!=": ConstSig("!=", 2, None, BOOL, operator.ne),
    "<": ConstSig("<", 2, None, BOOL, _cmp_lt),
    "and": ConstSig("and", 2, (BOOL, BOOL), BOOL, lambda a, b: a and b),
    "or": ConstSig("or", 2, (BOOL, BOOL), BOOL, lambda a, b: a or b),
    "not": ConstSig("not", 1, (BOOL,), BOOL, operator.not_),
}

_INT = re.compile(r"-?\d+$")


def literal_value(c: str):
    """Python value of a literal constant symbol, or raise ``KeyError``."""
    if c == "true":
        return True
    if c == "false":
        return False
    if _INT.match(c):
        return int(c)
    if len(c) >= 2 and c[0] == c[-1] == '"':
        return unquote_string(c)
    raise KeyError(c)


def atom_type_of(value) -> Atom:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    if isinstance(value, str):
        return STRING
    raise TypeError(f"not an atom: {value!r}")


def lookup(c: str, arity: int) -> ConstSig:
    if c in OPERATORS:
        sig = OPERATORS[c]
        if sig.arity != arity:
            raise KeyError(c)
        return sig
    if arity == 0:
        value = literal_value(c)
        return ConstSig(c, 0, (), atom_type_of(value), lambda: value)
    raise KeyError(c)


def is_literal(c: str) -> bool:
    try:
        literal_value(c)
    except KeyError:
        return False
    return True
