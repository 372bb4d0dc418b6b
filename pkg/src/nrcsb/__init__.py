"""NRC(Set,Bag): a nested relational calculus with sets and bags.

Typechecking, a reference interpreter, normalization by rewriting,
normal-form recognition, and translation to and from a SQL fragment.
"""
from .core import (
    BOOL,
    INT,
    STRING,
    Atom,
    BagType,
    RecordType,
    SetType,
    Term,
    Type,
    alpha_eq,
    free_vars,
    subst,
)
from .normalform import (
    BagNF,
    NotNormalForm,
    SetNF,
    TranslatabilityReport,
    eta_expand,
    generator_independence,
    is_bag_normal,
    is_set_normal,
    translatable_to_sql,
)
from .rewrite import DEFAULT_FUEL, RULES, FuelExhausted, RewriteTrace, normalize, rewrite_step, rule_catalogue
from .semantics import BagV, Rec, SetV, evaluate, load_database, render_value
from .syntax import ParseError, parse_term, parse_type, pretty_print, print_type
from .typecheck import NrcTypeError, typecheck

__version__ = "0.1.0"
