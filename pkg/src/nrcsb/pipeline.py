"""The typecheck → normalize → translate pipeline shared by the CLI and the tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .core import Term, Type
from .normalform import TranslatabilityReport, eta_expand, translatable_to_sql
from .rewrite import DEFAULT_FUEL, RewriteTrace, normalize
from .sqlbridge import NotTranslatable, Query, nrc_to_sql
from .typecheck import Diagnostic, check_flat_delta_iota, typecheck


class FlatnessError(Exception):
    """``δ``/``ι`` applied to a non-flat collection; SQL compilation is refused."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))


@dataclass
class Compiled:
    query: Query
    normal_form: Term
    trace: RewriteTrace
    report: TranslatabilityReport
    type: Type


def normal_form_for_sql(
    t: Term, env: Mapping[str, Type], fuel: int = DEFAULT_FUEL
) -> tuple[Term, RewriteTrace, Type]:
    """Typecheck, lint flatness, eta-expand and normalize ``t``."""
    ty = typecheck(env, t)
    diags = check_flat_delta_iota(env, t)
    if diags:
        raise FlatnessError(diags)
    nf, trace = normalize(eta_expand(env, t), fuel=fuel, env=env)
    return nf, trace, ty


def compile_to_sql(
    t: Term, env: Mapping[str, Type], extension: bool = False, fuel: int = DEFAULT_FUEL
) -> Compiled:
    """SQL for ``t``; raises ``NrcTypeError``, :class:`FlatnessError`,
    ``FuelExhausted`` or ``NotTranslatable``."""
    nf, trace, ty = normal_form_for_sql(t, env, fuel)
    report = translatable_to_sql(nf, extension=extension)
    if not report.ok:
        raise NotTranslatable(report)
    return Compiled(nrc_to_sql(nf, env, extension=extension), nf, trace, report, ty)


def analyze(
    t: Term, env: Mapping[str, Type], extension: bool = False, fuel: int = DEFAULT_FUEL
) -> tuple[Term, RewriteTrace, TranslatabilityReport, Optional[Type]]:
    nf, trace, ty = normal_form_for_sql(t, env, fuel)
    return nf, trace, translatable_to_sql(nf, extension=extension), ty
