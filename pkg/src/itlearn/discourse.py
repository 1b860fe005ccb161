"""Semantic analysis of embodied conversation.

Sentence level: a referential expression plus a designation yields a formula
instantiating the restrictor at each designated object; definite and
universal quantifiers additionally contribute negated clauses for the
non-designated objects (uniqueness and maximality consequences).  Discourse
level: corrections assert their own content and, for pick and place, deny
that the designated object belongs to the instruction's direct or indirect
referent.  Question generation keeps the instruction's content words intact
and only swaps the quantifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .grammar import Correction, TaskInstruction, render_refexp
from .logic import (
    A, ALL_BUT_N, AT_LEAST_N, And, BOTH, EVERY, EXACTLY_N, Formula, GQ,
    N_OF_THE_M, Not, Quantifier, RefForm, THE_N, conj, substitute,
)

SECURE = "secure"
SIMPLE = "simple"

_UNIQUENESS_KINDS = (THE_N, BOTH, EVERY)
_EXISTENTIAL_IMPORT = (A, THE_N, BOTH, EXACTLY_N, AT_LEAST_N, ALL_BUT_N, N_OF_THE_M)


class AmbiguityError(Exception):
    """The referent has several member sets; the caller must designate one."""


@dataclass(frozen=True)
class AnalysisMode:
    kind: str = SECURE

    def __post_init__(self):
        if self.kind not in (SECURE, SIMPLE):
            raise ValueError(f"analysis mode must be secure or simple, got {self.kind!r}")


@dataclass(frozen=True)
class QuestionAction:
    refexp: RefForm
    surface: str


def sentence_semantics(r: RefForm, referent: Iterable, objects: Sequence[str],
                       mode: AnalysisMode = AnalysisMode()) -> Formula:
    """Formula asserted by pointing at one referent member while uttering r."""
    members = list(referent)
    if len(members) != 1:
        raise AmbiguityError(
            f"expected exactly one designated set, got {len(members)}")
    designated = set(members[0])
    index = {o: i for i, o in enumerate(objects)}
    inside = sorted(designated, key=index.__getitem__)
    outside = [o for o in objects if o not in designated]
    parts = [substitute(r.restrictor, r.var, o) for o in inside]
    if mode.kind == SECURE and r.quant.kind in _UNIQUENESS_KINDS:
        parts.extend(Not(substitute(r.restrictor, r.var, o)) for o in outside)
    return conj(parts)


def with_quantifier(r: RefForm, quant: Quantifier) -> RefForm:
    return RefForm(quant, r.var, r.restrictor)


def existential_variant(r: RefForm) -> RefForm:
    return with_quantifier(r, Quantifier(A))


def correction_semantics(action_kind: str, t: TaskInstruction, c: Correction,
                         objects: Sequence[str]) -> Formula:
    """Discourse meaning of 'No. This is <refexp>.' after an execution action.

    The correction's own content always holds; a corrected pick denies the
    direct restrictor of the designated object, a corrected place denies the
    indirect restrictor, and a corrected completion adds only the content
    (the renegade entailment over spatial relations is deliberately not
    drawn).
    """
    singleton = [frozenset([c.designated])]
    stated = sentence_semantics(c.refexp, singleton, objects)
    parts = list(stated.parts) if isinstance(stated, And) else [stated]
    if action_kind == "pick":
        denied = sentence_semantics(existential_variant(t.direct), singleton, objects)
        parts.append(Not(denied))
    elif action_kind == "place":
        denied = sentence_semantics(existential_variant(t.indirect), singleton, objects)
        parts.append(Not(denied))
    elif action_kind != "complete":
        raise ValueError(f"unknown execution action {action_kind!r}")
    return conj(parts)


def generate_questions(t: TaskInstruction) -> tuple:
    """Coherent 'show me r' questions for the instruction: per referential
    expression, the original, existential, and universal quantifier over the
    unchanged restrictor, deduplicated."""
    out = []
    seen = set()
    for r in (t.direct, t.indirect):
        for variant in (r, with_quantifier(r, Quantifier(A)), with_quantifier(r, Quantifier(EVERY))):
            if variant in seen:
                continue
            seen.add(variant)
            out.append(QuestionAction(variant, f"show me {render_refexp(variant)}"))
    return tuple(out)


def presupposition(r: RefForm):
    """Closed formula carried by uttering r at all: quantifiers with
    existential import constrain how many objects satisfy the restrictor.
    Returns None when nothing non-trivial is presupposed."""
    if r.quant.kind in _EXISTENTIAL_IMPORT:
        return GQ(r.quant, r.var, r.restrictor, r.restrictor)
    return None


def instruction_presuppositions(t: TaskInstruction) -> list:
    return [phi for phi in (presupposition(t.direct), presupposition(t.indirect))
            if phi is not None]
