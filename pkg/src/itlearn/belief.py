"""Probabilistic belief over finite first-order domain models.

The belief couples three evidence sources: a domain theory built from the
conversation so far, per-atom Bernoulli weights (priors and grounding-model
predictions), and a support of remembered exemplars that drives the
prototype grounding model.  All queries reduce to exact weighted model
counts; spatial-relation atoms are ground-truth constants and never enter
the enumeration.

A belief is an immutable value: updates return new states, so candidate
answers can be evaluated in parallel without interference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from . import counting
from .counting import CapacityError, DEFAULT_CAP, GroundAtom, InconsistencyError, wmc

__all__ = [
    "BeliefState", "CapacityError", "InconsistencyError", "add_neologism",
    "begin_scene", "belief_entropy", "con", "con_grounded", "con_prior",
    "initial_belief", "map_confidence", "map_model", "posterior_entropy",
    "posterior_entropy_conditioning", "revise_with", "snapshot",
    "update_belief", "wmc",
]
from .grounding import (
    GroundingConfig, SupportEntry, bernoulli_entropy, grounded_weights,
    prototypes_for, predict_one,
)
from .logic import (
    DomainModel, Formula, Symbol, format_formula, free_vars, symbols_of,
)

log = logging.getLogger(__name__)

RELATION_SYMBOLS = ("left", "right", "front", "behind", "inside")

Prior = Union[float, Mapping[str, float]]


@dataclass(frozen=True)
class BeliefState:
    objects: tuple
    embeddings: Mapping[str, tuple]
    vocabulary: tuple                     # unary symbol names, admission order
    memory: tuple                         # SupportEntry from earlier scenes
    support: tuple                        # SupportEntry per current object
    theory: tuple                         # closed formulas
    prior_weights: Mapping[GroundAtom, float]
    grounded_weights: Mapping[GroundAtom, float]
    relation_atoms: Mapping[GroundAtom, bool]
    grounding: GroundingConfig = GroundingConfig()
    cap: int = DEFAULT_CAP

    @property
    def full_support(self) -> tuple:
        return self.memory + self.support

    def unary_base(self) -> tuple:
        return tuple((p, (o,)) for p in self.vocabulary for o in self.objects)

    def _relation_weights(self) -> dict:
        return {a: (1.0 if v else 0.0) for a, v in self.relation_atoms.items()}

    def prior_map(self) -> dict:
        out = dict(self.prior_weights)
        out.update(self._relation_weights())
        return out

    def grounded_map(self) -> dict:
        out = dict(self.grounded_weights)
        out.update(self._relation_weights())
        return out


def initial_belief(objects: Sequence[str], embeddings: Mapping[str, Sequence[float]],
                   relation_atoms: Mapping[GroundAtom, bool],
                   grounding: GroundingConfig = GroundingConfig(),
                   cap: int = DEFAULT_CAP) -> BeliefState:
    """A belief with an empty vocabulary: pure unawareness."""
    objects = tuple(objects)
    emb = {o: tuple(float(v) for v in embeddings[o]) for o in objects}
    support = tuple(SupportEntry(emb[o], {}) for o in objects)
    return BeliefState(
        objects=objects, embeddings=emb, vocabulary=(), memory=(), support=support,
        theory=(), prior_weights={}, grounded_weights={},
        relation_atoms=dict(relation_atoms), grounding=grounding, cap=cap,
    )


def _prior_value(prior: Prior, obj: Optional[str]) -> float:
    if isinstance(prior, Mapping):
        value = prior.get(obj, 0.5) if obj is not None else 0.5
    else:
        value = float(prior)
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"prior weight must lie in [0, 1], got {value}")
    return value


def add_neologism(b: BeliefState, symbol: str, prior: Prior = 0.5) -> BeliefState:
    """Extend the vocabulary with a newly encountered symbol.

    Every support entry's label vector gains a component at the prior, and
    both weight maps gain the new atoms.  Memory entries predate the current
    scene, so a per-object prior applies only to current entries; memory
    falls back to the default weight.
    """
    if symbol in b.vocabulary:
        log.info("neologism %r already admitted; ignoring", symbol)
        return b
    if symbol in RELATION_SYMBOLS:
        raise ValueError(f"{symbol!r} is a predefined relation, not a unary concept")
    memory = tuple(
        SupportEntry(e.embedding, {**e.labels, symbol: _prior_value(prior, None)})
        for e in b.memory
    )
    support = tuple(
        SupportEntry(e.embedding, {**e.labels, symbol: _prior_value(prior, o)})
        for o, e in zip(b.objects, b.support)
    )
    new_atoms = {(symbol, (o,)): _prior_value(prior, o) for o in b.objects}
    return replace(
        b,
        vocabulary=b.vocabulary + (symbol,),
        memory=memory,
        support=support,
        prior_weights={**b.prior_weights, **new_atoms},
        grounded_weights={**b.grounded_weights, **new_atoms},
    )


def _check_closed(b: BeliefState, phi: Formula) -> None:
    fv = free_vars(phi)
    if fv:
        raise ValueError(f"belief updates need closed formulas; free: {sorted(fv)}")
    known = set(b.vocabulary) | set(RELATION_SYMBOLS)
    unknown = [s.name for s in symbols_of(phi) if s.name not in known]
    if unknown:
        raise ValueError(f"symbols not in vocabulary (admit neologisms first): {sorted(unknown)}")


def _with_theory(b: BeliefState, theory: tuple) -> BeliefState:
    """Rebuild support labels and grounded weights for the given theory."""
    base = b.unary_base()
    labels = counting.posterior_marginals(theory, b.prior_map(), b.objects, base, cap=b.cap)
    support = tuple(
        SupportEntry(b.embeddings[o], {p: labels[(p, (o,))] for p in b.vocabulary})
        for o in b.objects
    )
    w_g = grounded_weights(b.objects, {o: np.asarray(v) for o, v in b.embeddings.items()},
                           b.memory + support, b.vocabulary, b.grounding) if b.vocabulary else {}
    return replace(b, theory=theory, support=support, grounded_weights=w_g)


def update_belief(b: BeliefState, phi: Formula) -> BeliefState:
    """Add phi to the theory, rebuild the support labels from conditional
    probabilities under the prior weights, then refresh grounded weights
    through the grounding model."""
    _check_closed(b, phi)
    if phi in b.theory:
        return b
    return _with_theory(b, b.theory + (phi,))


def revise_with(b: BeliefState, phi: Formula) -> tuple:
    """Update, dropping the oldest conflicting formula on inconsistency.

    Returns (belief, dropped) where dropped lists the formulas removed to
    restore consistency (usually empty).
    """
    dropped = []
    try:
        return update_belief(b, phi), dropped
    except InconsistencyError:
        pass
    theory = list(b.theory)
    weights = b.prior_map()
    while theory:
        removable = None
        for i, delta in enumerate(theory):
            rest = theory[:i] + theory[i + 1:]
            if counting.consistent(rest + [phi], weights, b.objects, cap=b.cap):
                removable = i
                break
        if removable is None:
            removable = 0  # no single fix restores consistency: peel the oldest
        dropped.append(theory.pop(removable))
        if counting.consistent(theory + [phi], weights, b.objects, cap=b.cap):
            break
    for delta in dropped:
        log.warning("dropped conflicting formula %s", format_formula(delta))
    return _with_theory(b, tuple(theory) + (phi,)), dropped


def con(phi: Formula, b: BeliefState, weights: Mapping[GroundAtom, float]) -> float:
    """Conditional probability of phi given the belief's theory."""
    _check_closed(b, phi)
    return counting.condition(phi, b.theory, weights, b.objects, cap=b.cap,
                              assume_consistent=True)


def con_prior(b: BeliefState, phi: Formula) -> float:
    return con(phi, b, b.prior_map())


def con_grounded(b: BeliefState, phi: Formula) -> float:
    return con(phi, b, b.grounded_map())


def map_model(b: BeliefState) -> DomainModel:
    assignment, _ = counting.map_estimate(b.theory, b.grounded_map(), b.objects,
                                          b.unary_base(), cap=b.cap)
    return _model_from_atoms(b, assignment)


def map_confidence(b: BeliefState) -> float:
    """Probability of the most probable domain model given the belief."""
    _, confidence = counting.map_estimate(b.theory, b.grounded_map(), b.objects,
                                          b.unary_base(), cap=b.cap)
    return confidence


def _model_from_atoms(b: BeliefState, assignment: Mapping[GroundAtom, bool]) -> DomainModel:
    vocab = tuple(Symbol(p, 1) for p in b.vocabulary) + \
        tuple(Symbol(r, 2) for r in RELATION_SYMBOLS)
    interp = {}
    for sym in vocab:
        if sym.arity == 1:
            interp[sym] = frozenset(
                (o,) for o in b.objects if assignment.get((sym.name, (o,)), False)
            )
        else:
            interp[sym] = frozenset(
                args for (name, args), v in b.relation_atoms.items()
                if name == sym.name and v
            )
    return DomainModel(b.objects, vocab, interp)


def belief_entropy(b: BeliefState) -> float:
    """Total Bernoulli entropy of the grounded weights, in nats.  Relation
    atoms are 0/1 constants and contribute nothing."""
    if not b.grounded_weights:
        return 0.0
    values = np.fromiter(b.grounded_weights.values(), dtype=float)
    return float(np.sum(bernoulli_entropy(values)))


def posterior_entropy(b: BeliefState, phi: Formula, h_now: Optional[float] = None) -> float:
    """Entropy of update_belief(b, phi), computed on the affected slice only.

    Atoms in theory components untouched by phi keep their labels, so only
    the symbols owning touched atoms need new prototypes and predictions.
    Exact: agrees with running the full update (property-tested).
    """
    _check_closed(b, phi)
    if h_now is None:
        h_now = belief_entropy(b)
    phi_conj = counting.flatten_conjuncts(phi)
    involved, _ = counting._involved(phi_conj, counting.theory_conjuncts(b.theory), b.objects)
    reach = set()
    for c in phi_conj + involved:
        reach |= counting.ground_atoms_of(c, b.objects)
    vocab = set(b.vocabulary)
    touched = sorted(a for a in reach if a[0] in vocab)
    affected_syms = sorted({name for name, _ in touched})
    if not affected_syms:
        return h_now
    labels = counting.posterior_marginals(
        list(involved) + [phi], b.prior_map(), b.objects, touched, cap=b.cap)
    patched = tuple(
        SupportEntry(e.embedding,
                     {**e.labels,
                      **{p: labels[(p, (o,))] for p in affected_syms
                         if (p, (o,)) in labels}})
        for o, e in zip(b.objects, b.support)
    )
    full = b.memory + patched
    h = h_now
    for p in affected_syms:
        pair = prototypes_for(full, p, b.grounding)
        for o in b.objects:
            old = b.grounded_weights[(p, (o,))]
            new = predict_one(np.asarray(b.embeddings[o]), pair, b.grounding)
            h += bernoulli_entropy(new) - bernoulli_entropy(old)
    return h


def posterior_entropy_conditioning(b: BeliefState, phi: Formula,
                                   h_now: Optional[float] = None) -> float:
    """Diagnostic posterior entropy under pure Bayesian conditioning of the
    grounded weights, bypassing the grounding model.  Unlike the production
    path this can never raise the expected entropy (data processing)."""
    _check_closed(b, phi)
    if h_now is None:
        h_now = belief_entropy(b)
    phi_conj = counting.flatten_conjuncts(phi)
    involved, _ = counting._involved(phi_conj, counting.theory_conjuncts(b.theory), b.objects)
    reach = set()
    for c in phi_conj + involved:
        reach |= counting.ground_atoms_of(c, b.objects)
    affected = [a for a in reach if a[0] in set(b.vocabulary)]
    if not affected:
        return h_now
    marg = counting.posterior_marginals(
        list(involved) + [phi], b.grounded_map(), b.objects, affected, cap=b.cap)
    h = h_now
    for a in affected:
        h += bernoulli_entropy(marg[a]) - bernoulli_entropy(b.grounded_weights[a])
    return h


def begin_scene(b: BeliefState, objects: Sequence[str],
                embeddings: Mapping[str, Sequence[float]],
                relation_atoms: Mapping[GroundAtom, bool],
                prior_fn: Optional[Callable[[str, str], float]] = None) -> BeliefState:
    """Carry the belief into a new scene.

    The current support freezes into memory, the theory resets (it spoke
    about the previous scene's objects), and every known symbol gets fresh
    prior weights for the new objects.  Grounded weights come straight from
    the grounding model, driven by the accumulated memory.
    """
    objects = tuple(objects)
    emb = {o: tuple(float(v) for v in embeddings[o]) for o in objects}
    prior_fn = prior_fn or (lambda sym, o: 0.5)
    priors = {(p, (o,)): _prior_value(prior_fn(p, o), None)
              for p in b.vocabulary for o in objects}
    memory = b.memory + b.support
    support = tuple(
        SupportEntry(emb[o], {p: priors[(p, (o,))] for p in b.vocabulary})
        for o in objects
    )
    w_g = grounded_weights(objects, {o: np.asarray(v) for o, v in emb.items()},
                           memory + support, b.vocabulary, b.grounding) if b.vocabulary else {}
    return replace(
        b, objects=objects, embeddings=emb, memory=memory, support=support,
        theory=(), prior_weights=priors, grounded_weights=w_g,
        relation_atoms=dict(relation_atoms),
    )


def snapshot(b: BeliefState) -> dict:
    """JSON-ready view of the belief for transcripts and the session UI."""
    return {
        "objects": list(b.objects),
        "vocabulary": list(b.vocabulary),
        "theory": [format_formula(phi) for phi in b.theory],
        "prior_weights": {f"{p}({o})": b.prior_weights[(p, (o,))]
                          for p in b.vocabulary for o in b.objects},
        "grounded_weights": {f"{p}({o})": b.grounded_weights[(p, (o,))]
                             for p in b.vocabulary for o in b.objects},
        "entropy": belief_entropy(b),
        "support_size": len(b.full_support),
    }
