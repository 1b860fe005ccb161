"""First-order logic with generalized quantifiers over finite domain models.

Formulas are immutable ASTs evaluated by recursion; a quantified subformula
binds one variable, which is resolved by substituting each domain object in
turn (domains stay small, ten objects or fewer).  Referential expressions
``<Q x. phi>`` denote sets of object sets: the model is projected onto the
restrictor's satisfiers and the quantifier's referent constructor is applied
to the projection.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union


class LogicError(Exception):
    """Malformed formula or vocabulary violation."""


class EvaluationError(LogicError):
    """Raised when evaluation hits an unknown symbol or unbound variable."""


# ---------------------------------------------------------------------------
# terms and symbols

@dataclass(frozen=True, order=True)
class Symbol:
    name: str
    arity: int = 1

    def __post_init__(self):
        if not self.name:
            raise LogicError("symbol name must be nonempty")
        if self.arity not in (1, 2):
            raise LogicError(f"symbol {self.name!r}: arity must be 1 or 2, got {self.arity}")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


# ---------------------------------------------------------------------------
# quantifiers

EXACTLY_N = "exactly_n"
AT_MOST_N = "at_most_n"
AT_LEAST_N = "at_least_n"
A = "a"
EVERY = "every"
THE_N = "the_n"
BOTH = "both"
ALL_BUT_N = "all_but_n"
N_OF_THE_M = "n_of_the_m"

QUANTIFIER_KINDS = (
    EXACTLY_N, AT_MOST_N, AT_LEAST_N, A, EVERY, THE_N, BOTH, ALL_BUT_N, N_OF_THE_M,
)
_PARAMETERIZED = {EXACTLY_N, AT_MOST_N, AT_LEAST_N, THE_N, ALL_BUT_N, N_OF_THE_M}


@dataclass(frozen=True)
class Quantifier:
    kind: str
    n: Optional[int] = None
    m: Optional[int] = None

    def __post_init__(self):
        if self.kind not in QUANTIFIER_KINDS:
            raise LogicError(f"unknown quantifier kind {self.kind!r}")
        if (self.n is not None) != (self.kind in _PARAMETERIZED):
            raise LogicError(f"quantifier {self.kind}: n must be present iff parameterized")
        if (self.m is not None) != (self.kind == N_OF_THE_M):
            raise LogicError(f"quantifier {self.kind}: m only allowed for {N_OF_THE_M}")
        if self.n is not None and self.n < 0:
            raise LogicError("quantifier parameter n must be a natural number")
        if self.m is not None and self.m < 0:
            raise LogicError("quantifier parameter m must be a natural number")

    @property
    def token(self) -> str:
        if self.kind == N_OF_THE_M:
            return f"_{self.n}_of_the_{self.m}_q"
        if self.kind in _PARAMETERIZED:
            stem = self.kind[:-2]  # drop trailing "_n"
            return f"_{stem}_{self.n}_q"
        return f"_{self.kind}_q"


_TOKEN_RE = re.compile(
    r"_(?:(?P<nm>(?P<n1>\d+)_of_the_(?P<m1>\d+))"
    r"|(?P<stem>exactly|at_most|at_least|the|all_but)_(?P<n2>\d+)"
    r"|(?P<plain>a|every|both))_q$"
)


def quantifier_from_token(token: str) -> Quantifier:
    m = _TOKEN_RE.match(token)
    if not m:
        raise LogicError(f"unrecognized quantifier token {token!r}")
    if m.group("nm"):
        return Quantifier(N_OF_THE_M, n=int(m.group("n1")), m=int(m.group("m1")))
    if m.group("stem"):
        return Quantifier(m.group("stem") + "_n", n=int(m.group("n2")))
    return Quantifier(m.group("plain"))


def quantifier_truth(q: Quantifier, n_rb, n_r):
    """Cardinality truth condition over |restrictor ∩ body| and |restrictor|.

    Works elementwise on numpy arrays as well as on ints.  The existential
    reads |R ∩ B| >= 1 and the universal |R ∩ B| = |R| (the worked referent
    examples force these readings; see the package docs on quantifiers).
    """
    k = q.kind
    if k == EXACTLY_N:
        return n_rb == q.n
    if k == AT_MOST_N:
        return n_rb <= q.n
    if k == AT_LEAST_N:
        return n_rb >= q.n
    if k == A:
        return n_rb >= 1
    if k == EVERY:
        return n_rb == n_r
    if k == THE_N:
        return (n_rb == q.n) & (n_r == q.n)
    if k == BOTH:
        return (n_rb == 2) & (n_r == 2)
    if k == ALL_BUT_N:
        return (n_rb == n_r - q.n) & (n_r > q.n)
    if k == N_OF_THE_M:
        return (n_rb == q.n) & (n_r == q.m)
    raise LogicError(f"unknown quantifier kind {k!r}")


def referent_constructor(q: Quantifier, projected: tuple) -> frozenset:
    """Referent sets over the objects of the projected model.

    Each member is a candidate designation; the empty outer set signals
    reference failure.  Definite and universal quantifiers denote at most
    one set; the existential denotes singletons.
    """
    objs = tuple(projected)
    k = len(objs)

    def subsets(size: int) -> Iterable[frozenset]:
        return (frozenset(c) for c in itertools.combinations(objs, size))

    kind = q.kind
    if kind == EXACTLY_N:
        return frozenset(subsets(q.n)) if q.n <= k else frozenset()
    if kind == AT_MOST_N:
        return frozenset(s for size in range(0, min(q.n, k) + 1) for s in subsets(size))
    if kind == AT_LEAST_N:
        return frozenset(s for size in range(q.n, k + 1) for s in subsets(size))
    if kind == A:
        return frozenset(subsets(1))
    if kind == EVERY:
        return frozenset([frozenset(objs)]) if k > 0 else frozenset()
    if kind == THE_N:
        return frozenset([frozenset(objs)]) if k == q.n else frozenset()
    if kind == BOTH:
        return frozenset([frozenset(objs)]) if k == 2 else frozenset()
    if kind == ALL_BUT_N:
        return frozenset(subsets(k - q.n)) if k > q.n else frozenset()
    if kind == N_OF_THE_M:
        return frozenset(subsets(q.n)) if (k == q.m and q.n <= k) else frozenset()
    raise LogicError(f"unknown quantifier kind {kind!r}")


# ---------------------------------------------------------------------------
# formulas

@dataclass(frozen=True)
class Atom:
    symbol: Symbol
    args: tuple  # of Term

    def __post_init__(self):
        if len(self.args) != self.symbol.arity:
            raise LogicError(
                f"atom {self.symbol.name}: expected {self.symbol.arity} args, got {len(self.args)}"
            )


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple  # of Formula; empty tuple is the trivially true formula


@dataclass(frozen=True)
class Or:
    parts: tuple  # of Formula; empty tuple is the trivially false formula


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class GQ:
    quant: Quantifier
    var: str
    restrictor: "Formula"
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Iff, GQ]

TRUE = And(())
FALSE = Or(())


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


def atom(name: str, *args: str) -> Atom:
    """Ground or open atom from bare strings; names starting with x/y + digits parse as variables."""
    terms = tuple(Var(a) if _looks_like_var(a) else Const(a) for a in args)
    return Atom(Symbol(name, len(terms)), terms)


_VAR_RE = re.compile(r"^[xyz]\d*$")


def _looks_like_var(tok: str) -> bool:
    return bool(_VAR_RE.match(tok))


def free_vars(phi: Formula) -> frozenset:
    if isinstance(phi, Atom):
        return frozenset(t.name for t in phi.args if isinstance(t, Var))
    if isinstance(phi, Not):
        return free_vars(phi.sub)
    if isinstance(phi, (And, Or)):
        out: frozenset = frozenset()
        for p in phi.parts:
            out |= free_vars(p)
        return out
    if isinstance(phi, (Implies, Iff)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, GQ):
        return (free_vars(phi.restrictor) | free_vars(phi.body)) - {phi.var}
    raise LogicError(f"not a formula: {phi!r}")


def symbols_of(phi: Formula) -> frozenset:
    if isinstance(phi, Atom):
        return frozenset([phi.symbol])
    if isinstance(phi, Not):
        return symbols_of(phi.sub)
    if isinstance(phi, (And, Or)):
        out: frozenset = frozenset()
        for p in phi.parts:
            out |= symbols_of(p)
        return out
    if isinstance(phi, (Implies, Iff)):
        return symbols_of(phi.left) | symbols_of(phi.right)
    if isinstance(phi, GQ):
        return symbols_of(phi.restrictor) | symbols_of(phi.body)
    raise LogicError(f"not a formula: {phi!r}")


def substitute(phi: Formula, var: str, obj: str) -> Formula:
    """phi[var/obj]: replace free occurrences of var with the constant obj."""
    if isinstance(phi, Atom):
        args = tuple(Const(obj) if isinstance(t, Var) and t.name == var else t for t in phi.args)
        return Atom(phi.symbol, args)
    if isinstance(phi, Not):
        return Not(substitute(phi.sub, var, obj))
    if isinstance(phi, And):
        return And(tuple(substitute(p, var, obj) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(substitute(p, var, obj) for p in phi.parts))
    if isinstance(phi, Implies):
        return Implies(substitute(phi.left, var, obj), substitute(phi.right, var, obj))
    if isinstance(phi, Iff):
        return Iff(substitute(phi.left, var, obj), substitute(phi.right, var, obj))
    if isinstance(phi, GQ):
        if phi.var == var:
            return phi
        return GQ(phi.quant, phi.var, substitute(phi.restrictor, var, obj),
                  substitute(phi.body, var, obj))
    raise LogicError(f"not a formula: {phi!r}")


def well_formed(phi: Formula) -> bool:
    """Recursive well-formedness: every GQ binds a variable that is free or
    absent (never re-bound) in its restrictor and body."""
    try:
        _check_wf(phi, bound=frozenset())
        return True
    except LogicError:
        return False


def _check_wf(phi: Formula, bound: frozenset) -> None:
    if isinstance(phi, Atom):
        return
    if isinstance(phi, Not):
        _check_wf(phi.sub, bound)
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            _check_wf(p, bound)
    elif isinstance(phi, (Implies, Iff)):
        _check_wf(phi.left, bound)
        _check_wf(phi.right, bound)
    elif isinstance(phi, GQ):
        if phi.var in bound:
            raise LogicError(f"variable {phi.var} re-bound by nested quantifier")
        _check_wf(phi.restrictor, bound | {phi.var})
        _check_wf(phi.body, bound | {phi.var})
    else:
        raise LogicError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# referential expressions

@dataclass(frozen=True)
class RefForm:
    """Logical form of a referential expression: quantifier, bound variable,
    and a restrictor with exactly that one free variable."""
    quant: Quantifier
    var: str
    restrictor: Formula

    def __post_init__(self):
        fv = free_vars(self.restrictor)
        if fv != frozenset([self.var]):
            raise LogicError(
                f"refform restrictor must have exactly the free variable {self.var!r}, got {sorted(fv)}"
            )


# ---------------------------------------------------------------------------
# domain models

@dataclass(frozen=True)
class DomainModel:
    objects: tuple
    vocabulary: tuple  # of Symbol, insertion order
    interpretation: Mapping[Symbol, frozenset]  # Symbol -> frozenset of arg tuples

    def __post_init__(self):
        objs = set(self.objects)
        for sym, tuples in self.interpretation.items():
            for tup in tuples:
                if len(tup) != sym.arity:
                    raise LogicError(f"interpretation of {sym.name}: tuple {tup} has wrong arity")
                if any(o not in objs for o in tup):
                    raise LogicError(f"interpretation of {sym.name}: {tup} mentions unknown object")

    def denotation(self, sym: Symbol) -> frozenset:
        try:
            return self.interpretation[sym]
        except KeyError:
            raise EvaluationError(f"unknown symbol {sym.name!r}/{sym.arity}") from None


def make_model(objects: Iterable[str], vocabulary: Iterable[Symbol],
               facts: Iterable[tuple]) -> DomainModel:
    """Model from (symbol_name, args...) fact tuples; unlisted atoms are false."""
    objects = tuple(objects)
    vocabulary = tuple(vocabulary)
    by_name = {s.name: s for s in vocabulary}
    interp: dict = {s: set() for s in vocabulary}
    for fact in facts:
        name, args = fact[0], tuple(fact[1:])
        sym = by_name.get(name)
        if sym is None:
            raise LogicError(f"fact uses symbol {name!r} not in vocabulary")
        interp[sym].add(args)
    return DomainModel(objects, vocabulary, {s: frozenset(v) for s, v in interp.items()})


def herbrand_base(objects: Iterable[str], vocabulary: Iterable[Symbol]) -> tuple:
    """All ground atoms as (symbol_name, args) pairs, vocabulary order then
    object order (object pairs in row-major product order for arity 2)."""
    objects = tuple(objects)
    vocabulary = tuple(vocabulary)
    if not objects or not vocabulary:
        raise LogicError("herbrand base needs nonempty objects and vocabulary")
    out = []
    for sym in vocabulary:
        if sym.arity == 1:
            out.extend((sym.name, (o,)) for o in objects)
        else:
            out.extend((sym.name, pair) for pair in itertools.product(objects, repeat=2))
    return tuple(out)


Assignment = Mapping[str, str]


def eval_formula(model: DomainModel, g: Assignment, phi: Formula) -> bool:
    """Truth value of phi in the model under assignment g."""
    if isinstance(phi, Atom):
        vals = []
        for t in phi.args:
            if isinstance(t, Const):
                if t.name not in model.objects:
                    raise EvaluationError(f"constant {t.name!r} denotes no object")
                vals.append(t.name)
            else:
                if t.name not in g:
                    raise EvaluationError(f"unbound variable {t.name!r}")
                vals.append(g[t.name])
        return tuple(vals) in model.denotation(phi.symbol)
    if isinstance(phi, Not):
        return not eval_formula(model, g, phi.sub)
    if isinstance(phi, And):
        return all(eval_formula(model, g, p) for p in phi.parts)
    if isinstance(phi, Or):
        return any(eval_formula(model, g, p) for p in phi.parts)
    if isinstance(phi, Implies):
        return (not eval_formula(model, g, phi.left)) or eval_formula(model, g, phi.right)
    if isinstance(phi, Iff):
        return eval_formula(model, g, phi.left) == eval_formula(model, g, phi.right)
    if isinstance(phi, GQ):
        restr = [o for o in model.objects
                 if eval_formula(model, {**g, phi.var: o}, phi.restrictor)]
        body = {o for o in model.objects
                if eval_formula(model, {**g, phi.var: o}, phi.body)}
        n_rb = sum(1 for o in restr if o in body)
        return bool(quantifier_truth(phi.quant, n_rb, len(restr)))
    raise LogicError(f"not a formula: {phi!r}")


def satisfiers(model: DomainModel, phi: Formula, var: str) -> tuple:
    """Objects o with model |= phi[var/o], in model object order."""
    return tuple(o for o in model.objects if eval_formula(model, {var: o}, phi))


def project_model(model: DomainModel, phi: Formula, var: str) -> DomainModel:
    """Restrict the model to the satisfiers of phi; interpretation tuples that
    mention dropped objects are removed."""
    fv = free_vars(phi)
    if fv != frozenset([var]):
        raise LogicError(f"projection formula must have exactly one free variable {var!r}")
    kept = satisfiers(model, phi, var)
    kept_set = set(kept)
    interp = {
        sym: frozenset(tup for tup in tuples if all(o in kept_set for o in tup))
        for sym, tuples in model.interpretation.items()
    }
    return DomainModel(kept, model.vocabulary, interp)


Referent = frozenset  # of frozenset of object ids


def referent_of(model: DomainModel, r: RefForm) -> Referent:
    projected = project_model(model, r.restrictor, r.var)
    return referent_constructor(r.quant, projected.objects)


def sorted_referent(model: DomainModel, referent: Referent) -> list:
    """Deterministic iteration order: by size, then by object positions."""
    index = {o: i for i, o in enumerate(model.objects)}
    key = lambda s: (len(s), sorted(index[o] for o in s))
    return sorted(referent, key=key)


# ---------------------------------------------------------------------------
# textual serialization (used in transcripts and by the expression parser)

def format_term(t: Term) -> str:
    return t.name


def format_formula(phi: Formula) -> str:
    return _fmt(phi, parent=None)


def _fmt(phi: Formula, parent) -> str:
    if isinstance(phi, Atom):
        return f"{phi.symbol.name}({','.join(format_term(t) for t in phi.args)})"
    if isinstance(phi, Not):
        return f"neg({_fmt(phi.sub, None)})"
    if isinstance(phi, And):
        if not phi.parts:
            return "true"
        s = " & ".join(_fmt(p, "and") for p in phi.parts)
        return f"({s})" if parent in ("or", "imp") and len(phi.parts) > 1 else s
    if isinstance(phi, Or):
        if not phi.parts:
            return "false"
        s = " | ".join(_fmt(p, "or") for p in phi.parts)
        return f"({s})" if parent in ("and", "imp") and len(phi.parts) > 1 else s
    if isinstance(phi, Implies):
        return f"({_fmt(phi.left, 'imp')} -> {_fmt(phi.right, 'imp')})"
    if isinstance(phi, Iff):
        return f"({_fmt(phi.left, 'imp')} <-> {_fmt(phi.right, 'imp')})"
    if isinstance(phi, GQ):
        return (f"{phi.quant.token} {phi.var}."
                f"({_fmt(phi.restrictor, None)}, {_fmt(phi.body, None)})")
    raise LogicError(f"not a formula: {phi!r}")


def format_refform(r: RefForm) -> str:
    return f"<{r.quant.token} {r.var}.{_fmt(r.restrictor, 'and')}>"


# -- reader ------------------------------------------------------------------

_LEX_RE = re.compile(
    r"\s*(?:(?P<qtok>_[a-z0-9_]+_q)|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op><->|->|[&|,().<>]|∧|∨|¬))"
)


class _Reader:
    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _LEX_RE.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise LogicError(f"cannot tokenize {text[pos:]!r} at position {pos}")
                break
            pos = m.end()
            self.tokens.append(m.group(m.lastgroup))
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def pop(self, expect=None):
        tok = self.peek()
        if tok is None:
            raise LogicError("unexpected end of expression")
        if expect is not None and tok != expect:
            raise LogicError(f"expected {expect!r}, got {tok!r}")
        self.i += 1
        return tok

    def formula(self) -> Formula:
        return self._iff()

    def _iff(self) -> Formula:
        left = self._implies()
        while self.peek() == "<->":
            self.pop()
            left = Iff(left, self._implies())
        return left

    def _implies(self) -> Formula:
        left = self._or()
        if self.peek() == "->":
            self.pop()
            return Implies(left, self._implies())
        return left

    def _or(self) -> Formula:
        parts = [self._and()]
        while self.peek() in ("|", "∨"):
            self.pop()
            parts.append(self._and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and(self) -> Formula:
        parts = [self._unit()]
        while self.peek() in ("&", "∧"):
            self.pop()
            parts.append(self._unit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unit(self) -> Formula:
        tok = self.peek()
        if tok == "(":
            self.pop()
            phi = self.formula()
            self.pop(")")
            return phi
        if tok in ("¬",):
            self.pop()
            return Not(self._unit())
        if tok == "neg":
            self.pop()
            self.pop("(")
            phi = self.formula()
            self.pop(")")
            return Not(phi)
        if tok == "true":
            self.pop()
            return TRUE
        if tok == "false":
            self.pop()
            return FALSE
        if tok and tok.startswith("_") and tok.endswith("_q"):
            return self._gq()
        return self._atom()

    def _gq(self) -> Formula:
        quant = quantifier_from_token(self.pop())
        var = self.pop()
        self.pop("(")
        restr = self.formula()
        self.pop(",")
        body = self.formula()
        self.pop(")")
        return GQ(quant, var, restr, body)

    def _atom(self) -> Atom:
        name = self.pop()
        if not re.match(r"^[A-Za-z]", name or ""):
            raise LogicError(f"expected atom, got {name!r}")
        self.pop("(")
        args = [self.pop()]
        while self.peek() == ",":
            self.pop()
            args.append(self.pop())
        self.pop(")")
        return atom(name, *args)

    def refform(self) -> RefForm:
        angled = self.peek() == "<"
        if angled:
            self.pop()
        tok = self.peek()
        if not (tok and tok.startswith("_") and tok.endswith("_q")):
            raise LogicError(f"refform must start with a quantifier token, got {tok!r}")
        quant = quantifier_from_token(self.pop())
        var = self.pop()
        # optional '.' lexes as nothing: a '.' is not in the token set, so the
        # surface uses 'Q x.(phi)' or 'Q x.phi'; both arrive here the same way
        restr = self.formula()
        if angled:
            self.pop(">")
        return RefForm(quant, var, restr)


def parse_formula_text(text: str) -> Formula:
    reader = _Reader(text.replace(".", " "))
    phi = reader.formula()
    if reader.peek() is not None:
        raise LogicError(f"trailing tokens after formula: {reader.tokens[reader.i:]}")
    return phi


def parse_refform_text(text: str) -> RefForm:
    reader = _Reader(text.replace(".", " "))
    r = reader.refform()
    if reader.peek() is not None:
        raise LogicError(f"trailing tokens after refform: {reader.tokens[reader.i:]}")
    return r
