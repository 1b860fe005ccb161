"""Deterministic grammar between controlled English and logical forms.

Referential expressions follow `Det (Adj)* Noun (PP)?`, where the PP embeds
a spatial relation and another referential expression.  Content words map to
unary symbols through a small lexicon with an irregular-plural table and
plain -s/-es stripping; words outside the lexicon are not errors, they
become candidate neologism symbols.  Rendering inverts parsing, so logical
forms round-trip through their surface strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .logic import (
    A, ALL_BUT_N, AT_LEAST_N, AT_MOST_N, BOTH, EVERY, EXACTLY_N, N_OF_THE_M,
    THE_N, And, Atom, Formula, GQ, Quantifier, RefForm, Symbol, Var, conj,
)


class ParseError(Exception):
    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"{message} (at token {position})"
        super().__init__(message)
        self.position = position


# ---------------------------------------------------------------------------
# lexicon

RELATIONS = {
    "left": ("to", "the", "left", "of"),
    "right": ("to", "the", "right", "of"),
    "front": ("in", "front", "of"),
    "behind": ("behind",),
    "inside": ("inside",),
}
_RELATION_STARTS = {phrase[0] for phrase in RELATIONS.values()}

# multiword lemmas listed longest first so greedy matching stays correct
MULTIWORD_LEXEMES = (
    (("granny", "smith", "apple"), "grannysmith"),
    (("granny", "smith"), "grannysmith"),
    (("golden", "delicious"), "goldendelicious"),
    (("red", "delicious"), "reddelicious"),
    (("pink", "lady"), "pinklady"),
)

SINGLE_LEXEMES = {
    "red": "red", "green": "green", "blue": "blue", "cyan": "cyan",
    "grey": "grey", "gray": "grey", "magenta": "magenta", "yellow": "yellow",
    "cube": "cube", "rectangle": "rectangle", "cylinder": "cylinder",
    "sphere": "sphere", "cone": "cone", "block": "block", "object": "object",
    "basket": "basket", "apple": "apple", "russet": "russet",
    "plain": "plain", "dotted": "dotted", "star": "star", "starry": "star",
}

IRREGULAR_PLURALS = {
    "ladies": "lady",
    "deliciouses": "delicious",
}

# preferred surface lemma per symbol (parsing accepts more than one)
SURFACE: dict = {}
for _lemma, _sym in SINGLE_LEXEMES.items():
    SURFACE.setdefault(_sym, _lemma)
SURFACE.update({
    "star": "starry",
    "grannysmith": "granny smith", "goldendelicious": "golden delicious",
    "reddelicious": "red delicious", "pinklady": "pink lady",
})

NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}
WORD_OF_NUMBER = {n: w for w, n in NUMBER_WORDS.items()}

_SIBILANT_ENDINGS = ("s", "x", "z", "ch", "sh")


def _singular_candidates(word: str) -> list:
    out = [word]
    if word in IRREGULAR_PLURALS:
        out.append(IRREGULAR_PLURALS[word])
    if word.endswith("es") and len(word) > 3:
        out.append(word[:-2])
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        out.append(word[:-1])
    return out


def _pluralize_word(word: str) -> str:
    for plural, singular in IRREGULAR_PLURALS.items():
        if singular == word:
            return plural
    if any(word.endswith(e) for e in _SIBILANT_ENDINGS):
        return word + "es"
    return word + "s"


def pluralize(symbol: str) -> str:
    surface = SURFACE.get(symbol, symbol)
    words = surface.split()
    return " ".join(words[:-1] + [_pluralize_word(words[-1])])


def tokenize(text: str) -> list:
    return re.findall(r"[a-z0-9]+", text.lower())


def _parse_number(tok: str) -> Optional[int]:
    if tok in NUMBER_WORDS:
        return NUMBER_WORDS[tok]
    if tok.isdigit():
        return int(tok)
    return None


def _number_word(n: int) -> str:
    return WORD_OF_NUMBER.get(n, str(n))


# ---------------------------------------------------------------------------
# data carried by instructions and corrections

@dataclass(frozen=True)
class TaskInstruction:
    raw: str
    direct: RefForm
    relation: str
    indirect: RefForm


@dataclass(frozen=True)
class Correction:
    raw: str
    refexp: RefForm
    designated: str


Designation = tuple  # of object ids


# ---------------------------------------------------------------------------
# parsing

class _Tokens:
    def __init__(self, toks: Sequence[str]):
        self.toks = list(toks)
        self.i = 0

    def peek(self, offset: int = 0) -> Optional[str]:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def pop(self) -> str:
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of input", self.i)
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at_relation(self) -> Optional[str]:
        for rel, phrase in RELATIONS.items():
            if tuple(self.toks[self.i:self.i + len(phrase)]) == phrase:
                return rel
        return None

    def pop_relation(self) -> str:
        rel = self.at_relation()
        if rel is None:
            raise ParseError(f"expected a spatial relation, got {self.peek()!r}", self.i)
        self.i += len(RELATIONS[rel])
        return rel


def _parse_determiner(ts: _Tokens):
    """Returns (quantifier, plural_expected)."""
    pos = ts.i
    tok = ts.peek()
    if tok is None:
        raise ParseError("empty referential expression", pos)
    n = _parse_number(tok)
    if n is not None and ts.peek(1) == "of" and ts.peek(2) == "the":
        ts.pop(), ts.pop(), ts.pop()
        m = _parse_number(ts.peek() or "")
        if m is None:
            raise ParseError("expected a number after 'of the'", ts.i)
        ts.pop()
        return Quantifier(N_OF_THE_M, n=n, m=m), m > 1
    if tok in ("a", "an"):
        ts.pop()
        return Quantifier(A), False
    if tok == "every":
        ts.pop()
        return Quantifier(EVERY), False
    if tok == "all":
        ts.pop()
        if ts.peek() == "but":
            ts.pop()
            k = _parse_number(ts.peek() or "")
            if k is None:
                raise ParseError("expected a number after 'all but'", ts.i)
            ts.pop()
            return Quantifier(ALL_BUT_N, n=k), k != 1
        return Quantifier(EVERY), True
    if tok == "both":
        ts.pop()
        return Quantifier(BOTH), True
    if tok == "the":
        ts.pop()
        k = _parse_number(ts.peek() or "")
        if k is not None:
            ts.pop()
            return Quantifier(THE_N, n=k), k > 1
        return Quantifier(THE_N, n=1), False
    if tok == "exactly":
        ts.pop()
        k = _parse_number(ts.peek() or "")
        if k is None:
            raise ParseError("expected a number after 'exactly'", ts.i)
        ts.pop()
        return Quantifier(EXACTLY_N, n=k), k > 1
    if tok == "at" and ts.peek(1) in ("least", "most"):
        ts.pop()
        kind = AT_LEAST_N if ts.pop() == "least" else AT_MOST_N
        k = _parse_number(ts.peek() or "")
        if k is None:
            raise ParseError("expected a number after 'at least/most'", ts.i)
        ts.pop()
        return Quantifier(kind, n=k), k > 1
    raise ParseError(f"unknown determiner {tok!r}", pos)


def _match_content_word(ts: _Tokens, plural: bool) -> str:
    """One content lexeme starting at the cursor; unknown words become fresh
    symbols rather than errors."""
    for words, symbol in MULTIWORD_LEXEMES:
        span = ts.toks[ts.i:ts.i + len(words)]
        if len(span) < len(words):
            continue
        head, tail = words[:-1], words[-1]
        if tuple(span[:-1]) == head and tail in _singular_candidates(span[-1]):
            ts.i += len(words)
            return symbol
    tok = ts.pop()
    for cand in _singular_candidates(tok):
        if cand in SINGLE_LEXEMES:
            return SINGLE_LEXEMES[cand]
    if plural and tok.endswith("s") and not tok.endswith("ss") and len(tok) > 2:
        return tok[:-1]
    return tok


def _parse_refexp(ts: _Tokens, depth: int = 0, allow_pp: bool = True,
                  stop_words: frozenset = frozenset()) -> RefForm:
    quant, plural = _parse_determiner(ts)
    var = "x" if depth == 0 else f"x{depth}"
    symbols = []
    while True:
        tok = ts.peek()
        if tok is None or tok in stop_words:
            break
        if ts.at_relation():
            break
        symbols.append(_match_content_word(ts, plural))
    if not symbols:
        raise ParseError("expected at least one content word", ts.i)
    atoms = [Atom(Symbol(s, 1), (Var(var),)) for s in symbols]
    restrictor: Formula = conj(atoms)
    if allow_pp and ts.at_relation():
        rel = ts.pop_relation()
        inner = _parse_refexp(ts, depth=depth + 1, allow_pp=True, stop_words=stop_words)
        rel_atom = Atom(Symbol(rel, 2), (Var(var), Var(inner.var)))
        restrictor = GQ(inner.quant, inner.var, inner.restrictor,
                        conj(atoms + [rel_atom]))
    return RefForm(quant, var, restrictor)


def parse_refexp(text: str) -> RefForm:
    ts = _Tokens(tokenize(text))
    r = _parse_refexp(ts)
    if ts.peek() is not None:
        raise ParseError(f"trailing words {ts.toks[ts.i:]!r}", ts.i)
    return r


def parse_instruction(text: str) -> TaskInstruction:
    ts = _Tokens(tokenize(text))
    verb = ts.peek()
    if verb not in ("move", "put"):
        raise ParseError(f"instructions start with 'move' or 'put', got {verb!r}", ts.i)
    ts.pop()
    direct = _parse_refexp(ts, depth=0, allow_pp=False)
    if ts.at_relation() is None:
        raise ParseError("expected a spatial relation after the direct object", ts.i)
    relation = ts.pop_relation()
    indirect = _parse_refexp(ts, depth=0, allow_pp=True)
    if ts.peek() is not None:
        raise ParseError(f"trailing words {ts.toks[ts.i:]!r}", ts.i)
    return TaskInstruction(text, direct, relation, indirect)


def parse_correction(text: str, point: Designation) -> Correction:
    toks = tokenize(text)
    if toks[:3] != ["no", "this", "is"]:
        raise ParseError("corrections read 'No. This is <refexp>.'", 0)
    ts = _Tokens(toks[3:])
    refexp = _parse_refexp(ts)
    if ts.peek() is not None:
        raise ParseError(f"trailing words {ts.toks[ts.i:]!r}", ts.i)
    if refexp.quant.kind != A:
        raise ParseError("correction refexp must be existential (a/an)", 0)
    if len(point) != 1:
        raise ParseError(f"corrections designate exactly one object, got {len(point)}")
    return Correction(text, refexp, point[0])


# ---------------------------------------------------------------------------
# rendering

def _decompose(r: RefForm):
    """Split a refform restrictor into unary content atoms and an optional
    (relation, inner RefForm) prepositional phrase."""
    restrictor = r.restrictor
    if isinstance(restrictor, GQ):
        parts = restrictor.body.parts if isinstance(restrictor.body, And) else (restrictor.body,)
        unary = [p for p in parts if isinstance(p, Atom) and p.symbol.arity == 1]
        rel_atoms = [p for p in parts if isinstance(p, Atom) and p.symbol.arity == 2]
        if len(rel_atoms) != 1 or len(unary) + 1 != len(parts):
            raise ParseError("refform body does not match the renderable PP shape")
        inner = RefForm(restrictor.quant, restrictor.var, restrictor.restrictor)
        return [a.symbol.name for a in unary], (rel_atoms[0].symbol.name, inner)
    parts = restrictor.parts if isinstance(restrictor, And) else (restrictor,)
    if not all(isinstance(p, Atom) and p.symbol.arity == 1 for p in parts):
        raise ParseError("refform restrictor is not a conjunction of unary atoms")
    return [p.symbol.name for p in parts], None


def _determiner_surface(q: Quantifier, noun_phrase: str) -> str:
    kind = q.kind
    if kind == A:
        article = "an" if noun_phrase[0] in "aeiou" else "a"
        return f"{article} {noun_phrase}"
    if kind == EVERY:
        return f"every {noun_phrase}"
    if kind == THE_N:
        return f"the {_number_word(q.n)} {noun_phrase}"
    if kind == BOTH:
        return f"both {noun_phrase}"
    if kind == EXACTLY_N:
        return f"exactly {_number_word(q.n)} {noun_phrase}"
    if kind == AT_LEAST_N:
        return f"at least {_number_word(q.n)} {noun_phrase}"
    if kind == AT_MOST_N:
        return f"at most {_number_word(q.n)} {noun_phrase}"
    if kind == ALL_BUT_N:
        return f"all but {_number_word(q.n)} {noun_phrase}"
    if kind == N_OF_THE_M:
        return f"{_number_word(q.n)} of the {_number_word(q.m)} {noun_phrase}"
    raise ParseError(f"cannot render quantifier {kind!r}")


def _plural_marked(q: Quantifier) -> bool:
    kind = q.kind
    if kind in (THE_N, EXACTLY_N, AT_LEAST_N, AT_MOST_N):
        return q.n > 1
    if kind == ALL_BUT_N:
        return q.n != 1
    if kind == BOTH:
        return True
    if kind == N_OF_THE_M:
        return q.m > 1
    return False


def render_refexp(r: RefForm) -> str:
    symbols, pp = _decompose(r)
    head = symbols[-1]
    mods = [SURFACE.get(s, s) for s in symbols[:-1]]
    head_surface = pluralize(head) if _plural_marked(r.quant) else SURFACE.get(head, head)
    noun_phrase = " ".join(mods + [head_surface])
    out = _determiner_surface(r.quant, noun_phrase)
    if pp is not None:
        rel, inner = pp
        out = f"{out} {' '.join(RELATIONS[rel])} {render_refexp(inner)}"
    return out


def render_instruction(t: TaskInstruction) -> str:
    verb = "put" if t.relation == "inside" else "move"
    return f"{verb} {render_refexp(t.direct)} {' '.join(RELATIONS[t.relation])} {render_refexp(t.indirect)}"


def render_correction(c: Correction) -> str:
    return f"No. This is {render_refexp(c.refexp)}."


def content_symbols(r: RefForm) -> list:
    """Unary content symbols in surface order, including any embedded PP."""
    symbols, pp = _decompose(r)
    if pp is not None:
        symbols = symbols + content_symbols(pp[1])
    return symbols
