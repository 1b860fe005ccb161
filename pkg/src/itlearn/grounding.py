"""Non-parametric multilabel prototype grounding.

Each vocabulary symbol gets a positive and a negative prototype: weighted
mean embeddings of the support entries whose label for that symbol is
confident enough (Bernoulli entropy at or below the noise threshold tau).
Membership probability of a query embedding is a sigmoid over how much
closer it sits to the positive prototype than to the negative one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class GroundingUnavailable(Exception):
    """No support at all for a symbol, so no prototypes can be formed."""


LITERAL = "literal"
CORRECTED = "corrected"


@dataclass(frozen=True)
class GroundingConfig:
    tau: float = 0.65            # nats; admission bounds ~0.354 / 0.646
    sign_mode: str = CORRECTED
    scale: float = 5.0           # sigmoid input scale for corrected mode
    dim: int = 16                # embedding dimension for synthetic features

    def __post_init__(self):
        if not (0.0 < self.tau <= math.log(2.0) + 1e-12):
            raise ValueError(f"tau must be in (0, ln 2], got {self.tau}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.sign_mode not in (LITERAL, CORRECTED):
            raise ValueError(f"sign_mode must be literal or corrected, got {self.sign_mode!r}")


@dataclass(frozen=True)
class SupportEntry:
    """One remembered exemplar: an object-centric embedding plus per-symbol
    degrees of belief that the symbol denotes it."""
    embedding: tuple          # stored as a plain tuple so entries hash/compare
    labels: Mapping[str, float]

    def vector(self) -> np.ndarray:
        return np.asarray(self.embedding, dtype=float)


@dataclass(frozen=True)
class PrototypePair:
    positive: np.ndarray
    negative: np.ndarray
    positive_fallback: bool = False
    negative_fallback: bool = False


def bernoulli_entropy(p):
    """Entropy of Bern(p) in nats; zero at both endpoints."""
    if isinstance(p, (float, int)):
        if p <= 0.0 or p >= 1.0:
            return 0.0
        return -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    q = p[interior]
    out[interior] = -(q * np.log(q) + (1.0 - q) * np.log(1.0 - q))
    if out.ndim == 0:
        return float(out)
    return out


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def build_supports(support: Sequence[SupportEntry], symbol: str,
                   cfg: GroundingConfig):
    """Split the support into confident positives and negatives for a symbol."""
    positives, negatives = [], []
    for entry in support:
        y = entry.labels[symbol]
        if bernoulli_entropy(y) > cfg.tau:
            continue
        if y > 0.5:
            positives.append(entry)
        elif y < 0.5:
            negatives.append(entry)
    return positives, negatives


def _weighted_mean(entries: Sequence[SupportEntry], symbol: str, positive: bool) -> np.ndarray:
    vecs = np.stack([e.vector() for e in entries])
    w = np.array([e.labels[symbol] if positive else 1.0 - e.labels[symbol] for e in entries])
    return (w[:, None] * vecs).sum(axis=0) / len(entries)


def compute_prototypes(positives: Sequence[SupportEntry], negatives: Sequence[SupportEntry],
                       full_support: Sequence[SupportEntry], symbol: str) -> PrototypePair:
    """Weighted-mean prototypes; an empty side falls back to the single
    support embedding with the largest (positive) or smallest (negative)
    label entropy, as the best guess available.

    Fallback candidates exclude entries already admitted to the opposite
    support: an exemplar confidently in the positive support cannot stand in
    as the negative prototype (and vice versa), otherwise one-sided evidence
    would cancel itself out.
    """
    if not full_support:
        raise GroundingUnavailable(f"no support entries to ground {symbol!r}")
    pos_fb = neg_fb = False
    if positives:
        z_pos = _weighted_mean(positives, symbol, positive=True)
    else:
        pos_fb = True
        pool = [e for e in full_support if e not in negatives] or list(full_support)
        z_pos = max(pool, key=lambda e: bernoulli_entropy(e.labels[symbol])).vector()
    if negatives:
        z_neg = _weighted_mean(negatives, symbol, positive=False)
    else:
        neg_fb = True
        pool = [e for e in full_support if e not in positives] or list(full_support)
        z_neg = min(pool, key=lambda e: bernoulli_entropy(e.labels[symbol])).vector()
    return PrototypePair(z_pos, z_neg, pos_fb, neg_fb)


def prototypes_for(support: Sequence[SupportEntry], symbol: str,
                   cfg: GroundingConfig) -> PrototypePair:
    pos, neg = build_supports(support, symbol, cfg)
    return compute_prototypes(pos, neg, support, symbol)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    return float(a @ b) / (na * nb)


def predict_one(x: np.ndarray, pair: PrototypePair, cfg: GroundingConfig) -> float:
    """Membership probability of the query embedding for one symbol."""
    if float(np.linalg.norm(x)) == 0.0:
        raise ValueError("cannot ground a zero-norm embedding")
    if np.allclose(pair.positive, pair.negative):
        return 0.5
    if cfg.sign_mode == CORRECTED:
        gap = _cosine(x, pair.positive) - _cosine(x, pair.negative)
        return sigmoid(cfg.scale * gap)
    return sigmoid(_cosine(pair.negative - pair.positive, x))


def predict_labels(support: Sequence[SupportEntry], vocabulary: Sequence[str],
                   x: np.ndarray, cfg: GroundingConfig) -> dict:
    """Predicted label vector over the vocabulary for one embedding."""
    return {
        sym: predict_one(x, prototypes_for(support, sym, cfg), cfg)
        for sym in vocabulary
    }


def grounded_weights(objects: Sequence[str], embeddings: Mapping[str, np.ndarray],
                     support: Sequence[SupportEntry], vocabulary: Sequence[str],
                     cfg: GroundingConfig) -> dict:
    """Grounding predictions for every unary atom, one prototype pair per
    symbol shared across objects."""
    out = {}
    for sym in vocabulary:
        pair = prototypes_for(support, sym, cfg)
        for o in objects:
            out[(sym, (o,))] = predict_one(np.asarray(embeddings[o], dtype=float), pair, cfg)
    return out


def admission_bounds(tau: float, tol: float = 1e-9) -> tuple:
    """Label values at which Bern entropy equals tau: entries are admitted to
    the negative support at or below the lower bound and to the positive
    support at or above the upper bound.  Solved by bisection."""
    lo, hi = 0.5, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if bernoulli_entropy(mid) > tau:
            lo = mid
        else:
            hi = mid
    upper = (lo + hi) / 2.0
    return 1.0 - upper, upper
