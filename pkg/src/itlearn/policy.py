"""Decision-making over questions and task attempts.

Each admissible action is scored by a two-feature linear value function:
expected information gain (entropy drop of the belief, marginalized over the
answers a question could receive) and expected reward (negated expected
question cost, or confidence in the current most-probable model for an
attempt).  The two weights are trained with episodic semi-gradient SARSA.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import belief as beliefmod
from .belief import BeliefState
from .discourse import AnalysisMode, QuestionAction, sentence_semantics
from .logic import (
    A, ALL_BUT_N, AT_LEAST_N, AT_MOST_N, And, Atom, BOTH, EVERY, EXACTLY_N,
    N_OF_THE_M, THE_N, Quantifier, RefForm, symbols_of,
)

log = logging.getLogger(__name__)

MAX_ENUMERATED_OBJECTS = 8


@dataclass(frozen=True)
class AttemptAction:
    surface: str = "attempt the task"


ACT = AttemptAction()


@dataclass(frozen=True)
class CostConfig:
    c_point: float = 0.1
    c_ref: float = 0.1

    def __post_init__(self):
        if self.c_point < 0 or self.c_ref < 0:
            raise ValueError("unit costs must be nonnegative")


@dataclass(frozen=True)
class PolicyParams:
    theta: tuple = (0.1, 1.0)  # (exploration weight, exploitation weight)

    def __post_init__(self):
        if len(self.theta) != 2 or not all(math.isfinite(v) for v in self.theta):
            raise ValueError("theta must be two finite numbers")


@dataclass(frozen=True)
class SarsaConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon: float = 0.1
    m: int = 1                # tasks per environment
    theta_bound: float = 1e3  # divergence guard

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if self.m < 1:
            raise ValueError("m must be at least 1")


def validate_costs(cfg: CostConfig, scene_size: int, max_symbols: int = 3) -> None:
    """Terminal detection reads |R| = 1, so expected question rewards must
    stay strictly inside (-1, 0]."""
    worst_obj = max((scene_size - 1) / 2.0, float(max_symbols))
    worst = cfg.c_point * worst_obj + cfg.c_ref * max_symbols
    if worst >= 1.0:
        raise ValueError(
            f"question costs reach {worst:.3f} >= 1 for {scene_size} objects; "
            "training cannot distinguish them from attempt outcomes")


def _declared_cardinality(q: Quantifier) -> Optional[int]:
    if q.kind in (THE_N, EXACTLY_N, N_OF_THE_M, AT_LEAST_N, AT_MOST_N):
        return q.n
    if q.kind == BOTH:
        return 2
    if q.kind == A:
        return 1
    return None  # universal-like: unknown until the answer arrives


def symbol_count(r: RefForm) -> int:
    return len(symbols_of(r.restrictor))


def question_cost(q: QuestionAction, cfg: CostConfig, scene_size: int,
                  designation_size: Optional[int] = None) -> float:
    """Realized cost: pointing effort times designated objects plus reference
    effort times predicate symbols.  Universal quantifiers need the actual
    designation size."""
    declared = _declared_cardinality(q.refexp.quant)
    if declared is None:
        if designation_size is None:
            raise ValueError("universal question cost needs the designation size")
        declared = designation_size
    return cfg.c_point * declared + cfg.c_ref * symbol_count(q.refexp)


def expected_question_cost(q: QuestionAction, cfg: CostConfig, scene_size: int) -> float:
    """Like the realized cost, except a universal's designation size is
    approximated by the average (|O| - 1) / 2."""
    declared = _declared_cardinality(q.refexp.quant)
    if declared is None:
        declared = (scene_size - 1) / 2.0
    return cfg.c_point * declared + cfg.c_ref * symbol_count(q.refexp)


def candidate_designations(r: RefForm, objects: Sequence[str]) -> list:
    """Designation sets whose cardinality the quantifier admits, in a fixed
    deterministic order."""
    n = len(objects)
    if n > MAX_ENUMERATED_OBJECTS:
        raise ValueError(
            f"candidate enumeration supports at most {MAX_ENUMERATED_OBJECTS} objects, got {n}")
    kind = r.quant.kind
    if kind in (THE_N, EXACTLY_N, N_OF_THE_M):
        sizes = [r.quant.n]
    elif kind == BOTH:
        sizes = [2]
    elif kind == A:
        sizes = [1]
    elif kind == AT_LEAST_N:
        sizes = list(range(r.quant.n, n + 1))
    elif kind == AT_MOST_N:
        sizes = list(range(1, r.quant.n + 1))
    elif kind == ALL_BUT_N:
        hi = n - r.quant.n
        sizes = list(range(1, hi + 1))
    else:  # EVERY: the answer ranges over every nonempty subset
        sizes = list(range(1, n + 1))
    out = []
    for size in sizes:
        if 0 < size <= n:
            out.extend(frozenset(c) for c in itertools.combinations(objects, size))
    return out


def _designation_prefilter(b: BeliefState, r: RefForm, mode: AnalysisMode):
    """Sound zero-weight test from the support labels: a label of exactly
    0 or 1 is logically forced by the theory, so candidates placing a
    known non-satisfier inside the designation (or, for uniqueness
    quantifiers under full analysis, a known satisfier outside it) carry
    no probability and can be skipped before counting."""
    parts = r.restrictor.parts if isinstance(r.restrictor, And) else (r.restrictor,)
    if not all(isinstance(p, Atom) and p.symbol.arity == 1
               and p.symbol.name in b.vocabulary for p in parts):
        return lambda d: True
    syms = [p.symbol.name for p in parts]
    known_false = set()
    known_true = set()
    for o, entry in zip(b.objects, b.support):
        labels = [entry.labels[s] for s in syms]
        if any(v == 0.0 for v in labels):
            known_false.add(o)
        elif all(v == 1.0 for v in labels):
            known_true.add(o)
    check_outside = mode.kind == SECURE and r.quant.kind in (THE_N, BOTH, EVERY)

    def admissible(d) -> bool:
        if d & known_false:
            return False
        if check_outside and (known_true - d):
            return False
        return True

    return admissible


def answer_distribution(b: BeliefState, q: QuestionAction, mode: AnalysisMode) -> list:
    """(probability, formula) per candidate answer, weighted by conditional
    probability under the grounded weights and normalized over the consistent
    candidates.  Empty when no candidate is consistent."""
    weighted = []
    admissible = _designation_prefilter(b, q.refexp, mode)
    for d in candidate_designations(q.refexp, b.objects):
        if not admissible(d):
            continue
        phi = sentence_semantics(q.refexp, [d], b.objects, mode)
        w = beliefmod.con_grounded(b, phi)
        if w > 0.0:
            weighted.append((w, phi))
    total = sum(w for w, _ in weighted)
    if total <= 0.0:
        return []
    return [(w / total, phi) for w, phi in weighted]


def expected_info_gain(b: BeliefState, action, mode: AnalysisMode = AnalysisMode(),
                       h_now: Optional[float] = None, diagnostic: bool = False) -> float:
    """Entropy of the belief minus the expected entropy after updating with
    the answer; attempting the task is defined to carry zero gain.

    With diagnostic=True the update is replaced by pure conditioning of the
    grounded weights, which provably cannot raise expected entropy; the
    default production path runs the answer through the grounding model.
    """
    if isinstance(action, AttemptAction):
        return 0.0
    if h_now is None:
        h_now = beliefmod.belief_entropy(b)
    answers = answer_distribution(b, action, mode)
    if not answers:
        log.info("degenerate question %r: no consistent candidate answer", action.surface)
        return 0.0
    posterior = (beliefmod.posterior_entropy_conditioning if diagnostic
                 else beliefmod.posterior_entropy)
    expected_h = sum(p * posterior(b, phi, h_now=h_now) for p, phi in answers)
    return h_now - expected_h


def expected_reward(b: BeliefState, action, cfg: CostConfig) -> float:
    if isinstance(action, AttemptAction):
        return 2.0 * beliefmod.map_confidence(b) - 1.0
    return -expected_question_cost(action, cfg, len(b.objects))


def features(b: BeliefState, action, cfg: CostConfig,
             mode: AnalysisMode = AnalysisMode(),
             h_now: Optional[float] = None) -> tuple:
    return (expected_info_gain(b, action, mode, h_now=h_now),
            expected_reward(b, action, cfg))


def q_value(b: BeliefState, action, params: PolicyParams, cfg: CostConfig,
            mode: AnalysisMode = AnalysisMode(), h_now: Optional[float] = None) -> float:
    h = features(b, action, cfg, mode, h_now=h_now)
    return params.theta[0] * h[0] + params.theta[1] * h[1]


def q_from_features(h: tuple, params: PolicyParams) -> float:
    return params.theta[0] * h[0] + params.theta[1] * h[1]


def select_action(b: BeliefState, actions: Sequence, params: PolicyParams,
                  epsilon: float, rng: np.random.Generator, cfg: CostConfig,
                  mode: AnalysisMode = AnalysisMode()):
    """Epsilon-greedy over the action set; ties go to the earliest action.

    Returns (action, info) where info carries the per-action features for
    transcripts.
    """
    if not actions:
        raise ValueError("action set is empty")
    h_now = beliefmod.belief_entropy(b)
    feats = [features(b, a, cfg, mode, h_now=h_now) for a in actions]
    qs = [q_from_features(h, params) for h in feats]
    if epsilon > 0.0 and rng.random() < epsilon:
        idx = int(rng.integers(len(actions)))
    else:
        idx = int(np.argmax(qs))
    info = {
        "q_values": qs,
        "features": feats,
        "chosen": idx,
    }
    return actions[idx], info


# ---------------------------------------------------------------------------
# policy kinds

SECURE = "secure"
SIMPLE = "simple"
CORRECT = "correct"
POLICY_KINDS = (SECURE, SIMPLE, CORRECT)


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    mode: AnalysisMode
    can_ask: bool
    params: PolicyParams = PolicyParams()


def make_policy(kind: str, params: PolicyParams = PolicyParams()) -> PolicySpec:
    """secure: full semantic analysis; simple: no negated consequences;
    correct: no questions at all, corrections still processed."""
    if kind == SECURE:
        return PolicySpec(kind, AnalysisMode(SECURE), True, params)
    if kind == SIMPLE:
        return PolicySpec(kind, AnalysisMode(SIMPLE), True, params)
    if kind == CORRECT:
        return PolicySpec(kind, AnalysisMode(SIMPLE), False, params)
    raise ValueError(f"unknown policy kind {kind!r}")


# ---------------------------------------------------------------------------
# episodic semi-gradient SARSA

class TaskEnv:
    """Protocol for trainable task environments.

    actions() -> tuple of admissible actions (empty means nothing to do);
    features(a) -> (info_gain, expected_reward) under the current belief;
    step(a) -> realized reward (attempt rewards are exactly +/-1).
    """

    def actions(self) -> tuple:
        raise NotImplementedError

    def features(self, action) -> tuple:
        raise NotImplementedError

    def step(self, action) -> float:
        raise NotImplementedError


def train_policy(env_stream: Iterable[TaskEnv], config: SarsaConfig,
                 params: PolicyParams, rng: np.random.Generator,
                 on_step: Optional[Callable[[int, float, tuple], None]] = None) -> PolicyParams:
    """Episodic semi-gradient SARSA over a stream of task environments.

    The value function is linear in theta, so the gradient is the feature
    vector itself.  A step is terminal when |reward| = 1 (attempt outcomes);
    question costs stay below one by validated configuration.
    """
    theta = np.asarray(params.theta, dtype=float)
    step_index = 0

    def greedy(env):
        acts = env.actions()
        if not acts:
            return None, None
        feats = [env.features(a) for a in acts]
        qs = [float(np.dot(theta, f)) for f in feats]
        i = int(np.argmax(qs))
        return acts[i], np.asarray(feats[i], dtype=float)

    def eps_greedy(env):
        acts = env.actions()
        if not acts:
            return None, None
        if rng.random() < config.epsilon:
            i = int(rng.integers(len(acts)))
            return acts[i], np.asarray(env.features(acts[i]), dtype=float)
        return greedy(env)

    for env in env_stream:
        action, h = greedy(env)
        while action is not None:
            reward = env.step(action)
            q_sa = float(np.dot(theta, h))
            terminal = abs(abs(reward) - 1.0) < 1e-12
            if terminal:
                delta = reward - q_sa
                theta = theta + config.alpha * delta * h
                next_action = None
            else:
                next_action, h_next = eps_greedy(env)
                q_next = float(np.dot(theta, h_next)) if next_action is not None else 0.0
                delta = reward + config.gamma * q_next - q_sa
                theta = theta + config.alpha * delta * h
                h = h_next
            step_index += 1
            if on_step is not None:
                on_step(step_index, reward, tuple(theta))
            if not np.all(np.isfinite(theta)) or float(np.linalg.norm(theta)) > config.theta_bound:
                raise RuntimeError(f"policy parameters diverged: theta={theta}")
            action = next_action
    return PolicyParams(tuple(float(v) for v in theta))
