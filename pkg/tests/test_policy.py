import math
from dataclasses import replace

import numpy as np
import pytest

from itlearn.belief import add_neologism, initial_belief, update_belief
from itlearn.discourse import AnalysisMode, QuestionAction
from itlearn.grammar import parse_refexp
from itlearn.grounding import GroundingConfig
from itlearn.logic import atom
from itlearn.policy import (
    ACT, CostConfig, PolicyParams, SarsaConfig, TaskEnv,
    answer_distribution, candidate_designations, expected_info_gain,
    expected_question_cost, expected_reward, make_policy,
    q_from_features, q_value, question_cost, select_action, train_policy,
    validate_costs,
)

SECURE = AnalysisMode("secure")
SIMPLE = AnalysisMode("simple")


def q(text):
    return QuestionAction(parse_refexp(text), f"show me {text}")


def belief_with(symbols, n_objects=3, seed=0):
    rng = np.random.default_rng(seed)
    objects = [f"o{i + 1}" for i in range(n_objects)]
    embeddings = {o: tuple(rng.normal(size=4)) for o in objects}
    b = initial_belief(objects, embeddings, relation_atoms={},
                       grounding=GroundingConfig(dim=4))
    for s in symbols:
        b = add_neologism(b, s)
    return b


def test_question_cost_worked_example():
    cfg = CostConfig(0.1, 0.1)
    assert question_cost(q("the one red cube"), cfg, 7) == pytest.approx(0.3)


def test_question_cost_existential():
    cfg = CostConfig(0.1, 0.1)
    assert question_cost(q("a cube"), cfg, 7) == pytest.approx(0.2)


def test_question_cost_real_world_config():
    cfg = CostConfig(c_point=0.2, c_ref=0.6)
    assert question_cost(q("the two granny smiths"), cfg, 5) == pytest.approx(1.0)


def test_question_cost_universal_needs_designation():
    cfg = CostConfig(0.1, 0.1)
    with pytest.raises(ValueError):
        question_cost(q("every cube"), cfg, 7)
    assert question_cost(q("every cube"), cfg, 7, designation_size=4) == pytest.approx(0.5)


def test_expected_cost_universal_uses_average():
    cfg = CostConfig(0.1, 0.1)
    assert expected_question_cost(q("every cube"), cfg, 7) == pytest.approx(0.1 * 3 + 0.1)


def test_expected_cost_matches_exact_for_declared_cardinalities():
    cfg = CostConfig(0.1, 0.1)
    for text in ("a cube", "the two red cubes", "exactly two cubes"):
        assert expected_question_cost(q(text), cfg, 7) == question_cost(q(text), cfg, 7)


def test_candidate_designations_cardinalities():
    objects = ["o1", "o2", "o3", "o4"]
    assert len(candidate_designations(parse_refexp("the two cubes"), objects)) == 6
    assert len(candidate_designations(parse_refexp("a cube"), objects)) == 4
    assert len(candidate_designations(parse_refexp("every cube"), objects)) == 15


def test_info_gain_zero_when_certain():
    # a certain belief admits a single consistent answer and cannot gain
    b = belief_with(["cube"])
    certain = {a: (1.0 if a[1][0] == "o1" else 0.0) for a in b.grounded_weights}
    b = replace(b, grounded_weights=certain)
    for text in ("a cube", "the one cube", "every cube"):
        assert len(answer_distribution(b, q(text), SECURE)) == 1
        assert expected_info_gain(b, q(text), SECURE,
                                  diagnostic=True) == pytest.approx(0.0, abs=1e-9)


def test_info_gain_fully_resolving_question_is_ln2_under_conditioning():
    b = belief_with(["cube"], n_objects=1)
    gain = expected_info_gain(b, q("a cube"), SECURE, diagnostic=True)
    assert gain == pytest.approx(math.log(2), abs=1e-9)


def test_info_gain_act_is_zero():
    b = belief_with(["cube"])
    assert expected_info_gain(b, ACT, SECURE) == 0.0


def test_uniform_candidates_for_the_two_over_four():
    b = belief_with(["grannysmith"], n_objects=4)
    answers = answer_distribution(b, q("the two granny smiths"), SECURE)
    assert len(answers) == 6
    for p, _ in answers:
        assert p == pytest.approx(1 / 6)


def test_simple_mode_equalizes_definite_and_existential():
    b = belief_with(["cube"], n_objects=3)
    g_def = expected_info_gain(b, q("the one cube"), SIMPLE)
    g_exi = expected_info_gain(b, q("a cube"), SIMPLE)
    assert g_def == pytest.approx(g_exi, abs=1e-12)


def test_secure_mode_separates_definite_from_existential():
    b = belief_with(["cube"], n_objects=3)
    g_def = expected_info_gain(b, q("the one cube"), SECURE, diagnostic=True)
    g_exi = expected_info_gain(b, q("a cube"), SECURE, diagnostic=True)
    assert g_def > g_exi + 1e-6


def test_diagnostic_gain_never_negative():
    b = belief_with(["cube", "red"], n_objects=3, seed=3)
    b = update_belief(b, atom("cube", "o1"))
    for text in ("a red cube", "every cube", "the one red cube"):
        assert expected_info_gain(b, q(text), SECURE, diagnostic=True) >= -1e-9


def test_expected_reward_endpoints():
    b = belief_with(["cube"], n_objects=2)
    certain = {a: 1.0 for a in b.grounded_weights}
    assert expected_reward(replace(b, grounded_weights=certain), ACT,
                           CostConfig()) == pytest.approx(1.0)
    half = {a: 0.5 for a in b.grounded_weights}
    got = expected_reward(replace(b, grounded_weights=half), ACT, CostConfig())
    assert got == pytest.approx(2 * 0.25 - 1)  # MAP mass (1/2)^2 over two atoms


def test_expected_reward_question_is_negative_cost():
    b = belief_with(["cube"], n_objects=3)
    got = expected_reward(b, q("a cube"), CostConfig(0.1, 0.1))
    assert got == pytest.approx(-0.2)


def test_q_value_linear_in_theta():
    b = belief_with(["cube"], n_objects=2)
    action = q("a cube")
    cfg = CostConfig()
    t1 = PolicyParams((1.0, 0.0))
    t2 = PolicyParams((0.0, 1.0))
    t12 = PolicyParams((1.0, 1.0))
    assert q_value(b, action, t12, cfg) == pytest.approx(
        q_value(b, action, t1, cfg) + q_value(b, action, t2, cfg))


def test_q_value_feature_dot_product():
    h = (0.3, -0.2)
    assert q_from_features(h, PolicyParams((1.0, 1.0))) == pytest.approx(0.1)


def test_select_action_greedy_and_reproducible():
    b = belief_with(["cube"], n_objects=2)
    actions = (q("a cube"), ACT)
    a1, info1 = select_action(b, actions, PolicyParams((1.0, 1.0)), 0.0,
                              np.random.default_rng(0), CostConfig())
    a2, _ = select_action(b, actions, PolicyParams((1.0, 1.0)), 0.0,
                          np.random.default_rng(0), CostConfig())
    assert a1 == a2
    assert info1["chosen"] == int(np.argmax(info1["q_values"]))


def test_select_action_epsilon_frequency():
    b = belief_with(["cube"], n_objects=2)
    actions = (q("a cube"), ACT)
    rng = np.random.default_rng(42)
    greedy_idx = None
    picks = []
    for _ in range(10_000):
        a, info = select_action(b, actions, PolicyParams((1.0, 1.0)), 0.1, rng,
                                CostConfig())
        if greedy_idx is None:
            greedy_idx = int(np.argmax(info["q_values"]))
        picks.append(info["chosen"] == greedy_idx)
    rate = np.mean(picks)
    assert abs(rate - 0.95) < 0.02  # 0.9 + 0.1/2 with two actions


def test_make_policy_kinds():
    assert make_policy("correct").can_ask is False
    assert make_policy("simple").mode == SIMPLE
    assert make_policy("secure").mode == SECURE
    with pytest.raises(ValueError):
        make_policy("sneaky")


def test_sarsa_defaults_match_hyperparameter_table():
    cfg = SarsaConfig()
    assert (cfg.alpha, cfg.gamma, cfg.epsilon, cfg.m) == (0.1, 0.99, 0.1, 1)


def test_validate_costs():
    validate_costs(CostConfig(0.1, 0.1), scene_size=7)
    with pytest.raises(ValueError):
        validate_costs(CostConfig(0.2, 0.6), scene_size=7)


class _SingleStepEnv(TaskEnv):
    """One terminal attempt with fixed features, for update arithmetic."""

    def __init__(self):
        self.done = False

    def actions(self):
        return () if self.done else (ACT,)

    def features(self, action):
        return (0.2, 0.6)

    def step(self, action):
        self.done = True
        return 1.0


def test_sarsa_terminal_update_arithmetic():
    # q = theta . h = 0.1*0.2 + 0.8*0.6 = 0.5; delta = 1 - 0.5 = 0.5
    # theta += alpha * delta * h = 0.1 * 0.5 * (0.2, 0.6) = (0.01, 0.03)
    params = train_policy([_SingleStepEnv()], SarsaConfig(alpha=0.1),
                          PolicyParams((0.1, 0.8)), np.random.default_rng(0))
    assert params.theta[0] == pytest.approx(0.1 + 0.01)
    assert params.theta[1] == pytest.approx(0.8 + 0.03)


class _QuestionThenActEnv(TaskEnv):
    """One sub-unit question reward, then a terminal attempt."""

    def __init__(self):
        self.asked = False
        self.done = False
        self.rewards = []

    def actions(self):
        if self.done:
            return ()
        return (ACT,) if self.asked else (q("a cube"), ACT)

    def features(self, action):
        return (0.5, -0.2) if isinstance(action, QuestionAction) else (0.0, 0.4)

    def step(self, action):
        if isinstance(action, QuestionAction):
            self.asked = True
            self.rewards.append(-0.2)
            return -0.2
        self.done = True
        self.rewards.append(1.0)
        return 1.0


def test_sarsa_bootstrap_branch_for_question_rewards():
    env = _QuestionThenActEnv()
    params = train_policy([env], SarsaConfig(), PolicyParams((1.0, 0.1)),
                          np.random.default_rng(1))
    assert env.rewards == [-0.2, 1.0]  # question first (greedy), then terminal act
    assert all(math.isfinite(v) for v in params.theta)


def test_sarsa_divergence_guard():
    class Diverging(TaskEnv):
        def actions(self):
            return (ACT,)

        def features(self, action):
            return (1e6, 1e6)

        def step(self, action):
            return -0.2

    with pytest.raises(RuntimeError, match="diverged"):
        train_policy([Diverging()], SarsaConfig(), PolicyParams((1.0, 1.0)),
                     np.random.default_rng(0))
