"""Episode orchestration, metrics, and experiment protocol.

One episode: the teacher utters an instruction, the agent admits any new
symbols, updates its belief with the instruction's presupposed content, then
alternates between asking coherent questions and attempting the task until
it succeeds, exhausts its attempts, or runs out of admissible actions.  Each
correction ends the current attempt with reward -1, undoes the offending
action, and feeds the correction semantics back into the belief.

Experiments run several policies over byte-identical scene and task
sequences, carrying each policy's belief across episodes within a run and
resetting it across runs.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from . import belief as beliefmod
from . import policy as policymod
from .belief import BeliefState, add_neologism, begin_scene, initial_belief
from .blocks import (
    Complete, OracleTeacher, Pick, Place, PlanningError, REFERENCE_FAILURE,
    Scene, SceneSpec, TEXTURES, apply_action, generate_scene, generate_task,
    ground_truth, plan_execution, relation_atoms,
)
from .counting import InconsistencyError
from .discourse import (
    QuestionAction, correction_semantics, generate_questions,
    instruction_presuppositions, sentence_semantics,
)
from .grammar import TaskInstruction, content_symbols, parse_instruction
from .grounding import GroundingConfig
from .logic import format_formula, format_refform, parse_formula_text
from .policy import ACT, CostConfig, PolicyParams, PolicySpec, SarsaConfig, make_policy

log = logging.getLogger(__name__)

PRIOR_MODES = ("default", "optimistic", "pessimistic")


def prior_fn_for(mode: str):
    """Texture symbols get biased priors in the ablation modes; everything
    else keeps the default weight."""
    if mode == "default":
        return lambda sym, obj: 0.5
    if mode == "optimistic":
        return lambda sym, obj: 0.7 if sym in TEXTURES else 0.5
    if mode == "pessimistic":
        return lambda sym, obj: 0.3 if sym in TEXTURES else 0.5
    raise ValueError(f"unknown prior mode {mode!r}; expected one of {PRIOR_MODES}")


@dataclass
class EpisodeResult:
    events: list
    rewards: list
    success: bool
    task_f1: float
    belief: BeliefState
    scene: Scene
    instruction: TaskInstruction

    @property
    def reward_sum(self) -> float:
        return float(sum(self.rewards))

    @property
    def cost_sum(self) -> float:
        return float(sum(r for r in self.rewards if r < 0))


def instruction_symbols(t: TaskInstruction) -> list:
    seen = []
    for s in content_symbols(t.direct) + content_symbols(t.indirect):
        if s not in seen:
            seen.append(s)
    return seen


def task_micro_f1(b: BeliefState, t: TaskInstruction, scene: Scene) -> float:
    """Micro F1 of thresholded grounded weights against ground truth, pooled
    over the (symbol, object) decisions of the instruction's symbols."""
    model = ground_truth(scene)
    by_name = {s.name: s for s in model.vocabulary}
    tp = fp = fn = 0
    for p in instruction_symbols(t):
        sym = by_name.get(p)
        truth = {args[0] for args in model.interpretation.get(sym, ())} if sym else set()
        predicted = {o for o in b.objects if b.grounded_weights.get((p, (o,)), 0.0) >= 0.5}
        tp += len(predicted & truth)
        fp += len(predicted - truth)
        fn += len(truth - predicted)
    if tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


class EpisodeDriver:
    """Runs one episode against a teacher; the human-session server drives
    the same class with a blocking teacher, so both paths share the code."""

    def __init__(self, policy: PolicySpec, teacher, scene: Scene,
                 instruction, belief: BeliefState, costs: CostConfig,
                 rng: np.random.Generator, attempts_cap: int = 5,
                 epsilon: float = 0.0, prior_fn=None):
        self.policy = policy
        self.teacher = teacher
        self.scene = scene
        self.t = parse_instruction(instruction) if isinstance(instruction, str) else instruction
        self.costs = costs
        self.rng = rng
        self.attempts_cap = attempts_cap
        self.epsilon = epsilon
        self.prior_fn = prior_fn or (lambda sym, obj: 0.5)
        self.events: list = []
        self.rewards: list = []
        self.attempts = 0
        self.success = False
        self.finished = False
        self.belief = belief
        self.events.append({
            "event": "instruction",
            "text": self.t.raw,
            "direct": format_refform(self.t.direct),
            "relation": self.t.relation,
            "indirect": format_refform(self.t.indirect),
        })
        self._admit(instruction_symbols(self.t))
        for phi in instruction_presuppositions(self.t):
            self._assimilate(phi, "presup")
        self.task_f1 = task_micro_f1(self.belief, self.t, self.scene)
        self.questions = list(generate_questions(self.t)) if policy.can_ask else []
        self.asked: set = set()

    # -- shared machinery ------------------------------------------------

    def _admit(self, symbols: Sequence[str]) -> None:
        """Any user message can carry neologisms; admit them before use."""
        for sym in symbols:
            if sym not in self.belief.vocabulary:
                prior = self.prior_fn(sym, None)
                self.belief = add_neologism(self.belief, sym, prior)
                self.events.append({"event": "admit", "symbol": sym, "prior": prior})

    def _assimilate(self, phi, event_kind: str, **extra) -> None:
        new_belief, dropped = beliefmod.revise_with(self.belief, phi)
        self.belief = new_belief
        record = {"event": event_kind, "formula": format_formula(phi)}
        if dropped:
            record["dropped"] = [format_formula(d) for d in dropped]
        record.update(extra)
        self.events.append(record)

    def _refresh_relations(self) -> None:
        self.belief = replace(self.belief, relation_atoms=relation_atoms(self.scene))

    def remaining_questions(self) -> list:
        return [q for q in self.questions if q.refexp not in self.asked]

    def admissible_actions(self) -> tuple:
        actions = list(self.remaining_questions())
        try:
            self._plan = plan_execution(beliefmod.map_model(self.belief), self.t, self.scene)
            actions.append(ACT)
        except (PlanningError, InconsistencyError) as err:
            self._plan = None
            self.events.append({"event": "planning_failure", "reason": str(err)})
        return tuple(actions)

    def ask(self, question: QuestionAction) -> float:
        self.asked.add(question.refexp)
        answer = self.teacher.answer(question.refexp, self.scene, self.t)
        if answer is REFERENCE_FAILURE:
            reward = -policymod.question_cost(question, self.costs, len(self.scene.ids),
                                              designation_size=0)
            self.rewards.append(reward)
            self.events.append({"event": "question", "surface": question.surface,
                                "refexp": format_refform(question.refexp),
                                "answer": "reference_failure", "reward": reward})
            return reward
        designation = tuple(answer)
        reward = -policymod.question_cost(question, self.costs, len(self.scene.ids),
                                          designation_size=len(designation))
        self.rewards.append(reward)
        phi = sentence_semantics(question.refexp, [frozenset(designation)],
                                 list(self.scene.ids), self.policy.mode)
        self.events.append({"event": "question", "surface": question.surface,
                            "refexp": format_refform(question.refexp),
                            "answer": list(designation), "reward": reward})
        self._assimilate(phi, "answer_semantics")
        return reward

    def attempt_once(self) -> float:
        """Execute one plan under the current MAP model until a correction or
        a confirmed completion; returns the attempt's terminal reward."""
        self.attempts += 1
        self.events.append({"event": "attempt", "index": self.attempts})
        plan = self._plan if getattr(self, "_plan", None) is not None else \
            plan_execution(beliefmod.map_model(self.belief), self.t, self.scene)
        self._plan = None
        pair_start: Optional[Scene] = None
        for step in plan:
            if isinstance(step, Pick):
                pair_start = self.scene
            next_scene, _ = apply_action(self.scene, step)
            correction = self.teacher.feedback(step, next_scene, self.t)
            self.events.append(_execution_event(step))
            if correction is None:
                self.scene = next_scene
                self._refresh_relations()
                if isinstance(step, Complete):
                    self.rewards.append(1.0)
                    self.events.append({"event": "complete", "ok": True, "reward": 1.0})
                    self.success = True
                    self.finished = True
                    return 1.0
                continue
            # corrected: reward -1, undo the offending motion, update belief
            self.rewards.append(-1.0)
            self._admit(content_symbols(correction.refexp))
            phi = correction_semantics(step.kind, self.t, correction, list(self.scene.ids))
            self.events.append({
                "event": "correction", "text": correction.raw,
                "designated": correction.designated,
                "action": step.kind, "reward": -1.0,
            })
            if isinstance(step, (Pick, Place)) and pair_start is not None:
                self.scene = pair_start
            self._refresh_relations()
            self._assimilate(phi, "correction_semantics")
            if self.attempts >= self.attempts_cap:
                self.finished = True
            return -1.0
        raise RuntimeError("plan ended without a completion claim")

    # -- evaluation loop ---------------------------------------------------

    def run(self) -> EpisodeResult:
        while not self.finished:
            actions = self.admissible_actions()
            if not actions:
                self.events.append({"event": "no_admissible_action"})
                break
            if len(actions) == 1:
                action = actions[0]
            else:
                action, info = policymod.select_action(
                    self.belief, actions, self.policy.params, self.epsilon,
                    self.rng, self.costs, self.policy.mode)
                self.events.append({"event": "decision",
                                    "q_values": [round(v, 6) for v in info["q_values"]],
                                    "chosen": info["chosen"]})
            if isinstance(action, QuestionAction):
                self.ask(action)
            else:
                self.attempt_once()
        return EpisodeResult(self.events, self.rewards, self.success,
                             self.task_f1, self.belief, self.scene, self.t)


def _execution_event(step) -> dict:
    if isinstance(step, Pick):
        return {"event": "execute", "kind": "pick", "object": step.obj}
    if isinstance(step, Place):
        return {"event": "execute", "kind": "place", "object": step.obj,
                "pos": list(step.pos)}
    return {"event": "execute", "kind": "complete"}


# ---------------------------------------------------------------------------
# experiment protocol

@dataclass(frozen=True)
class ExperimentConfig:
    episodes: int = 30
    runs: int = 3
    attempts_cap: int = 5
    costs: CostConfig = CostConfig()
    prior_mode: str = "default"
    base_seed: int = 0
    policies: tuple = ("secure", "simple", "correct")
    params: PolicyParams = PolicyParams()
    scene: SceneSpec = SceneSpec()
    grounding: GroundingConfig = GroundingConfig()
    epsilon: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.attempts_cap < 1:
            raise ValueError("attempts cap must be at least 1")
        if self.prior_mode not in PRIOR_MODES:
            raise ValueError(f"prior mode must be one of {PRIOR_MODES}")


def _stable_id(kind: str) -> int:
    import zlib
    return zlib.crc32(kind.encode()) % (2 ** 31)


def scene_seed(cfg: ExperimentConfig, run: int, episode: int) -> int:
    return cfg.base_seed * 1_000_000 + run * 10_000 + episode


def _episode_setup(cfg: ExperimentConfig, run: int, episode: int):
    scene = generate_scene(scene_seed(cfg, run, episode), cfg.scene)
    task_rng = np.random.default_rng((cfg.base_seed, run, episode, 7))
    t = generate_task(scene, task_rng)
    return scene, t


def _transition_belief(belief: Optional[BeliefState], scene: Scene,
                       cfg: ExperimentConfig):
    prior_fn = prior_fn_for(cfg.prior_mode)
    if belief is None:
        return initial_belief(scene.ids, scene.embeddings(), relation_atoms(scene),
                              grounding=cfg.grounding)
    return begin_scene(belief, scene.ids, scene.embeddings(), relation_atoms(scene),
                       prior_fn=prior_fn)


def run_cell(cfg: ExperimentConfig, kind: str, run: int) -> dict:
    """All episodes of one (policy, run) cell; the belief persists across
    episodes and resets across runs."""
    policy = make_policy(kind, cfg.params)
    belief = None
    rows = []
    transcripts = []
    prior_fn = prior_fn_for(cfg.prior_mode)
    cum_r = cum_c = 0.0
    f1s = []
    for episode in range(cfg.episodes):
        scene, t = _episode_setup(cfg, run, episode)
        belief = _transition_belief(belief, scene, cfg)
        oracle = OracleTeacher(np.random.default_rng(
            (cfg.base_seed, run, episode, _stable_id(kind))))
        agent_rng = np.random.default_rng((cfg.base_seed, run, episode, 11))
        driver = EpisodeDriver(policy, oracle, scene, t, belief, cfg.costs,
                               agent_rng, attempts_cap=cfg.attempts_cap,
                               epsilon=cfg.epsilon, prior_fn=prior_fn)
        result = driver.run()
        belief = result.belief
        cum_r += result.reward_sum
        cum_c += result.cost_sum
        f1s.append(result.task_f1)
        rows.append({
            "policy": kind, "run": run, "episode": episode,
            "seed": scene_seed(cfg, run, episode), "task": t.raw,
            "reward": result.reward_sum, "cost": result.cost_sum,
            "solved": int(result.success), "f1": result.task_f1,
            "cum_reward": cum_r, "cum_cost": cum_c,
            "mean_f1": float(np.mean(f1s)),
        })
        transcripts.append({
            "policy": kind, "run": run, "episode": episode,
            "seed": scene_seed(cfg, run, episode), "task": t.raw,
            "rewards": result.rewards, "success": result.success,
            "events": result.events,
        })
    return {"kind": kind, "run": run, "rows": rows, "transcripts": transcripts,
            "final_snapshot": beliefmod.snapshot(belief)}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Per-policy learning curves over shared scene/task sequences."""
    cells = [(kind, run) for kind in cfg.policies for run in range(cfg.runs)]
    results = []
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(run_cell, cfg, kind, run) for kind, run in cells]
            results = [f.result() for f in futures]
    else:
        results = [run_cell(cfg, kind, run) for kind, run in cells]
    results.sort(key=lambda r: (cfg.policies.index(r["kind"]), r["run"]))
    rows = [row for r in results for row in r["rows"]]
    transcripts = [t for r in results for t in r["transcripts"]]
    snapshots = {f"{r['kind']}/run{r['run']}": r["final_snapshot"] for r in results}
    return {"config": cfg, "rows": rows, "transcripts": transcripts,
            "snapshots": snapshots, "summary": summarize(cfg, rows)}


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple:
    """Mean and half-width of the t-based confidence interval."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, float("inf")
    sem = float(arr.std(ddof=1) / np.sqrt(len(arr)))
    half = float(stats.t.ppf(0.5 + level / 2, len(arr) - 1) * sem)
    return mean, half


def sign_test_greater(xs: Sequence[float], ys: Sequence[float]) -> float:
    """One-sided exact sign test that paired xs exceed ys; ties drop."""
    wins = sum(1 for x, y in zip(xs, ys) if x > y)
    losses = sum(1 for x, y in zip(xs, ys) if x < y)
    n = wins + losses
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)


def summarize(cfg: ExperimentConfig, rows: Iterable[dict]) -> dict:
    rows = list(rows)
    summary: dict = {"policies": {}}
    for kind in cfg.policies:
        finals = [r for r in rows if r["policy"] == kind
                  and r["episode"] == cfg.episodes - 1]
        cr = [r["cum_reward"] for r in finals]
        cc = [r["cum_cost"] for r in finals]
        f1 = [r["mean_f1"] for r in finals]
        summary["policies"][kind] = {
            "cum_reward": mean_ci(cr), "cum_cost": mean_ci(cc), "mean_f1": mean_ci(f1),
            "per_run_final_f1": f1, "per_run_final_cum_reward": cr,
        }
    if "secure" in cfg.policies and "correct" in cfg.policies:
        key = lambda kind: {(r["run"], r["episode"]): r["reward"]
                            for r in rows if r["policy"] == kind}
        secure, correct = key("secure"), key("correct")
        paired = sorted(set(secure) & set(correct))
        summary["sign_test_secure_gt_correct_p"] = sign_test_greater(
            [secure[k] for k in paired], [correct[k] for k in paired])
    return summary


def write_curves_csv(rows: Iterable[dict], path: str) -> None:
    rows = list(rows)
    fields = ["policy", "run", "episode", "seed", "reward", "cost", "solved",
              "f1", "cum_reward", "cum_cost", "mean_f1", "task"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})


def write_transcripts_jsonl(transcripts: Iterable[dict], path: str) -> None:
    with open(path, "w") as fh:
        for t in transcripts:
            fh.write(json.dumps(t, sort_keys=True) + "\n")


def replay_transcript(cfg: ExperimentConfig, transcript: dict,
                      belief: Optional[BeliefState]) -> BeliefState:
    """Event-sourcing: rebuild the episode's final belief from its recorded
    events alone (scene regenerates from the seed)."""
    scene = generate_scene(transcript["seed"], cfg.scene)
    belief = _transition_belief(belief, scene, cfg)
    for event in transcript["events"]:
        if event["event"] == "admit":
            belief = add_neologism(belief, event["symbol"], event["prior"])
        elif event["event"] in ("presup", "answer_semantics", "correction_semantics"):
            belief, _ = beliefmod.revise_with(belief, parse_formula_text(event["formula"]))
    return belief


# ---------------------------------------------------------------------------
# training environments (episodic semantics: any attempt outcome is terminal)

class TrainEnv(policymod.TaskEnv):
    def __init__(self, policy: PolicySpec, scene: Scene, t: TaskInstruction,
                 belief: BeliefState, costs: CostConfig,
                 oracle: OracleTeacher, prior_fn):
        rng = np.random.default_rng(0)  # decisions come from the trainer
        self.driver = EpisodeDriver(policy, oracle, scene, t, belief, costs,
                                    rng, attempts_cap=1, prior_fn=prior_fn)
        self.policy = policy
        self.costs = costs

    @property
    def belief(self) -> BeliefState:
        return self.driver.belief

    def actions(self) -> tuple:
        if self.driver.finished:
            return ()
        return self.driver.admissible_actions()

    def features(self, action) -> tuple:
        return policymod.features(self.driver.belief, action, self.costs,
                                  self.policy.mode)

    def step(self, action) -> float:
        if isinstance(action, QuestionAction):
            return self.driver.ask(action)
        return self.driver.attempt_once()


def training_stream(kind: str, episodes: int, cfg: ExperimentConfig,
                    seed: int = 1234) -> Iterator[TrainEnv]:
    """Lifelong stream of single-attempt task environments for SARSA."""
    policymod.validate_costs(cfg.costs, scene_size=cfg.scene.n_objects[1])
    policy = make_policy(kind, cfg.params)
    prior_fn = prior_fn_for(cfg.prior_mode)
    belief = None
    for episode in range(episodes):
        scene = generate_scene(seed * 1_000_000 + episode, cfg.scene)
        task_rng = np.random.default_rng((seed, episode, 7))
        t = generate_task(scene, task_rng)
        belief = _transition_belief(belief, scene, cfg)
        env = TrainEnv(policy, scene, t, belief,
                       cfg.costs, OracleTeacher(np.random.default_rng((seed, episode, 3))),
                       prior_fn)
        yield env
        belief = env.belief


def train(kind: str, episodes: int, cfg: ExperimentConfig,
          sarsa: SarsaConfig = SarsaConfig(), seed: int = 1234):
    """Optimize the dialogue-policy weights; returns (params, history)."""
    history = []
    params = policymod.train_policy(
        training_stream(kind, episodes, cfg, seed), sarsa, cfg.params,
        np.random.default_rng(seed),
        on_step=lambda i, r, theta: history.append(
            {"step": i, "reward": r, "theta1": theta[0], "theta2": theta[1]}),
    )
    return params, history
