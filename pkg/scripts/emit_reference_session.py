#!/usr/bin/env python3
"""Emit a scripted-oracle reference for one teaching episode as JSON: the
instruction, the ordered teacher moves (answers, corrections, proceeds), and
the final belief snapshot plus rewards.  The browser-session parity test
replays these moves through the UI and must land on identical bytes."""

import argparse
import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from itlearn.belief import snapshot
from itlearn.blocks import (
    OracleTeacher, REFERENCE_FAILURE, SceneSpec, generate_scene, generate_task,
)
from itlearn.harness import EpisodeDriver, ExperimentConfig, _transition_belief
from itlearn.policy import PolicyParams, make_policy


class RecordingTeacher:
    """Oracle teacher that also logs each move in protocol form."""

    def __init__(self, oracle, moves):
        self.oracle = oracle
        self.moves = moves

    def answer(self, refexp, scene, t):
        got = self.oracle.answer(refexp, scene, t)
        if got is REFERENCE_FAILURE:
            self.moves.append({"type": "answer", "objects": [], "no_referent": True})
        else:
            self.moves.append({"type": "answer", "objects": list(got)})
        return got

    def feedback(self, action, scene, t):
        got = self.oracle.feedback(action, scene, t)
        if got is None:
            self.moves.append({"type": "proceed"})
        else:
            self.moves.append({"type": "correction", "text": got.raw,
                               "object": got.designated})
        return got


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=90)
    ap.add_argument("--policy", default="secure")
    args = ap.parse_args()

    cfg = ExperimentConfig(base_seed=args.seed, scene=SceneSpec(n_objects=(5, 5), dim=8),
                           params=PolicyParams((0.1, 1.0)))
    scene = generate_scene(args.seed, cfg.scene)
    t = generate_task(scene, np.random.default_rng(args.seed))
    moves: list = []
    teacher = RecordingTeacher(OracleTeacher(np.random.default_rng(args.seed + 1)), moves)
    belief = _transition_belief(None, scene, cfg)
    driver = EpisodeDriver(make_policy(args.policy, cfg.params), teacher, scene,
                           t.raw, belief, cfg.costs,
                           np.random.default_rng(cfg.base_seed),
                           attempts_cap=cfg.attempts_cap)
    result = driver.run()
    print(json.dumps({
        "seed": args.seed,
        "policy": args.policy,
        "instruction": t.raw,
        "moves": moves,
        "rewards": result.rewards,
        "cum_reward": sum(result.rewards),
        "success": result.success,
        "belief": snapshot(result.belief),
    }, sort_keys=True))


if __name__ == "__main__":
    main()
