#!/usr/bin/env python3
"""Optimize the two dialogue-policy weights with episodic semi-gradient SARSA
(alpha 0.1, gamma 0.99, epsilon 0.1, one task per environment)."""

import argparse
import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from itlearn.blocks import SceneSpec
from itlearn.harness import ExperimentConfig, train
from itlearn.policy import PolicyParams, SarsaConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--policy", default="secure", choices=("secure", "simple"))
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--seed", type=int, default=31)
    ap.add_argument("--out", default="out/train")
    args = ap.parse_args()

    cfg = ExperimentConfig(scene=SceneSpec(), params=PolicyParams((0.1, 1.0)))
    params, history = train(args.policy, args.episodes, cfg, SarsaConfig(),
                            seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"params_{args.policy}.json"), "w") as fh:
        json.dump({"theta": list(params.theta)}, fh)
    with open(os.path.join(args.out, f"training_{args.policy}.csv"), "w") as fh:
        fh.write("step,reward,theta1,theta2\n")
        for row in history:
            fh.write(f"{row['step']},{row['reward']},{row['theta1']},{row['theta2']}\n")
    print(f"theta = {tuple(round(v, 4) for v in params.theta)} "
          f"after {len(history)} steps")


if __name__ == "__main__":
    main()
