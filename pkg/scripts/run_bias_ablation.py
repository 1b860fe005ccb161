#!/usr/bin/env python3
"""Biased-prior ablation: run the comparison under optimistic (0.7) and
pessimistic (0.3) texture priors and report final-episode intervals."""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from itlearn.blocks import SceneSpec
from itlearn.harness import ExperimentConfig, mean_ci, run_experiment
from itlearn.policy import PolicyParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--episodes", type=int, default=15)
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--seed", type=int, default=21)
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()

    for mode in ("optimistic", "pessimistic"):
        cfg = ExperimentConfig(episodes=args.episodes, runs=args.runs,
                               base_seed=args.seed, scene=SceneSpec(),
                               prior_mode=mode, params=PolicyParams((0.1, 1.0)),
                               workers=args.workers)
        result = run_experiment(cfg)
        print(f"--- {mode} texture priors ---")
        for kind in cfg.policies:
            finals = [r["mean_f1"] for r in result["rows"]
                      if r["policy"] == kind and r["episode"] == cfg.episodes - 1]
            mean, half = mean_ci(finals)
            print(f"  {kind:8s} final mF1 {mean:.3f} ± {half:.3f}")


if __name__ == "__main__":
    main()
