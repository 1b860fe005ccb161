#!/usr/bin/env python3
"""Desk-scale policy comparison: 30 episodes x 3 runs over shared scene and
task sequences, learning curves and a paired sign test."""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from itlearn.blocks import SceneSpec
from itlearn.harness import ExperimentConfig, run_experiment, write_curves_csv, write_transcripts_jsonl
from itlearn.policy import PolicyParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--episodes", type=int, default=30)
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--prior-mode", default="default",
                    choices=("default", "optimistic", "pessimistic"))
    ap.add_argument("--out", default="out/comparison")
    args = ap.parse_args()

    cfg = ExperimentConfig(episodes=args.episodes, runs=args.runs,
                           base_seed=args.seed, scene=SceneSpec(),
                           prior_mode=args.prior_mode,
                           params=PolicyParams((0.1, 1.0)), workers=args.workers)
    result = run_experiment(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_curves_csv(result["rows"], os.path.join(args.out, "curves.csv"))
    write_transcripts_jsonl(result["transcripts"],
                            os.path.join(args.out, "transcripts.jsonl"))
    for kind, stat in result["summary"]["policies"].items():
        cr, crh = stat["cum_reward"]
        cc, cch = stat["cum_cost"]
        f1, f1h = stat["mean_f1"]
        print(f"{kind:8s} cR {cr:8.2f} ± {crh:5.2f} | cC {cc:8.2f} ± {cch:5.2f} "
              f"| mF1 {f1:.3f} ± {f1h:.3f}")
    p = result["summary"].get("sign_test_secure_gt_correct_p")
    if p is not None:
        print(f"sign test secure > correct: p = {p:.3g}")


if __name__ == "__main__":
    main()
