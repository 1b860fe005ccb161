"""Command-line interface: parse / train / eval / compare / serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .blocks import SceneSpec
from .grammar import ParseError, parse_instruction, parse_refexp
from .grounding import GroundingConfig
from .harness import (
    ExperimentConfig, run_experiment, train, write_curves_csv,
    write_transcripts_jsonl,
)
from .logic import format_refform
from .policy import CostConfig, PolicyParams, SarsaConfig


def _load_config(args) -> ExperimentConfig:
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    overrides = {
        "episodes": args.episodes, "runs": getattr(args, "runs", None),
        "base_seed": args.seed, "prior_mode": getattr(args, "prior_mode", None),
        "workers": getattr(args, "workers", None),
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if getattr(args, "policies", None):
        base["policies"] = tuple(args.policies.split(","))
    costs = CostConfig(base.pop("c_point", 0.1), base.pop("c_ref", 0.1))
    scene = SceneSpec(**base.pop("scene", {}))
    grounding = GroundingConfig(**base.pop("grounding", {}))
    params = PolicyParams(tuple(base.pop("theta", (0.1, 1.0))))
    if getattr(args, "params", None):
        with open(args.params) as fh:
            params = PolicyParams(tuple(json.load(fh)["theta"]))
    known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
    base = {k: v for k, v in base.items() if k in known}
    return ExperimentConfig(costs=costs, scene=scene, grounding=grounding,
                            params=params, **base)


def cmd_parse(args) -> int:
    lines = [args.text] if args.text else [ln.strip() for ln in sys.stdin if ln.strip()]
    status = 0
    for line in lines:
        try:
            lowered = line.lower()
            if lowered.startswith(("move ", "put ")):
                t = parse_instruction(line)
                print(f"{format_refform(t.direct)} {t.relation} {format_refform(t.indirect)}")
            else:
                text = line
                if lowered.startswith("show me "):
                    text = line[len("show me "):]
                print(format_refform(parse_refexp(text)))
        except ParseError as err:
            print(f"parse error: {err}", file=sys.stderr)
            status = 1
    return status


def cmd_train(args) -> int:
    cfg = _load_config(args)
    sarsa = SarsaConfig(alpha=args.alpha, gamma=args.gamma, epsilon=args.epsilon,
                        m=args.m)
    params, history = train(args.policy, args.episodes or 100, cfg, sarsa,
                            seed=args.seed or 1234)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"params_{args.policy}.json"), "w") as fh:
        json.dump({"theta": list(params.theta)}, fh)
    with open(os.path.join(args.out, f"training_{args.policy}.csv"), "w") as fh:
        fh.write("step,reward,theta1,theta2\n")
        for row in history:
            fh.write(f"{row['step']},{row['reward']},{row['theta1']},{row['theta2']}\n")
    print(f"trained theta = {tuple(round(v, 4) for v in params.theta)} "
          f"over {len(history)} steps -> {args.out}")
    return 0


def _run_and_save(cfg: ExperimentConfig, out_dir: str) -> dict:
    result = run_experiment(cfg)
    os.makedirs(out_dir, exist_ok=True)
    write_curves_csv(result["rows"], os.path.join(out_dir, "curves.csv"))
    write_transcripts_jsonl(result["transcripts"],
                            os.path.join(out_dir, "transcripts.jsonl"))
    summary = result["summary"]
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "belief_snapshots.json"), "w") as fh:
        json.dump(result["snapshots"], fh, indent=2, sort_keys=True)
    return result


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    result = _run_and_save(cfg, args.out)
    for kind, stat in result["summary"]["policies"].items():
        cr, cr_half = stat["cum_reward"]
        f1, f1_half = stat["mean_f1"]
        print(f"{kind:8s} cR = {cr:7.2f} ± {cr_half:.2f}   mF1 = {f1:.3f} ± {f1_half:.3f}")
    return 0


def cmd_compare(args) -> int:
    status = cmd_eval(args)
    with open(os.path.join(args.out, "summary.json")) as fh:
        summary = json.load(fh)
    p = summary.get("sign_test_secure_gt_correct_p")
    if p is not None:
        print(f"sign test secure > correct over episodes: p = {p:.3g}")
    return status


def cmd_serve(args) -> int:
    from .session import serve
    cfg = _load_config(args)
    serve(args.seed or 0, args.policy, cfg, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ITLEARN_LOGLEVEL", "WARNING"))
    parser = argparse.ArgumentParser(
        prog="itlearn",
        description="Interactive task learning in a kinematic blocksworld")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="expressions to logical forms, one per line")
    p.add_argument("--text", help="parse a single expression instead of stdin")
    p.set_defaults(func=cmd_parse)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--episodes", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--params", help="JSON file with trained theta")

    p = sub.add_parser("train", parents=[common], help="optimize dialogue-policy weights")
    p.add_argument("--policy", default="secure", choices=("secure", "simple"))
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--out", default="out/train")
    p.set_defaults(func=cmd_train)

    for name, fn in (("eval", cmd_eval), ("compare", cmd_compare)):
        p = sub.add_parser(name, parents=[common],
                           help="run the experiment protocol"
                           if name == "eval" else "multi-policy comparison")
        p.add_argument("--runs", type=int)
        p.add_argument("--policies", help="comma-separated policy kinds")
        p.add_argument("--prior-mode", dest="prior_mode",
                       choices=("default", "optimistic", "pessimistic"))
        p.add_argument("--workers", type=int)
        p.add_argument("--out", default=f"out/{name}")
        p.set_defaults(func=fn)

    p = sub.add_parser("serve", parents=[common], help="interactive teaching session")
    p.add_argument("--policy", default="secure",
                   choices=("secure", "simple", "correct"))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
