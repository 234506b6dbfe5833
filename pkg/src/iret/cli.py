"""Command-line entry point: synth / train / eval / crossval / oracle /
report / replay / serve."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import agent_dqn, harness
from .agent_dqn import QNetwork, train
from .environment import ACTION_BY_NAME, ACTION_NAMES
from .harness import ExperimentConfig, Workbench, build_workbench, crossval, report
from .synth import SynthParams, make_synthetic


def _load_config(path: str):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    synth_params = SynthParams(**raw.pop("synth", {}))
    return ExperimentConfig.from_dict(raw), synth_params


def _bench(args) -> tuple[Workbench, ExperimentConfig]:
    cfg, _ = _load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "policy", None):
        cfg = replace(cfg, policy=args.policy)
    return build_workbench(cfg), cfg


def cmd_synth(args) -> int:
    if args.config:
        _, params = _load_config(args.config)
    else:
        params = SynthParams()
    paths = make_synthetic(args.out, params, seed=args.seed or 0)
    print(json.dumps(paths, indent=2))
    return 0


def cmd_train(args) -> int:
    bench, cfg = _bench(args)
    user = bench.make_user(seed=cfg.seed)
    eval_user = bench.make_user(seed=cfg.seed + 1)
    net, curve = train(bench.env, user, bench.queries, cfg.trainer, seed=cfg.seed,
                       eval_user=eval_user)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "dqn.json"
    model_path.write_text(net.to_json(train_steps=cfg.trainer.total_steps))
    curve_path = out / "curve.csv"
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,mean_return,mean_map,epsilon\n")
        for row in curve:
            fh.write(f"{row['epoch']},{row['mean_return']},{row['mean_map']},"
                     f"{row['epsilon']}\n")
    print(json.dumps({"model": str(model_path), "curve": str(curve_path)}))
    return 0


def cmd_eval(args) -> int:
    bench, cfg = _bench(args)
    user = bench.make_user(seed=cfg.seed + 1)
    if cfg.policy == "dqn":
        net = QNetwork.from_json(Path(args.model).read_text())
        rng = np.random.default_rng(cfg.seed)
        policy = lambda feats: agent_dqn.select_action(net, feats, 0.0, rng)
        mean_return, mean_map = harness.evaluate_generic(
            bench.env, policy, user, bench.queries, cfg.eval_repeats, cfg.seed
        )
    else:
        result = harness.run_fold(bench, cfg.policy, bench.queries, bench.queries, cfg.seed)
        mean_return, mean_map = result["mean_return"], result["mean_map"]
    print(json.dumps({"policy": cfg.policy, "mean_return": mean_return,
                      "mean_map": mean_map}))
    return 0


def cmd_crossval(args) -> int:
    bench, cfg = _bench(args)
    result = crossval(bench, cfg.policy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"results_{cfg.policy}.json"
    path.write_text(json.dumps(result, indent=2))
    print(json.dumps({"policy": cfg.policy, "mean_return": result["mean_return"],
                      "mean_map": result["mean_map"], "file": str(path)}))
    return 0


def cmd_oracle(args) -> int:
    bench, cfg = _bench(args)
    result = harness.run_fold(bench, "oracle", bench.queries, bench.queries, cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "oracle.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for rep in result["oracle_reports"]:
            fh.write(json.dumps(rep) + "\n")
    print(json.dumps({"mean_return": result["mean_return"],
                      "mean_map": result["mean_map"], "file": str(path)}))
    return 0


def cmd_report(args) -> int:
    results = []
    for path in sorted(Path(args.results).glob("results_*.json")):
        results.append(json.loads(path.read_text()))
    if not results:
        print("no results_*.json files found", file=sys.stderr)
        return 1
    written = report(results, args.out)
    print(json.dumps({"written": written}))
    return 0


def cmd_replay(args) -> int:
    """Run one episode with a fixed action sequence and scripted responses.

    Prints the per-step rewards; used to check the live service against the
    in-process environment.
    """
    bench, cfg = _bench(args)

    class ScriptedUser:
        def __init__(self, responses):
            self.responses = list(responses)
            self.i = 0

        DEFAULTS = {
            "documents": {"doc": None},
            "keyterm": {"answer": "no"},
            "request": {"term": None},
            "topics": {"topic": None},
        }

        def respond(self, action, payload, qid):
            if action.name == "SHOW_LIST":
                return {}
            if self.i < len(self.responses):
                response = dict(self.responses[self.i])
                self.i += 1
            else:
                response = dict(self.DEFAULTS.get(payload.get("type"), {}))
            if payload.get("type") == "keyterm":
                response["term"] = payload.get("term")
            return response

    actions = [ACTION_BY_NAME[name.strip()] for name in args.sequence.split(",")]
    responses = json.loads(Path(args.responses).read_text()) if args.responses else []
    it = iter(actions)
    user = ScriptedUser(responses)
    qid = args.qid
    tokens = dict(bench.queries)[qid]
    trajectory, total = bench.env.run_episode(lambda feats: next(it), user, qid, tokens)
    print(json.dumps({
        "qid": qid,
        "rewards": [e.reward for e in trajectory],
        "actions": [ACTION_NAMES[e.action] for e in trajectory],
        "return": total,
    }))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    bench, cfg = _bench(args)
    net = QNetwork.from_json(Path(args.model).read_text()) if args.model else None
    app = create_app(bench, dqn_net=net, seed=cfg.seed)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iret",
                                     description="interactive retrieval testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--policy", default=None, choices=harness.POLICIES)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the DQN on all queries")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a policy on all queries")
    common(p)
    p.add_argument("--model", default=None, help="DQN checkpoint (for --policy dqn)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="k-fold cross validation")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("oracle", help="brute-force oracle over all queries")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="aggregate crossval results into a table")
    p.add_argument("--results", required=True, help="directory of results_*.json")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="run a scripted episode and print rewards")
    common(p)
    p.add_argument("--qid", required=True)
    p.add_argument("--sequence", required=True,
                   help="comma-separated action names ending in show_list")
    p.add_argument("--responses", default=None, help="JSON file of per-step responses")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="start the HTTP session service")
    common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
