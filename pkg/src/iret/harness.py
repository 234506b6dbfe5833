"""Experiment harness: configuration, environment assembly, cross
validation, and report files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import agent_dqn
from .agent_dqn import TrainerConfig, train
from .baselines import RandomPolicy, oracle_search, train_handcrafted
from .corpus import CollectionModel, ingest, inject_noise
from .environment import (
    ACTION_NAMES,
    ActionId,
    Environment,
    QueryExpansionParams,
    RewardConfig,
)
from .features import FeatureConfig, FeatureExtractor
from .retrieval import SearchIndex
from .topics import fit_topics
from .user_sim import SimUser

POLICIES = ("dqn", "random", "handcrafted", "oracle", "first_pass")


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str = ""
    queries_path: str = ""
    qrels_path: str = ""
    noise_rate: float = 0.0
    noise_seed: int = 0
    lambda_d: float = 0.5
    beta: float = 0.3
    expansion: QueryExpansionParams = field(default_factory=QueryExpansionParams)
    topics_k: int = 10
    topics_em_iters: int = 50
    features: FeatureConfig = field(default_factory=FeatureConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    policy: str = "dqn"
    folds: int = 10
    seed: int = 0
    eval_repeats: int = 20
    random_repeats: int = 1000
    handcrafted_episodes_per_query: int = 10
    oracle_max_len: int = 5

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        kwargs: dict = {}
        if "expansion" in obj:
            kwargs["expansion"] = QueryExpansionParams(**obj.pop("expansion"))
        if "features" in obj:
            kwargs["features"] = FeatureConfig(**obj.pop("features"))
        if "reward" in obj:
            reward = dict(obj.pop("reward"))
            if "costs" in reward:
                reward["costs"] = {
                    ActionId[k.upper()] if isinstance(k, str) else ActionId(k): float(v)
                    for k, v in reward["costs"].items()
                }
            kwargs["reward"] = RewardConfig(**reward)
        if "trainer" in obj:
            kwargs["trainer"] = TrainerConfig(**obj.pop("trainer"))
        kwargs.update(obj)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class Workbench:
    """Everything shared by policies: corpus, index, topics, env, queries."""

    env: Environment
    queries: list  # (qid, tokens) pairs
    judgments: dict
    config: ExperimentConfig

    def make_user(self, seed: int = 0) -> SimUser:
        return SimUser(self.env.corpus, self.judgments, self.env.topics, seed=seed)


def build_workbench(cfg: ExperimentConfig) -> Workbench:
    corpus, queries, judgments = ingest(cfg.corpus_path, cfg.queries_path, cfg.qrels_path)
    if cfg.noise_rate > 0.0:
        corpus = inject_noise(corpus, cfg.noise_rate, cfg.noise_seed)
    collection = CollectionModel.from_corpus(corpus)
    index = SearchIndex(corpus, collection, cfg.lambda_d)
    topics = fit_topics(corpus, cfg.topics_k, cfg.topics_em_iters, seed=cfg.seed)
    features = replace(cfg.features, beta=cfg.beta)
    extractor = FeatureExtractor(index, features)
    env = Environment(
        index=index,
        topics=topics,
        judgments=judgments,
        extractor=extractor,
        reward=cfg.reward,
        expansion=cfg.expansion,
        beta=cfg.beta,
    )
    query_pairs = [(q.qid, q.tokens) for q in queries]
    return Workbench(env=env, queries=query_pairs, judgments=judgments, config=cfg)


def evaluate_generic(env, policy, user, queries, repeats: int, seed: int = 0):
    """Mean return and mean final AP for any feature -> action policy."""
    returns, aps = [], []
    for i, (qid, tokens) in enumerate(queries):
        for r in range(repeats):
            if hasattr(user, "reset"):
                user.reset(seed * 1_000 + i * 101 + r)
            trajectory, total = env.run_episode(policy, user, qid, tokens)
            returns.append(total)
            ap0 = env.ap(env.start(qid, tokens))
            if ap0 is None:
                aps.append(0.0)
            else:
                costs = sum(env.reward.costs[e.action] for e in trajectory)
                aps.append(ap0 + (total + costs) / env.reward.tau)
    return float(np.mean(returns)), float(np.mean(aps))


def partition_folds(queries, folds: int, seed: int) -> list[list]:
    """Deterministic disjoint cover of the query list."""
    if len(queries) < folds:
        raise ValueError(f"need at least {folds} queries, got {len(queries)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(queries))
    return [[queries[i] for i in order[f::folds]] for f in range(folds)]


def first_pass_map(env, queries) -> float:
    aps = []
    for qid, tokens in queries:
        ap = env.ap(env.start(qid, tokens))
        aps.append(ap if ap is not None else 0.0)
    return float(np.mean(aps))


def run_fold(bench: Workbench, policy_name: str, train_queries, heldout, fold_seed: int):
    """Train (if applicable) on train_queries, evaluate on heldout.

    Returns {"mean_return", "mean_map", optional "curve"}.
    """
    cfg = bench.config
    env = bench.env
    eval_user = bench.make_user(seed=fold_seed + 1)
    if policy_name == "first_pass":
        return {"mean_return": None, "mean_map": first_pass_map(env, heldout)}
    if policy_name == "random":
        policy = RandomPolicy(fold_seed)
        mean_return, mean_map = evaluate_generic(
            env, policy, eval_user, heldout, cfg.random_repeats, fold_seed
        )
        return {"mean_return": mean_return, "mean_map": mean_map}
    if policy_name == "handcrafted":
        user = bench.make_user(seed=fold_seed)
        policy = train_handcrafted(
            env,
            user,
            train_queries,
            episodes_per_query=cfg.handcrafted_episodes_per_query,
            seed=fold_seed,
            gamma=cfg.reward.gamma,
        )
        mean_return, mean_map = evaluate_generic(
            env, policy, eval_user, heldout, cfg.eval_repeats, fold_seed
        )
        return {"mean_return": mean_return, "mean_map": mean_map}
    if policy_name == "dqn":
        user = bench.make_user(seed=fold_seed)
        net, curve = train(env, user, train_queries, cfg.trainer, seed=fold_seed,
                           eval_user=eval_user, eval_queries=heldout)
        rng = np.random.default_rng(fold_seed)
        policy = lambda feats: agent_dqn.select_action(net, feats, 0.0, rng)
        mean_return, mean_map = evaluate_generic(
            env, policy, eval_user, heldout, cfg.eval_repeats, fold_seed
        )
        return {"mean_return": mean_return, "mean_map": mean_map, "curve": curve,
                "network": net}
    if policy_name == "oracle":
        user = bench.make_user(seed=fold_seed)
        returns, aps, reports = [], [], []
        for qid, tokens in heldout:
            result = oracle_search(env, user, qid, tokens, max_len=cfg.oracle_max_len)
            returns.append(result.best_return)
            ap0 = env.ap(env.start(qid, tokens))
            costs = sum(env.reward.costs[a] for a in result.best_sequence)
            aps.append((ap0 or 0.0) + (result.best_return + costs) / env.reward.tau)
            reports.append(
                {
                    "qid": qid,
                    "best_sequence": [ACTION_NAMES[a] for a in result.best_sequence],
                    "return": result.best_return,
                    "evaluated": result.evaluated,
                }
            )
        return {
            "mean_return": float(np.mean(returns)),
            "mean_map": float(np.mean(aps)),
            "oracle_reports": reports,
        }
    raise ValueError(f"unknown policy {policy_name!r}")


def crossval(bench: Workbench, policy_name: str | None = None) -> dict:
    """K-fold cross validation: train on K-1 folds, evaluate held-out fold."""
    cfg = bench.config
    policy_name = policy_name or cfg.policy
    folds = partition_folds(bench.queries, cfg.folds, cfg.seed)
    per_fold = []
    for f, heldout in enumerate(folds):
        train_queries = [q for g, fold in enumerate(folds) if g != f for q in fold]
        result = run_fold(bench, policy_name, train_queries, heldout, cfg.seed * 10_000 + f)
        result.pop("network", None)
        per_fold.append(result)
    returns = [r["mean_return"] for r in per_fold if r["mean_return"] is not None]
    maps = [r["mean_map"] for r in per_fold]
    return {
        "policy": policy_name,
        "folds": per_fold,
        "mean_return": float(np.mean(returns)) if returns else None,
        "mean_map": float(np.mean(maps)),
    }


def report(results: list[dict], out_dir) -> list[str]:
    """Write a results table plus any learning-curve CSVs.

    ``results`` rows are crossval() outputs (optionally carrying "curves").
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    table_path = out / "results.md"
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write("| Policy | MAP | Return |\n|---|---|---|\n")
        for row in results:
            ret = "-" if row["mean_return"] is None else f"{row['mean_return']:.2f}"
            fh.write(f"| {row['policy']} | {row['mean_map']:.4f} | {ret} |\n")
    written.append(str(table_path))
    for row in results:
        for f, fold in enumerate(row.get("folds", [])):
            curve = fold.get("curve")
            if not curve:
                continue
            curve_path = out / f"curve_{row['policy']}_fold{f}.csv"
            with open(curve_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(
                    fh, fieldnames=["epoch", "mean_return", "mean_map", "epsilon"]
                )
                writer.writeheader()
                writer.writerows(curve)
            written.append(str(curve_path))
        for f, fold in enumerate(row.get("folds", [])):
            reports = fold.get("oracle_reports")
            if not reports:
                continue
            path = out / f"oracle_fold{f}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                for rep in reports:
                    fh.write(json.dumps(rep) + "\n")
            written.append(str(path))
    return written
