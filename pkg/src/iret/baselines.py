"""Comparison suite: random policy, the two-stage hand-crafted-state
baseline (AP regression + fitted value iteration over Gaussian bases),
and the brute-force action-sequence oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .environment import ActionId, Environment, NON_TERMINAL_ACTIONS

N_ACTIONS = len(ActionId)


def random_policy(rng: np.random.Generator) -> ActionId:
    """Uniform draw over the five actions."""
    return ActionId(int(rng.integers(N_ACTIONS)))


class RandomPolicy:
    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def __call__(self, features) -> ActionId:
        return random_policy(self.rng)


@dataclass
class APRegressor:
    """Linear ridge regression from feature vectors to AP, clamped to [0, 1]."""

    weights: np.ndarray
    bias: float

    def predict(self, features: np.ndarray) -> float:
        return float(np.clip(features @ self.weights + self.bias, 0.0, 1.0))


def fit_ap_regressor(pairs, ridge: float = 1e-3) -> APRegressor:
    """Closed-form ridge least squares on (features, true AP) pairs.

    The bias column is not regularized.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least 2 training pairs")
    x = np.stack([np.asarray(f, dtype=float) for f, _ in pairs])
    y = np.array([t for _, t in pairs], dtype=float)
    n, d = x.shape
    xb = np.hstack([x, np.ones((n, 1))])
    # augmented least squares; lstsq also covers the singular ridge=0 case
    penalty = np.sqrt(ridge) * np.eye(d + 1)
    penalty[d, d] = 0.0
    a = np.vstack([xb, penalty])
    b = np.concatenate([y, np.zeros(d + 1)])
    theta, *_ = np.linalg.lstsq(a, b, rcond=None)
    return APRegressor(weights=theta[:d], bias=float(theta[d]))


@dataclass
class GBasisQ:
    """Per-action Q over a scalar state in [0, 1], as a weighted sum of
    Gaussian basis functions with fixed centers and width."""

    centers: np.ndarray  # (J,)
    sigma: float
    weights: np.ndarray  # (n_actions, J)

    def basis(self, s: float) -> np.ndarray:
        return np.exp(-((s - self.centers) ** 2) / (2.0 * self.sigma**2))

    def q_values(self, s: float) -> np.ndarray:
        return self.weights @ self.basis(s)


def fvi_train(
    experiences,
    gamma: float = 0.9,
    centers=(0.25, 0.5, 0.75),
    sigma: float = 0.25,
    iterations: int = 50,
    ridge: float = 1e-6,
) -> GBasisQ:
    """Fitted value iteration on (s, a, r, s', terminal) with scalar states.

    Each round recomputes Bellman targets from the current Q and refits
    every action's basis weights by ridge least squares. Actions with no
    experiences keep zero weights.
    """
    experiences = list(experiences)
    if not experiences:
        raise ValueError("no experiences")
    centers = np.asarray(centers, dtype=float)
    j = len(centers)
    gq = GBasisQ(centers=centers, sigma=sigma, weights=np.zeros((N_ACTIONS, j)))
    by_action: dict[int, list[int]] = {a: [] for a in range(N_ACTIONS)}
    for i, (s, a, r, s_next, terminal) in enumerate(experiences):
        by_action[int(a)].append(i)
    phi = np.stack([gq.basis(float(s)) for s, *_ in experiences])
    phi_next = np.stack([gq.basis(float(sn)) for _, _, _, sn, _ in experiences])
    rewards = np.array([r for _, _, r, _, _ in experiences])
    terminals = np.array([bool(t) for *_, t in experiences])
    for _ in range(iterations):
        next_q = np.max(phi_next @ gq.weights.T, axis=1)
        targets = rewards + np.where(terminals, 0.0, gamma * next_q)
        new_w = np.zeros_like(gq.weights)
        for a, idx in by_action.items():
            if not idx:
                continue
            pa = phi[idx]
            ya = targets[idx]
            new_w[a] = np.linalg.solve(pa.T @ pa + ridge * np.eye(j), pa.T @ ya)
        gq = GBasisQ(centers=centers, sigma=sigma, weights=new_w)
    return gq


def handcrafted_policy(regressor: APRegressor, gq: GBasisQ, features) -> ActionId:
    """Two-stage action choice: estimate AP, then argmax of the basis Q."""
    s = regressor.predict(np.asarray(features, dtype=float))
    return ActionId(int(np.argmax(gq.q_values(s))))


class HandcraftedPolicy:
    def __init__(self, regressor: APRegressor, gq: GBasisQ):
        self.regressor = regressor
        self.gq = gq

    def __call__(self, features) -> ActionId:
        return handcrafted_policy(self.regressor, self.gq, features)


def collect_random_experiences(env: Environment, user, queries, episodes_per_query: int,
                               seed: int = 0):
    """Random-policy rollouts; returns (trajectories, (features, AP) pairs).

    The AP pairs label each visited state with its true AP for fitting the
    state estimator.
    """
    rng = np.random.default_rng(seed)
    trajectories = []
    ap_pairs = []
    policy = RandomPolicy(seed + 1)
    for qid, tokens in queries:
        for ep in range(episodes_per_query):
            if hasattr(user, "reset"):
                user.reset(int(rng.integers(2**31)))
            state = env.start(qid, tokens)
            features = env.extractor(state)
            trajectory = []
            while not state.terminal:
                ap = env.ap(state)
                if ap is not None:
                    ap_pairs.append((features, ap))
                action = policy(features)
                payload = env.propose(state, action)
                response = user.respond(action, payload, qid)
                result = env.transition(state, action, response)
                next_features = env.extractor(result.state)
                trajectory.append((features, int(result.action), result.reward, next_features,
                                   result.terminal))
                state = result.state
                features = next_features
            final_ap = env.ap(state)
            if final_ap is not None:
                ap_pairs.append((features, final_ap))
            trajectories.append(trajectory)
    return trajectories, ap_pairs


def train_handcrafted(env: Environment, user, queries, episodes_per_query: int = 10,
                      seed: int = 0, gamma: float = 0.9, ridge: float = 1e-3,
                      fvi_iterations: int = 50) -> HandcraftedPolicy:
    """Full two-stage baseline pipeline from random exploration rollouts."""
    trajectories, ap_pairs = collect_random_experiences(
        env, user, queries, episodes_per_query, seed
    )
    regressor = fit_ap_regressor(ap_pairs, ridge=ridge)
    scalar_experiences = [
        (regressor.predict(f), a, r, regressor.predict(fn), t)
        for trajectory in trajectories
        for f, a, r, fn, t in trajectory
    ]
    gq = fvi_train(scalar_experiences, gamma=gamma, iterations=fvi_iterations)
    return HandcraftedPolicy(regressor, gq)


@dataclass
class OracleResult:
    best_sequence: list[ActionId]
    best_return: float
    evaluated: int


def enumerate_sequences(max_len: int):
    """All action sequences: 0..max_len-1 non-terminal actions, then ShowList."""
    for k in range(max_len):
        for prefix in itertools.product(NON_TERMINAL_ACTIONS, repeat=k):
            yield list(prefix) + [ActionId.SHOW_LIST]


def run_sequence(env: Environment, user, qid: str, tokens, sequence) -> float:
    """Episode return for a fixed action sequence (user reseeded first).

    Skips feature extraction entirely: a fixed sequence never looks at the
    state, and the extractor dominates per-step cost during oracle search.
    """
    if hasattr(user, "reset"):
        user.reset()
    state = env.start(qid, tokens)
    total = 0.0
    for action in sequence:
        if state.terminal:
            break
        if state.turn + 1 >= env.reward.t_max:
            action = ActionId.SHOW_LIST
        payload = env.propose(state, action)
        response = user.respond(action, payload, qid)
        result = env.transition(state, action, response)
        total += result.reward
        state = result.state
    return total


def oracle_search(env: Environment, user, qid: str, tokens, max_len: int = 4) -> OracleResult:
    """Brute-force the best fixed action sequence under a deterministic user."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    best_seq: list[ActionId] | None = None
    best = -np.inf
    count = 0
    for seq in enumerate_sequences(max_len):
        total = run_sequence(env, user, qid, tokens, seq)
        count += 1
        if total > best:
            best = total
            best_seq = seq
    return OracleResult(best_sequence=best_seq or [], best_return=float(best), evaluated=count)
