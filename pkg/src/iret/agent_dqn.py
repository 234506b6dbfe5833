"""Deep-Q-Network agent: feed-forward Q-function, epsilon-greedy selection,
uniform experience replay, frozen target network, squared-TD-error SGD."""

from __future__ import annotations

import copy
import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .environment import ActionId, Environment, Experience

N_ACTIONS = len(ActionId)


class DivergenceError(Exception):
    """Non-finite loss encountered during training."""


class QNetwork:
    """Fully connected net: affine -> relu chain -> affine, one output per action."""

    def __init__(self, layer_dims, seed: int = 0):
        if layer_dims[-1] != N_ACTIONS:
            raise ValueError(f"output dimension must be {N_ACTIONS}")
        self.layer_dims = list(layer_dims)
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values; accepts a single feature vector or a batch."""
        single = x.ndim == 1
        out = self._forward_cached(np.atleast_2d(x))[0][-1]
        return out[0] if single else out

    def _forward_cached(self, x: np.ndarray):
        """Batch forward keeping pre- and post-activation values for backprop."""
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected input dimension {self.input_dim}, got {x.shape[1]}")
        activations = [x]
        pre = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            activations.append(h)
        return activations, pre

    def backward(self, cache, d_out: np.ndarray):
        """Gradients of sum(d_out * output) w.r.t. weights and biases."""
        activations, pre = cache
        grad_w = [None] * len(self.weights)
        grad_b = [None] * len(self.biases)
        delta = d_out
        for i in reversed(range(len(self.weights))):
            grad_w[i] = delta.T @ activations[i]
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i]) * (pre[i - 1] > 0.0)
        return grad_w, grad_b

    def copy(self) -> "QNetwork":
        return copy.deepcopy(self)

    def to_json(self, config: dict | None = None, train_steps: int = 0) -> str:
        return json.dumps(
            {
                "layer_dims": self.layer_dims,
                "activation": "relu",
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "config": config or {},
                "train_steps": train_steps,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QNetwork":
        obj = json.loads(text)
        net = cls(obj["layer_dims"])
        net.weights = [np.array(w) for w in obj["weights"]]
        net.biases = [np.array(b) for b in obj["biases"]]
        return net


def select_action(net: QNetwork, features: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> ActionId:
    """Epsilon-greedy over the network's Q-values; argmax ties -> lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return ActionId(int(rng.integers(N_ACTIONS)))
    return ActionId(int(np.argmax(net.forward(features))))


class ReplayBuffer:
    """Ring buffer of experiences with FIFO eviction."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def store(self, experience: Experience) -> None:
        self._items.append(experience)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Experience]:
        """Uniform draws with replacement."""
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(len(self._items), size=batch_size)
        return [self._items[int(i)] for i in idx]


def td_target(reward: float, next_features, target_net: QNetwork, gamma: float,
              terminal: bool) -> float:
    """Bootstrap target: r for terminal steps, else r + gamma * max_a' Q_target."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    if terminal:
        return float(reward)
    return float(reward + gamma * np.max(target_net.forward(np.asarray(next_features))))


def sync_target(net: QNetwork) -> QNetwork:
    """Deep copy of the online parameters into a frozen target network."""
    return net.copy()


def loss_and_grads(net: QNetwork, states: np.ndarray, actions, targets):
    """Mean squared TD error and its gradients, masked to the taken actions."""
    states = np.atleast_2d(states)
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    cache = net._forward_cached(states)
    q = cache[0][-1]
    batch = len(actions)
    taken = q[np.arange(batch), actions]
    diff = taken - targets
    loss = float(np.mean(diff**2))
    d_out = np.zeros_like(q)
    d_out[np.arange(batch), actions] = 2.0 * diff / batch
    grad_w, grad_b = net.backward(cache, d_out)
    return loss, grad_w, grad_b


def train_step(net: QNetwork, target_net: QNetwork, batch, gamma: float, lr: float,
               reward_scale: float = 1.0) -> float:
    """One SGD update on a replay batch; returns the pre-update loss.

    reward_scale multiplies rewards before the Bellman backup. The greedy
    policy is invariant to it; it only conditions the regression targets.
    """
    states = np.stack([e.features for e in batch])
    actions = [int(e.action) for e in batch]
    next_states = np.stack([np.asarray(e.next_features) for e in batch])
    q_next = target_net.forward(next_states).max(axis=1)
    nonterminal = np.array([not e.terminal for e in batch])
    rewards = np.array([e.reward for e in batch]) * reward_scale
    targets = rewards + gamma * q_next * nonterminal
    loss, grad_w, grad_b = loss_and_grads(net, states, actions, targets)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")
    for w, b, gw, gb in zip(net.weights, net.biases, grad_w, grad_b):
        w -= lr * gw
        b -= lr * gb
    return loss


@dataclass(frozen=True)
class TrainerConfig:
    gamma: float = 0.9
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_decay_steps: int = 50_000
    batch_size: int = 32
    sync_period: int = 1_000
    lr: float = 1e-4
    total_steps: int = 20_000
    updates_per_step: int = 1
    selection_episodes: int = 0  # >0: keep the epoch snapshot scoring best on training queries
    reward_scale: float = 1.0
    buffer_capacity: int = 10_000
    hidden_layers: int = 2  # 0, 2 or 4
    hidden_width: int = 128
    eval_repeats: int = 1

    def __post_init__(self):
        if self.hidden_layers not in (0, 2, 4):
            raise ValueError("hidden_layers must be 0, 2 or 4")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.updates_per_step < 1:
            raise ValueError("updates_per_step must be >= 1")

    def epsilon_at(self, step: int) -> float:
        if self.eps_decay_steps <= 0:
            return self.eps_end
        frac = min(step / self.eps_decay_steps, 1.0)
        return self.eps_start + frac * (self.eps_end - self.eps_start)

    def layer_dims(self, input_dim: int) -> list[int]:
        return [input_dim] + [self.hidden_width] * self.hidden_layers + [N_ACTIONS]


def train(env: Environment, user, queries, cfg: TrainerConfig, seed: int = 0,
          eval_user=None, eval_queries=None):
    """Interleave epsilon-greedy episode generation with replay updates.

    Returns the trained network and a learning curve with one row per epoch:
    {"epoch", "mean_return", "mean_map", "epsilon"}.
    """
    rng = np.random.default_rng(seed)
    net = QNetwork(cfg.layer_dims(env.extractor.dimension), seed=seed)
    target = sync_target(net)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    curve: list[dict] = []
    if cfg.total_steps <= 0:
        return net, curve
    eval_queries = eval_queries if eval_queries is not None else queries
    eval_user = eval_user or user
    step = 0
    train_steps = 0
    epoch = 0
    diverged = False
    queries = list(queries)
    sel_queries = []
    if cfg.selection_episodes > 0:
        sel_order = np.random.default_rng(seed + 9_999).permutation(len(queries))
        sel_queries = [queries[i] for i in sel_order[: cfg.selection_episodes]]
    best_net = None
    best_score = -np.inf
    while step < cfg.total_steps and not diverged:
        order = rng.permutation(len(queries))
        for qi in order:
            if step >= cfg.total_steps or diverged:
                break
            qid, tokens = queries[qi]
            if hasattr(user, "reset"):
                user.reset(int(rng.integers(2**31)))
            state = env.start(qid, tokens)
            features = env.extractor(state)
            while not state.terminal and step < cfg.total_steps:
                eps = cfg.epsilon_at(step)
                action = select_action(net, features, eps, rng)
                payload = env.propose(state, action)
                response = user.respond(action, payload, qid)
                result = env.transition(state, action, response)
                next_features = env.extractor(result.state)
                buffer.store(
                    Experience(features, result.action, result.reward, next_features,
                               result.terminal)
                )
                step += 1
                if len(buffer) >= cfg.batch_size:
                    for _ in range(cfg.updates_per_step):
                        batch = buffer.sample(cfg.batch_size, rng)
                        try:
                            train_step(net, target, batch, cfg.gamma, cfg.lr,
                                       cfg.reward_scale)
                        except DivergenceError:
                            # the guard fires before the update, so the current
                            # weights are finite; with early stopping enabled we
                            # halt and fall back to the best snapshot
                            if cfg.selection_episodes <= 0:
                                raise
                            diverged = True
                            break
                        train_steps += 1
                        if train_steps % cfg.sync_period == 0:
                            target = sync_target(net)
                if diverged:
                    break
                state = result.state
                features = next_features
        epoch += 1
        mean_return, mean_map = evaluate_policy(env, net, eval_user, eval_queries,
                                                cfg.eval_repeats, seed + epoch)
        row = {
            "epoch": epoch,
            "mean_return": mean_return,
            "mean_map": mean_map,
            "epsilon": cfg.epsilon_at(step),
        }
        if diverged:
            row["diverged"] = True
        curve.append(row)
        if sel_queries:
            # early-stopping score on training queries only, fixed user seeds
            sel_return, _ = evaluate_policy(env, net, user, sel_queries, 1, seed + 777)
            if sel_return > best_score:
                best_score = sel_return
                best_net = net.copy()
    if best_net is not None:
        return best_net, curve
    return net, curve


def evaluate_policy(env, net, user, queries, repeats: int = 1, seed: int = 0):
    """Greedy (epsilon=0) evaluation: mean return and mean final MAP."""
    rng = np.random.default_rng(seed)
    policy = lambda feats: select_action(net, feats, 0.0, rng)
    returns, aps = [], []
    for i, (qid, tokens) in enumerate(queries):
        for r in range(repeats):
            if hasattr(user, "reset"):
                user.reset(seed * 1_000 + i * 37 + r)
            trajectory, total = env.run_episode(policy, user, qid, tokens)
            returns.append(total)
            # final AP from the telescoped reward identity
            ap0 = env.ap(env.start(qid, tokens))
            if ap0 is None:
                aps.append(0.0)
            else:
                costs = sum(env.reward.costs[e.action] for e in trajectory)
                aps.append(ap0 + (total + costs) / env.reward.tau)
    return float(np.mean(returns)), float(np.mean(aps))
