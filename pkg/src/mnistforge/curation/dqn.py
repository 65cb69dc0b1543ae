"""Deep Q-network for keep/discard/review decisions.

The network is a plain MLP (22 -> 256 -> 128 -> 64 -> 3, ReLU) with an
explicit forward/backward pass in float64 numpy and a hand-rolled Adam
update. No ML runtime: the analytic gradients are checked against central
finite differences in the test suite, which an opaque framework would not
allow at this granularity.

Training follows standard DQN: uniform sampling from a FIFO replay buffer,
squared TD error against a target network that is copied every
target_sync steps, epsilon-greedy exploration with exponential decay.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .rewards import CurationAction

STATE_DIM = 22
NUM_ACTIONS = 3
EMBEDDING_PROJECTION_DIM = 16
# fixed seed: the embedding->state projection must be identical across runs
# and processes, independently of the run seed
_PROJECTION_SEED = 0x5EED


def embedding_projection(dim: int = 512) -> np.ndarray:
    """The fixed random projection mapping embeddings into the state vector."""
    rng = np.random.default_rng(_PROJECTION_SEED)
    return rng.standard_normal((dim, EMBEDDING_PROJECTION_DIM)) / np.sqrt(
        EMBEDDING_PROJECTION_DIM
    )


_PROJECTION = embedding_projection()


def state_vector(embedding: np.ndarray, brightness: float, contrast: float,
                 edge_density: float, confidence: float, class_fraction: float,
                 redundancy: float) -> np.ndarray:
    """22-dim RL state: projected embedding + visual triple + decision context."""
    proj = np.asarray(embedding, dtype=np.float64) @ _PROJECTION
    vec = np.concatenate([
        proj,
        [brightness, contrast, edge_density, confidence, class_fraction, redundancy],
    ])
    if not np.all(np.isfinite(vec)):
        raise ValueError("state vector contains non-finite entries")
    return vec


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: CurationAction
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass
class AgentConfig:
    hidden: tuple[int, int, int] = (256, 128, 64)
    learning_rate: float = 0.001
    epsilon: float = 0.1
    epsilon_decay: float = 0.995
    epsilon_floor: float = 0.01
    replay_capacity: int = 10_000
    batch_size: int = 32
    target_sync: int = 100
    gamma: float = 0.95  # 0 gives the bandit mode for near-independent decisions
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0,1]")
        for name in ("learning_rate", "replay_capacity", "batch_size", "target_sync"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class ReplayBuffer:
    """Bounded FIFO store; eviction order is strictly arrival order."""

    def __init__(self, capacity: int, reward_bounds: tuple[float, float] | None = None):
        self._items: deque[Transition] = deque(maxlen=capacity)
        self.capacity = capacity
        self.reward_bounds = reward_bounds

    def push(self, t: Transition) -> None:
        if self.reward_bounds is not None:
            lo, hi = self.reward_bounds
            if not (lo - 1e-9 <= t.reward <= hi + 1e-9):
                raise ValueError(f"reward {t.reward} outside [{lo}, {hi}]")
        self._items.append(t)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if len(self._items) < batch_size:
            raise ValueError(
                f"replay buffer holds {len(self._items)} transitions, need {batch_size}"
            )
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in idx]

    def __len__(self):
        return len(self._items)


class MLP:
    """Fully connected ReLU network in float64 with He-style seeded init."""

    def __init__(self, sizes: list[int], seed: int):
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            self.biases.append(np.zeros(fan_out))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy_from(self, other: "MLP") -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, pre-activations per layer) for backprop."""
        pre_acts = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre_acts.append(z)
            a = z if i == last else np.maximum(z, 0.0)
        return a, pre_acts

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, x: np.ndarray, pre_acts: list[np.ndarray],
                 grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter, given dL/d(output)."""
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        delta = grad_out
        activations = [x]
        for z in pre_acts[:-1]:
            activations.append(np.maximum(z, 0.0))
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = activations[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre_acts[i - 1] > 0.0)
        return grads


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class DQNAgent:
    """Epsilon-greedy DQN over the three curation actions."""

    def __init__(self, config: AgentConfig = AgentConfig(),
                 state_dim: int = STATE_DIM,
                 reward_bounds: tuple[float, float] | None = None):
        self.config = config
        sizes = [state_dim, *config.hidden, NUM_ACTIONS]
        self.online = MLP(sizes, seed=config.seed)
        self.target = MLP(sizes, seed=config.seed)
        self.target.copy_from(self.online)
        self.optimizer = Adam(self.online.parameters(), lr=config.learning_rate)
        self.replay = ReplayBuffer(config.replay_capacity, reward_bounds=reward_bounds)
        self.epsilon = config.epsilon
        self.train_steps = 0
        self.rng = np.random.default_rng(config.seed)

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return self.online.predict(np.asarray(state, dtype=np.float64)[None, :])[0]

    def act(self, state: np.ndarray, explore: bool = True) -> CurationAction:
        """Greedy argmax-Q action; exploration draws uniformly with prob epsilon.

        Q ties resolve in Keep < Discard < Review order (first max wins).
        """
        if explore and self.rng.random() < self.epsilon:
            return CurationAction(int(self.rng.integers(NUM_ACTIONS)))
        q = self.q_values(state)
        return CurationAction(int(np.argmax(q)))

    def remember(self, t: Transition) -> None:
        self.replay.push(t)

    def _batch_arrays(self, batch: list[Transition]):
        states = np.stack([t.state for t in batch])
        actions = np.asarray([int(t.action) for t in batch])
        rewards = np.asarray([t.reward for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        terminal = np.asarray([t.terminal for t in batch], dtype=bool)
        return states, actions, rewards, next_states, terminal

    def td_targets(self, rewards, next_states, terminal) -> np.ndarray:
        next_q = self.target.predict(next_states).max(axis=1)
        return rewards + np.where(terminal, 0.0, self.config.gamma * next_q)

    def loss_and_grads(self, batch: list[Transition]):
        """Mean squared TD error and its analytic parameter gradients.

        Pure with respect to network state -- used directly by the
        finite-difference gradient check.
        """
        states, actions, rewards, next_states, terminal = self._batch_arrays(batch)
        targets = self.td_targets(rewards, next_states, terminal)
        out, pre_acts = self.online.forward(states)
        q_sa = out[np.arange(len(batch)), actions]
        err = q_sa - targets
        loss = float(np.mean(err ** 2))
        grad_out = np.zeros_like(out)
        grad_out[np.arange(len(batch)), actions] = 2.0 * err / len(batch)
        grads = self.online.backward(states, pre_acts, grad_out)
        return loss, grads

    def train_step(self, batch: list[Transition] | None = None) -> float:
        """One gradient step on a sampled (or given) batch; returns the loss."""
        if batch is None:
            batch = self.replay.sample(self.config.batch_size, self.rng)
        loss, grads = self.loss_and_grads(batch)
        self.optimizer.step(grads)
        self.train_steps += 1
        if self.train_steps % self.config.target_sync == 0:
            self.target.copy_from(self.online)
        self.epsilon = max(
            self.config.epsilon_floor, self.epsilon * self.config.epsilon_decay
        )
        return loss

    def maybe_train(self) -> float | None:
        """Train once if the buffer can fill a batch."""
        if len(self.replay) >= self.config.batch_size:
            return self.train_step()
        return None
