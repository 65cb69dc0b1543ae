"""Seeded synthetic curation environment and the filtering ablation harness.

The environment draws 22-dim states shaped exactly like real curation states
but from a generator where the optimal action is an analytic function of the
(confidence, redundancy) entries:

    discard when confidence < 0.35 or redundancy > 0.9
    keep    when confidence > 0.70 and redundancy < 0.8
    review  otherwise

Rewards are the bounds of the real reward range (0.9 for the optimal action,
-0.1 otherwise), so the learned policy is directly checkable against the
analytic optimum without any labeled data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dqn import EMBEDDING_PROJECTION_DIM, DQNAgent, Transition
from .rewards import Route, CurationAction, route_confidence

REWARD_OPTIMAL = 0.9
REWARD_SUBOPTIMAL = -0.1

DISCARD_CONF = 0.35
DISCARD_RED = 0.9
KEEP_CONF = 0.70
KEEP_RED = 0.8


def optimal_action(confidence: float, redundancy: float) -> CurationAction:
    if confidence < DISCARD_CONF or redundancy > DISCARD_RED:
        return CurationAction.DISCARD
    if confidence > KEEP_CONF and redundancy < KEEP_RED:
        return CurationAction.KEEP
    return CurationAction.REVIEW


@dataclass(frozen=True)
class SyntheticSample:
    state: np.ndarray
    confidence: float
    redundancy: float

    @property
    def optimal(self) -> CurationAction:
        return optimal_action(self.confidence, self.redundancy)


class SyntheticCurationEnv:
    """Streams synthetic decision states; episodes are fixed-length runs."""

    def __init__(self, seed: int, episode_length: int = 10):
        self.rng = np.random.default_rng(seed)
        self.episode_length = episode_length

    def draw(self) -> SyntheticSample:
        rng = self.rng
        confidence = float(rng.uniform(0.0, 1.0))
        red = float(rng.uniform(0.0, 1.0))
        state = np.concatenate([
            rng.standard_normal(EMBEDDING_PROJECTION_DIM) * 0.3,
            rng.uniform(0.0, 1.0, size=3),      # brightness, contrast, edge density
            [confidence],
            [float(rng.uniform(0.0, 0.5))],     # class frequency fraction
            [red],
        ])
        return SyntheticSample(state=state, confidence=confidence, redundancy=red)

    def reward(self, sample: SyntheticSample, action: CurationAction) -> float:
        return REWARD_OPTIMAL if action == sample.optimal else REWARD_SUBOPTIMAL

    def episode(self) -> list[SyntheticSample]:
        return [self.draw() for _ in range(self.episode_length)]


def evaluate_policy(agent: DQNAgent, env: SyntheticCurationEnv, n: int = 200) -> float:
    """Fraction of greedy actions matching the analytic optimum."""
    hits = 0
    for _ in range(n):
        sample = env.draw()
        if agent.act(sample.state, explore=False) == sample.optimal:
            hits += 1
    return hits / n


def train_agent(agent: DQNAgent, env: SyntheticCurationEnv, episodes: int,
                eval_every: int = 50, target_rate: float | None = None,
                eval_samples: int = 200) -> tuple[int, float]:
    """Run up to `episodes` episodes; optionally stop early at target_rate.

    Returns (episodes run, optimal-action rate at the end). Evaluation draws
    from a separate seeded stream so it never perturbs the training one.
    """
    eval_env = SyntheticCurationEnv(seed=agent.config.seed + 7919,
                                    episode_length=env.episode_length)
    rate = 0.0
    for ep in range(1, episodes + 1):
        samples = env.episode()
        for i, sample in enumerate(samples):
            action = agent.act(sample.state, explore=True)
            reward = env.reward(sample, action)
            terminal = i == len(samples) - 1
            next_state = samples[i + 1].state if not terminal else sample.state
            agent.remember(Transition(
                state=sample.state, action=action, reward=reward,
                next_state=next_state, terminal=terminal,
            ))
            agent.maybe_train()
        if ep % eval_every == 0 or ep == episodes:
            rate = evaluate_policy(agent, eval_env, n=eval_samples)
            if target_rate is not None and rate >= target_rate:
                return ep, rate
    return episodes, rate


# --- ablation: learned filtering vs size-matched random filtering ---------

@dataclass(frozen=True)
class NoisyPoolSample:
    state: np.ndarray
    confidence: float
    redundancy: float
    is_noise: bool


def make_noisy_pool(seed: int, n: int = 200,
                    noise_fraction: float = 0.2) -> list[NoisyPoolSample]:
    """Synthetic pool where a fixed fraction is low-quality noise.

    Noise samples look like real junk: low-to-middling semantic confidence
    and high similarity to what is already kept. The confidence range
    deliberately overlaps the human-review band so threshold routing alone
    cannot remove all of it -- the learned policy has to contribute.
    """
    rng = np.random.default_rng(seed)
    env = SyntheticCurationEnv(seed=seed + 1)
    n_noise = int(round(n * noise_fraction))
    flags = np.zeros(n, dtype=bool)
    flags[rng.choice(n, size=n_noise, replace=False)] = True
    pool = []
    for is_noise in flags:
        base = env.draw()
        if is_noise:
            conf = float(rng.uniform(0.05, 0.55))
            red = float(rng.uniform(0.72, 0.99))
        else:
            conf = float(rng.uniform(0.42, 0.98))
            red = float(rng.uniform(0.02, 0.65))
        state = base.state.copy()
        state[EMBEDDING_PROJECTION_DIM + 3] = conf
        state[EMBEDDING_PROJECTION_DIM + 5] = red
        pool.append(NoisyPoolSample(state=state, confidence=conf,
                                    redundancy=red, is_noise=bool(is_noise)))
    return pool


def rl_semantic_removals(agent: DQNAgent, pool: list[NoisyPoolSample]) -> list[int]:
    """Indices removed by confidence routing plus agent discard decisions."""
    removed = []
    for i, sample in enumerate(pool):
        if route_confidence(sample.confidence) is Route.AUTO_REMOVE:
            removed.append(i)
        elif agent.act(sample.state, explore=False) == CurationAction.DISCARD:
            removed.append(i)
    return removed


def run_ablation(seed: int, agent: DQNAgent,
                 pool_size: int = 200) -> tuple[int, int, int]:
    """One seed of the noise-removal comparison.

    Returns (noise removed by the learned filter, noise removed by a random
    filter of the same size, filter size).
    """
    pool = make_noisy_pool(seed, n=pool_size)
    removed = rl_semantic_removals(agent, pool)
    m = len(removed)
    rl_noise = sum(1 for i in removed if pool[i].is_noise)
    rng = np.random.default_rng(seed + 31337)
    random_idx = rng.choice(len(pool), size=m, replace=False) if m else []
    random_noise = sum(1 for i in random_idx if pool[int(i)].is_noise)
    return rl_noise, random_noise, m
