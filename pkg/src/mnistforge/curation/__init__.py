"""Sample-selection engine: rewards, routing, clustering, DQN, modes."""

from .clustering import cluster_embeddings
from .dqn import (
    AgentConfig,
    DQNAgent,
    ReplayBuffer,
    Transition,
    state_vector,
)
from .probe import train_probe
from .rewards import (
    CurationAction,
    RewardWeights,
    Route,
    class_entropy,
    compute_reward,
    redundancy,
    route_confidence,
)
from .session import (
    ConflictError,
    CurationSession,
    HumanDecision,
    QueueEntry,
    SessionError,
    UnknownTargetError,
    load_decision_log,
)

__all__ = [
    "AgentConfig",
    "ConflictError",
    "CurationAction",
    "CurationSession",
    "DQNAgent",
    "HumanDecision",
    "QueueEntry",
    "ReplayBuffer",
    "RewardWeights",
    "Route",
    "SessionError",
    "Transition",
    "UnknownTargetError",
    "class_entropy",
    "cluster_embeddings",
    "compute_reward",
    "load_decision_log",
    "redundancy",
    "route_confidence",
    "state_vector",
    "train_probe",
]
