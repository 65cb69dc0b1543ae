"""Curation session: pool analysis, processing modes, decisions, RL feedback.

A session owns the full decision state for one run: the analyzed pool, the
pending-review queue, the kept set (labels, embeddings, class counts), the
DQN agent with its replay buffer, and the append-only decision log. The
three processing modes differ only in how decisions are produced:

* individual -- every image becomes a queue entry for a human.
* smart      -- confidence routing; the agent can veto auto-keeps whose
  discard Q-value clearly dominates; the middle band is queued; ineligible
  and low-confidence images are removed outright.
* fast       -- embeddings are clustered and one queue entry per cluster
  collects a single human decision for all members.

Every resolved keep/discard produces a reward (post-action class
distribution for keeps, unchanged for discards) and a replay transition.
Review queue events carry no reward until the human decision arrives, at
which point a human-sourced transition is pushed retroactively.

The decision log is JSONL and replayable: feeding a crashed run's log back
into a fresh session over the same pool reproduces the resolved/unresolved
partition exactly.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import util
from ..features import PromptSet, extract_features
from ..hierarchy import CategoryHierarchy, flatten_labels
from ..scoring import CategorizationResult, ScoringWeights, categorize_bundle
from ..transforms import AnnotatedImage, Pipeline, pipeline_from_config
from .clustering import cluster_embeddings
from .dqn import AgentConfig, DQNAgent, Transition, state_vector
from .probe import DEFAULT_RETRAIN_EVERY, NEUTRAL_ACCURACY, train_probe
from .rewards import (
    AUTO_THRESHOLD,
    REMOVE_THRESHOLD,
    CurationAction,
    RewardWeights,
    Route,
    class_entropy,
    redundancy,
    route_confidence,
)

log = logging.getLogger(__name__)

DEFAULT_CLUSTER_THRESHOLD = 0.92
DEFAULT_VETO_MARGIN = 0.2


class SessionError(RuntimeError):
    pass


class ConflictError(SessionError):
    """Decision target already resolved."""


class UnknownTargetError(SessionError):
    pass


@dataclass(eq=False)
class PoolItem:
    record: object  # acquisition.ImageRecord or compatible
    bundle: object  # features.FeatureBundle
    categorization: CategorizationResult
    transformed: AnnotatedImage


@dataclass(eq=False)
class QueueEntry:
    target_id: str            # image id, or "cluster:<n>" in fast mode
    member_ids: list[str]
    mode: str
    cluster_id: int | None = None


@dataclass(frozen=True)
class HumanDecision:
    target_id: str
    verdict: str              # accept | override | discard
    main_name: str | None = None
    sub_name: str | None = None
    note: str | None = None


class CurationSession:
    def __init__(self, hierarchy: CategoryHierarchy, provider,
                 pipeline_cfg: list[dict],
                 scoring_weights: ScoringWeights = ScoringWeights(),
                 reward_weights: RewardWeights = RewardWeights(),
                 agent_config: AgentConfig | None = None,
                 auto_threshold: float = AUTO_THRESHOLD,
                 remove_threshold: float = REMOVE_THRESHOLD,
                 cluster_threshold: float = DEFAULT_CLUSTER_THRESHOLD,
                 veto_margin: float = DEFAULT_VETO_MARGIN,
                 probe_every: int = DEFAULT_RETRAIN_EVERY,
                 log_path: str | Path | None = None,
                 train_online: bool = True):
        self.hierarchy = hierarchy
        self.provider = provider
        self.prompts = PromptSet.build(hierarchy, provider)
        self.scoring_weights = scoring_weights
        self.reward_weights = reward_weights
        self.auto_threshold = auto_threshold
        self.remove_threshold = remove_threshold
        self.cluster_threshold = cluster_threshold
        self.veto_margin = veto_margin
        self.probe_every = probe_every
        self.train_online = train_online
        self.agent = DQNAgent(
            agent_config or AgentConfig(),
            reward_bounds=reward_weights.bounds,
        )
        self.label_rows = flatten_labels(hierarchy)
        self._flat_index = {
            (mi, si): flat for flat, (mi, si, _, _) in enumerate(self.label_rows)
        }
        self._names_to_indices = {
            (main, sub): (mi, si) for mi, si, main, sub in self.label_rows
        }

        def _categorizer(image: AnnotatedImage) -> CategorizationResult:
            bundle = extract_features(image_record_view(image), hierarchy, provider,
                                      prompts=self.prompts)
            return categorize_bundle(bundle, hierarchy, scoring_weights, self.prompts)

        self.pipeline: Pipeline = pipeline_from_config(
            pipeline_cfg, categorizer=_categorizer
        )

        self.items: dict[str, PoolItem] = {}
        self.order: list[str] = []
        self.queue: list[QueueEntry] = []
        self.resolved: dict[str, str] = {}            # id -> keep | discard
        self.resolved_targets: set[str] = set()       # incl. cluster:<n> ids
        self._replaying = False
        self.kept_labels: dict[str, tuple[int, int]] = {}
        self.kept_embeddings: list[np.ndarray] = []
        self.class_counts = np.zeros(hierarchy.num_main, dtype=np.int64)
        self.route_tallies = {"auto": 0, "review": 0, "remove": 0}
        self.model_acc = NEUTRAL_ACCURACY
        self._keeps_since_probe = 0
        self._pending_transition: dict | None = None
        self.decision_log: list[dict] = []
        self.log_path = Path(log_path) if log_path else None
        self.lock = threading.RLock()

    # -- pool ---------------------------------------------------------------

    def analyze(self, records) -> None:
        """Extract features, categorize, and transform every pool record."""
        with self.lock:
            for record in records:
                if record.id in self.items:
                    continue
                bundle = extract_features(record, self.hierarchy, self.provider,
                                          prompts=self.prompts)
                cat = categorize_bundle(bundle, self.hierarchy,
                                        self.scoring_weights, self.prompts)
                transformed = self.pipeline.apply(AnnotatedImage.from_record(record))
                self.items[record.id] = PoolItem(
                    record=record, bundle=bundle, categorization=cat,
                    transformed=transformed,
                )
                self.order.append(record.id)

    # -- state / reward helpers ----------------------------------------------

    def _entropy_term(self, counts: np.ndarray) -> float:
        return class_entropy(counts) if counts.sum() >= 1 else 0.0

    def _reward(self, conf: float, counts: np.ndarray, red: float) -> float:
        w = self.reward_weights
        return (w.lambda1 * conf + w.lambda2 * self._entropy_term(counts)
                + w.lambda3 * self.model_acc - w.lambda4 * red)

    def state_for(self, item: PoolItem) -> np.ndarray:
        visual = item.bundle.visual
        total_kept = int(self.class_counts.sum())
        main = item.categorization.best_main
        fraction = (
            float(self.class_counts[main]) / total_kept if total_kept else 0.0
        )
        red = redundancy(item.bundle.embedding.values, self.kept_embeddings)
        return state_vector(
            item.bundle.embedding.values, visual.brightness, visual.contrast,
            visual.edge_density, item.categorization.confidence, fraction, red,
        )

    # -- decision plumbing -----------------------------------------------------

    def _append_log(self, entry: dict) -> None:
        if self._replaying:
            return  # replay rebuilds state; the log already holds these events
        self.decision_log.append(entry)
        if self.log_path is not None:
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry) + "\n")

    def _log_decision(self, image_id: str, action: str, source: str,
                      reward: float | None, **extra) -> None:
        entry = {
            "image_id": image_id,
            "action": action,
            "source": source,
            "reward": reward,
            "timestamp": util.utc_now_iso(),
        }
        entry.update(extra)
        self._append_log(entry)

    def _push_transition(self, state: np.ndarray, action: CurationAction,
                         reward: float) -> None:
        """Chain transitions in decision order: the previous one's next_state
        is this one's state; flush_transitions() terminates the episode."""
        if self._pending_transition is not None:
            prev = self._pending_transition
            self.agent.remember(Transition(
                state=prev["state"], action=prev["action"], reward=prev["reward"],
                next_state=state, terminal=False,
            ))
            if self.train_online:
                self.agent.maybe_train()
        self._pending_transition = {"state": state, "action": action, "reward": reward}

    def flush_transitions(self) -> None:
        if self._pending_transition is not None:
            prev = self._pending_transition
            self.agent.remember(Transition(
                state=prev["state"], action=prev["action"], reward=prev["reward"],
                next_state=prev["state"], terminal=True,
            ))
            self._pending_transition = None
            if self.train_online:
                self.agent.maybe_train()

    def _refresh_probe_if_due(self) -> None:
        if self._keeps_since_probe < self.probe_every:
            return
        self._keeps_since_probe = 0
        kept_ids = list(self.kept_labels)
        images = np.stack([self.items[i].transformed.pixels[:, :, 0] for i in kept_ids])
        labels = np.asarray([self.kept_labels[i][0] for i in kept_ids])
        self.model_acc = train_probe(images, labels)

    def _resolve_keep(self, image_id: str, source: str, state: np.ndarray | None,
                      main_idx: int | None = None, sub_idx: int | None = None,
                      conf: float | None = None, record_transition: bool = True) -> float:
        item = self.items[image_id]
        cat = item.categorization
        main = cat.best_main if main_idx is None else main_idx
        sub = cat.best_sub if sub_idx is None else sub_idx
        confidence = cat.confidence if conf is None else conf
        red = redundancy(item.bundle.embedding.values, self.kept_embeddings)
        self.class_counts[main] += 1
        self.kept_labels[image_id] = (main, sub)
        self.kept_embeddings.append(item.bundle.embedding.values)
        self.resolved[image_id] = "keep"
        self._keeps_since_probe += 1
        reward = self._reward(confidence, self.class_counts, red)
        self._refresh_probe_if_due()
        if record_transition and state is not None:
            self._push_transition(state, CurationAction.KEEP, reward)
        self._log_decision(image_id, "keep", source, reward,
                           label_main=main, label_sub=sub)
        return reward

    def _resolve_discard(self, image_id: str, source: str,
                         state: np.ndarray | None, conf: float | None = None,
                         record_transition: bool = True) -> float:
        item = self.items[image_id]
        confidence = item.categorization.confidence if conf is None else conf
        red = redundancy(item.bundle.embedding.values, self.kept_embeddings)
        self.resolved[image_id] = "discard"
        reward = self._reward(confidence, self.class_counts, red)
        if record_transition and state is not None:
            self._push_transition(state, CurationAction.DISCARD, reward)
        self._log_decision(image_id, "discard", source, reward)
        return reward

    def _queue(self, entry: QueueEntry, source: str) -> None:
        self.queue.append(entry)
        for member in entry.member_ids:
            self._log_decision(member, "review", source, None,
                               cluster_id=entry.cluster_id)

    # -- processing modes ------------------------------------------------------

    def run_mode(self, mode: str) -> None:
        with self.lock:
            if mode == "individual":
                self._run_individual()
            elif mode == "smart":
                self._run_smart()
            elif mode == "fast":
                self._run_fast()
            else:
                raise ValueError(f"unknown mode '{mode}'")

    def _unprocessed(self) -> list[str]:
        queued = {m for e in self.queue for m in e.member_ids}
        return [i for i in self.order if i not in self.resolved and i not in queued]

    def _run_individual(self) -> None:
        for image_id in self._unprocessed():
            self._queue(QueueEntry(target_id=image_id, member_ids=[image_id],
                                   mode="individual"), source="threshold")

    def _run_smart(self) -> None:
        for image_id in self._unprocessed():
            item = self.items[image_id]
            state = self.state_for(item)
            cat = item.categorization
            if not cat.eligible:
                self.route_tallies["remove"] += 1
                self._resolve_discard(image_id, "threshold", state)
                continue
            route = route_confidence(cat.confidence, self.auto_threshold,
                                     self.remove_threshold)
            if route is Route.AUTO_CATEGORIZE:
                self.route_tallies["auto"] += 1
                # only a policy that has actually trained may veto; an
                # untrained network's Q margins are initialization noise
                veto = False
                if self.agent.train_steps > 0:
                    q = self.agent.q_values(state)
                    veto = (q[CurationAction.DISCARD] - q[CurationAction.KEEP]
                            > self.veto_margin)
                if veto:
                    self._resolve_discard(image_id, "agent", state)
                else:
                    self._resolve_keep(image_id, "threshold", state)
            elif route is Route.HUMAN_REVIEW:
                self.route_tallies["review"] += 1
                self._queue(QueueEntry(target_id=image_id, member_ids=[image_id],
                                       mode="smart"), source="threshold")
            else:
                self.route_tallies["remove"] += 1
                self._resolve_discard(image_id, "threshold", state)
        self.flush_transitions()

    def _run_fast(self) -> None:
        pending = self._unprocessed()
        if not pending:
            return
        embeddings = [self.items[i].bundle.embedding.values for i in pending]
        clusters = cluster_embeddings(embeddings, self.cluster_threshold)
        for cluster_no, member_rows in enumerate(clusters):
            member_ids = [pending[r] for r in member_rows]
            self._queue(QueueEntry(
                target_id=f"cluster:{cluster_no}", member_ids=member_ids,
                mode="fast", cluster_id=cluster_no,
            ), source="threshold")

    # -- human decisions --------------------------------------------------------

    def next_batch(self, limit: int, mode: str | None = None) -> list[QueueEntry]:
        with self.lock:
            entries = [e for e in self.queue if mode is None or e.mode == mode]
            return entries[:max(0, limit)]

    def _find_entry(self, target_id: str) -> QueueEntry:
        for entry in self.queue:
            if entry.target_id == target_id:
                return entry
        if target_id in self.resolved or target_id in self.resolved_targets:
            raise ConflictError(f"'{target_id}' is already resolved")
        raise UnknownTargetError(f"no queued item '{target_id}'")

    def submit_decision(self, decision: HumanDecision) -> int:
        """Apply a human verdict to a queued image or cluster; returns the
        number of images it resolved."""
        with self.lock:
            entry = self._find_entry(decision.target_id)
            override: tuple[int, int] | None = None
            if decision.verdict == "override":
                if decision.main_name is None or decision.sub_name is None:
                    raise SessionError("override needs main and sub names")
                key = (decision.main_name, decision.sub_name)
                if key not in self._names_to_indices:
                    raise UnknownTargetError(
                        f"override path {key} not present in the hierarchy"
                    )
                override = self._names_to_indices[key]
            elif decision.verdict not in ("accept", "discard"):
                raise SessionError(f"unknown verdict '{decision.verdict}'")

            for image_id in entry.member_ids:
                item = self.items[image_id]
                state = self.state_for(item)
                if decision.verdict == "discard":
                    # human says wrong: confidence contribution drops to zero
                    reward = self._resolve_discard(image_id, "human", None, conf=0.0,
                                                   record_transition=False)
                    action = CurationAction.DISCARD
                else:
                    main_idx, sub_idx = override if override else (None, None)
                    reward = self._resolve_keep(
                        image_id, "human", None, main_idx=main_idx, sub_idx=sub_idx,
                        conf=1.0, record_transition=False,
                    )
                    action = CurationAction.KEEP
                self.agent.remember(Transition(
                    state=state, action=action, reward=reward,
                    next_state=state, terminal=True,
                ))
                if self.train_online:
                    self.agent.maybe_train()
            self.queue.remove(entry)
            self.resolved_targets.add(entry.target_id)
            return len(entry.member_ids)

    # -- snapshots / recovery -----------------------------------------------------

    def stats(self) -> dict:
        with self.lock:
            total_kept = int(self.class_counts.sum())
            per_class = {
                cat.name: int(self.class_counts[i])
                for i, cat in enumerate(self.hierarchy.categories)
            }
            entropy = class_entropy(self.class_counts) if total_kept else None
            return {
                "per_class_counts": per_class,
                "normalized_entropy": entropy,
                "queue_depth": len(self.queue),
                "tallies": dict(self.route_tallies),
                "epsilon": self.agent.epsilon,
                "probe_accuracy": self.model_acc,
                "kept": total_kept,
                "discarded": sum(
                    1 for v in self.resolved.values() if v == "discard"
                ),
            }

    def kept_items(self) -> list[tuple[str, int, int]]:
        """(image_id, main_index, sub_index) per kept image, decision order."""
        with self.lock:
            return [(i, *self.kept_labels[i]) for i in self.kept_labels]

    def flat_label(self, main_idx: int, sub_idx: int) -> int:
        return self._flat_index[(main_idx, sub_idx)]

    def replay_log(self, entries: list[dict]) -> None:
        """Rebuild resolution state from a previous run's decision log.

        Keep/discard entries resolve images (last entry wins); review entries
        are ignored here because run_mode() reconstructs the queue for items
        that remain unresolved.
        """
        with self.lock:
            self._replaying = True
            try:
                for entry in entries:
                    image_id = entry["image_id"]
                    if image_id not in self.items or image_id in self.resolved:
                        continue
                    action = entry["action"]
                    if action == "keep":
                        main = entry.get("label_main")
                        sub = entry.get("label_sub")
                        self._resolve_keep(
                            image_id, entry.get("source", "replay"), None,
                            main_idx=main, sub_idx=sub, record_transition=False,
                        )
                    elif action == "discard":
                        self._resolve_discard(image_id, entry.get("source", "replay"),
                                              None, record_transition=False)
            finally:
                self._replaying = False


def image_record_view(image: AnnotatedImage):
    """Adapter letting extract_features read an AnnotatedImage like a record."""

    class _View:
        pixels = image.pixels
        concept_hint = image.concept_hint
        id = image.source_id

    return _View()


def load_decision_log(path: str | Path) -> list[dict]:
    entries = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries
