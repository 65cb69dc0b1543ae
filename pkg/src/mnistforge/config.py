"""Run configuration: one JSON file, flag overrides, canonical hashing.

A run is fully described by a single config document; CLI flags override
individual keys. The SHA-256 of the canonical (sorted, resolved) form goes
into the export manifest so every dataset records exactly how it was made.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from . import util
from .curation.dqn import AgentConfig
from .curation.rewards import RewardWeights
from .scoring import ScoringWeights

DEFAULTS: dict = {
    "hierarchy": "hierarchy.json",
    "seed": 0,
    "out": "run",
    "provider": {"kind": "stub", "command": None, "address": None},
    "source": {
        "kind": "folder",          # folder | web
        "path": None,
        "keyword": "",
        "count": 100,
        "hint_from_name": False,
    },
    "pipeline": {
        "size": 28,
        "binarize": True,
        "stages": None,            # explicit stage list wins over size/binarize
    },
    "mode": "smart",
    "thresholds": {"auto": 0.85, "remove": 0.4},
    "scoring_weights": {"alpha": 0.5, "beta": 0.3, "gamma": 0.2},
    "reward_weights": {
        "lambda1": 0.4, "lambda2": 0.3, "lambda3": 0.2, "lambda4": 0.1,
    },
    "agent": {
        "hidden": [256, 128, 64],
        "learning_rate": 0.001,
        "epsilon": 0.1,
        "epsilon_decay": 0.995,
        "epsilon_floor": 0.01,
        "replay_capacity": 10000,
        "batch_size": 32,
        "target_sync": 100,
        "gamma": 0.95,
    },
    "cluster_threshold": 0.92,
    "veto_margin": 0.2,
    "probe_every": 50,
    "split": {"ratio": 0.8},
}


class ConfigError(ValueError):
    pass


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_run_config(path: str | Path | None = None,
                    overrides: dict | None = None) -> dict:
    """Resolve defaults <- config file <- flag overrides (flags win)."""
    resolved = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config top level must be an object")
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        resolved = _deep_merge(resolved, doc)
    if overrides:
        resolved = _deep_merge(resolved, {k: v for k, v in overrides.items()
                                          if v is not None})
    return resolved


def config_hash(cfg: dict) -> str:
    return util.sha256_hex(util.canonical_json(cfg))


def scoring_weights_from(cfg: dict) -> ScoringWeights:
    w = cfg["scoring_weights"]
    return ScoringWeights(alpha=w["alpha"], beta=w["beta"], gamma=w["gamma"])


def reward_weights_from(cfg: dict) -> RewardWeights:
    w = cfg["reward_weights"]
    return RewardWeights(lambda1=w["lambda1"], lambda2=w["lambda2"],
                         lambda3=w["lambda3"], lambda4=w["lambda4"])


def agent_config_from(cfg: dict) -> AgentConfig:
    a = cfg["agent"]
    return AgentConfig(
        hidden=tuple(a["hidden"]),
        learning_rate=a["learning_rate"],
        epsilon=a["epsilon"],
        epsilon_decay=a["epsilon_decay"],
        epsilon_floor=a["epsilon_floor"],
        replay_capacity=a["replay_capacity"],
        batch_size=a["batch_size"],
        target_sync=a["target_sync"],
        gamma=a["gamma"],
        seed=cfg["seed"],
    )


def pipeline_configs_from(cfg: dict, with_semantic_tag: bool = True) -> list[dict]:
    from .transforms import default_stage_configs

    p = cfg["pipeline"]
    if p.get("stages"):
        stages = copy.deepcopy(p["stages"])
    else:
        stages = default_stage_configs(size=p.get("size", 28),
                                       binarize=p.get("binarize", True))
    if not with_semantic_tag:
        stages = [s for s in stages if s.get("kind") != "semantic_tag"]
    return stages


def starter_run_config(hierarchy_path: str, out_dir: str = "run") -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    cfg["hierarchy"] = hierarchy_path
    cfg["out"] = out_dir
    return cfg
