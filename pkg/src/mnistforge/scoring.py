"""Hierarchical semantic scoring and categorization.

Each (main, sub) pair receives a weighted blend of three similarities:

    total = alpha * text_sim + beta * char_sim + gamma * visual_sim

* text_sim  -- mean mapped cosine between the image embedding and the two
  template prompts ("A photo of {main}", "This is a {sub}").
* char_sim  -- mean mapped cosine over the subcategory's characteristic
  prompts.
* visual_sim -- 1 minus the mean absolute deviation between the image's
  (brightness, contrast, edge_density) triple and the subcategory's
  expected triple from the config; 0.5 (neutral) when no expectation is
  configured.

The winner is the argmax of totals; exact ties break toward the lowest
flattened label index. Images whose best text_sim falls below
PREFILTER_TEXT_SIM are flagged ineligible (the curation modes discard them
up front in batch processing).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureBundle, PromptSet, extract_features, mapped_cosine
from .hierarchy import CategoryHierarchy, MainCategory, Subcategory, build_prompts

PREFILTER_TEXT_SIM = 0.3

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.3
DEFAULT_GAMMA = 0.2


@dataclass(frozen=True)
class ScoringWeights:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")

    @classmethod
    def normalized(cls, alpha: float, beta: float, gamma: float) -> "ScoringWeights":
        s = alpha + beta + gamma
        if s <= 0:
            raise ValueError("at least one weight must be positive")
        return cls(alpha / s, beta / s, gamma / s)


@dataclass(frozen=True)
class ScoreRow:
    main_index: int
    sub_index: int
    main_name: str
    sub_name: str
    text_sim: float
    char_sim: float
    visual_sim: float
    total: float


@dataclass(frozen=True)
class CategorizationResult:
    best_main: int
    best_sub: int
    confidence: float
    breakdown: tuple[ScoreRow, ...]
    eligible: bool

    @property
    def best_row(self) -> ScoreRow:
        for row in self.breakdown:
            if row.main_index == self.best_main and row.sub_index == self.best_sub:
                return row
        raise LookupError("winning row missing from breakdown")

    def top_paths(self, k: int = 3) -> list[ScoreRow]:
        """Best-k rows by total; ties keep flattened-label order."""
        return sorted(self.breakdown, key=lambda r: -r.total)[:k]


def score_subcategory(f: FeatureBundle, s: Subcategory, parent: MainCategory,
                      w: ScoringWeights, prompts: PromptSet
                      ) -> tuple[float, float, float, float]:
    """(text_sim, char_sim, visual_sim, total) for one subcategory."""
    emb = f.embedding.values
    templates = [f"A photo of {parent.name}", f"This is a {s.name}"]
    text_sim = float(np.mean([mapped_cosine(emb, prompts.vector(p)) for p in templates]))
    char_sim = float(np.mean(
        [mapped_cosine(emb, prompts.vector(c.phrase)) for c in s.characteristics]
    ))
    if s.expected_attributes is None:
        visual_sim = 0.5
    else:
        actual = np.asarray(f.visual.as_tuple())
        expected = np.asarray(s.expected_attributes)
        visual_sim = float(1.0 - np.mean(np.abs(actual - expected)))
    total = w.alpha * text_sim + w.beta * char_sim + w.gamma * visual_sim
    return text_sim, char_sim, visual_sim, total


def categorize_bundle(f: FeatureBundle, h: CategoryHierarchy, w: ScoringWeights,
                      prompts: PromptSet) -> CategorizationResult:
    rows = []
    for mi, cat in enumerate(h.categories):
        for si, sub in enumerate(cat.subcategories):
            text_sim, char_sim, visual_sim, total = score_subcategory(
                f, sub, cat, w, prompts
            )
            rows.append(ScoreRow(
                main_index=mi, sub_index=si,
                main_name=cat.name, sub_name=sub.name,
                text_sim=text_sim, char_sim=char_sim,
                visual_sim=visual_sim, total=total,
            ))
    totals = np.asarray([r.total for r in rows])
    best = int(np.argmax(totals))  # argmax returns the first (lowest) index on ties
    winner = rows[best]
    max_text_sim = max(r.text_sim for r in rows)
    return CategorizationResult(
        best_main=winner.main_index,
        best_sub=winner.sub_index,
        confidence=float(totals[best]),
        breakdown=tuple(rows),
        eligible=max_text_sim >= PREFILTER_TEXT_SIM,
    )


def categorize(record, h: CategoryHierarchy, w: ScoringWeights, provider,
               prompts: PromptSet | None = None) -> CategorizationResult:
    """Extract features for one image and score it against the whole hierarchy."""
    if prompts is None:
        prompts = PromptSet.build(h, provider)
    bundle = extract_features(record, h, provider, prompts=prompts)
    return categorize_bundle(bundle, h, w, prompts)


def build_prompt_list(h: CategoryHierarchy) -> list[str]:
    """Convenience re-export used by callers that only need the texts."""
    out = []
    for cat in h.categories:
        for sub in cat.subcategories:
            out.extend(build_prompts(sub, cat))
    return out
