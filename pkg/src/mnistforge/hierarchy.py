"""Hierarchical category configuration: parsing, validation, label indexing.

The config is a JSON document::

    {
      "version": "1",
      "categories": [
        {"name": "...", "description": "...",
         "subcategories": [
            {"name": "...", "description": "...",
             "characteristics": ["short phrase", ...],
             "expected_attributes": {"brightness": 0.5, "contrast": 0.3,
                                     "edge_density": 0.2}}   # optional
         ]}
      ]
    }

Parsing is strict: unknown keys are rejected so a typo in a characteristic
list fails loudly instead of being silently ignored. Names are compared
case-sensitively because they are fed verbatim into embedding prompts.
Hierarchies are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

RECOMMENDED_MIN_CHARACTERISTICS = 3


class HierarchyError(ValueError):
    """Invalid hierarchy configuration."""


@dataclass(frozen=True)
class Characteristic:
    phrase: str


@dataclass(frozen=True)
class Subcategory:
    name: str
    description: str
    characteristics: tuple[Characteristic, ...]
    # optional (brightness, contrast, edge_density) triple the scorer can
    # compare visual attributes against; None means "no expectation"
    expected_attributes: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class MainCategory:
    name: str
    description: str
    subcategories: tuple[Subcategory, ...]


@dataclass(frozen=True)
class CategoryHierarchy:
    categories: tuple[MainCategory, ...]
    version: str = "1"

    @property
    def num_main(self) -> int:
        return len(self.categories)

    @property
    def num_labels(self) -> int:
        return sum(len(c.subcategories) for c in self.categories)


_CATEGORY_KEYS = {"name", "description", "subcategories"}
_SUBCATEGORY_KEYS = {"name", "description", "characteristics", "expected_attributes"}
_TOP_KEYS = {"version", "categories"}
_ATTR_KEYS = {"brightness", "contrast", "edge_density"}


def _require_str(obj: dict, key: str, where: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise HierarchyError(f"{where}: field '{key}' must be a string")
    return value


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise HierarchyError(f"{where}: unknown keys {sorted(unknown)}")


def _parse_subcategory(obj: dict, where: str) -> Subcategory:
    if not isinstance(obj, dict):
        raise HierarchyError(f"{where}: subcategory must be an object")
    _reject_unknown(obj, _SUBCATEGORY_KEYS, where)
    name = _require_str(obj, "name", where)
    description = obj.get("description", "")
    if not isinstance(description, str):
        raise HierarchyError(f"{where}: 'description' must be a string")
    raw_chars = obj.get("characteristics")
    if not isinstance(raw_chars, list) or not raw_chars:
        raise HierarchyError(f"{where} '{name}': empty characteristics")
    phrases = []
    for c in raw_chars:
        if not isinstance(c, str) or not c.strip():
            raise HierarchyError(f"{where} '{name}': characteristic must be non-empty text")
        phrase = c.strip()
        if phrase in phrases:
            raise HierarchyError(f"{where} '{name}': duplicate characteristic '{phrase}'")
        phrases.append(phrase)
    if len(phrases) < RECOMMENDED_MIN_CHARACTERISTICS:
        log.warning(
            "subcategory '%s' has %d characteristic(s); %d or more recommended",
            name, len(phrases), RECOMMENDED_MIN_CHARACTERISTICS,
        )
    expected = None
    if "expected_attributes" in obj:
        raw = obj["expected_attributes"]
        if not isinstance(raw, dict):
            raise HierarchyError(f"{where} '{name}': expected_attributes must be an object")
        _reject_unknown(raw, _ATTR_KEYS, f"{where} '{name}' expected_attributes")
        try:
            expected = (
                float(raw["brightness"]),
                float(raw["contrast"]),
                float(raw["edge_density"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise HierarchyError(
                f"{where} '{name}': expected_attributes needs numeric "
                "brightness, contrast and edge_density"
            ) from exc
        if any(not (0.0 <= v <= 1.0) for v in expected):
            raise HierarchyError(f"{where} '{name}': expected_attributes must be in [0,1]")
    return Subcategory(
        name=name,
        description=description,
        characteristics=tuple(Characteristic(p) for p in phrases),
        expected_attributes=expected,
    )


def parse_and_validate(config_text: str) -> CategoryHierarchy:
    """Parse a JSON hierarchy config and enforce every structural invariant."""
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise HierarchyError(
            f"config is not valid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise HierarchyError("top level must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "top level")
    version = doc.get("version", "1")
    if not isinstance(version, str):
        raise HierarchyError("'version' must be a string")
    raw_categories = doc.get("categories")
    if not isinstance(raw_categories, list):
        raise HierarchyError("'categories' must be a list")
    if not raw_categories:
        raise HierarchyError("empty hierarchy")

    categories = []
    seen_names: set[str] = set()
    for ci, raw in enumerate(raw_categories):
        where = f"categories[{ci}]"
        if not isinstance(raw, dict):
            raise HierarchyError(f"{where}: category must be an object")
        _reject_unknown(raw, _CATEGORY_KEYS, where)
        name = _require_str(raw, "name", where)
        if name in seen_names:
            raise HierarchyError(f"duplicate main category name '{name}'")
        seen_names.add(name)
        description = raw.get("description", "")
        if not isinstance(description, str):
            raise HierarchyError(f"{where}: 'description' must be a string")
        raw_subs = raw.get("subcategories")
        if not isinstance(raw_subs, list) or not raw_subs:
            raise HierarchyError(f"category '{name}': empty subcategory list")
        subs = []
        sub_names: set[str] = set()
        for si, raw_sub in enumerate(raw_subs):
            sub = _parse_subcategory(raw_sub, f"{where}.subcategories[{si}]")
            if sub.name in sub_names:
                raise HierarchyError(
                    f"category '{name}': duplicate subcategory name '{sub.name}'"
                )
            sub_names.add(sub.name)
            subs.append(sub)
        categories.append(
            MainCategory(name=name, description=description, subcategories=tuple(subs))
        )
    return CategoryHierarchy(categories=tuple(categories), version=version)


def serialize(h: CategoryHierarchy) -> str:
    """Inverse of parse_and_validate; emits the canonical JSON layout."""
    doc = {
        "version": h.version,
        "categories": [
            {
                "name": c.name,
                "description": c.description,
                "subcategories": [
                    {
                        "name": s.name,
                        "description": s.description,
                        "characteristics": [ch.phrase for ch in s.characteristics],
                        **(
                            {
                                "expected_attributes": {
                                    "brightness": s.expected_attributes[0],
                                    "contrast": s.expected_attributes[1],
                                    "edge_density": s.expected_attributes[2],
                                }
                            }
                            if s.expected_attributes is not None
                            else {}
                        ),
                    }
                    for s in c.subcategories
                ],
            }
            for c in h.categories
        ],
    }
    return json.dumps(doc, indent=2)


def flatten_labels(h: CategoryHierarchy) -> list[tuple[int, int, str, str]]:
    """Dense label table: row position is the flattened label value.

    Each row is (main_index, sub_index_within_parent, main_name, sub_name);
    ordering follows the config file, so the mapping is stable across calls.
    """
    rows = []
    for mi, cat in enumerate(h.categories):
        for si, sub in enumerate(cat.subcategories):
            rows.append((mi, si, cat.name, sub.name))
    return rows


def build_prompts(s: Subcategory, parent: MainCategory) -> list[str]:
    """Text prompts scored against an image: two templates plus one per characteristic."""
    prompts = [f"A photo of {parent.name}", f"This is a {s.name}"]
    prompts.extend(ch.phrase for ch in s.characteristics)
    return prompts


def all_prompts(h: CategoryHierarchy) -> list[str]:
    """Every distinct prompt in the hierarchy, in traversal order."""
    seen: set[str] = set()
    ordered = []
    for cat in h.categories:
        for sub in cat.subcategories:
            for p in build_prompts(sub, cat):
                if p not in seen:
                    seen.add(p)
                    ordered.append(p)
    return ordered
