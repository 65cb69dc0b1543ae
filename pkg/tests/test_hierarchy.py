import json

import pytest
from hypothesis import given, strategies as st

from mnistforge.hierarchy import (
    HierarchyError,
    all_prompts,
    build_prompts,
    flatten_labels,
    parse_and_validate,
    serialize,
)
from mnistforge.templates import template_json


def test_food_template_parses_to_10_main_30_sub():
    h = parse_and_validate(template_json("food"))
    assert h.num_main == 10
    assert h.num_labels == 30


def test_food_template_category_names():
    h = parse_and_validate(template_json("food"))
    assert [c.name for c in h.categories] == [
        "Bread", "Dairy Product", "Dessert", "Egg", "Fried Food", "Meat",
        "Noodles-Pasta", "Rice", "Seafood", "Vegetable-Fruit",
    ]
    assert all(len(c.subcategories) == 3 for c in h.categories)


def test_tree_template_parses_to_4_main_12_sub():
    h = parse_and_validate(template_json("tree"))
    assert h.num_main == 4
    assert h.num_labels == 12
    assert [c.name for c in h.categories] == [
        "Broadleaf Tree", "Cactus", "Coniferous Tree", "Palm",
    ]


def test_empty_hierarchy_rejected():
    with pytest.raises(HierarchyError, match="empty hierarchy"):
        parse_and_validate('{"version": "1", "categories": []}')


def test_syntax_error_reports_position():
    with pytest.raises(HierarchyError, match="line 1 column"):
        parse_and_validate('{"version": ')


def test_duplicate_main_name_rejected():
    doc = {
        "categories": [
            {"name": "A", "subcategories": [
                {"name": "x", "characteristics": ["one", "two", "three"]}]},
            {"name": "A", "subcategories": [
                {"name": "y", "characteristics": ["one", "two", "three"]}]},
        ]
    }
    with pytest.raises(HierarchyError, match="duplicate main category"):
        parse_and_validate(json.dumps(doc))


def test_duplicate_sub_name_within_parent_rejected():
    doc = {
        "categories": [
            {"name": "A", "subcategories": [
                {"name": "x", "characteristics": ["one"]},
                {"name": "x", "characteristics": ["two"]},
            ]},
        ]
    }
    with pytest.raises(HierarchyError, match="duplicate subcategory"):
        parse_and_validate(json.dumps(doc))


def test_same_sub_name_under_different_parents_allowed():
    doc = {
        "categories": [
            {"name": "A", "subcategories": [{"name": "x", "characteristics": ["p"]}]},
            {"name": "B", "subcategories": [{"name": "x", "characteristics": ["p"]}]},
        ]
    }
    h = parse_and_validate(json.dumps(doc))
    assert h.num_labels == 2


def test_empty_subcategory_list_rejected():
    doc = {"categories": [{"name": "A", "subcategories": []}]}
    with pytest.raises(HierarchyError, match="empty subcategory list"):
        parse_and_validate(json.dumps(doc))


def test_empty_characteristics_rejected():
    doc = {"categories": [{"name": "A", "subcategories": [
        {"name": "x", "characteristics": []}]}]}
    with pytest.raises(HierarchyError, match="empty characteristics"):
        parse_and_validate(json.dumps(doc))


def test_blank_characteristic_rejected():
    doc = {"categories": [{"name": "A", "subcategories": [
        {"name": "x", "characteristics": ["  "]}]}]}
    with pytest.raises(HierarchyError, match="non-empty text"):
        parse_and_validate(json.dumps(doc))


def test_duplicate_characteristic_rejected():
    doc = {"categories": [{"name": "A", "subcategories": [
        {"name": "x", "characteristics": ["same", "same"]}]}]}
    with pytest.raises(HierarchyError, match="duplicate characteristic"):
        parse_and_validate(json.dumps(doc))


def test_unknown_keys_rejected_strictly():
    doc = {"categories": [{"name": "A", "typo_key": 1, "subcategories": [
        {"name": "x", "characteristics": ["p"]}]}]}
    with pytest.raises(HierarchyError, match="unknown keys.*typo_key"):
        parse_and_validate(json.dumps(doc))


def test_below_three_characteristics_warns(caplog):
    doc = {"categories": [{"name": "A", "subcategories": [
        {"name": "x", "characteristics": ["only one"]}]}]}
    with caplog.at_level("WARNING"):
        parse_and_validate(json.dumps(doc))
    assert any("recommended" in r.message for r in caplog.records)


def test_flatten_labels_tree_template():
    h = parse_and_validate(template_json("tree"))
    rows = flatten_labels(h)
    assert len(rows) == 12
    assert sorted({r[0] for r in rows}) == [0, 1, 2, 3]
    assert rows == flatten_labels(h)  # order-stable across calls
    assert len(set(rows)) == len(rows)  # injective


def test_flatten_labels_food_template_has_30_rows():
    h = parse_and_validate(template_json("food"))
    assert len(flatten_labels(h)) == 30


def test_flatten_labels_single():
    doc = {"categories": [{"name": "A", "subcategories": [
        {"name": "x", "characteristics": ["p"]}]}]}
    h = parse_and_validate(json.dumps(doc))
    assert flatten_labels(h) == [(0, 0, "A", "x")]


def test_build_prompts_templates_and_characteristics(tiny_hierarchy):
    dairy = tiny_hierarchy.categories[0]
    cheese = dairy.subcategories[0]
    prompts = build_prompts(cheese, dairy)
    assert prompts[0] == "A photo of Dairy Product"
    assert prompts[1] == "This is a Cheese"
    assert prompts[2:] == ["yellow or white blocks", "cut slices", "firm wedges"]
    assert len(prompts) == 2 + len(cheese.characteristics)


def test_build_prompts_count_with_two_characteristics():
    doc = {"categories": [{"name": "Bread", "subcategories": [
        {"name": "Sliced Bread",
         "characteristics": ["rectangular slices", "uniform thickness"]}]}]}
    h = parse_and_validate(json.dumps(doc))
    prompts = build_prompts(h.categories[0].subcategories[0], h.categories[0])
    assert len(prompts) == 4


def test_all_prompts_covers_every_subcategory(tiny_hierarchy):
    prompts = all_prompts(tiny_hierarchy)
    assert "A photo of Bread" in prompts
    assert "This is a Rolls" in prompts
    assert len(prompts) == len(set(prompts))


_name = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" "),
    min_size=1, max_size=12,
).map(str.strip).filter(bool)


@st.composite
def hierarchy_docs(draw):
    n_cats = draw(st.integers(1, 4))
    cat_names = draw(st.lists(_name, min_size=n_cats, max_size=n_cats, unique=True))
    categories = []
    for cname in cat_names:
        n_subs = draw(st.integers(1, 3))
        sub_names = draw(st.lists(_name, min_size=n_subs, max_size=n_subs, unique=True))
        subs = []
        for sname in sub_names:
            chars = draw(st.lists(_name, min_size=1, max_size=4, unique=True))
            subs.append({"name": sname, "description": "",
                         "characteristics": chars})
        categories.append({"name": cname, "description": "", "subcategories": subs})
    return {"version": "1", "categories": categories}


@given(hierarchy_docs())
def test_parse_serialize_round_trip(doc):
    h = parse_and_validate(json.dumps(doc))
    assert parse_and_validate(serialize(h)) == h
