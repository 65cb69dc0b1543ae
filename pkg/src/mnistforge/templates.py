"""Starter hierarchy configs for `init-config`.

Two templates ship with the tool: a 10-category / 30-subcategory food
hierarchy and a 4-category / 12-subcategory botanical one. They are
skeletons -- users are expected to tune names, descriptions and
characteristic phrases for their own corpus.
"""

from __future__ import annotations

import json


def _sub(name: str, description: str, characteristics: list[str]) -> dict:
    return {"name": name, "description": description, "characteristics": characteristics}


FOOD_TEMPLATE = {
    "version": "1",
    "categories": [
        {
            "name": "Bread",
            "description": "Baked goods made from flour dough",
            "subcategories": [
                _sub("Sliced Bread", "Pre-cut sandwich bread",
                     ["rectangular slices", "uniform thickness", "soft white crumb"]),
                _sub("Whole Loaves", "Uncut baked loaves",
                     ["crusty exterior", "round or oval shape", "golden brown crust"]),
                _sub("Rolls and Buns", "Small individual breads",
                     ["individual portions", "soft texture", "rounded small shape"]),
            ],
        },
        {
            "name": "Dairy Product",
            "description": "Milk-based foods",
            "subcategories": [
                _sub("Milk and Liquid Dairy", "Pourable dairy products",
                     ["white liquid", "containers", "glass or bottle"]),
                _sub("Cheese", "Solid fermented dairy",
                     ["yellow or white blocks", "cut slices", "firm wedges"]),
                _sub("Yogurt and Cream", "Thick cultured dairy",
                     ["thick consistency", "creamy texture", "served in cups"]),
            ],
        },
        {
            "name": "Dessert",
            "description": "Sweet courses and confections",
            "subcategories": [
                _sub("Cakes and Pastries", "Baked sweet goods",
                     ["frosted layers", "colorful icing", "decorated surface"]),
                _sub("Ice Cream and Frozen", "Frozen sweets",
                     ["frozen scoops", "cold treats", "cone or bowl"]),
                _sub("Cookies and Small Sweets", "Bite-size confections",
                     ["bite-sized", "chocolate pieces", "round baked discs"]),
            ],
        },
        {
            "name": "Egg",
            "description": "Egg-based foods",
            "subcategories": [
                _sub("Whole Eggs", "Uncooked eggs in shell",
                     ["oval shape", "visible shells", "white shell"]),
                _sub("Fried and Scrambled", "Pan-cooked eggs",
                     ["yellow yolk", "cooked texture", "white albumen"]),
                _sub("Egg Dishes", "Composed egg preparations",
                     ["omelets", "prepared mixtures", "folded or layered"]),
            ],
        },
        {
            "name": "Fried Food",
            "description": "Deep-fried and battered items",
            "subcategories": [
                _sub("Fried Chicken and Poultry", "Breaded fried poultry",
                     ["golden coating", "crispy texture", "drumstick pieces"]),
                _sub("French Fries and Chips", "Fried potato products",
                     ["stick shape", "potato color", "piled thin strips"]),
                _sub("Other Fried Foods", "Assorted fried items",
                     ["crispy batter", "oil-cooked", "golden brown surface"]),
            ],
        },
        {
            "name": "Meat",
            "description": "Animal meat preparations",
            "subcategories": [
                _sub("Raw Meat", "Uncooked cuts",
                     ["red color", "butcher cuts", "marbled flesh"]),
                _sub("Grilled and Roasted", "Heat-cooked meat",
                     ["brown cooked", "grill marks", "charred edges"]),
                _sub("Processed Meat", "Cured and formed meat",
                     ["sausage shape", "deli cuts", "uniform pink slices"]),
            ],
        },
        {
            "name": "Noodles-Pasta",
            "description": "Noodle and pasta dishes",
            "subcategories": [
                _sub("Long Pasta and Noodles", "Strand-shaped pasta",
                     ["long thin strands", "tangled texture", "pale yellow color"]),
                _sub("Short Pasta Shapes", "Cut pasta forms",
                     ["small repeated shapes", "tubes or spirals", "firm texture"]),
                _sub("Asian Noodle Soups", "Noodles served in broth",
                     ["noodles in broth", "served in a bowl", "steaming liquid"]),
            ],
        },
        {
            "name": "Rice",
            "description": "Rice preparations",
            "subcategories": [
                _sub("Plain Cooked Rice", "Steamed unseasoned rice",
                     ["small white grains", "fluffy texture", "mounded serving"]),
                _sub("Fried Rice", "Stir-fried seasoned rice",
                     ["mixed grains and vegetables", "golden color", "scattered ingredients"]),
                _sub("Rice Dishes", "Composed rice plates",
                     ["rice with toppings", "sauced grains", "plated composition"]),
            ],
        },
        {
            "name": "Seafood",
            "description": "Fish and shellfish",
            "subcategories": [
                _sub("Fish Fillets and Steaks", "Cut fish portions",
                     ["pink or white flesh", "flaky texture", "boneless cut"]),
                _sub("Shellfish and Crustaceans", "Shelled sea animals",
                     ["hard shell", "claws or tails", "orange red color"]),
                _sub("Whole Fish", "Complete fish",
                     ["full body with head and tail", "silver scales", "visible fins"]),
            ],
        },
        {
            "name": "Vegetable-Fruit",
            "description": "Produce items",
            "subcategories": [
                _sub("Fresh Vegetables", "Raw vegetables",
                     ["green leaves", "crisp texture", "raw produce"]),
                _sub("Fresh Fruits", "Raw fruits",
                     ["bright colors", "round shapes", "glossy skin"]),
                _sub("Cooked Vegetables", "Prepared vegetables",
                     ["softened texture", "steamed or roasted", "mixed colors"]),
            ],
        },
    ],
}

TREE_TEMPLATE = {
    "version": "1",
    "categories": [
        {
            "name": "Broadleaf Tree",
            "description": "Trees with wide flat leaves",
            "subcategories": [
                _sub("Deciduous Broadleaf", "Sheds leaves seasonally",
                     ["seasonal leaf drop", "broad canopy", "autumn colors"]),
                _sub("Evergreen Broadleaf", "Keeps foliage year-round",
                     ["year-round foliage", "glossy leaves", "dense canopy"]),
                _sub("Flowering Broadleaf", "Ornamental blooming trees",
                     ["visible blooms", "ornamental features", "colorful appearance"]),
            ],
        },
        {
            "name": "Cactus",
            "description": "Succulent desert plants",
            "subcategories": [
                _sub("Columnar Cactus", "Tall upright cacti",
                     ["tall vertical stems", "ribbed surface", "minimal branching"]),
                _sub("Barrel and Round Cactus", "Compact globular cacti",
                     ["compact spherical form", "clustered spines", "low rounded profile"]),
                _sub("Branching and Pad Cactus", "Segmented cacti",
                     ["segmented structure", "flat surfaces", "complex growth"]),
            ],
        },
        {
            "name": "Coniferous Tree",
            "description": "Cone-bearing needle trees",
            "subcategories": [
                _sub("Pine and Fir Trees", "Classic needle conifers",
                     ["needle leaves", "conical shape", "pyramid form"]),
                _sub("Spruce and Cedar", "Dense branching conifers",
                     ["dense clusters", "drooping branches", "aromatic wood"]),
                _sub("Juniper and Cypress", "Scale-leaf conifers",
                     ["varied needles", "irregular shape", "drought tolerance"]),
            ],
        },
        {
            "name": "Palm",
            "description": "Tropical frond-bearing trees",
            "subcategories": [
                _sub("Fan Palm", "Palms with palmate fronds",
                     ["radiating fronds", "palmate structure", "umbrella canopy"]),
                _sub("Feather Palm", "Palms with pinnate fronds",
                     ["pinnate leaves", "graceful arching", "flowing appearance"]),
                _sub("Coconut and Date Palm", "Fruit-bearing palms",
                     ["tall curved trunks", "fruit clusters", "coastal adaptation"]),
            ],
        },
    ],
}

TEMPLATES = {"food": FOOD_TEMPLATE, "tree": TREE_TEMPLATE}


def template_json(name: str) -> str:
    if name not in TEMPLATES:
        raise KeyError(f"unknown template '{name}'; available: {sorted(TEMPLATES)}")
    return json.dumps(TEMPLATES[name], indent=2)
