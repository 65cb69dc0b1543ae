import numpy as np
import pytest

from mnistforge.acquisition import ImageRecord
from mnistforge.hierarchy import parse_and_validate
from mnistforge.imageio import content_id
from mnistforge.providers import StubProvider

TINY_HIERARCHY_JSON = """
{
  "version": "1",
  "categories": [
    {
      "name": "Dairy Product",
      "description": "Milk-based foods",
      "subcategories": [
        {
          "name": "Cheese",
          "description": "Solid fermented dairy",
          "characteristics": ["yellow or white blocks", "cut slices", "firm wedges"]
        },
        {
          "name": "Milk",
          "description": "Liquid dairy",
          "characteristics": ["white liquid", "glass or bottle", "poured stream"]
        }
      ]
    },
    {
      "name": "Bread",
      "description": "Baked flour goods",
      "subcategories": [
        {
          "name": "Sliced Bread",
          "description": "Pre-cut loaf",
          "characteristics": ["rectangular slices", "uniform thickness", "soft crumb"],
          "expected_attributes": {"brightness": 0.6, "contrast": 0.2, "edge_density": 0.1}
        },
        {
          "name": "Rolls",
          "description": "Individual breads",
          "characteristics": ["individual portions", "soft texture", "round shape"]
        }
      ]
    }
  ]
}
"""


@pytest.fixture(scope="session")
def tiny_hierarchy():
    return parse_and_validate(TINY_HIERARCHY_JSON)


@pytest.fixture()
def stub_provider():
    return StubProvider()


def make_record(pixels: np.ndarray, keyword: str = "test",
                concept_hint: str | None = None) -> ImageRecord:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    return ImageRecord(
        id=content_id(pixels),
        source="local_folder",
        keyword=keyword,
        pixels=pixels,
        width=pixels.shape[1],
        height=pixels.shape[0],
        concept_hint=concept_hint,
        fetched_at="2000-01-01T00:00:00+00:00",
    )


def solid_image(r: int, g: int, b: int, size: int = 16) -> np.ndarray:
    img = np.zeros((size, size, 3), dtype=np.uint8)
    img[:, :, 0] = r
    img[:, :, 1] = g
    img[:, :, 2] = b
    return img


def random_rgb(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
