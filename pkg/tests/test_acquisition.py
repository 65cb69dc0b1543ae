import numpy as np
import pytest

from mnistforge.acquisition import (
    AuthError,
    ImageCache,
    dedupe,
    fetch_keyword,
    ingest_folder,
)
from mnistforge.imageio import encode_png

from conftest import make_record, random_rgb, solid_image
from mock_image_api import MockImageApi


def _no_sleep(_):
    pass


# -- dedupe -------------------------------------------------------------------

def test_dedupe_keeps_first_occurrence_in_order():
    a = make_record(solid_image(1, 1, 1))
    b = make_record(solid_image(2, 2, 2))
    assert dedupe([a, a, b]) == [a, b]


def test_dedupe_empty():
    assert dedupe([]) == []


def test_dedupe_idempotent():
    rng = np.random.default_rng(0)
    records = [make_record(random_rgb(rng, 8, 8)) for _ in range(20)]
    records += records[:7]
    once = dedupe(records)
    assert dedupe(once) == once


def test_dedupe_collapses_byte_copies(tmp_path):
    # 100 files with only 10 distinct contents
    rng = np.random.default_rng(1)
    originals = [random_rgb(rng, 10, 10) for _ in range(10)]
    for i in range(100):
        (tmp_path / f"img_{i:03d}.png").write_bytes(encode_png(originals[i % 10]))
    records = ingest_folder(tmp_path, keyword="k")
    assert len(records) == 100
    assert len(dedupe(records)) == 10


# -- folder ingest -----------------------------------------------------------------

def test_ingest_folder_lexicographic_and_deterministic(tmp_path):
    rng = np.random.default_rng(2)
    names = ["b.png", "a.png", "c.jpg"]
    for name in names:
        (tmp_path / name).write_bytes(encode_png(random_rgb(rng, 9, 9)))
    first = ingest_folder(tmp_path, keyword="x")
    second = ingest_folder(tmp_path, keyword="x")
    assert [r.id for r in first] == [r.id for r in second]
    assert len(first) == 3


def test_ingest_empty_folder_warns_not_errors(tmp_path, caplog):
    with caplog.at_level("WARNING"):
        records = ingest_folder(tmp_path, keyword="x")
    assert records == []
    assert any("no decodable images" in r.message for r in caplog.records)


def test_ingest_missing_directory_errors(tmp_path):
    from mnistforge.acquisition import AcquisitionError
    with pytest.raises(AcquisitionError, match="not a readable directory"):
        ingest_folder(tmp_path / "missing", keyword="x")


def test_ingest_skips_undecodable(tmp_path, caplog):
    (tmp_path / "ok.png").write_bytes(encode_png(solid_image(5, 5, 5)))
    (tmp_path / "broken.png").write_bytes(b"junk")
    with caplog.at_level("WARNING"):
        records = ingest_folder(tmp_path, keyword="x")
    assert len(records) == 1
    assert any("undecodable" in r.message for r in caplog.records)


def test_ingest_duplicate_file_copied_twice(tmp_path):
    data = encode_png(solid_image(7, 8, 9))
    (tmp_path / "one.png").write_bytes(data)
    (tmp_path / "two.png").write_bytes(data)
    records = ingest_folder(tmp_path, keyword="x")
    assert len(records) == 2
    assert records[0].id == records[1].id  # same decoded bytes, same hash
    assert len(dedupe(records)) == 1


def test_ingest_hint_from_name(tmp_path):
    (tmp_path / "cheese_01.png").write_bytes(encode_png(solid_image(1, 2, 3)))
    records = ingest_folder(tmp_path, keyword="x", hint_from_name=True)
    assert records[0].concept_hint == "cheese"


# -- web fetch ------------------------------------------------------------------------

def test_fetch_returns_up_to_k_tagged_records(tmp_path):
    with MockImageApi(total_images=8) as api:
        records = fetch_keyword("Cactus", 5, api_key="k", base_url=api.base_url,
                                cache=ImageCache(tmp_path), sleep=_no_sleep)
    assert len(records) == 5
    assert all(r.keyword == "Cactus" for r in records)
    assert all(r.source == "web_api" for r in records)


def test_fetch_k_zero_is_precondition_error():
    with pytest.raises(ValueError, match="k must be >= 1"):
        fetch_keyword("x", 0, api_key="k")


def test_fetch_requires_api_key(monkeypatch):
    monkeypatch.delenv("MNISTFORGE_API_KEY", raising=False)
    with pytest.raises(AuthError, match="no API key"):
        fetch_keyword("x", 3)


def test_fetch_auth_failure_is_actionable(tmp_path):
    with MockImageApi(reject_auth=True) as api:
        with pytest.raises(AuthError, match="MNISTFORGE_API_KEY"):
            fetch_keyword("x", 3, api_key="bad", base_url=api.base_url,
                          cache=ImageCache(tmp_path), sleep=_no_sleep)


def test_fetch_warm_cache_makes_zero_requests(tmp_path):
    with MockImageApi(total_images=6) as api:
        cache = ImageCache(tmp_path)
        first = fetch_keyword("Tree", 6, api_key="k", base_url=api.base_url,
                              cache=cache, sleep=_no_sleep)
        after_first = api.request_count
        # fresh cache object over the same directory: index must reload
        warm = ImageCache(tmp_path)
        second = fetch_keyword("Tree", 6, api_key="k", base_url=api.base_url,
                               cache=warm, sleep=_no_sleep)
        after_second = api.request_count
    assert [r.id for r in first] == [r.id for r in second]
    # only the search pages are re-fetched; image bytes all come from cache
    image_requests = after_second - after_first
    assert image_requests <= 1  # one /search/photos page, zero /img hits


def test_fetch_rate_limit_backs_off_then_succeeds(tmp_path):
    sleeps = []
    with MockImageApi(total_images=3, rate_limit_first=2) as api:
        records = fetch_keyword("x", 3, api_key="k", base_url=api.base_url,
                                cache=ImageCache(tmp_path),
                                sleep=lambda s: sleeps.append(s))
    assert len(records) == 3
    assert sleeps == [1.0, 2.0]  # exponential backoff


def test_fetch_persistent_rate_limit_partial_result(tmp_path, caplog):
    with MockImageApi(total_images=3, rate_limit_first=10 ** 6) as api:
        with caplog.at_level("WARNING"):
            records = fetch_keyword("x", 3, api_key="k", base_url=api.base_url,
                                    cache=ImageCache(tmp_path), sleep=_no_sleep)
    assert records == []
    assert any("rate limit" in r.message.lower() for r in caplog.records)


def test_fetch_skips_undecodable_image(tmp_path, caplog):
    with MockImageApi(total_images=4, corrupt_ids=(1,)) as api:
        with caplog.at_level("WARNING"):
            records = fetch_keyword("x", 4, api_key="k", base_url=api.base_url,
                                    cache=ImageCache(tmp_path), sleep=_no_sleep)
    assert len(records) == 3
    assert any("undecodable" in r.message for r in caplog.records)


def test_cache_layout_two_char_prefix(tmp_path):
    cache = ImageCache(tmp_path)
    pixels = solid_image(3, 4, 5)
    content_hash = cache.put("http://x/img.png", pixels)
    stored = tmp_path / content_hash[:2] / f"{content_hash}.png"
    assert stored.exists()
    assert (tmp_path / "index.jsonl").exists()
    again = cache.get("http://x/img.png")
    assert np.array_equal(again, pixels)
