"""Raw image acquisition from a web search API or a local folder.

Records are identified by a SHA-256 over the decoded canonical RGB pixels,
so the same picture fetched twice (or re-encoded by a CDN) deduplicates.
Web responses are cached on disk keyed by URL: a JSONL index maps each URL
to the content hash, and pixel data lives at cache/<hh>/<hash>.png. A warm
cache answers repeat fetches without any network traffic.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from . import imageio, util

log = logging.getLogger(__name__)

API_KEY_ENV = "MNISTFORGE_API_KEY"
DEFAULT_BASE_URL = "https://api.unsplash.com"
DEFAULT_PER_PAGE = 30
MAX_BACKOFF_RETRIES = 4


class AcquisitionError(RuntimeError):
    pass


class AuthError(AcquisitionError):
    pass


@dataclass(frozen=True, eq=False)
class ImageRecord:
    id: str                      # sha256 hex of decoded RGB bytes
    source: str                  # "web_api" | "local_folder"
    keyword: str
    pixels: np.ndarray           # H x W x 3 uint8
    width: int
    height: int
    concept_hint: str | None = None
    fetched_at: str = field(default_factory=util.utc_now_iso)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixels shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )


def record_from_bytes(data: bytes, source: str, keyword: str,
                      concept_hint: str | None = None) -> ImageRecord:
    pixels = imageio.decode_rgb(data)
    return ImageRecord(
        id=imageio.content_id(pixels),
        source=source,
        keyword=keyword,
        pixels=pixels,
        width=pixels.shape[1],
        height=pixels.shape[0],
        concept_hint=concept_hint,
    )


class ImageCache:
    """URL-keyed on-disk cache: JSONL index plus content-addressed PNGs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"
        self._by_url: dict[str, str] = {}
        if self.index_path.exists():
            with open(self.index_path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        entry = json.loads(line)
                        self._by_url[entry["url"]] = entry["id"]

    def _pixel_path(self, content_hash: str) -> Path:
        return self.root / content_hash[:2] / f"{content_hash}.png"

    def get(self, url: str) -> np.ndarray | None:
        content_hash = self._by_url.get(url)
        if content_hash is None:
            return None
        path = self._pixel_path(content_hash)
        if not path.exists():
            return None
        return imageio.decode_rgb(path.read_bytes())

    def put(self, url: str, pixels: np.ndarray) -> str:
        content_hash = imageio.content_id(pixels)
        path = self._pixel_path(content_hash)
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            path.write_bytes(imageio.encode_png(pixels))
        if url not in self._by_url:
            self._by_url[url] = content_hash
            with open(self.index_path, "a", encoding="utf-8") as f:
                f.write(json.dumps({"url": url, "id": content_hash}) + "\n")
        return content_hash


def _get_with_backoff(session: requests.Session, url: str, *, params=None,
                      headers=None, sleep=time.sleep) -> requests.Response | None:
    """GET with exponential backoff on 429; None when retries are exhausted."""
    delay = 1.0
    for attempt in range(MAX_BACKOFF_RETRIES + 1):
        resp = session.get(url, params=params, headers=headers, timeout=30)
        if resp.status_code in (401, 403):
            raise AuthError(
                f"image API rejected the key (HTTP {resp.status_code}); "
                f"set {API_KEY_ENV} to a valid access key"
            )
        if resp.status_code == 429:
            if attempt == MAX_BACKOFF_RETRIES:
                return None
            log.warning("rate limited; backing off %.1fs", delay)
            sleep(delay)
            delay *= 2
            continue
        resp.raise_for_status()
        return resp
    return None


def fetch_keyword(keyword: str, k: int, api_key: str | None = None,
                  base_url: str = DEFAULT_BASE_URL,
                  cache: ImageCache | None = None,
                  per_page: int = DEFAULT_PER_PAGE,
                  session: requests.Session | None = None,
                  sleep=time.sleep) -> list[ImageRecord]:
    """Retrieve up to k deduplicated images for one search keyword.

    Rate-limit exhaustion returns the partial result with a warning rather
    than failing the whole run; undecodable images are skipped and logged.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    api_key = api_key or os.environ.get(API_KEY_ENV)
    if not api_key:
        raise AuthError(f"no API key: pass api_key or set {API_KEY_ENV}")
    session = session or requests.Session()
    headers = {"Authorization": f"Client-ID {api_key}"}

    records: list[ImageRecord] = []
    seen: set[str] = set()
    page = 1
    while len(records) < k:
        resp = _get_with_backoff(
            session, f"{base_url}/search/photos",
            params={"query": keyword, "page": page, "per_page": per_page},
            headers=headers, sleep=sleep,
        )
        if resp is None:
            log.warning(
                "rate limit persisted; returning %d/%d images for '%s'",
                len(records), k, keyword,
            )
            break
        doc = resp.json()
        results = doc.get("results", [])
        if not results:
            break
        for item in results:
            if len(records) >= k:
                break
            url = (item.get("urls") or {}).get("small")
            if not url:
                continue
            pixels = cache.get(url) if cache is not None else None
            if pixels is None:
                img_resp = _get_with_backoff(session, url, headers=headers, sleep=sleep)
                if img_resp is None:
                    log.warning("rate limited fetching %s; stopping early", url)
                    return records
                try:
                    pixels = imageio.decode_rgb(img_resp.content)
                except imageio.ImageDecodeError as exc:
                    log.warning("skipping undecodable image %s: %s", url, exc)
                    continue
                if cache is not None:
                    cache.put(url, pixels)
            record = ImageRecord(
                id=imageio.content_id(pixels), source="web_api", keyword=keyword,
                pixels=pixels, width=pixels.shape[1], height=pixels.shape[0],
            )
            if record.id not in seen:
                seen.add(record.id)
                records.append(record)
        if page >= int(doc.get("total_pages", page)):
            break
        page += 1
    return records


def ingest_folder(path: str | Path, keyword: str,
                  hint_from_name: bool = False) -> list[ImageRecord]:
    """Load every decodable PNG/JPEG under a directory, lexicographic order.

    With hint_from_name, the filename stem (minus trailing digits and
    separators) becomes the record's concept_hint -- handy for fixture
    corpora whose files are named after their concept.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise AcquisitionError(f"not a readable directory: {directory}")
    records = []
    files = sorted(
        p for p in directory.rglob("*")
        if p.is_file() and p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    for file in files:
        try:
            data = file.read_bytes()
        except OSError as exc:
            log.warning("skipping unreadable file %s: %s", file, exc)
            continue
        hint = None
        if hint_from_name:
            hint = file.stem.rstrip("0123456789").rstrip("-_ ").replace("_", " ")
        try:
            records.append(record_from_bytes(
                data, source="local_folder", keyword=keyword, concept_hint=hint or None,
            ))
        except imageio.ImageDecodeError as exc:
            log.warning("skipping undecodable file %s: %s", file, exc)
    if not records:
        log.warning("no decodable images found under %s", directory)
    return records


def dedupe(records: list[ImageRecord]) -> list[ImageRecord]:
    """Drop records whose content hash was already seen; order preserved."""
    seen: set[str] = set()
    out = []
    for r in records:
        if r.id not in seen:
            seen.add(r.id)
            out.append(r)
    return out
