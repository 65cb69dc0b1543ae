"""Dataset serialization: stratified splitting, IDX files, JSON manifest.

The IDX layout is the classic MNIST container: a big-endian header (magic,
then one 32-bit size per dimension) followed by the raw u8 payload in
row-major order. Images use magic 0x00000803 (u8, 3 dims), labels
0x00000801 (u8, 1 dim). Main labels and flattened subcategory labels are
written as two separate label files per split.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import util

log = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

FILES = {
    "train_images": "train-images.idx3-ubyte",
    "train_labels": "train-labels.idx1-ubyte",
    "train_sublabels": "train-sublabels.idx1-ubyte",
    "test_images": "test-images.idx3-ubyte",
    "test_labels": "test-labels.idx1-ubyte",
    "test_sublabels": "test-sublabels.idx1-ubyte",
    "manifest": "manifest.json",
}


class IdxFormatError(ValueError):
    pass


@dataclass
class Manifest:
    hierarchy: dict
    label_map: list[list]  # rows of [main_index, sub_index, main_name, sub_name]
    config_hash: str
    per_class_counts: dict[str, int]
    split_ratio: float
    split_seed: int
    train_indices: list[int]
    test_indices: list[int]
    created_at: str = field(default_factory=util.utc_now_iso)
    tool_version: str = "0.1.0"
    normalization: dict | None = None  # {"mu":…, "sigma":…} for normalize runs

    def to_dict(self) -> dict:
        return {
            "hierarchy": self.hierarchy,
            "label_map": self.label_map,
            "config_hash": self.config_hash,
            "per_class_counts": self.per_class_counts,
            "split": {
                "ratio": self.split_ratio,
                "seed": self.split_seed,
                "train_indices": self.train_indices,
                "test_indices": self.test_indices,
            },
            "created_at": self.created_at,
            "tool_version": self.tool_version,
            "normalization": self.normalization,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Manifest":
        split = doc["split"]
        return cls(
            hierarchy=doc["hierarchy"],
            label_map=doc["label_map"],
            config_hash=doc["config_hash"],
            per_class_counts=doc["per_class_counts"],
            split_ratio=split["ratio"],
            split_seed=split["seed"],
            train_indices=list(split["train_indices"]),
            test_indices=list(split["test_indices"]),
            created_at=doc["created_at"],
            tool_version=doc["tool_version"],
            normalization=doc.get("normalization"),
        )


@dataclass(eq=False)
class DatasetArtifact:
    images: np.ndarray      # N x H x W uint8
    main_labels: np.ndarray  # N uint8
    sub_labels: np.ndarray   # N uint8, flattened subcategory label
    train_indices: list[int]
    test_indices: list[int]
    manifest: Manifest

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.dtype != np.uint8:
            raise ValueError("images must be N x H x W uint8")
        n, h, w = self.images.shape
        if h != w:
            raise ValueError(f"images must be square, got {h}x{w}")
        if len(self.main_labels) != n or len(self.sub_labels) != n:
            raise ValueError("label count does not match image count")
        num_labels = len(self.manifest.label_map)
        if n and int(self.sub_labels.max()) >= num_labels:
            raise ValueError("sub label outside the flattened label range")
        if sorted(self.train_indices + self.test_indices) != list(range(n)):
            raise ValueError("train/test indices must partition the dataset")

    def equals(self, other: "DatasetArtifact") -> bool:
        return (
            np.array_equal(self.images, other.images)
            and np.array_equal(self.main_labels, other.main_labels)
            and np.array_equal(self.sub_labels, other.sub_labels)
            and self.train_indices == other.train_indices
            and self.test_indices == other.test_indices
            and self.manifest.to_dict() == other.manifest.to_dict()
        )


def split_dataset(n: int, ratio: float, seed: int,
                  labels: np.ndarray) -> tuple[list[int], list[int]]:
    """Stratified train/test index split by main label.

    Deterministic for a given seed. Classes keep their ratio within one
    sample; a class with a single sample goes to train with a warning.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio {ratio} outside (0,1)")
    labels = np.asarray(labels)
    if len(labels) != n:
        raise ValueError("labels length must equal n")
    classes = np.unique(labels)
    if n < len(classes):
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for cls in classes:
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < 2:
            log.warning("class %s has %d sample(s); forcing into train", cls, len(idx))
            train.extend(int(i) for i in idx)
            continue
        perm = rng.permutation(idx)
        n_train = int(np.floor(ratio * len(idx) + 0.5))
        n_train = min(max(n_train, 1), len(idx) - 1)
        train.extend(int(i) for i in perm[:n_train])
        test.extend(int(i) for i in perm[n_train:])
    train.sort()
    test.sort()
    return train, test


def _write_idx_images(path: Path, images: np.ndarray) -> None:
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, n, h, w))
        f.write(np.ascontiguousarray(images).tobytes())


def _write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, len(labels)))
        f.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def _read_exact(f, size: int, what: str, path: Path) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise IdxFormatError(
            f"{path.name}: truncated {what}: expected {size} bytes, got {len(data)}"
        )
    return data


def _read_idx_images(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, n, h, w = struct.unpack(">IIII", _read_exact(f, 16, "header", path))
        if magic != IMAGES_MAGIC:
            raise IdxFormatError(
                f"{path.name}: bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
            )
        payload = _read_exact(f, n * h * w, "payload", path)
        extra = f.read(1)
        if extra:
            raise IdxFormatError(f"{path.name}: trailing bytes after payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(n, h, w).copy()


def _read_idx_labels(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, n = struct.unpack(">II", _read_exact(f, 8, "header", path))
        if magic != LABELS_MAGIC:
            raise IdxFormatError(
                f"{path.name}: bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"
            )
        payload = _read_exact(f, n, "payload", path)
        extra = f.read(1)
        if extra:
            raise IdxFormatError(f"{path.name}: trailing bytes after payload")
    return np.frombuffer(payload, dtype=np.uint8).copy()


def write_idx(artifact: DatasetArtifact, out_dir: str | Path) -> dict[str, Path]:
    """Write the six IDX files plus manifest.json; returns written paths."""
    n = artifact.images.shape[0]
    if n == 0:
        raise ValueError("refusing to export an empty dataset")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {key: out / name for key, name in FILES.items()}
    for split, indices in (("train", artifact.train_indices),
                           ("test", artifact.test_indices)):
        idx = np.asarray(indices, dtype=np.int64)
        images = artifact.images[idx] if len(idx) else artifact.images[:0]
        _write_idx_images(paths[f"{split}_images"], images)
        _write_idx_labels(paths[f"{split}_labels"], artifact.main_labels[idx])
        _write_idx_labels(paths[f"{split}_sublabels"], artifact.sub_labels[idx])
    with open(paths["manifest"], "w", encoding="utf-8") as f:
        json.dump(artifact.manifest.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return paths


def read_idx(out_dir: str | Path) -> DatasetArtifact:
    """Load a written dataset back; exact inverse of write_idx."""
    out = Path(out_dir)
    manifest_path = out / FILES["manifest"]
    if not manifest_path.exists():
        raise FileNotFoundError(f"missing {manifest_path}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = Manifest.from_dict(json.load(f))

    parts = {}
    for split in ("train", "test"):
        parts[split] = (
            _read_idx_images(out / FILES[f"{split}_images"]),
            _read_idx_labels(out / FILES[f"{split}_labels"]),
            _read_idx_labels(out / FILES[f"{split}_sublabels"]),
        )
    train_idx = manifest.train_indices
    test_idx = manifest.test_indices
    for split, idx in (("train", train_idx), ("test", test_idx)):
        if parts[split][0].shape[0] != len(idx):
            raise IdxFormatError(
                f"manifest lists {len(idx)} {split} samples but files hold "
                f"{parts[split][0].shape[0]}"
            )
    n = len(train_idx) + len(test_idx)
    if n == 0:
        raise IdxFormatError("dataset is empty")
    h, w = parts["train"][0].shape[1:] if len(train_idx) else parts["test"][0].shape[1:]
    images = np.zeros((n, h, w), dtype=np.uint8)
    main_labels = np.zeros(n, dtype=np.uint8)
    sub_labels = np.zeros(n, dtype=np.uint8)
    for (imgs, mains, subs), idx in ((parts["train"], train_idx),
                                     (parts["test"], test_idx)):
        for row, original in enumerate(idx):
            images[original] = imgs[row]
            main_labels[original] = mains[row]
            sub_labels[original] = subs[row]
    return DatasetArtifact(
        images=images, main_labels=main_labels, sub_labels=sub_labels,
        train_indices=list(train_idx), test_indices=list(test_idx),
        manifest=manifest,
    )
