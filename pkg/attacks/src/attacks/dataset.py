"""Ingest the challenge-response CSVs written by the simulator's exporter.

The interchange format is deliberately dumb: a header ``a0,...,aN-1,label``
followed by one row of 0/1 values per response bit.  An optional metadata
JSON (written next to the CSVs by the exporter) carries row/feature counts
and a SHA-256 per file; when provided, the file is verified against it
before anything is parsed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Malformed, truncated, or mismatching input data."""


@dataclass(frozen=True)
class Split:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


@dataclass(frozen=True)
class AttackDataset:
    """Binary feature matrix plus one response bit per row."""

    features: np.ndarray          # uint8, shape (n_rows, n_features)
    labels: np.ndarray            # uint8, shape (n_rows,)
    split_ratio: float = 0.7      # train share
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.uint8)
        y = np.asarray(self.labels, dtype=np.uint8)
        if f.ndim != 2 or y.ndim != 1 or f.shape[0] != y.shape[0]:
            raise DatasetError(
                f"features {f.shape} do not line up with labels {y.shape}")
        if f.shape[0] == 0:
            raise DatasetError("dataset has no rows")
        if f.max(initial=0) > 1 or y.max(initial=0) > 1:
            raise DatasetError("features and labels must be 0/1")
        if not 0.0 < self.split_ratio < 1.0:
            raise DatasetError(
                f"split_ratio must be in (0, 1), got {self.split_ratio}")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)

    @property
    def n_bits(self) -> int:
        return int(self.labels.size)

    def split(self, seed: int) -> Split:
        """Seeded shuffle, then train/test partition at split_ratio."""
        order = np.random.default_rng(seed).permutation(self.n_bits)
        cut = int(self.split_ratio * self.n_bits)
        tr, te = order[:cut], order[cut:]
        return Split(self.features[tr], self.labels[tr],
                     self.features[te], self.labels[te])


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _verify_against_meta(path: Path, meta_path: Path, digest: str) -> dict:
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read metadata {meta_path}: {exc}") from exc
    for section in meta.values():
        if isinstance(section, dict) and section.get("file") == path.name:
            if section.get("sha256") not in (None, digest):
                raise DatasetError(
                    f"{path.name}: checksum mismatch against {meta_path.name}"
                    f" (expected {section['sha256']}, file has {digest})")
            return section
    raise DatasetError(f"{meta_path.name} has no entry for {path.name}")


def import_dataset(path: Path | str, meta_path: Path | str | None = None,
                   split_ratio: float = 0.7) -> AttackDataset:
    """Parse one exported CSV; verify it against exporter metadata if given."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc

    digest = _file_sha256(path)
    meta_entry: dict = {}
    if meta_path is not None:
        meta_entry = _verify_against_meta(path, Path(meta_path), digest)

    lines = text.splitlines()
    if not lines:
        raise DatasetError(f"{path}: line 1: empty file")
    header = lines[0].split(",")
    n_feat = len(header) - 1
    if (n_feat < 1 or header[-1] != "label"
            or header[:-1] != [f"a{i}" for i in range(n_feat)]):
        raise DatasetError(
            f"{path}: line 1: expected header a0,...,a{{N-1}},label, "
            f"got {lines[0]!r}")

    rows = np.empty((len(lines) - 1, n_feat + 1), dtype=np.uint8)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != n_feat + 1:
            raise DatasetError(
                f"{path}: line {i}: expected {n_feat + 1} values, "
                f"got {len(parts)}")
        for j, tok in enumerate(parts):
            if tok == "0":
                rows[i - 2, j] = 0
            elif tok == "1":
                rows[i - 2, j] = 1
            else:
                raise DatasetError(
                    f"{path}: line {i}: expected 0 or 1, got {tok!r}")
    if rows.shape[0] == 0:
        raise DatasetError(f"{path}: line 2: no data rows")

    if meta_entry:
        if meta_entry.get("rows") not in (None, rows.shape[0]):
            raise DatasetError(
                f"{path.name}: metadata says {meta_entry['rows']} rows, "
                f"file has {rows.shape[0]}")
        if meta_entry.get("features") not in (None, n_feat):
            raise DatasetError(
                f"{path.name}: metadata says {meta_entry['features']} "
                f"features, file has {n_feat}")

    source = {"path": str(path), "sha256": digest,
              "rows": int(rows.shape[0]), "features": n_feat}
    if meta_entry:
        source["meta"] = meta_entry
    return AttackDataset(features=rows[:, :-1], labels=rows[:, -1],
                         split_ratio=split_ratio, source=source)
