"""Manifest loading with hash verification, and CSV table access.

The renderer consumes only files listed in a run manifest and refuses to touch
anything whose content hash has drifted from the recorded value.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class HashMismatch(Exception):
    """A manifest-listed file no longer matches its recorded sha256."""


class MissingColumns(Exception):
    """A table lacks the columns a plot kind requires."""


PLOT_KINDS = ("convergence", "snapshot", "histogram-heatmap", "moments")


@dataclass
class PlotJob:
    manifest_path: Path
    kind: str
    out_dir: Path
    loglog: bool = True

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; choose from {PLOT_KINDS}")


@dataclass
class Manifest:
    path: Path
    body: dict
    hash_prefix: str

    @property
    def run_dir(self) -> Path:
        return self.path.parent

    def file(self, name: str) -> Path:
        """Path of a manifest-listed output, verified against its hash."""
        for entry in self.body["outputs"]:
            if entry["name"] == name:
                p = self.run_dir / name
                digest = hashlib.sha256(p.read_bytes()).hexdigest()
                if digest != entry["sha256"]:
                    raise HashMismatch(
                        f"{name}: recorded {entry['sha256'][:12]}, found {digest[:12]}")
                return p
        raise FileNotFoundError(f"{name} is not listed in the manifest")

    def names(self) -> list:
        return [e["name"] for e in self.body["outputs"]]


def load_manifest(path) -> Manifest:
    path = Path(path)
    raw = path.read_bytes()
    body = json.loads(raw)
    prefix = hashlib.sha256(raw).hexdigest()[:12]
    for key in ("outputs", "experiment"):
        if key not in body:
            raise ValueError(f"not a run manifest: missing {key!r}")
    return Manifest(path, body, prefix)


def read_table(path: Path, required: tuple = ()) -> dict:
    """CSV as a dict of column name -> list of strings; checks required columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MissingColumns(f"{path.name}: empty file")
        rows = [r for r in reader if r]
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumns(f"{path.name}: missing columns {missing}")
    cols = {name: [] for name in header}
    for r in rows:
        for name, val in zip(header, r):
            cols[name].append(val)
    return cols
