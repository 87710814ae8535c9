"""
Dataset trees: a manifest.json plus one sequence document per entry.

    <root>/manifest.json
    <root>/sequences/train/00000.json
    <root>/sequences/test/00000.json

manifest.json = {"layout": str, "class_count": int,
                 "entries": [{"path": str, "label": int, "split": "train"|"test"}]}
Paths are relative to the root.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Dict, List, Optional, Union

from config.layouts import get_layout
from core.errors import ContractError, EmptyInputError, SequenceParseError
from data.sequence_io import read_sequence, write_sequence
from models.skeleton import DatasetManifest, ManifestEntry, SkeletonSequence, split_manifests

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


class SequenceStore:
    """
    Sequences by manifest path, either held in memory or read lazily from a
    dataset root and cached.
    """

    def __init__(self, root: Optional[Union[str, Path]] = None,
                 sequences: Optional[Dict[str, SkeletonSequence]] = None):
        self.root = Path(root) if root is not None else None
        self._cache: Dict[str, SkeletonSequence] = dict(sequences or {})
        self._lock = threading.Lock()

    def get(self, path: str) -> SkeletonSequence:
        with self._lock:
            if path in self._cache:
                return self._cache[path]
        if self.root is None:
            raise ContractError(f"sequence {path} is not in the in-memory store")
        seq = read_sequence(self.root / path)
        with self._lock:
            self._cache[path] = seq
        return seq

    def __contains__(self, path: str) -> bool:
        return path in self._cache or (self.root is not None and (self.root / path).exists())


class Dataset:
    """All splits of one dataset plus the store that resolves entry paths."""

    def __init__(self, layout_id: str, class_count: int, entries: List[ManifestEntry],
                 store: SequenceStore):
        get_layout(layout_id)
        self.layout_id = layout_id
        self.class_count = class_count
        self.entries = list(entries)
        self.store = store
        self._splits = split_manifests(self.entries, layout_id, class_count)

    def split(self, name: str) -> DatasetManifest:
        return self._splits[name]

    def has_split(self, name: str) -> bool:
        return name in self._splits and len(self._splits[name]) > 0

    def sequences(self, manifest: DatasetManifest) -> List[SkeletonSequence]:
        return [self.store.get(e.path) for e in manifest.entries]

    def __len__(self):
        return len(self.entries)

    def to_manifest_dict(self) -> Dict:
        return {
            'layout': self.layout_id,
            'class_count': self.class_count,
            'entries': [{'path': e.path, 'label': e.label, 'split': e.split} for e in self.entries],
        }


def read_manifest(root: Union[str, Path]) -> Dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise EmptyInputError(f"no {MANIFEST_NAME} under {root}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SequenceParseError(f"{path}: malformed JSON: {e}") from e
    for key in ('layout', 'class_count', 'entries'):
        if key not in doc:
            raise SequenceParseError(f"{path}: missing key {key!r}")
    return doc


def load_dataset(root: Union[str, Path]) -> Dataset:
    root = Path(root)
    doc = read_manifest(root)
    try:
        entries = [ManifestEntry(str(e['path']), int(e['label']), str(e.get('split', 'train')))
                   for e in doc['entries']]
    except (KeyError, TypeError, ValueError) as e:
        raise SequenceParseError(f"{root / MANIFEST_NAME}: malformed entry: {e}") from e
    if not entries:
        raise EmptyInputError(f"{root / MANIFEST_NAME} lists no sequences")
    dataset = Dataset(doc['layout'], int(doc['class_count']), entries, SequenceStore(root))
    logger.info(f"loaded dataset {root}: {len(entries)} entries, {dataset.class_count} classes, layout {dataset.layout_id}")
    return dataset


def write_dataset(dataset: Dataset, root: Union[str, Path]) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for entry in dataset.entries:
        write_sequence(dataset.store.get(entry.path), root / entry.path)
    manifest_path = root / MANIFEST_NAME
    manifest_path.write_text(json.dumps(dataset.to_manifest_dict(), indent=2))
    logger.info(f"wrote {len(dataset)} sequences to {root}")
    return manifest_path


def sequence_path(split: str, index: int) -> str:
    return f"sequences/{split}/{index:05d}.json"
