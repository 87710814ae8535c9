"""Data models for skeleton layouts, sequences and dataset manifests."""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.errors import ConfigurationError, ContractError, DimensionError, EmptyInputError
from models.graph import Edge, GraphSpec, ScaleDefinition

SPLITS = ('train', 'test')
PRECISIONS = ('double', 'single')


@dataclass(frozen=True)
class SkeletonLayout:
    """A joint set with its tree, center joint and shipped scales. Indices are 0-based."""
    layout_id: str
    joint_names: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    parents: Tuple[Optional[int], ...]
    center: int
    sides: Tuple[str, ...]
    coord_channels: int
    has_confidence: bool
    max_persons: int
    scales: Tuple[ScaleDefinition, ...] = ()

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    @property
    def channels(self) -> int:
        return self.coord_channels + (1 if self.has_confidence else 0)

    def parent_map(self) -> Dict[int, Optional[int]]:
        return dict(enumerate(self.parents))

    def graph_spec(self) -> GraphSpec:
        return GraphSpec(self.num_joints, self.edges, self.center, self.layout_id)

    def joint_index(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise ConfigurationError(f"layout {self.layout_id} has no joint {name!r}") from None

    def to_dict(self) -> Dict:
        return {
            'layout_id': self.layout_id,
            'joint_names': list(self.joint_names),
            'edges': [[a + 1, b + 1] for a, b in self.edges],
            'parents': [None if p is None else p + 1 for p in self.parents],
            'center': self.center + 1,
            'sides': list(self.sides),
            'coord_channels': self.coord_channels,
            'has_confidence': self.has_confidence,
            'max_persons': self.max_persons,
            'scales': [s.to_dict() for s in self.scales],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SkeletonLayout':
        layout_id = data['layout_id']
        joints = len(data['joint_names'])
        return cls(
            layout_id=layout_id,
            joint_names=tuple(data['joint_names']),
            edges=tuple((a - 1, b - 1) for a, b in data['edges']),
            parents=tuple(None if p is None else p - 1 for p in data['parents']),
            center=data['center'] - 1,
            sides=tuple(data['sides']),
            coord_channels=data['coord_channels'],
            has_confidence=data['has_confidence'],
            max_persons=data['max_persons'],
            scales=tuple(ScaleDefinition.from_dict(s, layout_id, joints) for s in data.get('scales', [])),
        )


@dataclass(frozen=True)
class SkeletonSequence:
    """
    One clip: data [C, T, V, M] (channels, frames, joints, persons).

    Frames past true_frames are replays written by pad_replay; before padding
    T equals true_frames.
    """
    data: np.ndarray
    label: int
    true_frames: int
    layout_id: str
    precision: str = 'double'

    def __post_init__(self):
        if self.data.ndim != 4:
            raise DimensionError(f"sequence data must be [C, T, V, M], got shape {self.data.shape}")
        if self.data.shape[1] == 0 or self.true_frames < 1:
            raise EmptyInputError(f"sequence has no frames (T={self.data.shape[1]}, true_frames={self.true_frames})")
        if self.true_frames > self.data.shape[1]:
            raise ContractError(f"true_frames {self.true_frames} exceeds stored frames {self.data.shape[1]}")
        if self.label < 0:
            raise ContractError(f"label must be non-negative, got {self.label}")
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f"precision must be one of {PRECISIONS}, got {self.precision!r}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def joints(self) -> int:
        return self.data.shape[2]

    @property
    def persons(self) -> int:
        return self.data.shape[3]

    def with_data(self, data: np.ndarray, true_frames: Optional[int] = None) -> 'SkeletonSequence':
        return replace(self, data=data, true_frames=self.true_frames if true_frames is None else true_frames)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    split: str = 'train'


@dataclass
class DatasetManifest:
    """One split of a dataset."""
    entries: List[ManifestEntry]
    split: str
    layout_id: str
    class_count: int

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigurationError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.class_count < 1:
            raise ConfigurationError(f"class_count must be positive, got {self.class_count}")
        seen = set()
        for entry in self.entries:
            if not 0 <= entry.label < self.class_count:
                raise ContractError(f"{entry.path}: label {entry.label} outside [0, {self.class_count})")
            if entry.path in seen:
                raise ContractError(f"duplicate manifest entry {entry.path}")
            seen.add(entry.path)

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> List[int]:
        return [e.label for e in self.entries]

    def label_counts(self) -> Dict[int, int]:
        counts = {c: 0 for c in range(self.class_count)}
        for entry in self.entries:
            counts[entry.label] += 1
        return counts


def split_manifests(entries: List[ManifestEntry], layout_id: str, class_count: int) -> Dict[str, DatasetManifest]:
    """Group entries by split; a locator may appear in only one split."""
    owner: Dict[str, str] = {}
    grouped: Dict[str, List[ManifestEntry]] = {s: [] for s in SPLITS}
    for entry in entries:
        if entry.split not in grouped:
            raise ConfigurationError(f"{entry.path}: unknown split {entry.split!r}")
        if entry.path in owner and owner[entry.path] != entry.split:
            raise ContractError(f"{entry.path} appears in both {owner[entry.path]} and {entry.split}")
        owner[entry.path] = entry.split
        grouped[entry.split].append(entry)
    return {s: DatasetManifest(e, s, layout_id, class_count) for s, e in grouped.items()}


@dataclass
class Batch:
    """Model-ready arrays: data [N, C, T, V, M] and labels [N]."""
    data: np.ndarray
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    def __len__(self):
        return int(self.data.shape[0])
