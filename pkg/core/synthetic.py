"""
Synthetic skeleton datasets for desk-scale training.

Every class gets its own motion pattern: a class-wide oscillation frequency
and, for each limb group (a subtree hanging off the root joint), its own
amplitude, direction and phase. Displacement grows with depth along the limb
so extremities swing the most. Samples add phase and amplitude jitter, a
random global offset, Gaussian noise and a random length in [3T/4, T].
"""

import logging
import math
from typing import Dict, List

import numpy as np

from config.layouts import get_layout
from core.errors import ConfigurationError
from data.manifest import Dataset, SequenceStore, sequence_path
from models.skeleton import ManifestEntry, SkeletonLayout, SkeletonSequence

logger = logging.getLogger(__name__)

REST_POSE_SEED = 1234
BONE_LENGTH = 0.15


def _depths(layout: SkeletonLayout) -> np.ndarray:
    depths = np.zeros(layout.num_joints, dtype=int)
    for joint in range(layout.num_joints):
        node = layout.parents[joint]
        while node is not None:
            depths[joint] += 1
            node = layout.parents[node]
    return depths


def limb_groups(layout: SkeletonLayout) -> List[List[int]]:
    """Joints grouped by which child of the root they hang from."""
    root = layout.parents.index(None)
    groups: Dict[int, List[int]] = {}
    for joint in range(layout.num_joints):
        if joint == root:
            continue
        node = joint
        while layout.parents[node] != root:
            node = layout.parents[node]
        groups.setdefault(node, []).append(joint)
    return [groups[k] for k in sorted(groups)]


def rest_pose(layout: SkeletonLayout) -> np.ndarray:
    """A fixed [V, coords] pose, identical for every seed."""
    rng = np.random.default_rng(REST_POSE_SEED)
    offsets = rng.normal(size=(layout.num_joints, layout.coord_channels))
    offsets *= BONE_LENGTH / np.linalg.norm(offsets, axis=1, keepdims=True)
    pose = np.zeros((layout.num_joints, layout.coord_channels))
    order = np.argsort(_depths(layout), kind='stable')
    for joint in order:
        parent = layout.parents[joint]
        if parent is not None:
            pose[joint] = pose[parent] + offsets[joint]
    return pose


def _class_patterns(rng: np.random.Generator, classes: int, groups: int, coords: int) -> List[Dict]:
    patterns = []
    for c in range(classes):
        directions = rng.normal(size=(groups, coords))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        patterns.append({
            'frequency': 1.0 + c,
            'amplitude': rng.uniform(0.1, 0.4, size=groups),
            'direction': directions,
            'phase': rng.uniform(0.0, 2 * math.pi, size=groups),
        })
    return patterns


def _sample(rng: np.random.Generator, pattern: Dict, layout: SkeletonLayout, groups: List[List[int]],
            depths: np.ndarray, pose: np.ndarray, frames: int, noise: float) -> np.ndarray:
    length = int(rng.integers(math.ceil(0.75 * frames), frames + 1))
    t = np.arange(length) / frames
    jitter = rng.uniform(-0.3, 0.3)
    gain = rng.uniform(0.9, 1.1)
    offset = rng.normal(0.0, 0.5, size=layout.coord_channels)

    positions = np.broadcast_to(pose + offset, (length,) + pose.shape).copy()
    for g, joints in enumerate(groups):
        wave = np.sin(2 * math.pi * pattern['frequency'] * t + pattern['phase'][g] + jitter)
        reach = depths[joints] / depths[joints].max()
        swing = gain * pattern['amplitude'][g] * wave[:, None, None] * reach[None, :, None]
        positions[:, joints] += swing * pattern['direction'][g][None, None, :]
    positions += rng.normal(0.0, noise, size=positions.shape)

    channels = [positions.transpose(2, 0, 1)]  # [coords, T, V]
    if layout.has_confidence:
        channels.append(np.ones((1, length, layout.num_joints)))
    return np.concatenate(channels)[..., None]  # [C, T, V, 1]


def synth_dataset(classes: int, per_class: int, layout_id: str = 'ntu25', frames: int = 64,
                  seed: int = 0, test_per_class: int = 0, noise: float = 0.01) -> Dataset:
    """Deterministic given its arguments; labels are balanced and interleaved."""
    if classes < 2:
        raise ConfigurationError(f"need at least 2 classes, got {classes}")
    if per_class < 1 or test_per_class < 0:
        raise ConfigurationError(f"per_class must be >= 1 and test_per_class >= 0, got {per_class}/{test_per_class}")
    if frames < 1:
        raise ConfigurationError(f"frames must be positive, got {frames}")
    layout = get_layout(layout_id)
    rng = np.random.default_rng(seed)
    groups = limb_groups(layout)
    depths = _depths(layout)
    pose = rest_pose(layout)
    patterns = _class_patterns(rng, classes, len(groups), layout.coord_channels)

    entries: List[ManifestEntry] = []
    sequences: Dict[str, SkeletonSequence] = {}
    for split, count in (('train', per_class), ('test', test_per_class)):
        index = 0
        for _ in range(count):
            for label in range(classes):
                data = _sample(rng, patterns[label], layout, groups, depths, pose, frames, noise)
                path = sequence_path(split, index)
                sequences[path] = SkeletonSequence(data, label, data.shape[1], layout.layout_id)
                entries.append(ManifestEntry(path, label, split))
                index += 1

    logger.info(f"synthesized {len(entries)} sequences: {classes} classes, layout {layout_id}, seed {seed}")
    return Dataset(layout.layout_id, classes, entries, SequenceStore(sequences=sequences))
