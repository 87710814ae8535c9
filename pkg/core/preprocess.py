"""
Sequence preprocessing: replay padding, translation normalization, bones,
and the optional view alignment and scale normalization.

All functions take and return SkeletonSequence and never modify their input.
Only the coordinate channels are touched; a trailing confidence channel
passes through as-is.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np

from core.errors import ConfigurationError, EmptyInputError
from models.skeleton import SkeletonLayout, SkeletonSequence

logger = logging.getLogger(__name__)

DEFAULT_FRAMES = 300
STREAMS = ('joint', 'bone')
RIGHT_SHOULDER, LEFT_SHOULDER = 'shoulder_right', 'shoulder_left'
DEGENERATE_LENGTH = 1e-8


def pad_replay(seq: SkeletonSequence, target_frames: int = DEFAULT_FRAMES) -> SkeletonSequence:
    """Frame i of the output is true frame (i mod true_frames)."""
    if seq.true_frames < 1:
        raise EmptyInputError("cannot pad a sequence with zero frames")
    if target_frames < 1:
        raise ConfigurationError(f"target frame count must be positive, got {target_frames}")
    true_frames = seq.true_frames
    if true_frames > target_frames:
        logger.debug(f"truncating {true_frames} frames to {target_frames}")
        true_frames = target_frames
    index = np.arange(target_frames) % true_frames
    return seq.with_data(seq.data[:, index].copy(), true_frames)


def center_normalize(seq: SkeletonSequence, layout: SkeletonLayout) -> SkeletonSequence:
    """Subtract the center joint of frame 0, person 0 from every coordinate."""
    coords = layout.coord_channels
    origin = seq.data[:coords, 0, layout.center, 0]
    data = seq.data.copy()
    data[:coords] -= origin[:, None, None, None]
    return seq.with_data(data)


def align_view(seq: SkeletonSequence, layout: SkeletonLayout) -> SkeletonSequence:
    """
    Rotate so the frame-0 shoulder line of person 0 (right to left shoulder)
    points along +x. 3D layouts turn about the vertical y axis, 2D layouts
    turn in the image plane. A degenerate shoulder line leaves the clip as is.
    """
    coords = layout.coord_channels
    right, left = layout.joint_index(RIGHT_SHOULDER), layout.joint_index(LEFT_SHOULDER)
    line = seq.data[:coords, 0, left, 0] - seq.data[:coords, 0, right, 0]
    if coords == 3:
        dx, dz = line[0], line[2]
        if np.hypot(dx, dz) < DEGENERATE_LENGTH:
            logger.debug("shoulder line is vertical at frame 0, skipping view alignment")
            return seq
        theta = np.arctan2(dz, dx)
        c, s = np.cos(theta), np.sin(theta)
        rotation = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    elif coords == 2:
        if np.hypot(line[0], line[1]) < DEGENERATE_LENGTH:
            logger.debug("shoulders coincide at frame 0, skipping view alignment")
            return seq
        theta = np.arctan2(line[1], line[0])
        c, s = np.cos(theta), np.sin(theta)
        rotation = np.array([[c, s], [-s, c]])
    else:
        raise ConfigurationError(f"view alignment needs 2 or 3 coordinates, layout has {coords}")
    data = seq.data.copy()
    data[:coords] = np.einsum('ij,jtvm->itvm', rotation, seq.data[:coords])
    return seq.with_data(data)


def normalize_scale(seq: SkeletonSequence, layout: SkeletonLayout) -> SkeletonSequence:
    """Divide coordinates by the mean bone length of person 0 at frame 0."""
    coords = layout.coord_channels
    pose = seq.data[:coords, 0, :, 0]
    lengths = [np.linalg.norm(pose[:, j] - pose[:, p]) for j, p in enumerate(layout.parents) if p is not None]
    unit = float(np.mean(lengths)) if lengths else 0.0
    if unit < DEGENERATE_LENGTH:
        logger.debug("bones have zero length at frame 0, skipping scale normalization")
        return seq
    data = seq.data.copy()
    data[:coords] /= unit
    return seq.with_data(data)


def validate_parent_map(parents: Dict[int, Optional[int]], num_joints: int) -> int:
    """Check that parents form a tree over all joints; returns the root."""
    roots = [j for j in range(num_joints) if parents.get(j) is None]
    if len(roots) != 1:
        raise ConfigurationError(f"parent map needs exactly one root, found {len(roots)}: {roots}")
    for joint in range(num_joints):
        seen = {joint}
        node = parents.get(joint)
        while node is not None:
            if not 0 <= node < num_joints:
                raise ConfigurationError(f"joint {joint}: parent {node} outside [0, {num_joints})")
            if node in seen:
                raise ConfigurationError(f"parent map has a cycle through joint {node}")
            seen.add(node)
            node = parents.get(node)
    return roots[0]


def bone_transform(seq: SkeletonSequence, parents: Dict[int, Optional[int]],
                   coord_channels: Optional[int] = None) -> SkeletonSequence:
    """Replace each joint by its offset from its parent; the root becomes zero."""
    root = validate_parent_map(parents, seq.joints)
    coords = seq.channels if coord_channels is None else coord_channels
    parent_index = np.array([root if parents.get(j) is None else parents[j] for j in range(seq.joints)])
    data = seq.data.copy()
    data[:coords] = seq.data[:coords] - seq.data[:coords][:, :, parent_index]
    return seq.with_data(data)


def fill_persons(seq: SkeletonSequence, persons: int) -> SkeletonSequence:
    """Zero-fill absent bodies up to `persons`; extra bodies are dropped."""
    if persons < 1:
        raise ConfigurationError(f"persons must be positive, got {persons}")
    have = seq.persons
    if have == persons:
        return seq
    if have > persons:
        logger.warning(f"dropping {have - persons} extra bodies (layout allows {persons})")
        return seq.with_data(seq.data[..., :persons].copy())
    pad = np.zeros(seq.data.shape[:3] + (persons - have,), dtype=seq.data.dtype)
    return seq.with_data(np.concatenate([seq.data, pad], axis=3))


def preprocess(seq: SkeletonSequence, layout: SkeletonLayout, frames: int = DEFAULT_FRAMES,
               center: bool = True, stream: str = 'joint', persons: Optional[int] = None,
               align: bool = False, rescale: bool = False) -> np.ndarray:
    """pad -> center -> align view -> rescale -> optional bones -> fill persons; returns [C, T, V, M]."""
    if stream not in STREAMS:
        raise ConfigurationError(f"stream must be one of {STREAMS}, got {stream!r}")
    if seq.layout_id != layout.layout_id:
        raise ConfigurationError(f"sequence layout {seq.layout_id!r} does not match model layout {layout.layout_id!r}")
    out = pad_replay(seq, frames)
    if center:
        out = center_normalize(out, layout)
    if align:
        out = align_view(out, layout)
    if rescale:
        out = normalize_scale(out, layout)
    if stream == 'bone':
        out = bone_transform(out, layout.parent_map(), layout.coord_channels)
    out = fill_persons(out, persons or layout.max_persons)
    return out.data


def stack_batch(arrays: Sequence[np.ndarray], dtype=np.float64) -> np.ndarray:
    if not arrays:
        raise EmptyInputError("cannot assemble an empty batch")
    return np.stack(arrays).astype(dtype, copy=False)
