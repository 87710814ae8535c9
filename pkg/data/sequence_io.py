"""
Reading and writing canonical skeleton sequence documents.

A document is one JSON object:

    {"layout": "ntu25", "label": 0, "true_frames": 7, "channels": 3,
     "persons": 1, "precision": "double", "frames": [T][M][V][C]}

"precision" is optional (default "double"). NaN and Infinity are rejected.
"""

import json
import logging
import math
from pathlib import Path
from typing import Union

import numpy as np

from config.layouts import get_layout
from core.errors import ConfigurationError, MSTGNError, SequenceParseError
from models.skeleton import PRECISIONS, SkeletonSequence

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('layout', 'label', 'true_frames', 'channels', 'persons', 'frames')
PRECISION_DTYPES = {'double': np.float64, 'single': np.float32}


def _reject_constant(token: str):
    raise SequenceParseError(f"non-finite number {token} in sequence document")


def _parse_int(doc: dict, key: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SequenceParseError(f"{key!r} must be an integer, got {value!r}")
    return value


def load_sequence(payload: Union[bytes, str]) -> SkeletonSequence:
    """Parse and validate one document."""
    try:
        doc = json.loads(payload, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SequenceParseError(f"malformed JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SequenceParseError(f"expected a JSON object, got {type(doc).__name__}")
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise SequenceParseError(f"missing keys: {', '.join(missing)}")

    try:
        layout = get_layout(doc['layout'])
    except ConfigurationError as e:
        raise SequenceParseError(str(e)) from e
    label = _parse_int(doc, 'label')
    true_frames = _parse_int(doc, 'true_frames')
    channels = _parse_int(doc, 'channels')
    persons = _parse_int(doc, 'persons')
    precision = doc.get('precision', 'double')
    if precision not in PRECISIONS:
        raise SequenceParseError(f"precision must be one of {PRECISIONS}, got {precision!r}")
    if channels != layout.channels:
        raise SequenceParseError(f"channel count {channels} ≠ {layout.channels} for layout {layout.layout_id}")
    if not 1 <= persons <= layout.max_persons:
        raise SequenceParseError(f"persons {persons} outside [1, {layout.max_persons}] for layout {layout.layout_id}")

    frames = doc['frames']
    if not isinstance(frames, list) or not frames:
        raise SequenceParseError("'frames' must be a non-empty list")
    if not 1 <= true_frames <= len(frames):
        raise SequenceParseError(f"true_frames {true_frames} outside [1, {len(frames)}]")

    joints = layout.num_joints
    array = np.zeros((len(frames), persons, joints, channels), dtype=PRECISION_DTYPES[precision])
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != persons:
            raise SequenceParseError(f"frame {t}: expected {persons} persons, got "
                                     f"{len(frame) if isinstance(frame, list) else type(frame).__name__}")
        for m, body in enumerate(frame):
            if not isinstance(body, list) or len(body) != joints:
                count = len(body) if isinstance(body, list) else 0
                raise SequenceParseError(f"frame {t}, person {m}: joint count {count} ≠ {joints}")
            for v, coords in enumerate(body):
                if not isinstance(coords, list) or len(coords) != channels:
                    raise SequenceParseError(f"frame {t}, person {m}, joint {v}: expected {channels} values")
                for c, value in enumerate(coords):
                    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                        raise SequenceParseError(
                            f"frame {t}, person {m}, joint {v}, channel {c}: invalid value {value!r}")
                array[t, m, v] = coords

    try:
        return SkeletonSequence(array.transpose(3, 0, 2, 1).copy(), label, true_frames,
                                layout.layout_id, precision)
    except MSTGNError as e:
        raise SequenceParseError(str(e)) from e


def _number(value, precision: str):
    if precision == 'single':
        return float(np.float32(value))
    return float(value)


def serialize_sequence(seq: SkeletonSequence) -> str:
    frames = seq.data.transpose(1, 3, 2, 0)  # [T, M, V, C]
    doc = {
        'layout': seq.layout_id,
        'label': int(seq.label),
        'true_frames': int(seq.true_frames),
        'channels': int(seq.channels),
        'persons': int(seq.persons),
        'precision': seq.precision,
        'frames': [[[[_number(c, seq.precision) for c in joint] for joint in body] for body in frame]
                   for frame in frames],
    }
    return json.dumps(doc, separators=(',', ':'))


def read_sequence(path: Union[str, Path]) -> SkeletonSequence:
    path = Path(path)
    try:
        return load_sequence(path.read_bytes())
    except SequenceParseError as e:
        raise SequenceParseError(f"{path}: {e}") from e


def write_sequence(seq: SkeletonSequence, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_sequence(seq))
    return path
