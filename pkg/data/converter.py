"""
Converter stub for named-joint skeleton documents.

Accepts exports shaped like

    {"label": 3, "frames": [{"bodies": [{"joints": {"ShoulderLeft": [x, y, z], ...}}]}]}

and maps joint names onto a shipped layout with JointMatcher. It only
covers this generic shape; native NTU .skeleton files and raw OpenPose
output must be turned into it first.
"""

import json
import logging
import math
from typing import Dict, List, Union

import numpy as np

from config.layouts import get_layout
from core.errors import SequenceParseError
from core.joint_matcher import JointMatcher
from models.skeleton import SkeletonSequence

logger = logging.getLogger(__name__)


def is_named_joint_document(doc) -> bool:
    return isinstance(doc, dict) and 'frames' in doc and 'layout' not in doc


def convert_document(payload: Union[bytes, str, Dict], layout_id: str) -> SkeletonSequence:
    layout = get_layout(layout_id)
    if isinstance(payload, dict):
        doc = payload
    else:
        try:
            doc = json.loads(payload)
        except json.JSONDecodeError as e:
            raise SequenceParseError(f"malformed JSON: {e}") from e
    if not is_named_joint_document(doc):
        raise SequenceParseError("not a named-joint document (needs 'frames' and no 'layout')")

    label = doc.get('label', 0)
    frames = doc['frames']
    if not isinstance(frames, list) or not frames:
        raise SequenceParseError("'frames' must be a non-empty list")

    bodies_per_frame = [len(f.get('bodies', [])) if isinstance(f, dict) else 0 for f in frames]
    persons = max(bodies_per_frame)
    if persons == 0:
        raise SequenceParseError("no bodies in any frame")
    if persons > layout.max_persons:
        logger.warning(f"{persons} bodies found, layout {layout.layout_id} keeps {layout.max_persons}")
        persons = layout.max_persons

    matcher = JointMatcher(layout)
    mapping: Dict[str, int] = {}
    data = np.zeros((layout.channels, len(frames), layout.num_joints, persons))
    for t, frame in enumerate(frames):
        bodies: List = frame.get('bodies', []) if isinstance(frame, dict) else []
        for m, body in enumerate(bodies[:persons]):
            joints = body.get('joints', {}) if isinstance(body, dict) else {}
            new_names = [n for n in joints if n not in mapping]
            if new_names:
                mapping.update(matcher.map_names(new_names))
            missing = [n for i, n in enumerate(layout.joint_names) if i not in {mapping.get(k) for k in joints}]
            if missing:
                raise SequenceParseError(f"frame {t}, body {m}: missing joints {', '.join(missing)}")
            for name, coords in joints.items():
                if name not in mapping:
                    continue
                values = _coords(coords, layout.coord_channels, layout.has_confidence, t, name)
                data[:, t, mapping[name], m] = values

    logger.info(f"converted {len(frames)} frames, {persons} bodies onto {layout.layout_id}")
    return SkeletonSequence(data, int(label), len(frames), layout.layout_id)


def _coords(coords, coord_channels: int, has_confidence: bool, frame: int, name: str) -> List[float]:
    if not isinstance(coords, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool)
                                               for c in coords):
        raise SequenceParseError(f"frame {frame}, joint {name}: coordinates must be a list of numbers")
    values = [float(c) for c in coords]
    if not all(math.isfinite(v) for v in values):
        raise SequenceParseError(f"frame {frame}, joint {name}: non-finite coordinate")
    if len(values) == coord_channels and has_confidence:
        values.append(1.0)
    expected = coord_channels + (1 if has_confidence else 0)
    if len(values) != expected:
        raise SequenceParseError(f"frame {frame}, joint {name}: expected {expected} values, got {len(values)}")
    return values
