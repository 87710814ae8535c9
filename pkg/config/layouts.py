"""
Shipped skeleton layouts.

Everything here is 1-based, the way the datasets number their joints; the
tables are converted to 0-based SkeletonLayout objects on lookup.
"""

from functools import lru_cache
from typing import Dict, List

from core.errors import ConfigurationError
from core.joint_matcher import suggest
from models.graph import ScaleDefinition
from models.skeleton import SkeletonLayout

# NTU RGB+D / Kinect v2, 25 joints
NTU25_JOINTS = [
    'spine_base', 'spine_mid', 'neck', 'head',
    'shoulder_left', 'elbow_left', 'wrist_left', 'hand_left',
    'shoulder_right', 'elbow_right', 'wrist_right', 'hand_right',
    'hip_left', 'knee_left', 'ankle_left', 'foot_left',
    'hip_right', 'knee_right', 'ankle_right', 'foot_right',
    'spine_shoulder', 'hand_tip_left', 'thumb_left', 'hand_tip_right', 'thumb_right',
]

NTU25_EDGES = [
    (1, 2), (2, 21), (3, 21), (4, 3), (5, 21), (6, 5), (7, 6), (8, 7),
    (9, 21), (10, 9), (11, 10), (12, 11), (13, 1), (14, 13), (15, 14), (16, 15),
    (17, 1), (18, 17), (19, 18), (20, 19), (22, 23), (23, 8), (24, 25), (25, 12),
]

# joint -> parent, oriented toward the spine-shoulder joint
NTU25_PARENTS = {
    1: 2, 2: 21, 3: 21, 4: 3, 5: 21, 6: 5, 7: 6, 8: 7, 9: 21, 10: 9, 11: 10, 12: 11,
    13: 1, 14: 13, 15: 14, 16: 15, 17: 1, 18: 17, 19: 18, 20: 19, 21: None,
    22: 23, 23: 8, 24: 25, 25: 12,
}

NTU25_SIDES = 'CCCCLLLLRRRRLLLLRRRRCLLRR'

NTU25_SCALES = [
    {
        'name': 'part',
        'subset': [1, 21, 4, 6, 7, 10, 11, 14, 15, 18, 19],
        'edges': [[21, 1], [21, 4], [21, 6], [6, 7], [21, 10], [10, 11],
                  [1, 14], [14, 15], [1, 18], [18, 19]],
    },
    {
        'name': 'core',
        'subset': [1, 21, 4, 7, 11, 15, 19],
        'edges': [[21, 1], [21, 4], [21, 7], [21, 11], [1, 15], [1, 19],
                  [7, 11], [15, 19]],
    },
]

# OpenPose COCO-18 as used for Kinetics-Skeleton
OPENPOSE18_JOINTS = [
    'nose', 'neck',
    'shoulder_right', 'elbow_right', 'wrist_right',
    'shoulder_left', 'elbow_left', 'wrist_left',
    'hip_right', 'knee_right', 'ankle_right',
    'hip_left', 'knee_left', 'ankle_left',
    'eye_right', 'eye_left', 'ear_right', 'ear_left',
]

OPENPOSE18_EDGES = [
    (5, 4), (4, 3), (8, 7), (7, 6), (14, 13), (13, 12), (11, 10), (10, 9),
    (12, 6), (9, 3), (6, 2), (3, 2), (1, 2), (16, 1), (15, 1), (18, 16), (17, 15),
]

OPENPOSE18_PARENTS = {
    1: 2, 2: None, 3: 2, 4: 3, 5: 4, 6: 2, 7: 6, 8: 7, 9: 3, 10: 9, 11: 10,
    12: 6, 13: 12, 14: 13, 15: 1, 16: 1, 17: 15, 18: 16,
}

OPENPOSE18_SIDES = 'CCRRRLLLRRRLLLRLRL'

OPENPOSE18_SCALES = [
    {
        'name': 'part',
        'subset': [2, 4, 5, 7, 8, 9, 10, 11, 12, 13, 14],
        'edges': [[2, 4], [4, 5], [2, 7], [7, 8], [2, 9], [9, 10], [10, 11],
                  [2, 12], [12, 13], [13, 14]],
    },
    {
        'name': 'core',
        'subset': [2, 5, 8, 9, 11, 12, 14],
        'edges': [[2, 5], [2, 8], [2, 9], [2, 12], [9, 11], [12, 14],
                  [5, 8], [11, 14]],
    },
]

LAYOUT_TABLES: Dict[str, Dict] = {
    'ntu25': {
        'joints': NTU25_JOINTS, 'edges': NTU25_EDGES, 'parents': NTU25_PARENTS,
        'center': 21, 'sides': NTU25_SIDES, 'coord_channels': 3,
        'has_confidence': False, 'max_persons': 2, 'scales': NTU25_SCALES,
    },
    'openpose18': {
        'joints': OPENPOSE18_JOINTS, 'edges': OPENPOSE18_EDGES, 'parents': OPENPOSE18_PARENTS,
        'center': 2, 'sides': OPENPOSE18_SIDES, 'coord_channels': 2,
        'has_confidence': True, 'max_persons': 1, 'scales': OPENPOSE18_SCALES,
    },
}

FULL_SCALE = 'full'


def layout_ids() -> List[str]:
    return sorted(LAYOUT_TABLES)


def full_scale(layout_id: str, joints: int, edges) -> ScaleDefinition:
    return ScaleDefinition(FULL_SCALE, layout_id, joints, tuple(range(joints)), tuple(edges))


@lru_cache(maxsize=None)
def get_layout(layout_id: str) -> SkeletonLayout:
    if layout_id not in LAYOUT_TABLES:
        hint = suggest(layout_id, layout_ids())
        raise ConfigurationError(
            f"unknown layout {layout_id!r}" + (f" (did you mean {hint!r}?)" if hint else '')
            + f"; known layouts: {', '.join(layout_ids())}")
    table = LAYOUT_TABLES[layout_id]
    joints = len(table['joints'])
    edges = tuple((a - 1, b - 1) for a, b in table['edges'])
    scales = [full_scale(layout_id, joints, edges)]
    scales += [ScaleDefinition.from_dict(s, layout_id, joints) for s in table['scales']]
    return SkeletonLayout(
        layout_id=layout_id,
        joint_names=tuple(table['joints']),
        edges=edges,
        parents=tuple(None if table['parents'][j] is None else table['parents'][j] - 1
                      for j in range(1, joints + 1)),
        center=table['center'] - 1,
        sides=tuple(table['sides']),
        coord_channels=table['coord_channels'],
        has_confidence=table['has_confidence'],
        max_persons=table['max_persons'],
        scales=tuple(scales),
    )
