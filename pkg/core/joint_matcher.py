"""
Matching joint names from foreign skeleton documents onto a layout.

Kinect, OpenPose and MediaPipe all spell the same joint differently
("ShoulderLeft", "LShoulder", "LEFT_SHOULDER", "shoulder_left"). Names are
reduced to a canonical "<side> <part words>" form first; anything that still
does not match exactly goes through rapidfuzz.
"""

import logging
import re
from typing import Dict, Iterable, List, Optional

from rapidfuzz import fuzz, process

from models.skeleton import SkeletonLayout

logger = logging.getLogger(__name__)

SIDE_ALIASES = {
    'l': 'left', 'left': 'left', 'lft': 'left',
    'r': 'right', 'right': 'right', 'rt': 'right',
}

# part words that mean the same joint in different toolkits
PART_ALIASES = {
    'spineshoulder': 'spine shoulder', 'spinemid': 'spine mid', 'spinebase': 'spine base',
    'handtip': 'hand tip', 'hip center': 'spine base', 'pelvis': 'spine base',
    'shoulder center': 'spine shoulder', 'chest': 'spine mid',
    'thumb tip': 'thumb', 'big toe': 'foot', 'toe': 'foot',
}

_CAMEL = re.compile(r'(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])')


def normalize_joint_name(name: str) -> str:
    """'LEFT_ELBOW', 'LElbow', 'ElbowLeft' and 'elbow_left' all become 'left elbow'."""
    if not name:
        return ''
    spaced = _CAMEL.sub(' ', name.strip())
    words = [w for w in re.split(r'[\s_\-.]+', spaced.lower()) if w]
    side = None
    rest = []
    for word in words:
        if side is None and word in SIDE_ALIASES:
            side = SIDE_ALIASES[word]
        else:
            rest.append(word)
    part = ' '.join(rest)
    part = PART_ALIASES.get(part, PART_ALIASES.get(part.replace(' ', ''), part))
    return f"{side} {part}" if side else part


def suggest(value: str, choices: Iterable[str], cutoff: int = 60) -> Optional[str]:
    """Closest choice to value, or None when nothing is close enough."""
    choices = list(choices)
    if not value or not choices:
        return None
    best = process.extractOne(value, choices, scorer=fuzz.ratio, score_cutoff=cutoff)
    return best[0] if best else None


class JointMatcher:
    """Maps joint names to indices of one layout."""

    def __init__(self, layout: SkeletonLayout, match_threshold: int = 85):
        self.layout = layout
        self.match_threshold = match_threshold
        self._canonical: Dict[str, int] = {
            normalize_joint_name(name): i for i, name in enumerate(layout.joint_names)
        }

    def match(self, name: str) -> Optional[int]:
        key = normalize_joint_name(name)
        if key in self._canonical:
            return self._canonical[key]
        best = process.extractOne(key, list(self._canonical), scorer=fuzz.ratio,
                                  score_cutoff=self.match_threshold)
        if best is None:
            return None
        logger.debug(f"joint {name!r} matched {best[0]!r} at score {best[1]:.0f}")
        return self._canonical[best[0]]

    def map_names(self, names: Iterable[str]) -> Dict[str, int]:
        """Match every name; unmatched names are logged and left out."""
        mapping: Dict[str, int] = {}
        taken: Dict[int, str] = {}
        for name in names:
            index = self.match(name)
            if index is None:
                logger.warning(f"joint {name!r} has no counterpart in layout {self.layout.layout_id}")
                continue
            if index in taken:
                logger.warning(f"joints {taken[index]!r} and {name!r} both map to "
                               f"{self.layout.joint_names[index]!r}; keeping the first")
                continue
            taken[index] = name
            mapping[name] = index
        return mapping

    def missing(self, mapping: Dict[str, int]) -> List[str]:
        found = set(mapping.values())
        return [n for i, n in enumerate(self.layout.joint_names) if i not in found]
