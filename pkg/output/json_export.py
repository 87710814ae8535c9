"""JSON documents for --json output and report files."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

logger = logging.getLogger(__name__)


def _default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(doc: Dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_default)


def emit_json(doc: Dict):
    """The one JSON document a --json run prints to stdout."""
    print(to_json(doc))


def write_json(doc: Dict, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(doc) + "\n")
    logger.info(f"wrote {path}")
    return path
