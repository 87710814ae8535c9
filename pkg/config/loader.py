"""
Run-config resolution.

A run config is one document with the sections seed, model, train, data and
graph. It comes from a shipped preset name or a .yaml/.yml/.json file, then
CLI flags, then --set key=value overrides (dotted keys, YAML scalar values)
are applied on top. Unknown keys anywhere are errors.
"""

import copy
import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import yaml

from config.layouts import get_layout
from core.errors import ConfigurationError
from core.graphs import load_scales
from core.joint_matcher import suggest
from models.config import MODEL_KEYS, DataConfig, GraphConfig, ModelConfig, RunConfig, TrainConfig
from models.graph import ScaleDefinition

logger = logging.getLogger(__name__)

CONFIG_SUFFIXES = ('.yaml', '.yml', '.json')

SECTION_KEYS: Dict[str, List[str]] = {
    'model': list(MODEL_KEYS),
    'train': [f.name for f in fields(TrainConfig)],
    'data': [f.name for f in fields(DataConfig)],
    'graph': ['scales'],
}
TOP_LEVEL_KEYS = ['seed'] + list(SECTION_KEYS)

PRESETS: Dict[str, Dict] = {
    'ntu25_default': {
        'model': {'layout': 'ntu25', 'num_classes': 60},
    },
    'openpose18_default': {
        'model': {'layout': 'openpose18', 'num_classes': 400},
    },
    'desk': {
        'model': {
            'layout': 'ntu25', 'num_classes': 2, 'input_frames': 64,
            'channels': [16, 16, 32, 32], 'dtype': 'single',
        },
        'train': {'epochs': 200, 'batch_size': 32, 'lr_decay_epochs': [150, 180], 'target_top1': 0.95},
    },
}


def _unknown_key(key: str, valid: Iterable[str], where: str) -> ConfigurationError:
    valid = list(valid)
    hint = suggest(key, valid)
    return ConfigurationError(
        f"unknown key {where + key!r}" + (f" (did you mean {where + hint!r}?)" if hint else '')
        + f"; valid keys: {', '.join(valid)}")


def validate_document(doc: Dict):
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config must be a mapping, got {type(doc).__name__}")
    for key, value in doc.items():
        if key not in TOP_LEVEL_KEYS:
            raise _unknown_key(key, TOP_LEVEL_KEYS, '')
        if key in SECTION_KEYS:
            if not isinstance(value, dict):
                raise ConfigurationError(f"section {key!r} must be a mapping")
            for sub in value:
                if sub not in SECTION_KEYS[key]:
                    raise _unknown_key(sub, SECTION_KEYS[key], f"{key}.")


def load_document(source: str) -> Dict:
    """A preset name or a config file path."""
    if source in PRESETS:
        return copy.deepcopy(PRESETS[source])
    path = Path(source)
    if path.suffix.lower() not in CONFIG_SUFFIXES or not path.exists():
        hint = suggest(source, PRESETS)
        raise ConfigurationError(
            f"config {source!r} is neither a preset nor an existing {'/'.join(CONFIG_SUFFIXES)} file"
            + (f" (did you mean preset {hint!r}?)" if hint else '')
            + f"; presets: {', '.join(PRESETS)}")
    try:
        doc = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: cannot parse config: {e}") from e
    validate_document(doc)
    return doc


def set_dotted(doc: Dict, key: str, value: Any):
    parts = key.split('.')
    if parts[0] not in TOP_LEVEL_KEYS:
        raise _unknown_key(parts[0], TOP_LEVEL_KEYS, '')
    if parts[0] == 'seed':
        if len(parts) != 1:
            raise ConfigurationError(f"'seed' has no sub-keys, got {key!r}")
        doc['seed'] = value
        return
    if len(parts) != 2:
        raise ConfigurationError(f"override keys look like section.key, got {key!r}")
    section, name = parts
    if name not in SECTION_KEYS[section]:
        raise _unknown_key(name, SECTION_KEYS[section], f"{section}.")
    doc.setdefault(section, {})[name] = value


def parse_override(text: str) -> Tuple[str, Any]:
    if '=' not in text:
        raise ConfigurationError(f"override must look like key=value, got {text!r}")
    key, raw = text.split('=', 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"override {text!r}: cannot parse value: {e}") from e
    return key.strip(), value


def build_run_config(doc: Dict, name: str = 'custom') -> RunConfig:
    validate_document(doc)
    seed = int(doc.get('seed', 0))
    model_doc = dict(doc.get('model', {}))
    layout = get_layout(str(model_doc.get('layout', 'ntu25')))
    model_doc.setdefault('in_channels', layout.channels)
    model_doc.setdefault('persons', layout.max_persons)
    train_doc = dict(doc.get('train', {}))
    train_doc['seed'] = seed
    graph_doc = doc.get('graph', {})
    scales = graph_doc.get('scales') or []
    if not isinstance(scales, list):
        raise ConfigurationError("graph.scales must be a list of {name, subset, edges}")
    try:
        return RunConfig(
            seed=seed,
            model=ModelConfig.from_dict(model_doc),
            train=TrainConfig.from_dict(train_doc),
            data=DataConfig(**doc.get('data', {})),
            graph=GraphConfig(tuple(scales)),
            name=name,
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid config value: {e}") from e


def resolve_run_config(source: str, overrides: Iterable[str] = (), seed: Optional[int] = None,
                       flags: Optional[Dict[str, Any]] = None) -> RunConfig:
    """preset/file -> CLI flags -> --set overrides."""
    doc = load_document(source)
    for key, value in (flags or {}).items():
        if value is not None:
            set_dotted(doc, key, value)
    if seed is not None:
        doc['seed'] = seed
    for text in overrides:
        key, value = parse_override(text)
        set_dotted(doc, key, value)
    name = source if source in PRESETS else Path(source).stem
    return build_run_config(doc, name)


def available_scales(run_config: RunConfig) -> List[ScaleDefinition]:
    """Shipped scales of the run's layout with graph.scales entries layered on top."""
    layout = get_layout(run_config.model.layout_id)
    return load_scales(run_config.graph.scales, layout)
