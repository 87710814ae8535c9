"""
Model checkpoints as a single .npz file.

Arrays:
  __meta__              JSON string: format version, model config, layout table, scales
  param.<id>            every Parameter, at the model's precision
  stats.<site>.mean/var running statistics per branch normalization site
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from core.errors import ConfigurationError, DimensionError
from core.network import build_model
from models.config import ModelConfig
from models.graph import ScaleDefinition
from models.skeleton import SkeletonLayout
from models.tgn import TGNModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(model: TGNModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.suffix != '.npz':
        path = path.with_suffix('.npz')
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        'format': FORMAT_VERSION,
        'model': model.config.to_dict(),
        'layout': model.layout.to_dict(),
        'scales': [s.to_dict() for s in model.scales],
    }
    arrays = {'__meta__': np.array(json.dumps(meta))}
    for pid, p in model.named_parameters().items():
        arrays[f"param.{pid}"] = p.data
    for site, state in model.running_stats().items():
        arrays[f"stats.{site}.mean"] = state.running_mean
        arrays[f"stats.{site}.var"] = state.running_var
    np.savez(path, **arrays)
    logger.info(f"saved checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> TGNModel:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"checkpoint {path} does not exist")
    with np.load(path, allow_pickle=False) as archive:
        meta = json.loads(str(archive['__meta__']))
        if meta.get('format') != FORMAT_VERSION:
            raise ConfigurationError(f"{path}: unsupported checkpoint format {meta.get('format')!r}")
        config = ModelConfig.from_dict(meta['model'])
        layout = SkeletonLayout.from_dict(meta['layout'])
        scales = [ScaleDefinition.from_dict(s, layout.layout_id, layout.num_joints) for s in meta['scales']]
        model = build_model(config, layout, scales)

        for pid, p in model.named_parameters().items():
            key = f"param.{pid}"
            if key not in archive:
                raise ConfigurationError(f"{path}: missing parameter {pid}")
            if archive[key].shape != p.shape:
                raise DimensionError(f"{path}: parameter {pid} has shape {archive[key].shape}, model expects {p.shape}")
            p.assign(archive[key])
        for site, state in model.running_stats().items():
            state.running_mean = archive[f"stats.{site}.mean"].astype(state.running_mean.dtype)
            state.running_var = archive[f"stats.{site}.var"].astype(state.running_var.dtype)
    logger.info(f"loaded checkpoint {path}: {config.block}, scales {list(config.scales)}")
    return model
