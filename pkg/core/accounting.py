"""
Parameter and multiply-accumulate accounting.

Parameter counts come from the built model's tensors. MACs are closed-form
from the config and the branch joint counts; nothing is executed. Terms:

  TGN layer       K*c_out*c_in*t*T'*V  (temporal kernels)
                + K*c_out*T'*V^2       (graph mixing)
  baseline layer  K*c_out*c_in*T*V + K*c_out*T*V^2 + c_out^2*t_b*T'*V
  projection      c_in*c_out*T'*V      (residual 1x1 map, when present)
  classifier      C_feat*classes per branch

Layer terms are per folded sample, so they scale with N*M; the classifier
sees the person-averaged features and scales with N only. Normalization,
pooling and activations are not counted. MACs are what the "FLOPs" column
reports, following the usual counting-tool convention.
"""

import logging
from dataclasses import replace
from typing import Dict, Optional, Sequence, Tuple

from config.settings import BASELINE_TEMPORAL_KERNEL, COUNT_INPUT_SHAPE
from core.network import build_model
from core.ops import temporal_output_length
from models.config import ModelConfig
from models.graph import PartitionStrategy
from models.report import CostBreakdown, CostReport
from models.tgn import TGNModel

logger = logging.getLogger(__name__)


def count_params(model: TGNModel) -> CostBreakdown:
    """Total scalar parameters, itemized per shared layer, branch-owned layer, masks and classifier."""
    items: Dict[str, int] = {}
    for p in model.parameters():
        parts = p.id.split('.')
        if parts[0] == 'layers':
            key = f"layers.{parts[1]}"
        elif parts[0] == 'branch' and parts[2] == 'layers':
            key = f"branch.{parts[1]}.layers.{parts[3]}"
        elif parts[0] == 'branch' and parts[2] == 'masks':
            key = f"masks.{parts[1]}"
        else:
            key = parts[0]
        items[key] = items.get(key, 0) + p.size
    return CostBreakdown(total=sum(items.values()), items=items)


def layer_macs(config: ModelConfig, joints: int, frames: int, partitions: int) -> Tuple[Dict[str, int], int]:
    """Per-layer MACs for one folded sample on a graph of `joints` nodes; returns (items, output frames)."""
    items = {}
    t = frames
    for i, layer in enumerate(config.layers):
        t_out = temporal_output_length(t, layer.stride)
        c_in, c_out, k = layer.c_in, layer.c_out, partitions
        if config.block == 'baseline':
            macs = k * c_out * c_in * t * joints + k * c_out * t * joints ** 2
            macs += c_out * c_out * config.baseline_kernel * t_out * joints
        else:
            macs = k * c_out * c_in * layer.temporal_kernel * t_out * joints
            macs += k * c_out * t_out * joints ** 2
        if layer.needs_projection:
            macs += c_in * c_out * t_out * joints
        items[f"layers.{i}"] = macs
        t = t_out
    return items, t


def count_flops(model: TGNModel, input_shape: Optional[Sequence[int]] = None) -> CostBreakdown:
    """MACs for input [N, C, T, V, M], itemized per branch layer plus classifier."""
    n, _, frames, _, persons = tuple(input_shape or COUNT_INPUT_SHAPE)
    config = model.config
    partitions = PartitionStrategy.parse(config.strategy).num_partitions
    items: Dict[str, int] = {}
    for branch in model.branches:
        per_layer, _ = layer_macs(config, branch.num_joints, frames, partitions)
        for name, macs in per_layer.items():
            items[f"{branch.name}.{name}"] = macs * n * persons
        items[f"{branch.name}.classifier"] = n * config.feature_channels * config.num_classes
    return CostBreakdown(total=sum(items.values()), items=items)


def reference_config(config: ModelConfig, baseline_kernel: int = BASELINE_TEMPORAL_KERNEL) -> ModelConfig:
    """The same network built from GCN-then-TCN blocks."""
    return replace(config, block='baseline', baseline_kernel=baseline_kernel)


def cost_report(model: TGNModel, input_shape: Optional[Sequence[int]] = None,
                with_reference: bool = True) -> CostReport:
    shape = tuple(input_shape or COUNT_INPUT_SHAPE)
    params = count_params(model)
    macs = count_flops(model, shape)
    report = CostReport(input_shape=list(shape), block=model.config.block,
                        scales=[b.name for b in model.branches], params=params, macs=macs)
    if with_reference and model.config.block == 'tgn':
        reference = build_model(reference_config(model.config), model.layout, model.scales)
        report.reference_params = count_params(reference)
        report.reference_macs = count_flops(reference, shape)
    logger.info(f"cost: {params.total:,} params, {macs.total:,} MACs")
    return report


def reference_costs(config: ModelConfig, input_shape: Optional[Sequence[int]] = None) -> CostReport:
    """Build the config (tgn block) and count it next to its baseline counterpart."""
    return cost_report(build_model(replace(config, block='tgn')), input_shape)
