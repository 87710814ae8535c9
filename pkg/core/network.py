"""
The TGN layer, the GCN-then-TCN baseline block, and the multi-scale network.

A TGN layer folds the temporal kernel into the neighbour aggregation: every
partition p gets its own [c_out, c_in, t] kernel, applied per joint over
time, and the results are mixed across joints by that partition's
adjacency (times its edge-importance mask):

    y = relu(BN(sum_p A_p (W_p * x) + b) + residual(x))

The baseline block keeps the two stages apart: a per-frame graph convolution
with 1x1 kernels, then a separate temporal convolution.

The network folds persons into the batch, runs every enabled scale branch
(its own joint subset, adjacency and masks), pools, averages persons back
out, classifies with one shared classifier and averages the branch scores.
"""

import logging
from typing import List, Optional, Sequence, Union

import numpy as np

from config.layouts import get_layout
from config.settings import BN_EPS, BN_MOMENTUM
from core import ops
from core.errors import ConfigurationError, ContractError, DimensionError
from core.graphs import build_adjacency, check_adjacency_stack, resolve_scales, select_scale
from core.tensor import BatchNormState, Parameter, Tensor, resolve_dtype
from models.config import LayerConfig, ModelConfig
from models.graph import AdjacencyStack, PartitionStrategy, ScaleDefinition
from models.skeleton import SkeletonLayout
from models.tgn import LayerParams, LayerStats, ScaleBranch, TGNModel

logger = logging.getLogger(__name__)

AdjacencyLike = Union[AdjacencyStack, Tensor, np.ndarray]


def _adjacency_tensor(adjacency: AdjacencyLike, dtype) -> Tensor:
    if isinstance(adjacency, Tensor):
        return adjacency
    array = adjacency.partitions if isinstance(adjacency, AdjacencyStack) else np.asarray(adjacency)
    if array.ndim == 2:
        array = array[None]
    return Tensor(array, dtype=dtype)


def _check_layer_inputs(x: Tensor, adjacency: Tensor, mask: Optional[Tensor], layer: LayerConfig):
    if x.ndim != 4:
        raise DimensionError(f"layer input must be [N, C, T, V], got {x.shape}")
    if x.shape[1] != layer.c_in:
        raise DimensionError(f"layer expects {layer.c_in} channels, input has {x.shape[1]}")
    if adjacency.ndim != 3 or adjacency.shape[1:] != (x.shape[3], x.shape[3]):
        raise DimensionError(f"adjacency {adjacency.shape} does not match {x.shape[3]} joints")
    if mask is not None and mask.shape != adjacency.shape:
        raise DimensionError(f"mask {mask.shape} does not match adjacency {adjacency.shape}")


def _mixed(adjacency: Tensor, mask: Optional[Tensor]) -> Tensor:
    return adjacency if mask is None else ops.multiply(adjacency, mask)


def fresh_layer_stats(layer: LayerConfig, block: str = 'tgn', dtype=np.float64) -> LayerStats:
    if layer.linear:
        return LayerStats()

    def state():
        s = BatchNormState.fresh(layer.c_out, dtype)
        s.momentum, s.eps = BN_MOMENTUM, BN_EPS
        return s

    return LayerStats(
        bn=state(),
        residual_bn=state() if layer.needs_projection else None,
        tcn_bn=state() if block == 'baseline' else None,
    )


def _residual(x: Tensor, layer: LayerConfig, params: LayerParams, stats: LayerStats, mode: str) -> Tensor:
    if not layer.needs_projection:
        return x
    r = ops.temporal_conv(x, params.residual_weight, params.residual_bias, layer.stride)
    return ops.batch_norm(r, params.residual_bn_scale, params.residual_bn_shift, stats.residual_bn, mode)


def tgn_layer_forward(x: Tensor, adjacency: AdjacencyLike, mask: Optional[Tensor], layer: LayerConfig,
                      params: LayerParams, stats: Optional[LayerStats] = None, mode: str = 'eval') -> Tensor:
    """One fused spatiotemporal layer: [N, c_in, T, V] -> [N, c_out, T', V]."""
    adjacency = _adjacency_tensor(adjacency, x.dtype)
    _check_layer_inputs(x, adjacency, mask, layer)
    k = adjacency.shape[0]
    expected = (k, layer.c_out, layer.c_in, layer.temporal_kernel)
    if params.weight.shape != expected:
        raise DimensionError(f"TGN weight {params.weight.shape} does not match {expected}")

    n, _, _, v = x.shape
    w = ops.reshape(params.weight, (k * layer.c_out, layer.c_in, layer.temporal_kernel))
    h = ops.temporal_conv(x, w, None, layer.stride)
    h = ops.reshape(h, (n, k, layer.c_out, h.shape[2], v))
    y = ops.graph_mix_partitions(_mixed(adjacency, mask), h)
    if layer.linear:
        return y

    stats = stats if stats is not None else fresh_layer_stats(layer, 'tgn', x.dtype)
    y = ops.bias_add(y, params.bias)
    y = ops.batch_norm(y, params.bn_scale, params.bn_shift, stats.bn, mode)
    if layer.residual:
        y = ops.add(y, _residual(x, layer, params, stats, mode))
    return ops.relu(y)


def baseline_gcn_tcn_forward(x: Tensor, adjacency: AdjacencyLike, layer: LayerConfig, params: LayerParams,
                             stats: Optional[LayerStats] = None, mode: str = 'eval',
                             mask: Optional[Tensor] = None) -> Tensor:
    """
    Per-frame graph convolution, then a separate temporal convolution.

    Linear layers compute exactly TCN(sum_p A_p (G_p x)); otherwise
    bias-BN-ReLU follow the graph stage and BN-residual-ReLU the temporal one.
    """
    adjacency = _adjacency_tensor(adjacency, x.dtype)
    _check_layer_inputs(x, adjacency, mask, layer)
    k = adjacency.shape[0]
    if params.weight.shape != (k, layer.c_out, layer.c_in, 1):
        raise DimensionError(f"baseline 1x1 weight {params.weight.shape} does not match "
                             f"{(k, layer.c_out, layer.c_in, 1)}")
    if params.tcn_weight is None or params.tcn_weight.shape[:2] != (layer.c_out, layer.c_out):
        raise DimensionError(f"baseline temporal weight must be [{layer.c_out}, {layer.c_out}, t]")

    n, _, frames, v = x.shape
    w = ops.reshape(params.weight, (k * layer.c_out, layer.c_in, 1))
    h = ops.reshape(ops.temporal_conv(x, w), (n, k, layer.c_out, frames, v))
    y = ops.graph_mix_partitions(_mixed(adjacency, mask), h)
    if layer.linear:
        return ops.temporal_conv(y, params.tcn_weight, None, layer.stride)

    stats = stats if stats is not None else fresh_layer_stats(layer, 'baseline', x.dtype)
    y = ops.bias_add(y, params.bias)
    y = ops.relu(ops.batch_norm(y, params.bn_scale, params.bn_shift, stats.bn, mode))
    y = ops.temporal_conv(y, params.tcn_weight, params.tcn_bias, layer.stride)
    y = ops.batch_norm(y, params.tcn_bn_scale, params.tcn_bn_shift, stats.tcn_bn, mode)
    if layer.residual:
        y = ops.add(y, _residual(x, layer, params, stats, mode))
    return ops.relu(y)


def fuse_baseline_kernel(tcn_weight: np.ndarray, pointwise_weight: np.ndarray) -> np.ndarray:
    """
    The TGN weight equivalent to a linear baseline block.

    tcn_weight [c_out, c_out, t] after pointwise_weight [K, c_out, c_in, 1]
    equals one [K, c_out, c_in, t] kernel with W_p[:, :, k] = H[:, :, k] @ G_p.
    """
    return np.einsum('omk,pmi->poik', tcn_weight, pointwise_weight[..., 0])


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def init_layer_params(prefix: str, layer: LayerConfig, partitions: int, rng: np.random.Generator,
                      dtype=np.float64, block: str = 'tgn', baseline_kernel: int = 9) -> LayerParams:
    """Fan-in uniform kernels, zero biases, unit-scale normalization."""
    c_in, c_out = layer.c_in, layer.c_out

    def param(name, data):
        return Parameter(data, f"{prefix}.{name}", dtype=dtype)

    def zeros(name, size=c_out):
        return param(name, np.zeros(size))

    def ones(name, size=c_out):
        return param(name, np.ones(size))

    if block == 'baseline':
        weight = param('weight', _uniform(rng, (partitions, c_out, c_in, 1), c_in, dtype))
    else:
        t = layer.temporal_kernel
        weight = param('weight', _uniform(rng, (partitions, c_out, c_in, t), c_in * t, dtype))
    params = LayerParams(weight=weight)
    if block == 'baseline':
        params.tcn_weight = param('tcn.weight', _uniform(rng, (c_out, c_out, baseline_kernel),
                                                         c_out * baseline_kernel, dtype))
    if layer.linear:
        return params

    params.bias = zeros('bias')
    params.bn_scale, params.bn_shift = ones('bn.scale'), zeros('bn.shift')
    if layer.needs_projection:
        params.residual_weight = param('residual.weight', _uniform(rng, (c_out, c_in, 1), c_in, dtype))
        params.residual_bias = zeros('residual.bias')
        params.residual_bn_scale, params.residual_bn_shift = ones('residual.bn.scale'), zeros('residual.bn.shift')
    if block == 'baseline':
        params.tcn_bias = zeros('tcn.bias')
        params.tcn_bn_scale, params.tcn_bn_shift = ones('tcn.bn.scale'), zeros('tcn.bn.shift')
    return params


def build_model(config: ModelConfig, layout: Optional[SkeletonLayout] = None,
                scales: Optional[Sequence[ScaleDefinition]] = None, seed: int = 0) -> TGNModel:
    """Initialize a model deterministically from (config, seed)."""
    layout = layout or get_layout(config.layout_id)
    if layout.layout_id != config.layout_id:
        raise ConfigurationError(f"config names layout {config.layout_id!r}, got {layout.layout_id!r}")
    if config.in_channels != layout.channels:
        raise ConfigurationError(f"layout {layout.layout_id} has {layout.channels} channels, "
                                 f"config says {config.in_channels}")
    available = list(scales) if scales is not None else list(layout.scales)
    branch_scales = resolve_scales(config.scales, available)
    dtype = resolve_dtype(config.dtype)
    partitions = PartitionStrategy.parse(config.strategy).num_partitions
    rng = np.random.default_rng(seed)

    def layer_set(prefix: str) -> List[LayerParams]:
        return [init_layer_params(f"{prefix}.{i}", layer, partitions, rng, dtype,
                                  config.block, config.baseline_kernel)
                for i, layer in enumerate(config.layers)]

    shared = layer_set('layers') if config.share_weights_across_scales else None
    branches = []
    for scale in branch_scales:
        stack = build_adjacency(scale.graph_spec(layout.center), config.strategy)
        check_adjacency_stack(stack)
        v = scale.size
        masks = [Parameter(np.ones((partitions, v, v)), f"branch.{scale.name}.masks.{i}", dtype=dtype)
                 if config.edge_importance else None
                 for i in range(len(config.layers))]
        branches.append(ScaleBranch(
            scale=scale,
            stack=stack,
            layers=shared if shared is not None else layer_set(f"branch.{scale.name}.layers"),
            masks=masks,
            stats=[fresh_layer_stats(layer, config.block, dtype) for layer in config.layers],
            adjacency=Tensor(stack.partitions, dtype=dtype),
        ))

    features = config.feature_channels
    model = TGNModel(
        config=config,
        layout=layout,
        scales=available,
        branches=branches,
        classifier_weight=Parameter(_uniform(rng, (config.num_classes, features), features, dtype),
                                    'classifier.weight', dtype=dtype),
        classifier_bias=Parameter(np.zeros(config.num_classes), 'classifier.bias', dtype=dtype),
    )
    model.named_parameters()
    logger.debug(f"built {config.block} model: {len(branches)} branches, {len(config.layers)} layers, "
                 f"{sum(p.size for p in model.parameters())} parameters")
    return model


def branch_features(x: Tensor, model: TGNModel, branch: ScaleBranch, mode: str = 'eval') -> Tensor:
    """Run one branch's layers on folded input [N*M, C, T, V_full]; returns [N*M, C_feat]."""
    h = select_scale(x, branch.scale)
    if branch.adjacency.shape[1] != h.shape[3]:
        raise ConfigurationError(f"branch {branch.name}: adjacency for {branch.adjacency.shape[1]} joints, "
                                 f"scale gathers {h.shape[3]}")
    for layer, params, mask, stats in zip(model.config.layers, branch.layers, branch.masks, branch.stats):
        if model.config.block == 'baseline':
            h = baseline_gcn_tcn_forward(h, branch.adjacency, layer, params, stats, mode, mask)
        else:
            h = tgn_layer_forward(h, branch.adjacency, mask, layer, params, stats, mode)
    return ops.global_avg_pool(h)


def _as_batch(batch, model: TGNModel) -> Tensor:
    dtype = resolve_dtype(model.config.dtype)
    tensor = batch if isinstance(batch, Tensor) else Tensor(batch, dtype=dtype)
    if tensor.ndim != 5:
        raise DimensionError(f"batch must be [N, C, T, V, M], got {tensor.shape}")
    _, c, _, v, _ = tensor.shape
    if c != model.config.in_channels:
        raise ConfigurationError(f"batch has {c} channels, model expects {model.config.in_channels}")
    if v != model.layout.num_joints:
        raise ConfigurationError(f"batch has {v} joints, layout {model.layout.layout_id} has {model.layout.num_joints}")
    return tensor


def branch_scores(batch, model: TGNModel, mode: str = 'eval') -> List[Tensor]:
    """Per-branch class scores [N, num_classes], in branch order."""
    tensor = _as_batch(batch, model)
    folded, persons = ops.fold_persons(tensor)
    scores = []
    for branch in model.branches:
        pooled = ops.unfold_persons_mean(branch_features(folded, model, branch, mode), persons)
        scores.append(ops.linear(pooled, model.classifier_weight, model.classifier_bias))
    return scores


def mstgn_forward(batch, model: TGNModel, mode: str = 'eval') -> Tensor:
    """Class scores [N, num_classes]: the mean of the branch scores."""
    scores = branch_scores(batch, model, mode)
    total = scores[0]
    for s in scores[1:]:
        total = ops.add(total, s)
    return total if len(scores) == 1 else ops.scale(total, 1.0 / len(scores))


def fuse_scores(score_sets: Sequence, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """Weighted mean of equally shaped [N, K] score arrays."""
    if not score_sets:
        raise ContractError("fuse_scores needs at least one score set")
    arrays = [np.asarray(s.data if isinstance(s, Tensor) else s, dtype=np.float64) for s in score_sets]
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise DimensionError(f"score sets differ in shape: {shape} vs {a.shape}")
    w = np.ones(len(arrays)) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (len(arrays),):
        raise ContractError(f"{w.size} weights for {len(arrays)} score sets")
    if (w < 0).any() or w.sum() <= 0:
        raise ContractError(f"weights must be nonnegative with a positive total, got {w.tolist()}")
    fused = np.zeros(shape)
    for weight, a in zip(w, arrays):
        if weight:
            fused += weight * a
    return fused / w.sum()
