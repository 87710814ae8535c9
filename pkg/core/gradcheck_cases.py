"""
Registered gradient checks. Each case takes (rng, epsilon) and returns the
worst relative error it measured at a random point drawn from rng.
"""

from typing import Callable, Dict

import numpy as np

from core import ops
from core.gradcheck import gradcheck, gradcheck_parameters
from core.network import (baseline_gcn_tcn_forward, build_model, fresh_layer_stats, init_layer_params,
                          mstgn_forward, tgn_layer_forward)
from core.tensor import BatchNormState, Parameter, Tensor, no_grad
from models.config import LayerConfig, ModelConfig, build_layers
from models.graph import ScaleDefinition
from models.skeleton import SkeletonLayout

Case = Callable[[np.random.Generator, float], float]

N, C, T, V = 2, 3, 6, 4


def _away_from_zero(values: np.ndarray, margin: float = 0.1) -> np.ndarray:
    return np.sign(values) * (np.abs(values) + margin)


def _projected(f, rng, shape):
    """f(x) * R summed, with R drawn once."""
    direction = Tensor(rng.normal(size=shape))
    return lambda x: ops.sum_all(ops.multiply(f(x), direction))


def check_square(rng, epsilon):
    return gradcheck(lambda x: ops.sum_all(ops.multiply(x, x)), rng.normal(size=(3, 4)), epsilon)


def check_graph_mix_input(rng, epsilon):
    a = Tensor(rng.uniform(0, 1, size=(V, V)))
    return gradcheck(_projected(lambda x: ops.graph_mix(a, x), rng, (N, C, T, V)), rng.normal(size=(N, C, T, V)), epsilon)


def check_graph_mix_adjacency(rng, epsilon):
    x = Tensor(rng.normal(size=(N, C, T, V)))
    return gradcheck(_projected(lambda a: ops.graph_mix(a, x), rng, (N, C, T, V)), rng.uniform(0, 1, size=(V, V)), epsilon)


def check_graph_mix_partitions(rng, epsilon):
    k = 3
    stack = Tensor(rng.uniform(0, 1, size=(k, V, V)))
    x_point = rng.normal(size=(N, k, C, T, V))
    x = Tensor(x_point)
    errors = [
        gradcheck(_projected(lambda h: ops.graph_mix_partitions(stack, h), rng, (N, C, T, V)), x_point, epsilon),
        gradcheck(_projected(lambda s: ops.graph_mix_partitions(s, x), rng, (N, C, T, V)), stack.data, epsilon),
    ]
    return max(errors)


def check_temporal_conv(rng, epsilon):
    stride = int(rng.integers(1, 3))
    c_out, width = 2, 3
    x_point = rng.normal(size=(N, C, T, V))
    w_point = rng.normal(size=(c_out, C, width))
    b_point = rng.normal(size=c_out)
    t_out = ops.temporal_output_length(T, stride)
    shape = (N, c_out, t_out, V)
    x, w, b = Tensor(x_point), Tensor(w_point), Tensor(b_point)
    return max(
        gradcheck(_projected(lambda v: ops.temporal_conv(v, w, b, stride), rng, shape), x_point, epsilon),
        gradcheck(_projected(lambda v: ops.temporal_conv(x, v, b, stride), rng, shape), w_point, epsilon),
        gradcheck(_projected(lambda v: ops.temporal_conv(x, w, v, stride), rng, shape), b_point, epsilon),
    )


def check_graph_mix_after_temporal_conv(rng, epsilon):
    a = Tensor(rng.uniform(0, 1, size=(V, V)))
    w = Tensor(rng.normal(size=(2, C, 3)))
    f = _projected(lambda x: ops.graph_mix(a, ops.temporal_conv(x, w)), rng, (N, 2, T, V))
    return gradcheck(f, rng.normal(size=(N, C, T, V)), epsilon)


def check_relu(rng, epsilon):
    return gradcheck(_projected(ops.relu, rng, (N, C, T, V)), _away_from_zero(rng.normal(size=(N, C, T, V))), epsilon)


def check_bias_add(rng, epsilon):
    x = Tensor(rng.normal(size=(N, C, T, V)))
    return gradcheck(_projected(lambda b: ops.bias_add(x, b), rng, (N, C, T, V)), rng.normal(size=C), epsilon)


def _check_batch_norm(rng, epsilon, mode):
    state = BatchNormState(rng.normal(size=C), rng.uniform(0.5, 2.0, size=C))
    x_point = rng.normal(size=(N, C, T, V)) * 2 + 1
    gamma_point, beta_point = rng.normal(size=C), rng.normal(size=C)
    x, gamma, beta = Tensor(x_point), Tensor(gamma_point), Tensor(beta_point)
    shape = (N, C, T, V)
    return max(
        gradcheck(_projected(lambda v: ops.batch_norm(v, gamma, beta, state, mode), rng, shape), x_point, epsilon),
        gradcheck(_projected(lambda v: ops.batch_norm(x, v, beta, state, mode), rng, shape), gamma_point, epsilon),
        gradcheck(_projected(lambda v: ops.batch_norm(x, gamma, v, state, mode), rng, shape), beta_point, epsilon),
    )


def check_batch_norm_train(rng, epsilon):
    return _check_batch_norm(rng, epsilon, 'train')


def check_batch_norm_eval(rng, epsilon):
    return _check_batch_norm(rng, epsilon, 'eval')


def check_pool_and_linear(rng, epsilon):
    k = 5
    w_point, b_point = rng.normal(size=(k, C)), rng.normal(size=k)
    w, b = Tensor(w_point), Tensor(b_point)
    x_point = rng.normal(size=(N, C, T, V))
    x = Tensor(x_point)

    def pooled(v):
        return ops.linear(ops.global_avg_pool(v), w, b)

    return max(
        gradcheck(_projected(pooled, rng, (N, k)), x_point, epsilon),
        gradcheck(_projected(lambda v: ops.linear(ops.global_avg_pool(x), v, b), rng, (N, k)), w_point, epsilon),
        gradcheck(_projected(lambda v: ops.linear(ops.global_avg_pool(x), w, v), rng, (N, k)), b_point, epsilon),
    )


def check_select_joints(rng, epsilon):
    index = [3, 0, 2]
    return gradcheck(_projected(lambda x: ops.select_joints(x, index), rng, (N, C, T, 3)),
                     rng.normal(size=(N, C, T, V)), epsilon)


def check_person_folding(rng, epsilon):
    m = 2

    def f(x):
        folded, persons = ops.fold_persons(x)
        return ops.unfold_persons_mean(ops.global_avg_pool(folded), persons)

    return gradcheck(_projected(f, rng, (N, C)), rng.normal(size=(N, C, T, V, m)), epsilon)


def check_softmax_family(rng, epsilon):
    k = 6
    point = rng.normal(size=(N, k)) * 3
    labels = rng.integers(0, k, size=N)
    return max(
        gradcheck(_projected(ops.softmax, rng, (N, k)), point, epsilon),
        gradcheck(_projected(ops.log_softmax, rng, (N, k)), point, epsilon),
        gradcheck(lambda s: ops.cross_entropy(s, labels), point, epsilon),
    )


def _chain_adjacency() -> np.ndarray:
    a = np.zeros((3, V, V))
    for i in range(V):
        a[0, i, i] = 0.5
    for i in range(V - 1):
        a[1, i + 1, i] = a[2, i, i + 1] = 0.5
    return a


def _layer_case(rng, epsilon, block: str):
    layer = LayerConfig(C, 4, temporal_kernel=3, stride=2, residual=True)
    params = init_layer_params('layer', layer, 3, rng, np.float64, block, baseline_kernel=3)
    stats = fresh_layer_stats(layer, block)
    mask = Parameter(rng.uniform(0.5, 1.5, size=(3, V, V)), 'mask')
    adjacency = _chain_adjacency()
    x = Tensor(rng.normal(size=(N, C, T, V)))
    direction = Tensor(rng.normal(size=(N, 4, ops.temporal_output_length(T, 2), V)))

    # nonzero running statistics for the eval-mode check
    with no_grad():
        for _ in range(3):
            _forward(x, adjacency, mask, layer, params, stats, 'train', block)

    def loss():
        return ops.sum_all(ops.multiply(_forward(x, adjacency, mask, layer, params, stats, 'eval', block), direction))

    return gradcheck_parameters(loss, params.parameters() + [mask], epsilon)


def _forward(x, adjacency, mask, layer, params, stats, mode, block):
    if block == 'baseline':
        return baseline_gcn_tcn_forward(x, adjacency, layer, params, stats, mode, mask)
    return tgn_layer_forward(x, adjacency, mask, layer, params, stats, mode)


def check_tgn_layer(rng, epsilon):
    return _layer_case(rng, epsilon, 'tgn')


def check_baseline_layer(rng, epsilon):
    return _layer_case(rng, epsilon, 'baseline')


def toy_layout() -> SkeletonLayout:
    """A four-joint chain with two scales: all joints, and the first three."""
    edges = ((0, 1), (1, 2), (2, 3))
    scales = (
        ScaleDefinition('full', 'toy4', 4, (0, 1, 2, 3), edges),
        ScaleDefinition('upper', 'toy4', 4, (0, 1, 2), edges[:2]),
    )
    return SkeletonLayout(
        layout_id='toy4',
        joint_names=('head', 'neck', 'hip', 'knee'),
        edges=edges,
        parents=(1, None, 1, 2),
        center=1,
        sides=('C', 'C', 'C', 'C'),
        coord_channels=2,
        has_confidence=False,
        max_persons=1,
        scales=scales,
    )


def toy_model(seed: int = 0):
    layout = toy_layout()
    config = ModelConfig(
        layers=build_layers(2, [3, 4], [1, 2]),
        scales=('full', 'upper'),
        num_classes=3,
        in_channels=2,
        layout_id='toy4',
        persons=1,
        input_frames=8,
    )
    return build_model(config, layout, seed=seed)


def check_toy_network(rng, epsilon):
    model = toy_model(int(rng.integers(0, 2**31)))
    batch = rng.normal(size=(2, 2, 8, 4, 1))
    labels = rng.integers(0, 3, size=2)
    for p in model.parameters():
        if p.id.startswith('branch.') and '.masks.' in p.id:
            p.assign(rng.uniform(0.5, 1.5, size=p.shape))
    with no_grad():
        for _ in range(3):
            mstgn_forward(rng.normal(size=batch.shape), model, 'train')

    def loss():
        return ops.cross_entropy(mstgn_forward(batch, model, 'eval'), labels)

    return gradcheck_parameters(loss, model.parameters(), epsilon)


CASES: Dict[str, Case] = {
    'square': check_square,
    'graph_mix.input': check_graph_mix_input,
    'graph_mix.adjacency': check_graph_mix_adjacency,
    'graph_mix_partitions': check_graph_mix_partitions,
    'temporal_conv': check_temporal_conv,
    'graph_mix_after_temporal_conv': check_graph_mix_after_temporal_conv,
    'relu': check_relu,
    'bias_add': check_bias_add,
    'batch_norm.train': check_batch_norm_train,
    'batch_norm.eval': check_batch_norm_eval,
    'pool_and_linear': check_pool_and_linear,
    'select_joints': check_select_joints,
    'person_folding': check_person_folding,
    'softmax_family': check_softmax_family,
    'tgn_layer': check_tgn_layer,
    'baseline_layer': check_baseline_layer,
    'toy_network': check_toy_network,
}
