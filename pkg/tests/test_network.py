import numpy as np
import pytest

from config.layouts import get_layout
from core.errors import ConfigurationError, ContractError, DimensionError
from core.graphs import build_adjacency
from core.network import (baseline_gcn_tcn_forward, branch_scores, build_model, fresh_layer_stats,
                          fuse_baseline_kernel, fuse_scores, init_layer_params, mstgn_forward, tgn_layer_forward)
from core.tensor import Parameter, Tensor, no_grad
from models.config import LayerConfig, ModelConfig, build_layers
from models.graph import GraphSpec
from models.tgn import LayerParams
from output.checkpoint import load_checkpoint, save_checkpoint
from tests.conftest import small_model_config


def _random_chain(rng, joints):
    edges = tuple((i, i + 1) for i in range(joints - 1))
    return GraphSpec(joints, edges, int(rng.integers(0, joints)))


@pytest.mark.parametrize('seed', range(100))
def test_linear_tgn_equals_gcn_then_tcn(seed):
    rng = np.random.default_rng(seed)
    joints = int(rng.integers(1, 7))
    frames = int(rng.integers(1, 17))
    width = int(rng.choice([1, 3, 5]))
    stride = int(rng.integers(1, 3))
    c_in, c_out = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    strategy = 'uniform' if seed % 2 == 0 else 'spatial'
    adjacency = build_adjacency(_random_chain(rng, joints), strategy)
    k = adjacency.num_partitions

    layer = LayerConfig(c_in, c_out, temporal_kernel=width, stride=stride, residual=False, linear=True)
    split = init_layer_params('split', layer, k, rng, block='baseline', baseline_kernel=width)
    fused = LayerParams(weight=Parameter(fuse_baseline_kernel(split.tcn_weight.data, split.weight.data), 'fused'))
    x = Tensor(rng.normal(size=(2, c_in, frames, joints)))

    with no_grad():
        a = tgn_layer_forward(x, adjacency, None, layer, fused).data
        b = baseline_gcn_tcn_forward(x, adjacency, layer, split).data
    assert a.shape == b.shape == (2, c_out, -(-frames // stride), joints)
    assert np.abs(a - b).max() < 1e-10


def test_unit_temporal_kernel_is_frame_local(rng):
    config = ModelConfig(layers=build_layers(3, [4, 6, 6], [1, 1, 1], temporal_kernel=1), scales=('full',),
                         num_classes=2, input_frames=12)
    model = build_model(config, seed=1)
    branch = model.branches[0]

    def features(x):
        h = Tensor(x)
        for layer, params, mask, stats in zip(config.layers, branch.layers, branch.masks, branch.stats):
            h = tgn_layer_forward(h, branch.adjacency, mask, layer, params, stats, 'eval')
        return h.data

    x = rng.normal(size=(2, 3, 12, 25))
    perturbed = x.copy()
    perturbed[:, :, 5] += rng.normal(size=(2, 3, 25))
    with no_grad():
        before, after = features(x), features(perturbed)
    others = [t for t in range(12) if t != 5]
    np.testing.assert_array_equal(before[:, :, others], after[:, :, others])
    assert not np.array_equal(before[:, :, 5], after[:, :, 5])


def test_wider_kernel_spreads_across_frames(rng):
    layer = LayerConfig(2, 2, temporal_kernel=3, residual=False, linear=True)
    params = init_layer_params('l', layer, 1, rng)
    adjacency = build_adjacency(GraphSpec(2, ((0, 1),), 0), 'uniform')
    x = rng.normal(size=(1, 2, 6, 2))
    y = x.copy()
    y[:, :, 2] += 1.0
    with no_grad():
        a = tgn_layer_forward(Tensor(x), adjacency, None, layer, params).data
        b = tgn_layer_forward(Tensor(y), adjacency, None, layer, params).data
    assert not np.allclose(a[:, :, 1], b[:, :, 1]) and not np.allclose(a[:, :, 3], b[:, :, 3])
    np.testing.assert_array_equal(a[:, :, 5], b[:, :, 5])


def test_layer_commutes_with_joint_relabeling(rng):
    layer = LayerConfig(3, 4)
    params = init_layer_params('l', layer, 3, rng)
    stack = rng.uniform(size=(3, 6, 6))
    mask = rng.uniform(0.5, 1.5, size=(3, 6, 6))
    x = rng.normal(size=(2, 3, 5, 6))
    perm = rng.permutation(6)
    grid = np.ix_(np.arange(3), perm, perm)
    with no_grad():
        out = tgn_layer_forward(Tensor(x), stack, Tensor(mask), layer, params, fresh_layer_stats(layer)).data
        relabeled = tgn_layer_forward(Tensor(x[..., perm]), stack[grid], Tensor(mask[grid]), layer, params,
                                      fresh_layer_stats(layer)).data
    np.testing.assert_allclose(relabeled, out[..., perm], atol=1e-12)


def test_layer_output_shape_and_checks(rng):
    layer = LayerConfig(3, 8, stride=2)
    params = init_layer_params('l', layer, 3, rng)
    adjacency = build_adjacency(get_layout('ntu25').graph_spec())
    x = Tensor(rng.normal(size=(2, 3, 10, 25)))
    with no_grad():
        assert tgn_layer_forward(x, adjacency, None, layer, params, fresh_layer_stats(layer)).shape == (2, 8, 5, 25)
        with pytest.raises(DimensionError):
            tgn_layer_forward(Tensor(rng.normal(size=(2, 4, 10, 25))), adjacency, None, layer, params)
        with pytest.raises(DimensionError):
            tgn_layer_forward(Tensor(rng.normal(size=(2, 3, 10, 18))), adjacency, None, layer, params)


def test_forward_shapes_and_branches(rng):
    model = build_model(small_model_config(), seed=0)
    batch = rng.normal(size=(3, 3, 16, 25, 2))
    with no_grad():
        scores = mstgn_forward(batch, model)
        per_branch = branch_scores(batch, model)
    assert scores.shape == (3, 2)
    assert [b.name for b in model.branches] == ['full', 'part', 'core']
    np.testing.assert_allclose(scores.data, sum(s.data for s in per_branch) / 3, atol=1e-12)


def test_batch_must_match_layout(rng):
    model = build_model(small_model_config(), seed=0)
    with pytest.raises(ConfigurationError):
        mstgn_forward(rng.normal(size=(1, 3, 16, 18, 2)), model)
    with pytest.raises(ConfigurationError):
        mstgn_forward(rng.normal(size=(1, 2, 16, 25, 2)), model)
    with pytest.raises(DimensionError):
        mstgn_forward(rng.normal(size=(1, 3, 16, 25)), model)


def test_build_is_deterministic():
    a = build_model(small_model_config(), seed=5)
    b = build_model(small_model_config(), seed=5)
    c = build_model(small_model_config(), seed=6)
    for pid, p in a.named_parameters().items():
        np.testing.assert_array_equal(p.data, b.named_parameters()[pid].data)
    assert not np.array_equal(a.named_parameters()['layers.0.weight'].data,
                              c.named_parameters()['layers.0.weight'].data)


def test_shared_and_unshared_weights():
    shared = build_model(small_model_config(), seed=0)
    unshared = build_model(small_model_config(share_weights_across_scales=False), seed=0)
    assert shared.branches[0].layers[0] is shared.branches[1].layers[0]
    ids = set(unshared.named_parameters())
    assert 'branch.part.layers.0.weight' in ids and 'layers.0.weight' not in ids
    assert 'classifier.weight' in ids
    one_set = sum(p.size for lp in shared.branches[0].layers for p in lp.parameters())
    extra = sum(p.size for p in unshared.parameters()) - sum(p.size for p in shared.parameters())
    assert extra == 2 * one_set


def test_running_statistics_are_per_branch(rng):
    model = build_model(small_model_config(), seed=0)
    sites = model.running_stats()
    assert 'branch.full.layers.0.bn' in sites and 'branch.core.layers.1.bn' in sites
    mstgn_forward(rng.normal(size=(2, 3, 16, 25, 2)), model, 'train')
    full = sites['branch.full.layers.0.bn'].running_mean
    core = sites['branch.core.layers.0.bn'].running_mean
    assert not np.allclose(full, core)


def test_edge_importance_off_has_no_masks():
    model = build_model(small_model_config(edge_importance=False), seed=0)
    assert all(m is None for b in model.branches for m in b.masks)
    assert not any('.masks.' in pid for pid in model.named_parameters())


def test_unknown_scale_is_rejected():
    with pytest.raises(ConfigurationError, match='unknown scale'):
        build_model(small_model_config(scales=('full', 'hands')))


def test_fusion_weights_and_argmax_invariance(rng):
    a, b = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    np.testing.assert_allclose(fuse_scores([a, b]), (a + b) / 2)
    np.testing.assert_allclose(fuse_scores([a, b], [1.0, 0.0]), a)
    np.testing.assert_array_equal(fuse_scores([a, a, a]).argmax(axis=1), a.argmax(axis=1))
    with pytest.raises(ContractError):
        fuse_scores([])
    with pytest.raises(ContractError):
        fuse_scores([a, b], [1.0])
    with pytest.raises(DimensionError):
        fuse_scores([a, b[:3]])


def test_checkpoint_round_trip(rng, tmp_path):
    model = build_model(small_model_config(), seed=0)
    batch = rng.normal(size=(2, 3, 16, 25, 2))
    mstgn_forward(batch, model, 'train')
    path = save_checkpoint(model, tmp_path / 'model.npz')
    restored = load_checkpoint(path)
    assert restored.config == model.config
    with no_grad():
        np.testing.assert_array_equal(mstgn_forward(batch, restored).data, mstgn_forward(batch, model).data)
