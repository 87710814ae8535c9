import itertools

import numpy as np
import pytest

from config.layouts import get_layout
from core.errors import ConfigurationError, DimensionError
from core.graphs import (build_adjacency, check_adjacency_stack, has_cross_link, hop_distances, load_scales,
                         resolve_scales, select_scale, spectral_radius)
from core.tensor import Tensor
from models.graph import GraphSpec, PartitionStrategy

STRATEGIES = ['uniform', 'distance', 'spatial']

SMALL_GRAPHS = [
    GraphSpec(1, (), 0),
    GraphSpec(2, ((0, 1),), 0),
    GraphSpec(3, ((0, 1), (1, 2)), 1),
    GraphSpec(3, ((0, 1), (1, 2), (0, 2)), 0),
    GraphSpec(4, ((0, 1), (1, 2), (2, 3)), 1),
    GraphSpec(4, ((0, 1), (0, 2), (0, 3)), 0),
    GraphSpec(4, ((0, 1), (1, 2), (2, 3), (3, 0)), 2),
]


def test_two_node_clique_is_all_halves():
    stack = build_adjacency(GraphSpec(2, ((0, 1),), 0), 'uniform')
    np.testing.assert_allclose(stack.partitions[0], np.full((2, 2), 0.5))


def test_single_node_is_identity():
    stack = build_adjacency(GraphSpec(1, (), 0), 'spatial')
    np.testing.assert_allclose(stack.partitions.sum(axis=0), np.ones((1, 1)))


@pytest.mark.parametrize('spec', SMALL_GRAPHS)
@pytest.mark.parametrize('strategy', STRATEGIES)
def test_partitions_sum_to_a_plus_i(spec, strategy):
    stack = build_adjacency(spec, strategy)
    assert stack.num_partitions == PartitionStrategy.parse(strategy).num_partitions
    np.testing.assert_array_equal(stack.unnormalized.sum(axis=0), spec.adjacency() + np.eye(spec.num_nodes))
    check_adjacency_stack(stack)


@pytest.mark.parametrize('spec', SMALL_GRAPHS)
@pytest.mark.parametrize('strategy', STRATEGIES)
def test_permutation_equivariance(spec, strategy):
    base = build_adjacency(spec, strategy).partitions
    for perm in itertools.permutations(range(spec.num_nodes)):
        relabeled = build_adjacency(spec.relabel(perm), strategy).partitions
        p = np.eye(spec.num_nodes)[list(perm)].T  # column v is e_perm[v]
        for k in range(base.shape[0]):
            np.testing.assert_allclose(relabeled[k], p @ base[k] @ p.T, atol=1e-12)


def test_spatial_centripetal_rule():
    # chain 0-1-2-3 centered on 1: hops 1, 0, 1, 2
    spec = GraphSpec(4, ((0, 1), (1, 2), (2, 3)), 1)
    stack = build_adjacency(spec, 'spatial')
    root, centripetal, centrifugal = stack.unnormalized
    np.testing.assert_array_equal(root, np.eye(4))
    assert centripetal[0, 1] == 1 and centripetal[2, 1] == 1 and centripetal[3, 2] == 1
    assert centrifugal[1, 0] == 1 and centrifugal[1, 2] == 1 and centrifugal[2, 3] == 1
    assert centripetal[1, 0] == 0 and centrifugal[0, 1] == 0


def test_equidistant_neighbours_are_centripetal():
    # triangle centered on 0: nodes 1 and 2 are both one hop out
    stack = build_adjacency(GraphSpec(3, ((0, 1), (1, 2), (0, 2)), 0), 'spatial')
    assert stack.unnormalized[1][1, 2] == 1 and stack.unnormalized[1][2, 1] == 1


def test_disconnected_graph_names_the_orphans():
    spec = GraphSpec(4, ((0, 1), (2, 3)), 0)
    with pytest.raises(ConfigurationError, match=r"\[2, 3\]"):
        build_adjacency(spec, 'spatial')
    assert list(hop_distances(spec)) == [0, 1, -1, -1]


@pytest.mark.parametrize('layout_id', ['ntu25', 'openpose18'])
@pytest.mark.parametrize('strategy', STRATEGIES)
def test_shipped_layouts_and_scales_pass_the_checks(layout_id, strategy):
    layout = get_layout(layout_id)
    for scale in layout.scales:
        stack = build_adjacency(scale.graph_spec(layout.center), strategy)
        check_adjacency_stack(stack)
        total = stack.partitions.sum(axis=0)
        assert (total >= 0).all() and (total <= 1).all()
        assert spectral_radius(total) <= 1 + 1e-6


def test_hub_row_sum_exceeds_one():
    layout = get_layout('ntu25')
    total = build_adjacency(layout.graph_spec(), 'uniform').partitions[0]
    spine_shoulder = layout.joint_index('spine_shoulder')
    assert total[spine_shoulder].sum() == pytest.approx(1 / 5 + 4 / np.sqrt(15))


def test_adjacency_arrays_are_read_only():
    stack = build_adjacency(GraphSpec(2, ((0, 1),), 0))
    with pytest.raises(ValueError):
        stack.partitions[0, 0, 0] = 1.0


def test_graph_spec_validation():
    with pytest.raises(ConfigurationError):
        GraphSpec(2, ((0, 0),), 0)
    with pytest.raises(ConfigurationError):
        GraphSpec(2, ((0, 1), (1, 0)), 0)
    with pytest.raises(ConfigurationError):
        GraphSpec(2, ((0, 2),), 0)
    with pytest.raises(ConfigurationError):
        PartitionStrategy.parse('radial')


def test_ntu_scales():
    layout = get_layout('ntu25')
    sizes = {s.name: s.size for s in layout.scales}
    assert sizes == {'full': 25, 'part': 11, 'core': 7}
    core = next(s for s in layout.scales if s.name == 'core')
    assert has_cross_link(core, layout)


def test_select_scale_gathers_in_subset_order(rng):
    layout = get_layout('ntu25')
    part = next(s for s in layout.scales if s.name == 'part')
    x = Tensor(rng.normal(size=(2, 3, 4, 25)))
    out = select_scale(x, part)
    np.testing.assert_array_equal(out.data, x.data[..., list(part.node_subset)])
    with pytest.raises(DimensionError):
        select_scale(Tensor(rng.normal(size=(2, 3, 4, 18))), part)


def test_load_scales_overrides_and_validates():
    layout = get_layout('ntu25')
    scales = load_scales([{'name': 'core', 'subset': [1, 2, 21], 'edges': [[1, 2], [2, 21]]},
                          {'name': 'arms', 'subset': [21, 5, 9], 'edges': [[21, 5], [21, 9]]}], layout)
    by_name = {s.name: s for s in scales}
    assert by_name['core'].node_subset == (0, 1, 20)
    assert by_name['arms'].size == 3
    with pytest.raises(ConfigurationError, match='not connected'):
        load_scales([{'name': 'bits', 'subset': [4, 8], 'edges': []}], layout)
    with pytest.raises(ConfigurationError, match='1-based'):
        load_scales([{'name': 'bad', 'subset': [26], 'edges': []}], layout)


def test_resolve_scales_suggests():
    layout = get_layout('ntu25')
    with pytest.raises(ConfigurationError, match="did you mean 'part'"):
        resolve_scales(['prat'], layout.scales)
