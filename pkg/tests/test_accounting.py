import pytest

from config.settings import DEFAULT_STRIDES
from core.accounting import cost_report, count_flops, count_params, layer_macs, reference_costs
from core.network import build_model
from models.config import ModelConfig
from tests.conftest import small_model_config


@pytest.fixture(scope='module')
def default_report():
    return reference_costs(ModelConfig.from_dict({}))


def test_default_network_costs(default_report):
    params, macs = default_report.params.total, default_report.macs.total
    assert 2.0e6 <= params <= 3.3e6
    assert 12e9 <= macs <= 18e9
    assert params == 2_062_182
    assert macs == 17_037_434_880


def test_default_plan_downsamples_before_widening():
    config = ModelConfig.from_dict({})
    assert config.strides == DEFAULT_STRIDES == [1, 1, 1, 2, 1, 1, 2, 1, 1, 1]
    assert ModelConfig.from_dict({'channels': [8, 16, 16]}).strides == [1, 2, 1]


def test_default_baseline_costs(default_report):
    assert default_report.reference_params.total > default_report.params.total
    assert default_report.reference_macs.total > default_report.macs.total
    assert default_report.not_larger_than_reference is True


def test_itemized_params_add_up(default_report):
    items = default_report.params.items
    assert sum(items.values()) == default_report.params.total
    assert items['layers.0'] == 3 * 64 * 3 * 3 + 64 + 2 * 64
    # strided 64->64 layer carries a 1x1 projection on the residual
    assert items['layers.3'] == 3 * 64 * 64 * 3 + 64 + 2 * 64 + 64 * 64 + 64 + 2 * 64
    assert items['masks.full'] == 10 * 3 * 25 * 25
    assert items['masks.core'] == 10 * 3 * 7 * 7
    assert items['classifier'] == 256 * 60 + 60


def test_macs_scale_with_batch_and_frames():
    model = build_model(small_model_config(), seed=0)
    one = count_flops(model, (1, 3, 16, 25, 2)).total
    assert count_flops(model, (4, 3, 16, 25, 2)).total == 4 * one
    assert count_flops(model, (1, 3, 32, 25, 2)).total > one


def test_layer_macs_closed_form():
    config = ModelConfig.from_dict({'channels': [4, 8], 'strides': [1, 2], 'num_classes': 2})
    items, frames = layer_macs(config, joints=5, frames=10, partitions=3)
    assert frames == 5
    assert items['layers.0'] == 3 * 4 * 3 * 3 * 10 * 5 + 3 * 4 * 10 * 25
    assert items['layers.1'] == 3 * 8 * 4 * 3 * 5 * 5 + 3 * 8 * 5 * 25 + 4 * 8 * 5 * 5


def test_shared_weights_count_once():
    shared = count_params(build_model(small_model_config(), seed=0))
    unshared = count_params(build_model(small_model_config(share_weights_across_scales=False), seed=0))
    assert 'layers.0' in shared.items and 'branch.core.layers.0' in unshared.items
    assert unshared.total > shared.total


def test_baseline_model_has_no_reference():
    report = cost_report(build_model(small_model_config(block='baseline'), seed=0), (1, 3, 16, 25, 2))
    assert report.reference_params is None
    assert report.not_larger_than_reference is None
