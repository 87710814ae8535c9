import numpy as np
import pytest

from core.errors import ContractError
from core.optimizer import OptimizerState, lr_at, sgd_nesterov_step
from core.tensor import Parameter
from models.config import TrainConfig


def _param(value, grad):
    p = Parameter(np.array(value, dtype=float), 'w')
    p.grad = np.array(grad, dtype=float)
    return p


def test_nesterov_update_by_hand():
    p = _param([1.0, -2.0], [0.5, 1.0])
    state = OptimizerState(momentum=0.9, weight_decay=0.1, nesterov=True)
    sgd_nesterov_step([p], state, lr=0.1)
    g = np.array([0.5, 1.0]) + 0.1 * np.array([1.0, -2.0])
    v = g
    expected = np.array([1.0, -2.0]) - 0.1 * (g + 0.9 * v)
    np.testing.assert_allclose(p.data, expected)
    np.testing.assert_allclose(state.velocities['w'], v)

    # second step reuses the stored velocity
    w1 = p.data.copy()
    p.grad = np.array([0.5, 1.0])
    sgd_nesterov_step([p], state, lr=0.1)
    g2 = np.array([0.5, 1.0]) + 0.1 * w1
    v2 = 0.9 * v + g2
    np.testing.assert_allclose(p.data, w1 - 0.1 * (g2 + 0.9 * v2))


def test_plain_momentum_uses_the_velocity():
    p = _param([1.0], [2.0])
    sgd_nesterov_step([p], OptimizerState(momentum=0.5, nesterov=False), lr=0.25)
    np.testing.assert_allclose(p.data, [0.5])


def test_missing_gradient_is_rejected():
    p = Parameter(np.ones(2), 'w')
    p.grad = None
    with pytest.raises(ContractError):
        sgd_nesterov_step([p], OptimizerState(), lr=0.1)


def test_step_decay_schedule():
    config = TrainConfig(base_lr=0.1, lr_decay_epochs=(30, 40), lr_decay_factor=0.1)
    assert lr_at(0, config) == pytest.approx(0.1)
    assert lr_at(29, config) == pytest.approx(0.1)
    assert lr_at(30, config) == pytest.approx(0.01)
    assert lr_at(45, config) == pytest.approx(0.001)
    with pytest.raises(ContractError):
        lr_at(-1, config)


def test_single_coordinate_example():
    p = _param([1.0], [0.5])
    state = OptimizerState(momentum=0.9)
    sgd_nesterov_step([p], state, lr=0.1)
    np.testing.assert_allclose(state.velocities['w'], [0.5])
    np.testing.assert_allclose(p.data, [0.905])


def test_zero_momentum_is_gradient_descent(rng):
    w, g = rng.normal(size=5), rng.normal(size=5)
    p = _param(w, g)
    sgd_nesterov_step([p], OptimizerState(momentum=0.0), lr=0.3)
    np.testing.assert_array_equal(p.data, w - 0.3 * g)


def test_zero_learning_rate_changes_nothing(rng):
    w = rng.normal(size=(3, 2))
    p = _param(w, rng.normal(size=(3, 2)))
    sgd_nesterov_step([p], OptimizerState(weight_decay=1e-4), lr=0.0)
    np.testing.assert_array_equal(p.data, w)
