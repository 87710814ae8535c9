import numpy as np
import pytest

from core import ops
from core.errors import ContractError, DimensionError, NonFiniteError
from core.tensor import Parameter, Tensor, backward, is_grad_enabled, no_grad, resolve_dtype


def test_backward_accumulates_through_shared_nodes():
    x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    y = ops.multiply(x, x)
    loss = ops.sum_all(ops.add(y, y))
    backward(loss)
    np.testing.assert_allclose(x.grad, 4 * x.data)


def test_backward_needs_scalar_root():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ContractError):
        backward(ops.scale(x, 2.0))


def test_leaves_without_requires_grad_get_no_gradient():
    a = Tensor(np.ones(3))
    b = Tensor(np.ones(3), requires_grad=True)
    backward(ops.sum_all(ops.multiply(a, b)))
    assert a.grad is None
    np.testing.assert_allclose(b.grad, np.ones(3))


def test_no_grad_records_nothing():
    p = Parameter(np.ones(3), 'p')
    with no_grad():
        assert not is_grad_enabled()
        out = ops.sum_all(ops.multiply(p, p))
    assert is_grad_enabled()
    assert not out.requires_grad
    backward(out)
    np.testing.assert_array_equal(p.grad, np.zeros(3))


def test_non_finite_values_are_rejected():
    with pytest.raises(NonFiniteError):
        Tensor(np.array([1.0, np.nan]))
    big = Tensor(np.array([1e308]))
    with pytest.raises(NonFiniteError):
        ops.scale(big, 10.0)


def test_parameter_assign_checks_shape_and_resets_grad():
    p = Parameter(np.zeros((2, 3)), 'w')
    p.grad += 1.0
    p.assign(np.ones((2, 3)))
    np.testing.assert_array_equal(p.value, np.ones((2, 3)))
    np.testing.assert_array_equal(p.grad, np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        p.assign(np.ones(6))
    with pytest.raises(NonFiniteError):
        p.assign(np.full((2, 3), np.inf))


def test_dtypes():
    assert resolve_dtype('single') == np.float32
    assert Tensor(np.arange(3)).dtype == np.float64
    assert Tensor(np.ones(2), dtype=np.float32).dtype == np.float32
