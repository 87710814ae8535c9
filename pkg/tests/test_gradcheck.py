import numpy as np
import pytest

from config.settings import GRADCHECK_TOLERANCE
from core import ops
from core.gradcheck import gradcheck, gradcheck_parameters, run_gradcheck_suite
from core.gradcheck_cases import CASES, toy_model
from core.tensor import Parameter, Tensor


def _bad_square(x: Tensor) -> Tensor:
    """x^2 summed, with a backward that reports 3x instead of 2x."""
    return Tensor.from_op(np.asarray((x.data ** 2).sum()), (x,), lambda g: (3 * x.data * g,), 'bad_square')


def test_square_passes():
    assert gradcheck(lambda x: ops.sum_all(ops.multiply(x, x)), np.array([3.0, -1.0])) < 1e-8


def test_wrong_gradient_is_reported():
    # analytic 9 vs numeric 6 at x = 3
    error = gradcheck(_bad_square, np.array([3.0]))
    assert error == pytest.approx(3.0 / 9.0, rel=1e-6)


def test_gradcheck_parameters_restores_values(rng):
    p = Parameter(rng.normal(size=(2, 3)), 'p')
    before = p.data.copy()
    error = gradcheck_parameters(lambda: ops.sum_all(ops.multiply(p, p)), [p])
    assert error < 1e-8
    np.testing.assert_array_equal(p.data, before)
    np.testing.assert_array_equal(p.grad, np.zeros((2, 3)))


@pytest.mark.parametrize('name', sorted(CASES))
@pytest.mark.parametrize('seed', [0, 1, 2])
def test_registered_case(name, seed):
    assert CASES[name](np.random.default_rng(seed), 1e-5) < GRADCHECK_TOLERANCE


def test_toy_network_shape():
    model = toy_model()
    assert [b.num_joints for b in model.branches] == [4, 3]
    assert model.config.strides == [1, 2]


@pytest.mark.slow
def test_full_suite_over_twenty_seeds():
    results = run_gradcheck_suite(seeds=20)
    assert set(results) == set(CASES)
    assert max(results.values()) < GRADCHECK_TOLERANCE
