import numpy as np
import pytest

from core.errors import ContractError, DimensionError, EmptyInputError
from core.metrics import topk_accuracy


def test_top1_and_top5():
    scores = np.array([
        [0.1, 0.9, 0.0, 0.0, 0.0, 0.0],
        [0.6, 0.1, 0.1, 0.1, 0.1, 0.0],
        [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
    ])
    labels = [1, 5, 0]
    assert topk_accuracy(scores, labels, 1) == pytest.approx(1 / 3)
    assert topk_accuracy(scores, labels, 5) == pytest.approx(1 / 3)
    assert topk_accuracy(scores, labels, 6) == 1.0


def test_ties_rank_the_lower_class_first():
    scores = np.zeros((2, 4))
    assert topk_accuracy(scores, [0, 1], 1) == 0.5
    assert topk_accuracy(scores, [1, 2], 2) == 0.5


def test_invalid_arguments():
    with pytest.raises(EmptyInputError):
        topk_accuracy(np.zeros((0, 3)), [], 1)
    with pytest.raises(DimensionError):
        topk_accuracy(np.zeros((2, 3)), [0], 1)
    with pytest.raises(ContractError):
        topk_accuracy(np.zeros((2, 3)), [0, 1], 4)


def test_label_is_always_in_the_full_ranking(rng):
    scores = rng.normal(size=(10, 4))
    assert topk_accuracy(scores, rng.integers(0, 4, size=10), 4) == 1.0


def test_small_examples():
    assert topk_accuracy([[0.1, 0.5, 0.4]], [2], 1) == 0.0
    assert topk_accuracy([[0.1, 0.5, 0.4]], [2], 2) == 1.0
    assert topk_accuracy(np.zeros((1, 4)), [3], 1) == 0.0
