import numpy as np
import pytest

from core import ops
from core.errors import ConfigurationError, ContractError, DimensionError
from core.tensor import BatchNormState, Tensor


def test_temporal_conv_keeps_length_at_stride_one(rng):
    x = Tensor(rng.normal(size=(2, 3, 10, 4)))
    w = Tensor(rng.normal(size=(5, 3, 3)))
    assert ops.temporal_conv(x, w).shape == (2, 5, 10, 4)


@pytest.mark.parametrize('frames,stride,expected', [(10, 2, 5), (11, 2, 6), (300, 2, 150), (7, 3, 3)])
def test_temporal_conv_stride_gives_ceil(rng, frames, stride, expected):
    x = Tensor(rng.normal(size=(1, 2, frames, 3)))
    w = Tensor(rng.normal(size=(2, 2, 3)))
    assert ops.temporal_conv(x, w, stride=stride).shape[2] == expected


def test_temporal_conv_matches_direct_sum(rng):
    x = rng.normal(size=(1, 2, 6, 3))
    w = rng.normal(size=(3, 2, 3))
    b = rng.normal(size=3)
    out = ops.temporal_conv(Tensor(x), Tensor(w), Tensor(b)).data
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (0, 0)))
    expected = np.zeros((1, 3, 6, 3))
    for o in range(3):
        for t in range(6):
            expected[0, o, t] = b[o] + sum(w[o, i, k] * padded[0, i, t + k] for i in range(2) for k in range(3))
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_temporal_conv_rejects_even_width_and_bad_stride(rng):
    x = Tensor(rng.normal(size=(1, 2, 6, 3)))
    with pytest.raises(ConfigurationError):
        ops.temporal_conv(x, Tensor(rng.normal(size=(2, 2, 4))))
    with pytest.raises(ConfigurationError):
        ops.temporal_conv(x, Tensor(rng.normal(size=(2, 2, 3))), stride=0)


def test_graph_mix_is_a_joint_matrix_product(rng):
    a = rng.uniform(size=(4, 4))
    x = rng.normal(size=(2, 3, 5, 4))
    out = ops.graph_mix(Tensor(a), Tensor(x)).data
    np.testing.assert_allclose(out, np.einsum('vj,nctj->nctv', a, x), atol=1e-12)
    with pytest.raises(DimensionError):
        ops.graph_mix(Tensor(np.ones((3, 3))), Tensor(x))


def test_graph_mix_partitions_sums_partitions(rng):
    stack = rng.uniform(size=(3, 4, 4))
    x = rng.normal(size=(2, 3, 2, 5, 4))
    out = ops.graph_mix_partitions(Tensor(stack), Tensor(x)).data
    expected = sum(ops.graph_mix(Tensor(stack[p]), Tensor(x[:, p])).data for p in range(3))
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_graph_mix_commutes_with_joint_relabeling(rng):
    a = rng.uniform(size=(6, 6))
    x = rng.normal(size=(2, 3, 5, 6))
    perm = rng.permutation(6)
    out = ops.graph_mix(Tensor(a), Tensor(x)).data
    relabeled = ops.graph_mix(Tensor(a[np.ix_(perm, perm)]), Tensor(x[..., perm])).data
    np.testing.assert_allclose(relabeled, out[..., perm], atol=1e-12)


def test_no_broadcasting():
    with pytest.raises(DimensionError):
        ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones(3)))


def test_softmax_rows_sum_to_one(rng):
    scores = Tensor(rng.normal(size=(6, 9)) * 50)
    probs = ops.softmax(scores).data
    np.testing.assert_allclose(probs.sum(axis=1), np.ones(6), atol=1e-12)
    assert (probs >= 0).all()
    np.testing.assert_allclose(np.exp(ops.log_softmax(scores).data), probs, atol=1e-12)


def test_cross_entropy_value_and_label_checks():
    scores = Tensor(np.zeros((2, 4)))
    assert ops.cross_entropy(scores, [0, 3]).item() == pytest.approx(np.log(4))
    with pytest.raises(ContractError):
        ops.cross_entropy(scores, [0, 4])
    with pytest.raises(ContractError):
        ops.cross_entropy(scores, [0])


def test_batch_norm_train_updates_running_statistics(rng):
    x = rng.normal(loc=2.0, scale=3.0, size=(4, 2, 5, 3))
    state = BatchNormState.fresh(2)
    out = ops.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), state, 'train').data
    np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), np.zeros(2), atol=1e-10)
    count = 4 * 5 * 3
    batch_mean = x.mean(axis=(0, 2, 3))
    batch_var = x.var(axis=(0, 2, 3)) * count / (count - 1)
    np.testing.assert_allclose(state.running_mean, 0.1 * batch_mean)
    np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * batch_var)


def test_batch_norm_eval_uses_running_statistics(rng):
    x = rng.normal(size=(2, 2, 3, 3))
    state = BatchNormState(np.array([1.0, -1.0]), np.array([4.0, 1.0]), eps=0.0)
    out = ops.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), state, 'eval').data
    np.testing.assert_allclose(out[:, 0], (x[:, 0] - 1.0) / 2.0)
    np.testing.assert_allclose(out[:, 1], x[:, 1] + 1.0)
    with pytest.raises(ConfigurationError):
        ops.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), state, 'inference')


def test_select_joints_checks_indices(rng):
    x = Tensor(rng.normal(size=(1, 2, 3, 5)))
    np.testing.assert_array_equal(ops.select_joints(x, [4, 0]).data, x.data[..., [4, 0]])
    with pytest.raises(DimensionError):
        ops.select_joints(x, [5])
    with pytest.raises(DimensionError):
        ops.select_joints(x, [1, 1])


def test_fold_and_unfold_persons(rng):
    batch = rng.normal(size=(3, 2, 4, 5, 2))
    folded, persons = ops.fold_persons(Tensor(batch))
    assert folded.shape == (6, 2, 4, 5) and persons == 2
    np.testing.assert_array_equal(folded.data[1], batch[0, :, :, :, 1])
    pooled = ops.global_avg_pool(folded)
    out = ops.unfold_persons_mean(pooled, persons).data
    np.testing.assert_allclose(out, batch.mean(axis=(2, 3, 4)), atol=1e-12)


def test_zero_extent_reductions_fail():
    with pytest.raises(DimensionError):
        ops.global_avg_pool(Tensor(np.zeros((1, 2, 0, 3))))
