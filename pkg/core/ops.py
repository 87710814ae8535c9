"""
Differentiable operations on Tensors.

Shapes follow the skeleton convention [N, C, T, V]: batch, channels, frames,
joints. There is no broadcasting: two-operand ops want equal shapes, and the
few ops that mix shapes (bias_add, graph_mix, linear) say exactly how.

Every op computes its forward result with numpy, then hands Tensor.from_op a
closure returning one gradient per parent (None where a parent does not want
one).
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigurationError, ContractError, DimensionError
from core.tensor import BatchNormState, Tensor

logger = logging.getLogger(__name__)

BN_MODES = ('train', 'eval')


def _same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ (no broadcasting)")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, 'add')
    return Tensor.from_op(a.data + b.data, (a, b), lambda g: (g, g), 'add')


def multiply(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, 'multiply')
    ad, bd = a.data, b.data
    return Tensor.from_op(ad * bd, (a, b), lambda g: (g * bd, g * ad), 'multiply')


def scale(x: Tensor, factor: float) -> Tensor:
    return Tensor.from_op(x.data * factor, (x,), lambda g: (g * factor,), 'scale')


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape
    return Tensor.from_op(np.asarray(x.data.sum()), (x,),
                          lambda g: (np.broadcast_to(g, shape).copy(),), 'sum_all')


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    original = x.shape
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise DimensionError(f"reshape {original} -> {tuple(shape)}: {e}") from e
    return Tensor.from_op(out, (x,), lambda g: (g.reshape(original),), 'reshape')


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError(f"transpose: {axes} is not a permutation of {x.ndim} axes")
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(x.data.transpose(axes))
    return Tensor.from_op(out, (x,), lambda g: (g.transpose(inverse),), 'transpose')


def mean(x: Tensor, axis: int) -> Tensor:
    extent = x.shape[axis]
    if extent == 0:
        raise DimensionError(f"mean over zero-extent axis {axis} of {x.shape}")
    shape = x.shape

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape) / extent,)

    return Tensor.from_op(x.data.mean(axis=axis), (x,), backward, 'mean')


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.from_op(np.where(mask, x.data, 0).astype(x.dtype), (x,),
                          lambda g: (g * mask,), 'relu')


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    """x [N, C, ...] plus a per-channel bias [C]."""
    if bias.ndim != 1 or x.ndim < 2 or x.shape[1] != bias.shape[0]:
        raise DimensionError(f"bias_add: bias {bias.shape} does not match channels of {x.shape}")
    view = (1, -1) + (1,) * (x.ndim - 2)
    axes = (0,) + tuple(range(2, x.ndim))
    return Tensor.from_op(x.data + bias.data.reshape(view), (x, bias),
                          lambda g: (g, g.sum(axis=axes)), 'bias_add')


def graph_mix(adjacency: Tensor, x: Tensor) -> Tensor:
    """out[n,c,t,v] = sum_j adjacency[v,j] * x[n,c,t,j]."""
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise DimensionError(f"graph_mix: adjacency must be square, got {adjacency.shape}")
    if x.ndim != 4 or x.shape[-1] != adjacency.shape[0]:
        raise DimensionError(f"graph_mix: adjacency side {adjacency.shape[0]} does not match x {x.shape}")
    a, xd = adjacency.data, x.data

    def backward(g):
        grad_a = np.tensordot(g, xd, axes=([0, 1, 2], [0, 1, 2])) if adjacency.requires_grad else None
        grad_x = g @ a if x.requires_grad else None
        return grad_a, grad_x

    return Tensor.from_op(xd @ a.T, (adjacency, x), backward, 'graph_mix')


def graph_mix_partitions(stack: Tensor, x: Tensor) -> Tensor:
    """Sum of graph_mix over K partitions: stack [K,V,V], x [N,K,C,T,V] -> [N,C,T,V]."""
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise DimensionError(f"graph_mix_partitions: stack must be [K,V,V], got {stack.shape}")
    k, v = stack.shape[0], stack.shape[1]
    if x.ndim != 5 or x.shape[1] != k or x.shape[-1] != v:
        raise DimensionError(f"graph_mix_partitions: x {x.shape} does not match stack {stack.shape}")
    a, xd = stack.data, x.data
    out = xd[:, 0] @ a[0].T
    for p in range(1, k):
        out += xd[:, p] @ a[p].T

    def backward(g):
        grad_a = grad_x = None
        if stack.requires_grad:
            grad_a = np.stack([np.tensordot(g, xd[:, p], axes=([0, 1, 2], [0, 1, 2])) for p in range(k)])
        if x.requires_grad:
            grad_x = np.stack([g @ a[p] for p in range(k)], axis=1)
        return grad_a, grad_x

    return Tensor.from_op(out, (stack, x), backward, 'graph_mix_partitions')


def temporal_output_length(frames: int, stride: int) -> int:
    return -(-frames // stride)


def temporal_conv(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1) -> Tensor:
    """
    Per-joint 1-D convolution over frames, same weights for every joint.

    weight is [C_out, C_in, t] with t odd; the time axis is zero padded by
    (t-1)/2 on both ends, so stride 1 keeps T and stride s gives ceil(T/s).
    """
    if weight.ndim != 3:
        raise DimensionError(f"temporal_conv: weight must be [C_out, C_in, t], got {weight.shape}")
    c_out, c_in, width = weight.shape
    if width % 2 == 0:
        raise ConfigurationError(f"temporal kernel width must be odd, got {width}")
    if stride < 1:
        raise ConfigurationError(f"temporal stride must be >= 1, got {stride}")
    if x.ndim != 4 or x.shape[1] != c_in:
        raise DimensionError(f"temporal_conv: x {x.shape} does not match weight {weight.shape}")
    if bias is not None and bias.shape != (c_out,):
        raise DimensionError(f"temporal_conv: bias {bias.shape} does not match {c_out} output channels")

    n, _, frames, joints = x.shape
    pad = (width - 1) // 2
    t_out = temporal_output_length(frames, stride)
    span = stride * (t_out - 1) + 1
    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (0, 0))) if pad else x.data
    w = weight.data

    # accumulate as [C_out, N, T', V], transpose once at the end
    acc = np.zeros((c_out, n, t_out, joints), dtype=np.result_type(x.data, w))
    for k in range(width):
        window = padded[:, :, k:k + span:stride, :]
        acc += np.tensordot(w[:, :, k], window, axes=([1], [1]))
    out = np.ascontiguousarray(acc.transpose(1, 0, 2, 3))
    if bias is not None:
        out += bias.data.reshape(1, -1, 1, 1)

    def backward(g):
        grad_x = grad_w = grad_b = None
        if weight.requires_grad:
            grad_w = np.empty_like(w)
            for k in range(width):
                window = padded[:, :, k:k + span:stride, :]
                grad_w[:, :, k] = np.tensordot(g, window, axes=([0, 2, 3], [0, 2, 3]))
        if x.requires_grad:
            grad_padded = np.zeros_like(padded)
            for k in range(width):
                contrib = np.tensordot(w[:, :, k], g, axes=([0], [1]))  # [C_in, N, T', V]
                grad_padded[:, :, k:k + span:stride, :] += contrib.transpose(1, 0, 2, 3)
            grad_x = grad_padded[:, :, pad:pad + frames, :]
        if bias is not None and bias.requires_grad:
            grad_b = g.sum(axis=(0, 2, 3))
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, 'temporal_conv')


def batch_norm(x: Tensor, scale_param: Tensor, shift: Tensor, state: BatchNormState,
               mode: str = 'train') -> Tensor:
    """
    Per-channel normalization over every axis but 1.

    train: normalize with batch statistics and fold them into the running
    averages (momentum from the state). eval: running statistics only.
    """
    if mode not in BN_MODES:
        raise ConfigurationError(f"batch_norm mode must be one of {BN_MODES}, got {mode!r}")
    if x.ndim < 2:
        raise DimensionError(f"batch_norm needs [N, C, ...], got {x.shape}")
    channels = x.shape[1]
    if scale_param.shape != (channels,) or shift.shape != (channels,):
        raise DimensionError(f"batch_norm: affine shapes {scale_param.shape}/{shift.shape} vs {channels} channels")
    axes = (0,) + tuple(range(2, x.ndim))
    count = int(np.prod([x.shape[a] for a in axes]))
    if count == 0:
        raise DimensionError(f"batch_norm over zero-extent axes of {x.shape}")
    view = (1, -1) + (1,) * (x.ndim - 2)
    gamma = scale_param.data.reshape(view)

    if mode == 'train':
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        m = state.momentum
        unbiased = var * count / (count - 1) if count > 1 else var
        state.running_mean = ((1 - m) * state.running_mean + m * mu).astype(state.running_mean.dtype)
        state.running_var = ((1 - m) * state.running_var + m * unbiased).astype(state.running_var.dtype)
    else:
        mu, var = state.running_mean, state.running_var

    inv_std = (1.0 / np.sqrt(var + state.eps)).astype(x.dtype).reshape(view)
    x_hat = (x.data - mu.reshape(view).astype(x.dtype)) * inv_std
    out = x_hat * gamma + shift.data.reshape(view)

    def backward(g):
        grad_scale = (g * x_hat).sum(axis=axes)
        grad_shift = g.sum(axis=axes)
        dx_hat = g * gamma
        if mode == 'train':
            grad_x = inv_std / count * (
                count * dx_hat
                - dx_hat.sum(axis=axes).reshape(view)
                - x_hat * (dx_hat * x_hat).sum(axis=axes).reshape(view)
            )
        else:
            grad_x = dx_hat * inv_std
        return grad_x, grad_scale, grad_shift

    return Tensor.from_op(out, (x, scale_param, shift), backward, 'batch_norm')


def global_avg_pool(x: Tensor) -> Tensor:
    """[N, C, T, V] -> [N, C], averaging frames and joints."""
    if x.ndim != 4:
        raise DimensionError(f"global_avg_pool needs [N, C, T, V], got {x.shape}")
    extent = x.shape[2] * x.shape[3]
    if extent == 0:
        raise DimensionError(f"global_avg_pool over zero-extent axes of {x.shape}")
    shape = x.shape

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None], shape) / extent,)

    return Tensor.from_op(x.data.mean(axis=(2, 3)), (x,), backward, 'global_avg_pool')


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x [N, D] -> [N, K] with weight [K, D] and bias [K]."""
    if x.ndim != 2 or weight.ndim != 2 or weight.shape[1] != x.shape[1] or bias.shape != (weight.shape[0],):
        raise DimensionError(f"linear: x {x.shape}, weight {weight.shape}, bias {bias.shape}")
    xd, w = x.data, weight.data

    def backward(g):
        return g @ w, g.T @ xd, g.sum(axis=0)

    return Tensor.from_op(xd @ w.T + bias.data, (x, weight, bias), backward, 'linear')


def select_joints(x: Tensor, indices: Sequence[int]) -> Tensor:
    """Gather joints along the last axis. Indices must be unique."""
    index = np.asarray(indices, dtype=np.intp)
    joints = x.shape[-1]
    if index.ndim != 1 or index.size == 0:
        raise DimensionError(f"select_joints: need a non-empty index list, got {indices!r}")
    if index.min() < 0 or index.max() >= joints:
        raise DimensionError(f"select_joints: index out of range for {joints} joints: {list(indices)}")
    if len(set(index.tolist())) != index.size:
        raise DimensionError(f"select_joints: duplicate joint indices {list(indices)}")
    shape = x.shape

    def backward(g):
        grad = np.zeros(shape, dtype=g.dtype)
        grad[..., index] = g
        return (grad,)

    return Tensor.from_op(np.ascontiguousarray(x.data[..., index]), (x,), backward, 'select_joints')


def _check_scores(scores: Tensor, op: str):
    if scores.ndim != 2:
        raise DimensionError(f"{op} needs [N, K] scores, got {scores.shape}")
    if scores.shape[1] == 0:
        raise DimensionError(f"{op} over zero classes")


def _softmax_array(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax(scores: Tensor) -> Tensor:
    _check_scores(scores, 'softmax')
    s = _softmax_array(scores.data)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return Tensor.from_op(s, (scores,), backward, 'softmax')


def log_softmax(scores: Tensor) -> Tensor:
    _check_scores(scores, 'log_softmax')
    shifted = scores.data - scores.data.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return Tensor.from_op(out, (scores,), backward, 'log_softmax')


def cross_entropy(scores: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean over the batch of -log softmax(scores)[label]."""
    _check_scores(scores, 'cross_entropy')
    n, k = scores.shape
    target = np.asarray(labels, dtype=np.intp)
    if target.shape != (n,):
        raise ContractError(f"cross_entropy: {target.size} labels for {n} rows")
    if n and (target.min() < 0 or target.max() >= k):
        raise ContractError(f"cross_entropy: labels must lie in [0, {k}), got {sorted(set(target.tolist()))}")
    shifted = scores.data - scores.data.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(n)
    loss = -log_probs[rows, target].mean()

    def backward(g):
        grad = np.exp(log_probs)
        grad[rows, target] -= 1.0
        return (grad * (g / n),)

    return Tensor.from_op(np.asarray(loss, dtype=scores.dtype), (scores,), backward, 'cross_entropy')


def fold_persons(batch: Tensor) -> Tuple[Tensor, int]:
    """[N, C, T, V, M] -> [N*M, C, T, V]; returns the persons count too."""
    if batch.ndim != 5:
        raise DimensionError(f"expected [N, C, T, V, M], got {batch.shape}")
    n, c, t, v, m = batch.shape
    moved = transpose(batch, (0, 4, 1, 2, 3))
    return reshape(moved, (n * m, c, t, v)), m


def unfold_persons_mean(pooled: Tensor, persons: int) -> Tensor:
    """[N*M, C] -> [N, C], averaging the persons."""
    total, channels = pooled.shape
    if persons < 1 or total % persons:
        raise DimensionError(f"cannot split {total} rows into groups of {persons} persons")
    return mean(reshape(pooled, (total // persons, persons, channels)), axis=1)
