"""
Dense tensors with reverse-mode gradients.

Each op builds its output through Tensor.from_op, handing over the parent
tensors and a closure that maps the output gradient to one gradient per
parent. backward() sorts the recorded graph and runs those closures from the
root down. Only leaves that asked for gradients (Parameters, or tensors made
with requires_grad=True) keep a .grad afterwards.

Nothing NaN or Inf is allowed to exist: the constructor refuses it, which is
how divergence surfaces during training.
"""

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigurationError, ContractError, DimensionError, NonFiniteError

DTYPES = {'single': np.float32, 'double': np.float64}

_grad_state = threading.local()
_tensor_ids = itertools.count()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def is_grad_enabled() -> bool:
    return getattr(_grad_state, 'enabled', True)


@contextmanager
def no_grad():
    """Evaluate without recording a graph (per thread)."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def resolve_dtype(name: str) -> np.dtype:
    if name not in DTYPES:
        raise ConfigurationError(f"dtype must be one of {sorted(DTYPES)}, got {name!r}")
    return np.dtype(DTYPES[name])


def _check_finite(array: np.ndarray, op: str):
    if not np.isfinite(array).all():
        bad = int(array.size - np.count_nonzero(np.isfinite(array)))
        raise NonFiniteError(f"{op} produced {bad} non-finite value(s)")


class Tensor:
    """An n-d array of reals plus the bookkeeping reverse mode needs."""

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if dtype is not None:
            array = np.array(data, dtype=dtype)
        else:
            array = np.array(data)
            if not np.issubdtype(array.dtype, np.floating):
                array = array.astype(np.float64)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float64)
        _check_finite(array, 'tensor construction')
        self.data = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = 'leaf'
        self._uid = next(_tensor_ids)

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence['Tensor'],
                backward_fn: BackwardFn, op: str) -> 'Tensor':
        """Wrap an op result, recording the graph edge when gradients are wanted."""
        _check_finite(data, op)
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._op = op
        out._uid = next(_tensor_ids)
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward_fn
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self._op})"


class Parameter(Tensor):
    """A trainable leaf. Its value is the one array in the graph that mutates."""

    def __init__(self, data, id: str, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)
        self.id = id
        self.grad = np.zeros_like(self.data)

    @property
    def value(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def assign(self, array: np.ndarray):
        array = np.asarray(array, dtype=self.data.dtype)
        if array.shape != self.data.shape:
            raise DimensionError(f"parameter {self.id}: expected shape {self.data.shape}, got {array.shape}")
        _check_finite(array, f'assign to {self.id}')
        self.data = array.copy()
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter(id={self.id!r}, shape={self.shape})"


@dataclass
class BatchNormState:
    """Running statistics of one normalization site. Not trainable."""
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, channels: int, dtype=np.float64) -> 'BatchNormState':
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype))


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node._uid in visited:
            continue
        visited.add(node._uid)
        stack.append((node, True))
        for parent in reversed(node._parents):
            if parent._uid not in visited:
                stack.append((parent, False))
    return order


def backward(root: Tensor):
    """Accumulate d(root)/d(leaf) into every reachable leaf's .grad."""
    if root.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return

    grads: Dict[int, np.ndarray] = {root._uid: np.ones_like(root.data)}
    for node in reversed(_topological_order(root)):
        grad = grads.pop(node._uid, None)
        if grad is None:
            continue
        if node._backward is None:
            # a leaf
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad = node.grad + grad
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent._uid in grads:
                grads[parent._uid] = grads[parent._uid] + parent_grad
            else:
                grads[parent._uid] = parent_grad


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)
