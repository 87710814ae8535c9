"""
Adjacency construction and the multi-scale joint subsets.

Partition strategies (all with 1-hop neighbourhoods):
  uniform  - one partition, A + I
  distance - self links, then neighbours
  spatial  - self links, centripetal neighbours (no farther from the center
             than the node itself), centrifugal neighbours (the rest)

Each unnormalized partition A_p is normalized as D^-1/2 A_p D^-1/2 with D the
degree matrix of A + I, so every degree is at least 1.
"""

import logging
from collections import deque
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config.layouts import get_layout
from core import ops
from core.errors import ConfigurationError, DimensionError
from core.joint_matcher import suggest
from core.tensor import Tensor
from models.graph import AdjacencyStack, GraphSpec, PartitionStrategy, ScaleDefinition
from models.skeleton import SkeletonLayout

logger = logging.getLogger(__name__)

SPECTRAL_TOLERANCE = 1e-6


def hop_distances(spec: GraphSpec, source: Optional[int] = None) -> np.ndarray:
    """BFS hop count from source (default: the center); -1 where unreachable."""
    source = spec.center if source is None else source
    neighbours: Dict[int, List[int]] = {v: [] for v in range(spec.num_nodes)}
    for a, b in spec.edges:
        neighbours[a].append(b)
        neighbours[b].append(a)
    hops = np.full(spec.num_nodes, -1, dtype=int)
    hops[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in neighbours[v]:
            if hops[u] < 0:
                hops[u] = hops[v] + 1
                queue.append(u)
    return hops


def is_connected(spec: GraphSpec) -> bool:
    return bool((hop_distances(spec, 0) >= 0).all())


def _partition_parts(spec: GraphSpec, strategy: PartitionStrategy) -> np.ndarray:
    a = spec.adjacency()
    eye = np.eye(spec.num_nodes)
    if strategy is PartitionStrategy.UNIFORM:
        return (a + eye)[None]
    if strategy is PartitionStrategy.DISTANCE:
        return np.stack([eye, a])

    hops = hop_distances(spec)
    orphans = np.flatnonzero(hops < 0)
    if orphans.size:
        raise ConfigurationError(
            f"graph {spec.layout_id or '<unnamed>'}: nodes {orphans.tolist()} cannot reach "
            f"center {spec.center} (spatial partitioning needs a connected graph)")
    centripetal = a * (hops[None, :] <= hops[:, None])
    centrifugal = a - centripetal
    return np.stack([eye, centripetal, centrifugal])


def build_adjacency(spec: GraphSpec, strategy=PartitionStrategy.SPATIAL) -> AdjacencyStack:
    strategy = PartitionStrategy.parse(strategy)
    parts = _partition_parts(spec, strategy)
    degree = (spec.adjacency() + np.eye(spec.num_nodes)).sum(axis=1)
    assert (degree >= 1).all()
    inv_sqrt = 1.0 / np.sqrt(degree)
    normalized = inv_sqrt[None, :, None] * parts * inv_sqrt[None, None, :]
    normalized.setflags(write=False)
    parts.setflags(write=False)
    return AdjacencyStack(normalized, parts, strategy, spec)


def spectral_radius(matrix: np.ndarray, iterations: int = 500, seed: int = 0) -> float:
    """Power iteration estimate of the largest |eigenvalue| of a nonnegative matrix."""
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.5, 1.0, size=matrix.shape[0])
    estimate = 0.0
    for _ in range(iterations):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        estimate = norm / np.linalg.norm(v)
        v = w / norm
    return float(estimate)


def check_adjacency_stack(stack: AdjacencyStack) -> None:
    """Raise ConfigurationError when a stack breaks the normalization invariants."""
    spec = stack.spec
    name = spec.layout_id or '<unnamed>'
    v = spec.num_nodes
    target = spec.adjacency() + np.eye(v)
    if not np.array_equal(stack.unnormalized.sum(axis=0), target):
        raise ConfigurationError(f"{name}: partitions do not sum to A + I")
    p = stack.partitions
    if p.min() < 0 or p.max() > 1 + 1e-12:
        raise ConfigurationError(f"{name}: normalized entries outside [0, 1]")
    total = p.sum(axis=0)
    if not np.allclose(total, total.T, atol=1e-12):
        raise ConfigurationError(f"{name}: normalized A + I is not symmetric")
    if stack.strategy is not PartitionStrategy.SPATIAL:
        for k in range(stack.num_partitions):
            if not np.allclose(p[k], p[k].T, atol=1e-12):
                raise ConfigurationError(f"{name}: partition {k} is not symmetric")
    elif not np.allclose(p[0], p[0].T, atol=1e-12):
        raise ConfigurationError(f"{name}: root partition is not symmetric")
    if (total.sum(axis=1) <= 0).any():
        raise ConfigurationError(f"{name}: a row of the normalized adjacency sums to zero")
    radius = spectral_radius(total)
    if radius > 1 + SPECTRAL_TOLERANCE:
        raise ConfigurationError(f"{name}: spectral radius {radius:.6f} exceeds 1")


def select_scale(x: Tensor, scale: ScaleDefinition) -> Tensor:
    """Gather the scale's joints (last axis) in subset order."""
    if x.shape[-1] != scale.layout_joints:
        raise DimensionError(
            f"scale {scale.name!r} expects {scale.layout_joints} joints of {scale.layout_id}, "
            f"input has {x.shape[-1]}")
    if scale.node_subset == tuple(range(scale.layout_joints)):
        return x
    return ops.select_joints(x, scale.node_subset)


def has_cross_link(scale: ScaleDefinition, layout: SkeletonLayout) -> bool:
    """True when some edge joins a left joint to a right joint."""
    return any({layout.sides[a], layout.sides[b]} == {'L', 'R'} for a, b in scale.edges)


def default_scales(layout_id: str) -> List[ScaleDefinition]:
    return list(get_layout(layout_id).scales)


def load_scales(entries: Iterable[Dict], layout: SkeletonLayout) -> List[ScaleDefinition]:
    """
    User scale definitions from config (1-based subsets and edges).

    A user entry replaces the shipped scale of the same name; shipped scales
    not mentioned stay available.
    """
    scales = {s.name: s for s in layout.scales}
    for entry in entries:
        scale = ScaleDefinition.from_dict(entry, layout.layout_id, layout.num_joints)
        if not is_connected(scale.graph_spec(layout.center)):
            raise ConfigurationError(f"scale {scale.name!r} of {layout.layout_id} is not connected")
        if scale.name in scales:
            logger.info(f"scale {scale.name!r} of {layout.layout_id} overridden by config")
        scales[scale.name] = scale
    return list(scales.values())


def resolve_scales(names: Sequence[str], available: Sequence[ScaleDefinition]) -> List[ScaleDefinition]:
    by_name = {s.name: s for s in available}
    resolved = []
    for name in names:
        if name not in by_name:
            hint = suggest(name, list(by_name))
            raise ConfigurationError(
                f"unknown scale {name!r}" + (f" (did you mean {hint!r}?)" if hint else '')
                + f"; available: {', '.join(by_name)}")
        resolved.append(by_name[name])
    if not resolved:
        raise ConfigurationError("at least one scale must be enabled")
    return resolved
