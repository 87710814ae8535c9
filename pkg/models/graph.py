"""Skeleton graph data structures."""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np

from core.errors import ConfigurationError

Edge = Tuple[int, int]


class PartitionStrategy(str, Enum):
    UNIFORM = 'uniform'
    DISTANCE = 'distance'
    SPATIAL = 'spatial'

    @property
    def num_partitions(self) -> int:
        return {'uniform': 1, 'distance': 2, 'spatial': 3}[self.value]

    @classmethod
    def parse(cls, value) -> 'PartitionStrategy':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown partition strategy {value!r}; expected one of {[s.value for s in cls]}") from None


@dataclass(frozen=True)
class GraphSpec:
    """Nodes 0..V-1, unordered edges without self-loops, and a center node."""
    num_nodes: int
    edges: Tuple[Edge, ...]
    center: int
    layout_id: str = ''

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ConfigurationError(f"graph needs at least one node, got {self.num_nodes}")
        if not 0 <= self.center < self.num_nodes:
            raise ConfigurationError(f"center {self.center} outside [0, {self.num_nodes})")
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < self.num_nodes and 0 <= b < self.num_nodes):
                raise ConfigurationError(f"edge ({a}, {b}) outside [0, {self.num_nodes})")
            if a == b:
                raise ConfigurationError(f"self-loop on node {a}; self links are added during normalization")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ConfigurationError(f"duplicate edge {key}")
            seen.add(key)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def relabel(self, permutation) -> 'GraphSpec':
        """Node v becomes permutation[v]."""
        perm = list(permutation)
        if sorted(perm) != list(range(self.num_nodes)):
            raise ConfigurationError(f"{perm} is not a permutation of {self.num_nodes} nodes")
        edges = tuple((perm[a], perm[b]) for a, b in self.edges)
        return GraphSpec(self.num_nodes, edges, perm[self.center], self.layout_id)


@dataclass(frozen=True)
class AdjacencyStack:
    """
    K normalized partition matrices [K, V, V] plus their unnormalized parts,
    which sum to A + I.
    """
    partitions: np.ndarray
    unnormalized: np.ndarray
    strategy: PartitionStrategy
    spec: GraphSpec

    @property
    def num_partitions(self) -> int:
        return int(self.partitions.shape[0])

    @property
    def num_nodes(self) -> int:
        return int(self.partitions.shape[1])


@dataclass(frozen=True)
class ScaleDefinition:
    """
    A named joint subset of a layout with its own edges.

    node_subset holds 0-based layout joint indices in gather order; edges
    are pairs of layout joint indices, all members of the subset.
    """
    name: str
    layout_id: str
    layout_joints: int
    node_subset: Tuple[int, ...]
    edges: Tuple[Edge, ...]

    def __post_init__(self):
        if not self.node_subset:
            raise ConfigurationError(f"scale {self.name!r} has no joints")
        if len(set(self.node_subset)) != len(self.node_subset):
            raise ConfigurationError(f"scale {self.name!r} repeats joints: {list(self.node_subset)}")
        bad = [j for j in self.node_subset if not 0 <= j < self.layout_joints]
        if bad:
            raise ConfigurationError(
                f"scale {self.name!r}: joints {[j + 1 for j in bad]} (1-based) outside layout "
                f"{self.layout_id} with {self.layout_joints} joints")
        members = set(self.node_subset)
        for a, b in self.edges:
            if a not in members or b not in members:
                raise ConfigurationError(
                    f"scale {self.name!r}: edge ({a + 1}, {b + 1}) (1-based) leaves the subset")

    @property
    def size(self) -> int:
        return len(self.node_subset)

    def local_index(self) -> Dict[int, int]:
        return {joint: i for i, joint in enumerate(self.node_subset)}

    def graph_spec(self, layout_center: int) -> GraphSpec:
        """The scale's own graph over positions 0..size-1."""
        local = self.local_index()
        center = local.get(layout_center, 0)
        edges = tuple((local[a], local[b]) for a, b in self.edges)
        return GraphSpec(self.size, edges, center, f"{self.layout_id}/{self.name}")

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'subset': [j + 1 for j in self.node_subset],
            'edges': [[a + 1, b + 1] for a, b in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Dict, layout_id: str, layout_joints: int) -> 'ScaleDefinition':
        """Build from the 1-based config form {name, subset, edges}."""
        unknown = set(data) - {'name', 'subset', 'edges'}
        if unknown:
            raise ConfigurationError(f"unknown scale keys {sorted(unknown)}; expected name, subset, edges")
        try:
            name = str(data['name'])
            subset = tuple(int(j) - 1 for j in data['subset'])
            edges = tuple((int(a) - 1, int(b) - 1) for a, b in data.get('edges', []))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"malformed scale definition {data!r}: {e}") from e
        return cls(name, layout_id, layout_joints, subset, edges)
