"""Parameter containers for the TGN network."""

from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

from core.errors import ContractError
from core.tensor import BatchNormState, Parameter, Tensor
from models.config import ModelConfig
from models.graph import AdjacencyStack, ScaleDefinition
from models.skeleton import SkeletonLayout


@dataclass
class LayerParams:
    """
    Trainable tensors of one layer.

    weight is [K, c_out, c_in, t] for a TGN layer and [K, c_out, c_in, 1]
    for the baseline block, whose temporal stage lives in tcn_*. Fields are
    None when the layer config turns the part off.
    """
    weight: Parameter
    bias: Optional[Parameter] = None
    bn_scale: Optional[Parameter] = None
    bn_shift: Optional[Parameter] = None
    residual_weight: Optional[Parameter] = None
    residual_bias: Optional[Parameter] = None
    residual_bn_scale: Optional[Parameter] = None
    residual_bn_shift: Optional[Parameter] = None
    tcn_weight: Optional[Parameter] = None
    tcn_bias: Optional[Parameter] = None
    tcn_bn_scale: Optional[Parameter] = None
    tcn_bn_shift: Optional[Parameter] = None

    def parameters(self) -> List[Parameter]:
        return [getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None]


@dataclass
class LayerStats:
    """Running statistics of one layer inside one scale branch."""
    bn: Optional[BatchNormState] = None
    residual_bn: Optional[BatchNormState] = None
    tcn_bn: Optional[BatchNormState] = None

    def items(self) -> Dict[str, BatchNormState]:
        return {name: getattr(self, name) for name in ('bn', 'residual_bn', 'tcn_bn')
                if getattr(self, name) is not None}


@dataclass
class ScaleBranch:
    scale: ScaleDefinition
    stack: AdjacencyStack
    layers: List[LayerParams]
    masks: List[Optional[Parameter]]
    stats: List[LayerStats]
    adjacency: Optional[Tensor] = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.scale.name

    @property
    def num_joints(self) -> int:
        return self.scale.size


@dataclass
class TGNModel:
    config: ModelConfig
    layout: SkeletonLayout
    scales: List[ScaleDefinition]
    branches: List[ScaleBranch]
    classifier_weight: Parameter
    classifier_bias: Parameter

    def parameters(self) -> List[Parameter]:
        """Every distinct Parameter once, in a stable order."""
        seen = set()
        out = []
        for branch in self.branches:
            for layer, mask in zip(branch.layers, branch.masks):
                for p in layer.parameters() + ([mask] if mask is not None else []):
                    if id(p) not in seen:
                        seen.add(id(p))
                        out.append(p)
        out += [self.classifier_weight, self.classifier_bias]
        return out

    def named_parameters(self) -> Dict[str, Parameter]:
        named = {}
        for p in self.parameters():
            if p.id in named:
                raise ContractError(f"duplicate parameter id {p.id}")
            named[p.id] = p
        return named

    def running_stats(self) -> Dict[str, BatchNormState]:
        out = {}
        for branch in self.branches:
            for i, stats in enumerate(branch.stats):
                for name, state in stats.items().items():
                    out[f"branch.{branch.name}.layers.{i}.{name}"] = state
        return out

    def branch(self, name: str) -> ScaleBranch:
        for branch in self.branches:
            if branch.name == name:
                return branch
        raise ContractError(f"model has no scale branch {name!r}")

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()
