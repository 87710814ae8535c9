"""Configuration models for networks, training and whole runs."""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from config.settings import (
    DEFAULT_BASE_LR, DEFAULT_BATCH_SIZE, DEFAULT_CHANNELS, DEFAULT_EPOCHS, DEFAULT_INPUT_FRAMES, DEFAULT_STRIDES,
    DEFAULT_LR_DECAY_EPOCHS, DEFAULT_LR_DECAY_FACTOR, DEFAULT_MOMENTUM, DEFAULT_NUM_CLASSES, DEFAULT_SCALES,
    DEFAULT_TEMPORAL_KERNEL, DEFAULT_WEIGHT_DECAY, BASELINE_TEMPORAL_KERNEL,
)
from core.errors import ConfigurationError

BLOCKS = ('tgn', 'baseline')
STREAMS = ('joint', 'bone')
DTYPE_NAMES = ('double', 'single')


@dataclass(frozen=True)
class LayerConfig:
    c_in: int
    c_out: int
    temporal_kernel: int = DEFAULT_TEMPORAL_KERNEL
    stride: int = 1
    residual: bool = True
    linear: bool = False

    def __post_init__(self):
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigurationError(f"channel counts must be positive, got {self.c_in}->{self.c_out}")
        if self.temporal_kernel < 1 or self.temporal_kernel % 2 == 0:
            raise ConfigurationError(f"temporal kernel width must be odd, got {self.temporal_kernel}")
        if self.stride not in (1, 2):
            raise ConfigurationError(f"stride must be 1 or 2, got {self.stride}")

    @property
    def needs_projection(self) -> bool:
        """Residual path needs a 1x1 channel map instead of identity."""
        return self.residual and not self.linear and (self.c_in != self.c_out or self.stride != 1)


def default_strides(channels: Sequence[int]) -> List[int]:
    """Stride 2 wherever the channel count grows (never on the first layer)."""
    return [1] + [2 if channels[i] > channels[i - 1] else 1 for i in range(1, len(channels))]


def build_layers(in_channels: int, channels: Sequence[int], strides: Optional[Sequence[int]] = None,
                 temporal_kernel: int = DEFAULT_TEMPORAL_KERNEL) -> Tuple[LayerConfig, ...]:
    if not channels:
        raise ConfigurationError("model needs at least one layer")
    strides = list(strides) if strides is not None else default_strides(channels)
    if len(strides) != len(channels):
        raise ConfigurationError(f"{len(strides)} strides given for {len(channels)} layers")
    layers = []
    c_in = in_channels
    for i, (c_out, stride) in enumerate(zip(channels, strides)):
        layers.append(LayerConfig(c_in, c_out, temporal_kernel, stride, residual=i > 0))
        c_in = c_out
    return tuple(layers)


@dataclass(frozen=True)
class ModelConfig:
    layers: Tuple[LayerConfig, ...]
    scales: Tuple[str, ...] = DEFAULT_SCALES
    num_classes: int = DEFAULT_NUM_CLASSES
    in_channels: int = 3
    share_weights_across_scales: bool = True
    edge_importance: bool = True
    layout_id: str = 'ntu25'
    strategy: str = 'spatial'
    block: str = 'tgn'
    baseline_kernel: int = BASELINE_TEMPORAL_KERNEL
    persons: int = 2
    input_frames: int = DEFAULT_INPUT_FRAMES
    stream: str = 'joint'
    dtype: str = 'double'

    def __post_init__(self):
        if not self.layers:
            raise ConfigurationError("model needs at least one layer")
        if self.layers[0].c_in != self.in_channels:
            raise ConfigurationError(f"first layer takes {self.layers[0].c_in} channels, input has {self.in_channels}")
        for prev, layer in zip(self.layers, self.layers[1:]):
            if layer.c_in != prev.c_out:
                raise ConfigurationError(f"layer chain broken: {prev.c_out} -> {layer.c_in}")
        if not self.scales:
            raise ConfigurationError("at least one scale must be enabled")
        if len(set(self.scales)) != len(self.scales):
            raise ConfigurationError(f"duplicate scales: {list(self.scales)}")
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.block not in BLOCKS:
            raise ConfigurationError(f"block must be one of {BLOCKS}, got {self.block!r}")
        if self.stream not in STREAMS:
            raise ConfigurationError(f"stream must be one of {STREAMS}, got {self.stream!r}")
        if self.dtype not in DTYPE_NAMES:
            raise ConfigurationError(f"dtype must be one of {DTYPE_NAMES}, got {self.dtype!r}")
        if self.baseline_kernel < 1 or self.baseline_kernel % 2 == 0:
            raise ConfigurationError(f"baseline kernel width must be odd, got {self.baseline_kernel}")
        if self.persons < 1 or self.input_frames < 1:
            raise ConfigurationError(f"persons and input_frames must be positive, got {self.persons}/{self.input_frames}")

    @property
    def feature_channels(self) -> int:
        return self.layers[-1].c_out

    @property
    def channels(self) -> List[int]:
        return [layer.c_out for layer in self.layers]

    @property
    def strides(self) -> List[int]:
        return [layer.stride for layer in self.layers]

    def to_dict(self) -> Dict:
        """The flat config-document form (see from_dict)."""
        return {
            'layout': self.layout_id,
            'channels': self.channels,
            'strides': self.strides,
            'temporal_kernel': self.layers[0].temporal_kernel,
            'scales': list(self.scales),
            'num_classes': self.num_classes,
            'in_channels': self.in_channels,
            'share_weights_across_scales': self.share_weights_across_scales,
            'edge_importance': self.edge_importance,
            'strategy': self.strategy,
            'block': self.block,
            'baseline_kernel': self.baseline_kernel,
            'persons': self.persons,
            'input_frames': self.input_frames,
            'stream': self.stream,
            'dtype': self.dtype,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ModelConfig':
        known = set(MODEL_KEYS)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown model keys: {sorted(unknown)}")
        in_channels = int(data.get('in_channels', 3))
        channels = [int(c) for c in data.get('channels', DEFAULT_CHANNELS)]
        strides = data.get('strides')
        if strides is None and channels == DEFAULT_CHANNELS:
            strides = DEFAULT_STRIDES
        layers = build_layers(in_channels, channels, strides,
                              int(data.get('temporal_kernel', DEFAULT_TEMPORAL_KERNEL)))
        return cls(
            layers=layers,
            scales=tuple(data.get('scales', DEFAULT_SCALES)),
            num_classes=int(data.get('num_classes', DEFAULT_NUM_CLASSES)),
            in_channels=in_channels,
            share_weights_across_scales=bool(data.get('share_weights_across_scales', True)),
            edge_importance=bool(data.get('edge_importance', True)),
            layout_id=str(data.get('layout', 'ntu25')),
            strategy=str(data.get('strategy', 'spatial')),
            block=str(data.get('block', 'tgn')),
            baseline_kernel=int(data.get('baseline_kernel', BASELINE_TEMPORAL_KERNEL)),
            persons=int(data.get('persons', 2)),
            input_frames=int(data.get('input_frames', DEFAULT_INPUT_FRAMES)),
            stream=str(data.get('stream', 'joint')),
            dtype=str(data.get('dtype', 'double')),
        )


MODEL_KEYS = (
    'layout', 'channels', 'strides', 'temporal_kernel', 'scales', 'num_classes', 'in_channels',
    'share_weights_across_scales', 'edge_importance', 'strategy', 'block', 'baseline_kernel',
    'persons', 'input_frames', 'stream', 'dtype',
)


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = DEFAULT_BASE_LR
    momentum: float = DEFAULT_MOMENTUM
    nesterov: bool = True
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    lr_decay_epochs: Tuple[int, ...] = tuple(DEFAULT_LR_DECAY_EPOCHS)
    lr_decay_factor: float = DEFAULT_LR_DECAY_FACTOR
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    seed: int = 0
    checkpoint_every: int = 0
    # stop once eval-mode top-1 on the train split reaches this
    target_top1: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.base_lr < 0 or self.weight_decay < 0:
            raise ConfigurationError(f"base_lr and weight_decay must be >= 0, got {self.base_lr}/{self.weight_decay}")
        if self.checkpoint_every < 0:
            raise ConfigurationError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if self.target_top1 is not None and not 0 <= self.target_top1 <= 1:
            raise ConfigurationError(f"target_top1 must lie in [0, 1], got {self.target_top1}")

    def to_dict(self) -> Dict:
        out = asdict(self)
        out['lr_decay_epochs'] = list(self.lr_decay_epochs)
        return out

    @classmethod
    def from_dict(cls, data: Dict) -> 'TrainConfig':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown train keys: {sorted(unknown)}")
        values = dict(data)
        if 'lr_decay_epochs' in values:
            values['lr_decay_epochs'] = tuple(int(e) for e in values['lr_decay_epochs'])
        return cls(**values)


@dataclass(frozen=True)
class DataConfig:
    dataset: Optional[str] = None
    center_normalize: bool = True
    align_view: bool = False
    normalize_scale: bool = False

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class GraphConfig:
    """User scale definitions (1-based subsets/edges) layered over the shipped ones."""
    scales: Tuple[Dict, ...] = ()

    def to_dict(self) -> Dict:
        return {'scales': [dict(s) for s in self.scales]}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    model: ModelConfig = field(default_factory=lambda: ModelConfig.from_dict({}))
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    name: str = 'custom'

    def to_dict(self) -> Dict:
        return {
            'seed': self.seed,
            'model': self.model.to_dict(),
            'train': self.train.to_dict(),
            'data': self.data.to_dict(),
            'graph': self.graph.to_dict(),
        }
