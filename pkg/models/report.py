"""Data models for run reports, cost reports and ablation tables."""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional


@dataclass
class CostBreakdown:
    total: int
    items: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict) -> 'CostBreakdown':
        return cls(int(data['total']), {k: int(v) for k, v in data['items'].items()})


@dataclass
class CostReport:
    input_shape: List[int]
    block: str
    scales: List[str]
    params: CostBreakdown
    macs: CostBreakdown
    reference_params: Optional[CostBreakdown] = None
    reference_macs: Optional[CostBreakdown] = None

    @property
    def not_larger_than_reference(self) -> Optional[bool]:
        if self.reference_params is None or self.reference_macs is None:
            return None
        return self.params.total <= self.reference_params.total and self.macs.total <= self.reference_macs.total

    def to_dict(self) -> Dict:
        out = asdict(self)
        out['not_larger_than_reference'] = self.not_larger_than_reference
        return out


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    top1: float
    lr: float


@dataclass
class EvalMetrics:
    top1: float
    top5: float
    samples: int
    split: str = 'test'

    @classmethod
    def from_dict(cls, data: Dict) -> 'EvalMetrics':
        return cls(float(data['top1']), float(data['top5']), int(data['samples']), data.get('split', 'test'))


@dataclass
class RunReport:
    config: Dict
    epochs: List[EpochRecord] = field(default_factory=list)
    train_top1: Optional[float] = None
    eval: Optional[EvalMetrics] = None
    params: int = 0
    macs: int = 0
    wall_clock_seconds: float = 0.0

    @property
    def final_loss(self) -> Optional[float]:
        return self.epochs[-1].loss if self.epochs else None

    def to_dict(self, include_timing: bool = True) -> Dict:
        out = {
            'config': self.config,
            'epochs': [asdict(e) for e in self.epochs],
            'train_top1': self.train_top1,
            'eval': asdict(self.eval) if self.eval else None,
            'params': self.params,
            'macs': self.macs,
        }
        if include_timing:
            out['wall_clock_seconds'] = self.wall_clock_seconds
        return out

    @classmethod
    def from_dict(cls, data: Dict) -> 'RunReport':
        return cls(
            config=data['config'],
            epochs=[EpochRecord(**e) for e in data.get('epochs', [])],
            train_top1=data.get('train_top1'),
            eval=EvalMetrics.from_dict(data['eval']) if data.get('eval') else None,
            params=int(data.get('params', 0)),
            macs=int(data.get('macs', 0)),
            wall_clock_seconds=float(data.get('wall_clock_seconds', 0.0)),
        )


@dataclass
class AblationRow:
    name: str
    block: str
    scales: List[str]
    top1: float
    top5: float
    params: int
    macs: int

    def has_scale(self, scale: str) -> bool:
        return scale in self.scales


@dataclass
class AblationTable:
    title: str
    columns: List[str]
    rows: List[AblationRow] = field(default_factory=list)
    split: str = 'test'

    def to_dict(self) -> Dict:
        return {
            'title': self.title,
            'columns': self.columns,
            'split': self.split,
            'rows': [asdict(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'AblationTable':
        return cls(data['title'], list(data['columns']), [AblationRow(**r) for r in data['rows']],
                   data.get('split', 'test'))
