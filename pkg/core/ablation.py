"""
Ablation harness: train and evaluate several scale/block variants of one
run config under the same seed and tabulate them.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from core.accounting import count_flops, count_params
from core.errors import ConfigurationError
from core.joint_matcher import suggest
from core.network import build_model
from core.trainer import evaluate, train
from data.manifest import Dataset
from models.config import BLOCKS, RunConfig
from models.graph import ScaleDefinition
from models.report import AblationRow, AblationTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationSpec:
    name: str
    scales: Tuple[str, ...]
    block: str = 'tgn'

    def __post_init__(self):
        if self.block not in BLOCKS:
            raise ConfigurationError(f"row {self.name!r}: block must be one of {BLOCKS}, got {self.block!r}")
        if not self.scales:
            raise ConfigurationError(f"row {self.name!r} enables no scales")


SCALE_ROWS = [
    AblationSpec('full', ('full',)),
    AblationSpec('part', ('part',)),
    AblationSpec('core', ('core',)),
    AblationSpec('full+part', ('full', 'part')),
    AblationSpec('full+part+core', ('full', 'part', 'core')),
]

BLOCK_ROWS = [
    AblationSpec('gcn+tcn', ('full',), 'baseline'),
    AblationSpec('tgn', ('full',), 'tgn'),
]

TABLES: Dict[str, Tuple[str, List[AblationSpec]]] = {
    'scales': ('Multi-scale graph ablation', SCALE_ROWS),
    'block': ('Fused TGN layer vs GCN+TCN block', BLOCK_ROWS),
}


def table_rows(name: str) -> Tuple[str, List[AblationSpec]]:
    if name not in TABLES:
        hint = suggest(name, TABLES)
        raise ConfigurationError(f"unknown ablation table {name!r}" + (f" (did you mean {hint!r}?)" if hint else '')
                                 + f"; known: {', '.join(TABLES)}")
    return TABLES[name]


def ablation_run(rows: Sequence[AblationSpec], run_config: RunConfig, dataset: Dataset,
                 scales: Optional[Sequence[ScaleDefinition]] = None,
                 title: str = 'Ablation') -> AblationTable:
    """One freshly initialized model per row, same seed and data for all."""
    split = 'test' if dataset.has_split('test') else 'train'
    scale_columns: List[str] = []
    for row in rows:
        for s in row.scales:
            if s not in scale_columns:
                scale_columns.append(s)
    table = AblationTable(title=title, columns=scale_columns + ['block', 'top1', 'top5'], split=split)

    for row in rows:
        model_config = replace(run_config.model, scales=row.scales, block=row.block)
        model = build_model(model_config, scales=scales, seed=run_config.seed)
        logger.info(f"ablation row {row.name}: block {row.block}, scales {list(row.scales)}")
        train(model, dataset, run_config.train, data_config=run_config.data,
              run_config=run_config.to_dict())
        metrics = evaluate(model, dataset, dataset.split(split), batch_size=run_config.train.batch_size,
                           data_config=run_config.data)
        input_shape = (1, model_config.in_channels, model_config.input_frames,
                       model.layout.num_joints, model_config.persons)
        table.rows.append(AblationRow(
            name=row.name,
            block=row.block,
            scales=list(row.scales),
            top1=metrics.top1,
            top5=metrics.top5,
            params=count_params(model).total,
            macs=count_flops(model, input_shape).total,
        ))
    return table
