"""CSV export of per-epoch training history and ablation tables."""

import csv
import logging
from pathlib import Path
from typing import Union

from models.report import AblationTable, RunReport

logger = logging.getLogger(__name__)


def ensure_directory(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)


def export_epoch_history(report: RunReport, path: Union[str, Path]) -> Path:
    """One row per epoch: epoch, loss, top1, lr."""
    path = Path(path)
    ensure_directory(path)
    fieldnames = ['epoch', 'loss', 'top1', 'lr']

    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for e in report.epochs:
            writer.writerow({
                'epoch': e.epoch,
                'loss': f"{e.loss:.6f}",
                'top1': f"{e.top1:.4f}",
                'lr': f"{e.lr:g}",
            })

    logger.info(f"exported {len(report.epochs)} epochs to {path}")
    return path


def export_ablation_csv(table: AblationTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    ensure_directory(path)
    scale_columns = [c for c in table.columns if c not in ('block', 'top1', 'top5')]
    fieldnames = ['row'] + scale_columns + ['block', 'top1', 'top5', 'params', 'macs', 'split']

    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in table.rows:
            record = {'row': row.name, 'block': row.block, 'top1': f"{row.top1:.4f}",
                      'top5': f"{row.top5:.4f}", 'params': row.params, 'macs': row.macs, 'split': table.split}
            record.update({c: int(row.has_scale(c)) for c in scale_columns})
            writer.writerow(record)

    logger.info(f"exported {len(table.rows)} ablation rows to {path}")
    return path
