"""
Training and evaluation loops.

A split is preprocessed once (pad -> center -> optional view alignment
and scaling -> optional bones -> fill persons) into one [S, C, T, V, M]
array. Each epoch shuffles it with the run's seeded generator and takes
minibatch SGD steps. Anything non-finite aborts the run with the epoch
and batch where it happened. With a target_top1 set, the run ends after
the first epoch whose eval-mode accuracy on the train split reaches it.
"""

import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from core import ops
from core.accounting import count_flops, count_params
from core.errors import ConfigurationError, EmptyInputError, NonFiniteError, TrainingDivergedError
from core.metrics import topk_accuracy
from core.network import fuse_scores, mstgn_forward
from core.optimizer import OptimizerState, lr_at, sgd_nesterov_step
from core.preprocess import preprocess, stack_batch
from core.tensor import Tensor, backward, no_grad, resolve_dtype
from data.manifest import Dataset
from models.config import DataConfig, TrainConfig
from models.report import EpochRecord, EvalMetrics, RunReport
from models.skeleton import Batch, DatasetManifest
from models.tgn import TGNModel
from output.checkpoint import save_checkpoint

logger = logging.getLogger(__name__)


def cross_entropy_loss(scores: Tensor, labels: Sequence[int]) -> Tensor:
    return ops.cross_entropy(scores, labels)


def _check_compatible(model: TGNModel, dataset: Dataset):
    if dataset.layout_id != model.layout.layout_id:
        raise ConfigurationError(f"dataset layout {dataset.layout_id!r} does not match model layout "
                                 f"{model.layout.layout_id!r}")
    if dataset.class_count > model.config.num_classes:
        raise ConfigurationError(f"dataset has {dataset.class_count} classes, model scores "
                                 f"{model.config.num_classes}")


def prepare_split(model: TGNModel, dataset: Dataset, manifest: DatasetManifest,
                  data_config: Optional[DataConfig] = None) -> Batch:
    _check_compatible(model, dataset)
    if not len(manifest):
        raise EmptyInputError(f"the {manifest.split} split is empty")
    config = model.config
    data_config = data_config or DataConfig()
    arrays = [preprocess(seq, model.layout, config.input_frames, data_config.center_normalize, config.stream,
                         config.persons, align=data_config.align_view, rescale=data_config.normalize_scale)
              for seq in dataset.sequences(manifest)]
    return Batch(stack_batch(arrays, resolve_dtype(config.dtype)), np.asarray(manifest.labels, dtype=np.intp))


def predict_scores(model: TGNModel, data: np.ndarray, batch_size: int = 32) -> np.ndarray:
    """Eval-mode class scores for [S, C, T, V, M], in chunks."""
    chunks = []
    with no_grad():
        for start in range(0, data.shape[0], batch_size):
            chunks.append(mstgn_forward(data[start:start + batch_size], model, 'eval').data)
    return np.concatenate(chunks)


def _softmax(scores: np.ndarray) -> np.ndarray:
    with no_grad():
        return ops.softmax(Tensor(scores)).data


def evaluate(model: TGNModel, dataset: Dataset, manifest: Optional[DatasetManifest] = None,
             fusion: Sequence[TGNModel] = (), weights: Optional[Sequence[float]] = None,
             batch_size: int = 32, data_config: Optional[DataConfig] = None) -> EvalMetrics:
    """
    Top-1/top-5 over a split. Extra models in `fusion` (e.g. a bone-stream
    model) contribute their softmax scores through fuse_scores.
    """
    manifest = manifest if manifest is not None else dataset.split('test')
    members = [model] + list(fusion)
    score_sets = []
    labels = None
    for member in members:
        batch = prepare_split(member, dataset, manifest, data_config)
        score_sets.append(_softmax(predict_scores(member, batch.data, batch_size)))
        labels = batch.labels
    fused = fuse_scores(score_sets, weights)
    k5 = min(5, fused.shape[1])
    metrics = EvalMetrics(topk_accuracy(fused, labels, 1), topk_accuracy(fused, labels, k5),
                          len(labels), manifest.split)
    logger.info(f"eval {manifest.split}: top1 {metrics.top1:.4f}, top5 {metrics.top5:.4f} "
                f"over {metrics.samples} samples ({len(members)} model(s))")
    return metrics


def _check_gradients(model: TGNModel, epoch: int, batch: int):
    for p in model.parameters():
        if not np.isfinite(p.grad).all():
            raise TrainingDivergedError(epoch, batch, f"non-finite gradient in {p.id}")


def _reached_target(model: TGNModel, split: Batch, config: TrainConfig, running_top1: float) -> bool:
    # the running (train-mode) figure gates the eval-mode pass over the split
    if config.target_top1 is None or running_top1 < config.target_top1:
        return False
    scores = predict_scores(model, split.data, config.batch_size)
    return topk_accuracy(scores, split.labels, 1) >= config.target_top1


def train(model: TGNModel, dataset: Dataset, config: TrainConfig, manifest: Optional[DatasetManifest] = None,
          eval_manifest: Optional[DatasetManifest] = None, data_config: Optional[DataConfig] = None,
          checkpoint_dir: Optional[Union[str, Path]] = None, run_config: Optional[Dict] = None) -> RunReport:
    """Minibatch SGD over the train split; returns the per-epoch report."""
    started = time.perf_counter()
    manifest = manifest if manifest is not None else dataset.split('train')
    split = prepare_split(model, dataset, manifest, data_config)
    samples = len(split)
    rng = np.random.default_rng(config.seed)
    state = OptimizerState.from_config(config)
    params = model.parameters()

    input_shape = (1,) + split.data.shape[1:]
    report = RunReport(
        config=run_config if run_config is not None else {'model': model.config.to_dict(), 'train': config.to_dict()},
        params=count_params(model).total,
        macs=count_flops(model, input_shape).total,
    )
    logger.info(f"training on {samples} sequences for {config.epochs} epochs, batch {config.batch_size}, "
                f"{report.params:,} parameters")

    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        order = rng.permutation(samples)
        loss_sum = 0.0
        hit_sum = 0.0
        for b, start in enumerate(range(0, samples, config.batch_size)):
            index = order[start:start + config.batch_size]
            labels = split.labels[index]
            model.zero_grad()
            try:
                scores = mstgn_forward(split.data[index], model, 'train')
                loss = cross_entropy_loss(scores, labels)
                backward(loss)
            except NonFiniteError as e:
                raise TrainingDivergedError(epoch, b, str(e)) from e
            _check_gradients(model, epoch, b)
            sgd_nesterov_step(params, state, lr)
            loss_sum += loss.item() * len(index)
            hit_sum += topk_accuracy(scores.data, labels, 1) * len(index)

        record = EpochRecord(epoch, loss_sum / samples, hit_sum / samples, lr)
        report.epochs.append(record)
        logger.info(f"epoch {epoch}: loss {record.loss:.4f}, top1 {record.top1:.4f}, lr {lr:g}")
        if checkpoint_dir and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            save_checkpoint(model, Path(checkpoint_dir) / f"epoch_{epoch + 1:04d}.npz")
        if _reached_target(model, split, config, record.top1):
            logger.info(f"train top1 reached {config.target_top1:g} after epoch {epoch}, stopping")
            break

    report.train_top1 = evaluate(model, dataset, manifest, batch_size=config.batch_size,
                                 data_config=data_config).top1
    if eval_manifest is not None and len(eval_manifest):
        report.eval = evaluate(model, dataset, eval_manifest, batch_size=config.batch_size,
                               data_config=data_config)
    report.wall_clock_seconds = time.perf_counter() - started
    return report


def loss_history(report: RunReport) -> List[float]:
    return [e.loss for e in report.epochs]


def loss_trend_holds(losses: Sequence[float], warmup: int = 20, width: int = 10,
                     tolerance: float = 0.05, floor: float = 1e-2) -> bool:
    """
    Windowed epoch losses after `warmup` never rise by more than `tolerance`
    from one window to the next. Windows already below `floor` are saturated
    and their relative jitter is ignored.
    """
    windows = [float(np.mean(losses[i:i + width])) for i in range(warmup, len(losses) - width + 1, width)]
    return all(b <= a * (1 + tolerance) for a, b in zip(windows, windows[1:]) if a > floor)
