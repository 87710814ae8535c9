"""Top-k accuracy."""

from typing import Sequence

import numpy as np

from core.errors import ContractError, DimensionError, EmptyInputError


def topk_accuracy(scores, labels: Sequence[int], k: int = 1) -> float:
    """
    Fraction of rows whose label is among the k highest scores.

    Ties go to the lower class index, so all-equal rows rank 0, 1, 2, ...
    """
    scores = np.asarray(scores)
    labels = np.asarray(labels, dtype=np.intp)
    if scores.ndim != 2:
        raise DimensionError(f"scores must be [N, K], got {scores.shape}")
    n, classes = scores.shape
    if n == 0:
        raise EmptyInputError("top-k accuracy over zero samples")
    if labels.shape != (n,):
        raise DimensionError(f"{labels.size} labels for {n} score rows")
    if not 1 <= k <= classes:
        raise ContractError(f"k must lie in [1, {classes}], got {k}")
    ranked = np.argsort(-scores, axis=1, kind='stable')[:, :k]
    hits = (ranked == labels[:, None]).any(axis=1)
    return float(hits.mean())
