"""Overlap metrics for segmentation masks and scores for binary criteria vectors.

Conventions, fixed here because the usual definitions leave them open:
empty-vs-empty overlap counts as perfect (1.0 everywhere); a ratio with a
zero denominator is 0; aggregation uses the population standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import raster
from .errors import ShapeMismatchError


@dataclass(frozen=True)
class OverlapScores:
    """Per-class overlap between a predicted and a ground-truth mask."""

    label: int
    dice: float
    jaccard: float
    precision: float
    recall: float


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float


@dataclass(frozen=True)
class AggregateScores:
    """Mean and population std of each overlap metric over a dataset."""

    label: int
    n: int
    dice: MetricStats
    jaccard: MetricStats
    precision: MetricStats
    recall: MetricStats


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassificationScores:
    accuracy: float
    precision: float
    recall: float
    f1: float


def overlap_scores(pred: raster.LabelMask, truth: raster.LabelMask, label: int) -> OverlapScores:
    """Dice, Jaccard, precision and recall of one class between two masks.

    Both masks empty for the class -> all 1.0; exactly one empty -> all 0.
    """
    if pred.labels.shape != truth.labels.shape:
        raise ShapeMismatchError(
            f"pred is {pred.width}x{pred.height} but truth is {truth.width}x{truth.height}"
        )
    a = pred.labels == label
    b = truth.labels == label
    na = int(np.count_nonzero(a))
    nb = int(np.count_nonzero(b))
    inter = int(np.count_nonzero(a & b))
    if na == 0 and nb == 0:
        return OverlapScores(label, 1.0, 1.0, 1.0, 1.0)
    union = na + nb - inter
    return OverlapScores(
        label=label,
        dice=2 * inter / (na + nb),
        jaccard=inter / union if union else 0.0,
        precision=inter / na if na else 0.0,
        recall=inter / nb if nb else 0.0,
    )


def _stats(values: list[float]) -> MetricStats:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return MetricStats(mean=mean, std=math.sqrt(var))


def aggregate_overlap(scores: Sequence[OverlapScores]) -> AggregateScores:
    """Dataset-level mean +/- population std per metric, for a single class."""
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    labels = {s.label for s in scores}
    if len(labels) != 1:
        raise ValueError(f"scores mix labels {sorted(labels)}; aggregate one class at a time")
    return AggregateScores(
        label=scores[0].label,
        n=len(scores),
        dice=_stats([s.dice for s in scores]),
        jaccard=_stats([s.jaccard for s in scores]),
        precision=_stats([s.precision for s in scores]),
        recall=_stats([s.recall for s in scores]),
    )


def confusion_counts(pred: Iterable[bool], truth: Iterable[bool]) -> ConfusionCounts:
    """Positional tp/fp/fn/tn tally of two equal-length binary sequences."""
    p = [bool(v) for v in pred]
    t = [bool(v) for v in truth]
    if len(p) != len(t):
        raise ShapeMismatchError(f"pred has {len(p)} items but truth has {len(t)}")
    if not p:
        raise ValueError("need at least one prediction")
    tp = sum(1 for a, b in zip(p, t) if a and b)
    fp = sum(1 for a, b in zip(p, t) if a and not b)
    fn = sum(1 for a, b in zip(p, t) if not a and b)
    tn = len(p) - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def classification_scores(c: ConfusionCounts) -> ClassificationScores:
    """Accuracy, precision, recall and F1 from a confusion tally.

    Zero-denominator precision/recall are 0, and F1 is 0 when both are.
    """
    if c.total < 1:
        raise ValueError("confusion counts are all zero")
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationScores(
        accuracy=(c.tp + c.tn) / c.total,
        precision=precision,
        recall=recall,
        f1=f1,
    )
