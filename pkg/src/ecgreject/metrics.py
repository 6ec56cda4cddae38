"""Confusion matrices and one-vs-rest F1 scores."""

__docformat__ = 'google'

from dataclasses import dataclass

import numpy

from typing import NamedTuple, Sequence

CLASS_NAMES: tuple[str, ...] = ('Normal', 'AF', 'AVBI', 'LBBB', 'RBBB',
                                'PAC', 'PVC', 'STD', 'STE')
"""Class names in label order."""


def class_names(num_classes: int) -> tuple[str, ...]:
    """`CLASS_NAMES` if there are nine classes, otherwise `class0`, ...."""
    if num_classes == len(CLASS_NAMES):
        return CLASS_NAMES
    return tuple(f'class{i}' for i in range(num_classes))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows indexed by true class, columns by predicted class."""
    counts: numpy.ndarray
    class_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def diagonal_mass(self) -> float:
        """Fraction of scored records on the diagonal; 0 for an empty matrix."""
        total = self.total
        if total == 0:
            return 0.0
        return float(numpy.trace(self.counts)) / total


class RowNormalized(NamedTuple):
    fractions: numpy.ndarray
    """Each nonzero row divided by its sum."""
    empty_rows: tuple[bool, ...]
    """Which rows had no records and were left at zero."""


class ClassScores(NamedTuple):
    """One-vs-rest scores per class.

    Precision is NaN for a class that was never predicted and recall is NaN
    for a class that never occurs. F1 is always defined: it is 0 when the
    class has no true positives.
    """
    precision: numpy.ndarray
    recall: numpy.ndarray
    f1: numpy.ndarray
    support: numpy.ndarray


def _check_labels(labels: numpy.ndarray, num_classes: int, what: str) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        bad = labels[(labels < 0) | (labels >= num_classes)][0]
        raise ValueError(
            f'{what} label {bad} is outside [0, {num_classes}).')


def confusion(true_labels: Sequence[int],
              pred_labels: Sequence[int],
              num_classes: int,
              names: Sequence[str] | None = None) -> ConfusionMatrix:
    """Counts `counts[i, j]` of records with true class `i` predicted as `j`.

    Raises:
        ValueError: If the lengths differ or a label is out of range.
    """
    true = numpy.asarray(true_labels, dtype=numpy.int64).reshape(-1)
    pred = numpy.asarray(pred_labels, dtype=numpy.int64).reshape(-1)
    if true.shape != pred.shape:
        raise ValueError(
            f'Got {true.size} true labels but {pred.size} predictions.')
    _check_labels(true, num_classes, 'True')
    _check_labels(pred, num_classes, 'Predicted')
    counts = numpy.zeros((num_classes, num_classes), dtype=numpy.int64)
    numpy.add.at(counts, (true, pred), 1)
    if names is None:
        names = class_names(num_classes)
    elif len(names) != num_classes:
        raise ValueError(
            f'Got {len(names)} class names for {num_classes} classes.')
    return ConfusionMatrix(counts, tuple(names))


def row_normalize(cm: ConfusionMatrix) -> RowNormalized:
    """Divides each row by its sum. The diagonal is then the per-class recall."""
    sums = cm.counts.sum(axis=1)
    fractions = numpy.zeros(cm.counts.shape)
    nonzero = sums > 0
    fractions[nonzero] = cm.counts[nonzero] / sums[nonzero, None]
    return RowNormalized(fractions, tuple(bool(x) for x in ~nonzero))


def per_class_scores(cm: ConfusionMatrix) -> ClassScores:
    counts = cm.counts
    tp = numpy.diag(counts).astype(numpy.float64)
    predicted = counts.sum(axis=0).astype(numpy.float64)
    actual = counts.sum(axis=1).astype(numpy.float64)
    fp = predicted - tp
    fn = actual - tp
    with numpy.errstate(invalid='ignore', divide='ignore'):
        precision = numpy.where(predicted > 0, tp / predicted, numpy.nan)
        recall = numpy.where(actual > 0, tp / actual, numpy.nan)
        denominator = 2 * tp + fp + fn
        # Equal to 2PR / (P + R) whenever tp > 0.
        f1 = numpy.where(tp > 0, 2 * tp / denominator, 0.0)
    return ClassScores(precision, recall, f1, actual.astype(numpy.int64))


def macro_f1_of(cm: ConfusionMatrix) -> float:
    """Unweighted mean of the per-class F1 over all classes.

    A class absent from both truth and predictions contributes 0.
    """
    return float(per_class_scores(cm).f1.sum() / cm.num_classes)


def macro_f1(true_labels: Sequence[int], pred_labels: Sequence[int],
             num_classes: int) -> float:
    return macro_f1_of(confusion(true_labels, pred_labels, num_classes))


def accuracy(true_labels: Sequence[int], pred_labels: Sequence[int]) -> float:
    true = numpy.asarray(true_labels)
    pred = numpy.asarray(pred_labels)
    if true.size == 0:
        raise ValueError('accuracy() of no records.')
    return float((true == pred).mean())
