"""Rejecting predictions whose uncertainty exceeds a threshold."""

__docformat__ = 'google'

from ecgreject.metrics import (ConfusionMatrix, confusion, macro_f1_of,
                               per_class_scores)
from ecgreject.typing import UncertaintyKind
from ecgreject.uncertainty import UncertaintyEstimate

from dataclasses import dataclass
import math
import warnings

import numpy

from typing import NamedTuple, Sequence, TypeAlias

GRID_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Accepted:
    class_id: int
    uncertainty: float


@dataclass(frozen=True)
class Rejected:
    uncertainty: float


RejectionOutcome: TypeAlias = Accepted | Rejected


def decide(estimate: UncertaintyEstimate,
           threshold: float,
           predicted_class: int,
           kind: UncertaintyKind = UncertaintyKind.Total) -> RejectionOutcome:
    """Accepts the prediction iff its uncertainty is at most `threshold`.

    Args:
        estimate: The record's uncertainty.
        threshold: In nats, non-negative.
        predicted_class: The class to report if accepted.
        kind: Which uncertainty to compare. Total uncertainty is the sum of
            data and model uncertainty.
    """
    if not threshold >= 0:
        raise ValueError(f'threshold must be non-negative, got {threshold}.')
    u = estimate.of(kind)
    if u <= threshold:
        return Accepted(predicted_class, u)
    return Rejected(u)


class Grid(NamedTuple):
    """Inclusive range of thresholds."""
    start: float
    stop: float
    step: float

    def thresholds(self) -> tuple[float, ...]:
        """`start + i * step` for every `i` that does not pass `stop`.

        `stop` is included when it lies on the grid up to 1e-12 in units of
        `step`. Values are rounded to 12 decimals.
        """
        if not self.step > 0:
            raise ValueError(f'Grid step must be positive, got {self.step}.')
        if self.stop < self.start:
            raise ValueError(
                f'Empty grid: stop {self.stop} is below start {self.start}.')
        count = math.floor((self.stop - self.start) / self.step +
                           GRID_TOLERANCE) + 1
        return tuple(
            round(self.start + i * self.step, 12) for i in range(count))


DEFAULT_GRID = Grid(0.4, 1.5, 0.05)


def parse_grid(text: str) -> Grid:
    """Parses `start:stop:step`."""
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f'Grid must look like start:stop:step, got {text!r}.')
    try:
        grid = Grid(*(float(p) for p in parts))
    except ValueError:
        raise ValueError(f'Grid must contain three numbers, got {text!r}.')
    grid.thresholds()
    return grid


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    accept_ratio: float
    accepted_count: int
    macro_f1: float | None
    """Macro-F1 of the accepted records, or `None` if none were accepted."""
    per_class_precision: tuple[float | None, ...]
    """Precision of each class on the accepted records, `None` if undefined."""


def _as_arrays(true_labels, pred_labels, uncertainties):
    true = numpy.asarray(true_labels, dtype=numpy.int64).reshape(-1)
    pred = numpy.asarray(pred_labels, dtype=numpy.int64).reshape(-1)
    u = numpy.asarray(uncertainties, dtype=numpy.float64).reshape(-1)
    if not (true.size == pred.size == u.size):
        raise ValueError(
            f'Got {true.size} labels, {pred.size} predictions and {u.size} uncertainties.'
        )
    if true.size == 0:
        raise ValueError('Cannot sweep an empty test set.')
    return true, pred, u


def sweep(true_labels: Sequence[int],
          pred_labels: Sequence[int],
          uncertainties: Sequence[float],
          grid: Grid | Sequence[float] = DEFAULT_GRID,
          *,
          num_classes: int = 9) -> list[SweepPoint]:
    """Scores the accepted records at each threshold.

    Args:
        true_labels, pred_labels: Per record.
        uncertainties: Per record, the quantity thresholds apply to.
        grid: A `Grid` or explicit thresholds.
        num_classes: Number of classes the Macro-F1 averages over.
    """
    true, pred, u = _as_arrays(true_labels, pred_labels, uncertainties)
    thresholds = grid.thresholds() if isinstance(grid, Grid) else tuple(grid)
    if not thresholds:
        raise ValueError('Empty grid.')
    result = []
    empty = []
    for threshold in thresholds:
        accepted = u <= threshold
        count = int(accepted.sum())
        if count == 0:
            empty.append(threshold)
            result.append(
                SweepPoint(threshold, 0.0, 0, None, (None, ) * num_classes))
            continue
        cm = confusion(true[accepted], pred[accepted], num_classes)
        precision = per_class_scores(cm).precision
        result.append(
            SweepPoint(
                threshold, count / u.size, count, macro_f1_of(cm),
                tuple(None if numpy.isnan(p) else float(p)
                      for p in precision)))
    if empty:
        warnings.warn(
            f'No records accepted at {len(empty)} thresholds (up to {max(empty)}).',
            category=RuntimeWarning,
            stacklevel=2)
    return result


def threshold_for_accept_ratio(uncertainties: Sequence[float],
                               ratio: float) -> float:
    """The smallest threshold that accepts at least `ratio` of the records."""
    if not 0 < ratio <= 1:
        raise ValueError(f'ratio must be in (0, 1], got {ratio}.')
    u = numpy.sort(numpy.asarray(uncertainties, dtype=numpy.float64))
    if u.size == 0:
        raise ValueError('No uncertainties given.')
    needed = max(1, math.ceil(ratio * u.size - GRID_TOLERANCE))
    return float(u[needed - 1])


class SplitConfusion(NamedTuple):
    accepted: ConfusionMatrix
    rejected: ConfusionMatrix


def split_confusion(true_labels: Sequence[int],
                    pred_labels: Sequence[int],
                    uncertainties: Sequence[float],
                    threshold: float,
                    *,
                    num_classes: int = 9) -> SplitConfusion:
    """Confusion matrices of the accepted and of the rejected records."""
    true, pred, u = _as_arrays(true_labels, pred_labels, uncertainties)
    accepted = u <= threshold
    return SplitConfusion(
        confusion(true[accepted], pred[accepted], num_classes),
        confusion(true[~accepted], pred[~accepted], num_classes))
