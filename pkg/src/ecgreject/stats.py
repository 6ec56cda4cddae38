"""Two-sample tests and correlation used to relate uncertainty to correctness."""

__docformat__ = 'google'

from ecgreject.metrics import (class_names, confusion, macro_f1_of,
                               per_class_scores)
from ecgreject.special import t_tail
from ecgreject.typing import Alternative
from ecgreject.uncertainty import UncertaintyEstimate

from dataclasses import dataclass
import math

import numpy

from typing import Sequence

P_FLOOR = 1e-300
"""p-values are never reported below this."""


@dataclass(frozen=True)
class WelchResult:
    t_statistic: float
    dof: float
    p_value: float
    """p-value under `alternative`."""
    alternative: Alternative


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p_two_sided: float


def _sample(values: Sequence[float], name: str, minimum: int) -> numpy.ndarray:
    result = numpy.asarray(values, dtype=numpy.float64).reshape(-1)
    if result.size < minimum:
        raise ValueError(
            f'{name} needs at least {minimum} values, got {result.size}.')
    if not numpy.isfinite(result).all():
        raise ValueError(f'{name} contains NaN or infinity.')
    return result


def _p_for(t: float, dof: float, alternative: Alternative) -> float:
    match alternative:
        case Alternative.AGreater:
            p = t_tail(t, dof)
        case Alternative.BGreater:
            p = t_tail(-t, dof)
        case Alternative.TwoSided:
            p = min(1.0, 2.0 * t_tail(abs(t), dof))
    return max(p, P_FLOOR)


def welch_t(sample_a: Sequence[float],
            sample_b: Sequence[float],
            alternative: Alternative = Alternative.AGreater) -> WelchResult:
    """Welch's unequal-variance t-test of the difference in means.

    Uses sample variances with `n - 1` denominators and the
    Welch-Satterthwaite degrees of freedom.

    Raises:
        ValueError: If a sample has fewer than 2 values or both have zero
            variance.
    """
    a = _sample(sample_a, 'sample_a', 2)
    b = _sample(sample_b, 'sample_b', 2)
    na, nb = a.size, b.size
    va = a.var(ddof=1) / na
    vb = b.var(ddof=1) / nb
    se2 = va + vb
    if numpy.ptp(a) == 0 and numpy.ptp(b) == 0:
        raise ValueError('Both samples have zero variance.')
    t = float((a.mean() - b.mean()) / math.sqrt(se2))
    dof = float(se2 * se2 / (va * va / (na - 1) + vb * vb / (nb - 1)))
    return WelchResult(t, dof, _p_for(t, dof, alternative), alternative)


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Pearson correlation with the two-sided p-value of non-correlation.

    Raises:
        ValueError: If there are fewer than 3 pairs, the lengths differ, or
            either input is constant.
    """
    xs = _sample(x, 'x', 3)
    ys = _sample(y, 'y', 3)
    if xs.size != ys.size:
        raise ValueError(f'x has {xs.size} values but y has {ys.size}.')
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if numpy.ptp(xs) == 0 or numpy.ptp(ys) == 0:
        raise ValueError('pearson() of a constant input is undefined.')
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    n = xs.size
    if abs(r) == 1.0:
        return PearsonResult(r, P_FLOOR)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return PearsonResult(r, _p_for(t, n - 2, Alternative.TwoSided))


def significance_stars(p: float | None) -> str:
    """`***` below 0.01, `**` below 0.05, `*` below 0.1."""
    if p is None:
        return ''
    if p < 0.01:
        return '***'
    if p < 0.05:
        return '**'
    if p < 0.1:
        return '*'
    return ''


@dataclass(frozen=True)
class GroupReport:
    """Uncertainty summary of one class, or of all records.

    Tests compare wrongly against correctly predicted records with the
    alternative that wrong predictions are more uncertain. A test that cannot
    be run, for lack of records or variance, is `None`.
    """
    name: str
    count: int
    mean_data: float | None
    mean_model: float | None
    mean_total: float | None
    performance: float | None
    """One-vs-rest F1 of the class, or Macro-F1 for the overall row."""
    welch_data: WelchResult | None
    welch_model: WelchResult | None
    welch_total: WelchResult | None
    correlation: PearsonResult | None
    """Between model and data uncertainty."""


def _try_welch(wrong: numpy.ndarray,
               correct: numpy.ndarray) -> WelchResult | None:
    try:
        return welch_t(wrong, correct, Alternative.AGreater)
    except ValueError:
        return None


def _try_pearson(x: numpy.ndarray, y: numpy.ndarray) -> PearsonResult | None:
    try:
        return pearson(x, y)
    except ValueError:
        return None


def _group(name: str, mask: numpy.ndarray, correct: numpy.ndarray,
           values: dict[str, numpy.ndarray],
           performance: float | None) -> GroupReport:
    count = int(mask.sum())

    def mean(key: str) -> float | None:
        return float(values[key][mask].mean()) if count else None

    def welch(key: str) -> WelchResult | None:
        v = values[key]
        return _try_welch(v[mask & ~correct], v[mask & correct])

    return GroupReport(name, count, mean('data'), mean('model'),
                       mean('total'), performance, welch('data'),
                       welch('model'), welch('total'),
                       _try_pearson(values['model'][mask],
                                    values['data'][mask]))


def uncertainty_report(estimates: Sequence[UncertaintyEstimate],
                       true_labels: Sequence[int],
                       pred_labels: Sequence[int],
                       num_classes: int = 9) -> list[GroupReport]:
    """One row per true class, then an `Overall` row."""
    true = numpy.asarray(true_labels, dtype=numpy.int64)
    pred = numpy.asarray(pred_labels, dtype=numpy.int64)
    if not (len(estimates) == true.size == pred.size):
        raise ValueError('estimates, true_labels and pred_labels differ in length.')
    values = {
        'data': numpy.array([e.data for e in estimates]),
        'model': numpy.array([e.model for e in estimates]),
        'total': numpy.array([e.total for e in estimates]),
    }
    correct = true == pred
    cm = confusion(true, pred, num_classes)
    f1 = per_class_scores(cm).f1
    names = class_names(num_classes)
    rows = [
        _group(names[c], true == c, correct, values, float(f1[c]))
        for c in range(num_classes)
    ]
    rows.append(
        _group('Overall', numpy.ones(true.size, dtype=bool), correct, values,
               macro_f1_of(cm) if true.size else None))
    return rows
