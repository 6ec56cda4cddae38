"""Tables of evaluation results."""

__docformat__ = 'google'

from ecgreject.data import GroundTruth
from ecgreject.metrics import ConfusionMatrix, row_normalize
from ecgreject.rejection import SweepPoint
from ecgreject.report.format import Table, format_float, format_p
from ecgreject.stats import GroupReport, WelchResult, significance_stars
from ecgreject.uncertainty import UncertaintyRow

from typing import Mapping, Sequence


def confusion_table(cm: ConfusionMatrix, *, normalized: bool = False) -> Table:
    """Counts, or row-normalized fractions (the diagonal is then recall)."""
    headers = ['true \\ predicted', *cm.class_names]
    if normalized:
        fractions = row_normalize(cm).fractions
        rows = [[name, *(f'{x:.4f}' for x in fractions[i])]
                for i, name in enumerate(cm.class_names)]
        title = 'Confusion matrix, row-normalized (per-class recall)'
    else:
        rows = [[name, *(str(int(x)) for x in cm.counts[i])]
                for i, name in enumerate(cm.class_names)]
        title = f'Confusion matrix, {cm.total} records'
    return Table(headers, rows, title)


def sweep_table(points: Sequence[SweepPoint],
                class_names: Sequence[str]) -> Table:
    headers = [
        'threshold', 'accept_ratio', 'accepted', 'macro_f1',
        *(f'precision_{name}' for name in class_names)
    ]
    rows = []
    for point in points:
        rows.append([
            f'{point.threshold:.3f}',
            repr(point.accept_ratio),
            str(point.accepted_count),
            '' if point.macro_f1 is None else repr(point.macro_f1),
            *('' if p is None else repr(p)
              for p in point.per_class_precision)
        ])
    return Table(headers, rows, 'Rejection threshold sweep')


def _welch_cell(result: WelchResult | None) -> str:
    if result is None:
        return ''
    return format_p(result.p_value) + significance_stars(result.p_value)


def uncertainty_report_table(groups: Sequence[GroupReport]) -> Table:
    """Per-class uncertainty summary.

    p-values test whether wrong predictions are more uncertain than correct
    ones. Stars mark p < 0.1, 0.05 and 0.01.
    """
    headers = [
        'group', 'n', 'data_u', 'model_u', 'total_u', 'performance',
        'p_data', 'p_model', 'p_total', 'pearson_r', 'pearson_p'
    ]
    rows = []
    for g in groups:
        rows.append([
            g.name,
            str(g.count),
            format_float(g.mean_data),
            format_float(g.mean_model),
            format_float(g.mean_total),
            format_float(g.performance),
            _welch_cell(g.welch_data),
            _welch_cell(g.welch_model),
            _welch_cell(g.welch_total),
            format_float(g.correlation.r if g.correlation else None),
            format_p(g.correlation.p_two_sided if g.correlation else None),
        ])
    return Table(headers, rows, 'Uncertainty by true class')


def case_study_table(rows: Sequence[UncertaintyRow],
                     most: Sequence[int],
                     least: Sequence[int],
                     class_names: Sequence[str],
                     truth: Mapping[str, GroundTruth] | None = None) -> Table:
    headers = [
        'group', 'record_id', 'true', 'predicted', 'data_u', 'model_u',
        'total_u', 'is_hard', 'is_flipped', 'is_mixed'
    ]
    result = []
    for group, indices in (('most_uncertain', most),
                           ('least_uncertain', least)):
        for i in indices:
            row = rows[i]
            t = truth.get(row.record_id) if truth else None
            flags = ['', '', ''] if t is None else [
                str(int(t.is_hard)),
                str(int(t.is_flipped)),
                str(int(t.is_mixed))
            ]
            result.append([
                group, row.record_id, class_names[row.true_label],
                class_names[row.pred_label],
                format_float(row.estimate.data, 6),
                format_float(row.estimate.model, 6),
                format_float(row.estimate.total, 6), *flags
            ])
    return Table(headers, result, 'Wrong predictions at the uncertainty extremes')
