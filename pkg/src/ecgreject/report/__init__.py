"""Tables and figures of evaluation results."""

__docformat__ = 'google'

from ecgreject.report.format import Table, markdown, csv
from ecgreject.report.tables import (confusion_table, sweep_table,
                                     uncertainty_report_table,
                                     case_study_table)
from ecgreject.report.svg import (to_text, confusion_heatmap, sweep_chart,
                                  histogram, scatter)

__all__ = [
    'Table', 'markdown', 'csv', 'confusion_table', 'sweep_table',
    'uncertainty_report_table', 'case_study_table', 'to_text',
    'confusion_heatmap', 'sweep_chart', 'histogram', 'scatter'
]
