"""Text renderings of tables: aligned Markdown and CSV."""

__docformat__ = 'google'

import csv as csv_lib
import io
import re

from typing import NamedTuple, Sequence

NUMERIC_PATTERN = re.compile(r'-?\d+(\.\d*)?([eE][-+]?\d+)?\**$')


class Table(NamedTuple):
    headers: Sequence[str]
    rows: Sequence[Sequence[str]]
    title: str = ''


def format_float(x: float | None, digits: int = 4) -> str:
    """Fixed-point text; empty for a missing value."""
    if x is None:
        return ''
    return f'{x:.{digits}f}'


def format_p(p: float | None) -> str:
    """p-values in scientific notation; empty for a missing value."""
    if p is None:
        return ''
    return f'{p:.3e}'


def compute_col_widths(headers: Sequence[str],
                       rows: Sequence[Sequence[str]]) -> Sequence[int]:
    result = [len(s) for s in headers]
    for row in rows:
        result = [max(x, len(s)) for x, s in zip(result, row)]
    return result


def compute_alignments(rows: Sequence[Sequence[str]],
                       width: int) -> Sequence[str]:
    """A list of '<' or '>' for each column specifying alignment.

    Columns are aligned right iff all non-empty values are numeric.
    """
    result: list[str] = ['>'] * width
    for row in rows:
        for i, cell in enumerate(row):
            if cell and not NUMERIC_PATTERN.match(cell):
                result[i] = '<'
    return result


def markdown(table: Table) -> str:
    """Formats the table as an aligned Markdown table."""
    headers, rows = table.headers, table.rows
    col_widths = compute_col_widths(headers, rows)
    alignments = compute_alignments(rows, len(headers))

    result = f'{table.title}\n\n' if table.title else ''
    result += '|'
    for header, alignment, col_width in zip(headers, alignments, col_widths):
        result += f' {header:{alignment}{col_width}} |'
    result += '\n'

    result += '|'
    for alignment, col_width in zip(alignments, col_widths):
        if alignment == '<':
            result += ':' + '-' * col_width + '-|'
        else:
            result += '-' + '-' * col_width + ':|'
    result += '\n'

    for row in rows:
        result += '|'
        for s, alignment, col_width in zip(row, alignments, col_widths):
            result += f' {s:{alignment}{col_width}} |'
        result += '\n'

    return result


def csv(table: Table, *, dialect: str = 'excel', **fmtparams) -> str:
    """Formats the table as comma-separated values with `\\n` line endings."""
    fmtparams.setdefault('lineterminator', '\n')
    with io.StringIO() as out:
        writer = csv_lib.writer(out, dialect=dialect, **fmtparams)
        writer.writerow(table.headers)
        for row in table.rows:
            writer.writerow(row)
        return out.getvalue()

