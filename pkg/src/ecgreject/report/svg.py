"""Self-contained SVG figures.

Every function returns a `svgwrite.Drawing`; `to_text()` serializes it.
Output depends only on the inputs.
"""

__docformat__ = 'google'

from ecgreject.metrics import ConfusionMatrix, row_normalize
from ecgreject.rejection import SweepPoint

import numpy

import svgwrite
import svgwrite.shapes
import svgwrite.text

from typing import Mapping, Sequence

FONT = 'sans-serif'
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd')


def to_text(drawing: svgwrite.Drawing) -> str:
    return drawing.tostring() + '\n'


def _fmt(x: float) -> str:
    return f'{x:.3g}'


class _Axes:
    """Maps data coordinates into a plot rectangle and draws the frame."""

    def __init__(self, drawing: svgwrite.Drawing, x_range: tuple[float, float],
                 y_range: tuple[float, float], *, left: float, top: float,
                 width: float, height: float):
        self.drawing = drawing
        self.x_range = x_range
        self.y_range = y_range
        self.left = left
        self.top = top
        self.width = width
        self.height = height

    def x(self, value: float) -> float:
        lo, hi = self.x_range
        return self.left + (value - lo) / (hi - lo) * self.width

    def y(self, value: float) -> float:
        lo, hi = self.y_range
        return self.top + self.height - (value - lo) / (hi - lo) * self.height

    def frame(self, x_label: str, y_label: str, ticks: int = 5) -> None:
        d = self.drawing
        d.add(
            svgwrite.shapes.Rect((self.left, self.top),
                                 (self.width, self.height),
                                 fill='none',
                                 stroke='black'))
        for i in range(ticks + 1):
            xv = self.x_range[0] + (self.x_range[1] -
                                    self.x_range[0]) * i / ticks
            yv = self.y_range[0] + (self.y_range[1] -
                                    self.y_range[0]) * i / ticks
            px, py = self.x(xv), self.y(yv)
            bottom = self.top + self.height
            d.add(
                svgwrite.shapes.Line((px, bottom), (px, bottom + 4),
                                     stroke='black'))
            d.add(
                svgwrite.text.Text(_fmt(xv),
                                   insert=(px, bottom + 16),
                                   text_anchor='middle',
                                   font_size=10,
                                   font_family=FONT))
            d.add(
                svgwrite.shapes.Line((self.left - 4, py), (self.left, py),
                                     stroke='black'))
            d.add(
                svgwrite.text.Text(_fmt(yv),
                                   insert=(self.left - 6, py + 3),
                                   text_anchor='end',
                                   font_size=10,
                                   font_family=FONT))
        d.add(
            svgwrite.text.Text(x_label,
                               insert=(self.left + self.width / 2,
                                       self.top + self.height + 34),
                               text_anchor='middle',
                               font_size=12,
                               font_family=FONT))
        cx, cy = self.left - 40, self.top + self.height / 2
        d.add(
            svgwrite.text.Text(y_label,
                               insert=(cx, cy),
                               text_anchor='middle',
                               font_size=12,
                               font_family=FONT,
                               transform=f'rotate(-90 {cx} {cy})'))


def _drawing(width: int, height: int, title: str) -> svgwrite.Drawing:
    drawing = svgwrite.Drawing(size=(width, height), profile='full')
    drawing.add(
        svgwrite.shapes.Rect((0, 0), (width, height), fill='white'))
    drawing.add(
        svgwrite.text.Text(title,
                           insert=(width / 2, 20),
                           text_anchor='middle',
                           font_size=14,
                           font_family=FONT))
    return drawing


def _legend(drawing: svgwrite.Drawing, names: Sequence[str], x: float,
            y: float) -> None:
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        drawing.add(
            svgwrite.shapes.Rect((x, y + 16 * i), (10, 10), fill=color))
        drawing.add(
            svgwrite.text.Text(name,
                               insert=(x + 14, y + 16 * i + 9),
                               font_size=10,
                               font_family=FONT))


def confusion_heatmap(cm: ConfusionMatrix,
                      title: str,
                      *,
                      normalized: bool = True) -> svgwrite.Drawing:
    """Cells shaded by row-normalized fraction and labeled with the value."""
    k = cm.num_classes
    cell = 44
    left, top = 90, 60
    drawing = _drawing(left + k * cell + 20, top + k * cell + 50, title)
    fractions = row_normalize(cm).fractions
    for i in range(k):
        for j in range(k):
            shade = int(round(255 * (1.0 - fractions[i, j])))
            x, y = left + j * cell, top + i * cell
            drawing.add(
                svgwrite.shapes.Rect((x, y), (cell, cell),
                                     fill=svgwrite.rgb(shade, shade, 255),
                                     stroke='#888888'))
            text = (f'{fractions[i, j]:.2f}'
                    if normalized else str(int(cm.counts[i, j])))
            drawing.add(
                svgwrite.text.Text(
                    text,
                    insert=(x + cell / 2, y + cell / 2 + 4),
                    text_anchor='middle',
                    font_size=10,
                    font_family=FONT,
                    fill='white' if fractions[i, j] > 0.6 else 'black'))
    for i, name in enumerate(cm.class_names):
        drawing.add(
            svgwrite.text.Text(name,
                               insert=(left - 6, top + i * cell + cell / 2 + 4),
                               text_anchor='end',
                               font_size=11,
                               font_family=FONT))
        drawing.add(
            svgwrite.text.Text(name,
                               insert=(left + i * cell + cell / 2, top - 6),
                               text_anchor='middle',
                               font_size=11,
                               font_family=FONT))
    drawing.add(
        svgwrite.text.Text('rows: true class, columns: predicted class',
                           insert=(left, top + k * cell + 24),
                           font_size=11,
                           font_family=FONT))
    return drawing


def sweep_chart(points: Sequence[SweepPoint], title: str) -> svgwrite.Drawing:
    """Macro-F1 of the accepted records against the accept ratio.

    Points with no accepted records are omitted.
    """
    drawing = _drawing(640, 440, title)
    defined = [p for p in points if p.macro_f1 is not None]
    axes = _Axes(drawing, (0.0, 1.0), (0.0, 1.0),
                 left=70,
                 top=40,
                 width=540,
                 height=340)
    axes.frame('accept ratio', 'Macro-F1 of accepted records')
    if defined:
        coordinates = [(axes.x(p.accept_ratio), axes.y(p.macro_f1))
                       for p in defined]
        drawing.add(
            svgwrite.shapes.Polyline(coordinates,
                                     fill='none',
                                     stroke=PALETTE[0],
                                     stroke_width=1.5))
        for (x, y), point in zip(coordinates, defined):
            drawing.add(
                svgwrite.shapes.Circle((x, y), r=3, fill=PALETTE[0]))
            drawing.add(
                svgwrite.text.Text(f'{point.threshold:.2f}',
                                   insert=(x + 4, y - 5),
                                   font_size=8,
                                   font_family=FONT))
    return drawing


def histogram(series: Mapping[str, Sequence[float]],
              title: str,
              x_label: str,
              *,
              bins: int = 30) -> svgwrite.Drawing:
    """Overlaid density histograms drawn as step outlines."""
    drawing = _drawing(640, 440, title)
    arrays = {
        name: numpy.asarray(values, dtype=numpy.float64)
        for name, values in series.items()
    }
    everything = [a for a in arrays.values() if a.size]
    if everything:
        merged = numpy.concatenate(everything)
        lo, hi = float(merged.min()), float(merged.max())
    else:
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + 1.0
    edges = numpy.linspace(lo, hi, bins + 1)
    densities = {
        name: (numpy.histogram(a, bins=edges, density=True)[0]
               if a.size else numpy.zeros(bins))
        for name, a in arrays.items()
    }
    top = max([float(d.max()) for d in densities.values()] + [1e-12])
    axes = _Axes(drawing, (lo, hi), (0.0, top * 1.05),
                 left=70,
                 top=40,
                 width=540,
                 height=340)
    axes.frame(x_label, 'density')
    for i, (name, density) in enumerate(densities.items()):
        coordinates = [(axes.x(edges[0]), axes.y(0.0))]
        for b in range(bins):
            coordinates.append((axes.x(edges[b]), axes.y(density[b])))
            coordinates.append((axes.x(edges[b + 1]), axes.y(density[b])))
        coordinates.append((axes.x(edges[-1]), axes.y(0.0)))
        drawing.add(
            svgwrite.shapes.Polyline(coordinates,
                                     fill='none',
                                     stroke=PALETTE[i % len(PALETTE)],
                                     stroke_width=1.5))
    _legend(drawing, list(densities), 500, 50)
    return drawing


def scatter(x: Sequence[float],
            y: Sequence[float],
            title: str,
            x_label: str,
            y_label: str,
            *,
            identity_line: bool = True) -> svgwrite.Drawing:
    """Points on square axes sharing one range, with the line y = x."""
    drawing = _drawing(520, 520, title)
    xs = numpy.asarray(x, dtype=numpy.float64)
    ys = numpy.asarray(y, dtype=numpy.float64)
    hi = max(float(xs.max()) if xs.size else 0.0,
             float(ys.max()) if ys.size else 0.0, 1e-3) * 1.05
    axes = _Axes(drawing, (0.0, hi), (0.0, hi),
                 left=70,
                 top=40,
                 width=420,
                 height=420)
    axes.frame(x_label, y_label)
    if identity_line:
        drawing.add(
            svgwrite.shapes.Line((axes.x(0.0), axes.y(0.0)),
                                 (axes.x(hi), axes.y(hi)),
                                 stroke='#888888',
                                 stroke_dasharray='4,3'))
    for xv, yv in zip(xs, ys):
        drawing.add(
            svgwrite.shapes.Circle((axes.x(xv), axes.y(yv)),
                                   r=2,
                                   fill=PALETTE[0],
                                   fill_opacity=0.6))
    return drawing
