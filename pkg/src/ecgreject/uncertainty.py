"""Monte Carlo dropout sampling and the entropy decomposition of uncertainty.

For `N` sampled probability rows `p_1, ..., p_N` of one record:

* total uncertainty is the entropy of the mean row,
* data uncertainty is the mean of the row entropies,
* model uncertainty is their difference, which is non-negative because
  entropy is concave.

All values are in nats.
"""

__docformat__ = 'google'

from ecgreject.autodiff import Tensor
from ecgreject.binary import BinaryReader, BinaryWriter
from ecgreject.network import Network, iter_batches
from ecgreject.typing import (ConfigError, ModelMode, NumericError,
                              UncertaintyKind)

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass
import io
import logging
import math
import os
import warnings

import numpy

from typing import Iterable, NamedTuple, Sequence

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9
MODEL_CLAMP_SILENT = 1e-9
MODEL_CLAMP_LIMIT = 1e-6

THREADS_VARIABLE = 'ECG_UNC_THREADS'


def _validate_probabilities(probs: numpy.ndarray) -> numpy.ndarray:
    """Checks rows of probabilities, renormalizing rows that are slightly off."""
    if not numpy.isfinite(probs).all():
        raise NumericError('Probabilities contain NaN or infinity.')
    if (probs < 0).any() or (probs > 1).any():
        raise ValueError('Probabilities must lie in [0, 1].')
    sums = probs.sum(axis=-1)
    deviation = numpy.abs(sums - 1.0)
    worst = float(deviation.max()) if deviation.size else 0.0
    if worst > ROW_SUM_TOLERANCE:
        raise ValueError(
            f'Probability rows must sum to 1, found a row off by {worst:.3g}.')
    if worst > 1e-12:
        warnings.warn(
            f'Renormalizing probability rows off by up to {worst:.3g}.',
            category=RuntimeWarning,
            stacklevel=3)
        probs = probs / sums[..., None]
    return probs


@dataclass(frozen=True)
class McPrediction:
    """`N` sampled probability rows over `K` classes for one record.

    Rows that miss summing to 1 by at most 1e-9 are renormalized on
    construction; larger misses raise `ValueError`.
    """
    probs: numpy.ndarray

    def __post_init__(self):
        probs = numpy.array(self.probs, dtype=numpy.float64)
        if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 2:
            raise ValueError(
                f'McPrediction needs shape [N >= 1, K >= 2], got {probs.shape}.'
            )
        probs = _validate_probabilities(probs)
        probs.setflags(write=False)
        object.__setattr__(self, 'probs', probs)

    @property
    def n_passes(self) -> int:
        return self.probs.shape[0]

    @property
    def class_count(self) -> int:
        return self.probs.shape[1]

    def mean(self) -> numpy.ndarray:
        return self.probs.mean(axis=0)

    def predicted_class(self) -> int:
        """Argmax of the mean row; the lowest index wins ties."""
        return int(numpy.argmax(self.mean()))


@dataclass(frozen=True)
class UncertaintyEstimate:
    total: float
    data: float
    model: float
    """`total - data`, clamped at 0."""
    model_raw: float
    """`total - data` before clamping."""

    def of(self, kind: UncertaintyKind) -> float:
        match kind:
            case UncertaintyKind.Total:
                return self.total
            case UncertaintyKind.Data:
                return self.data
            case UncertaintyKind.Model:
                return self.model


def _entropies(probs: numpy.ndarray) -> numpy.ndarray:
    """Entropy of each row, with 0 ln 0 = 0."""
    logs = numpy.zeros(probs.shape)
    numpy.log(probs, out=logs, where=probs > 0)
    return -(probs * logs).sum(axis=-1)


def entropy(p: Sequence[float] | numpy.ndarray) -> float:
    """Entropy in nats of a probability vector.

    Raises:
        ValueError: If an entry is negative or the sum is off by more than
            1e-9.
    """
    p = numpy.asarray(p, dtype=numpy.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f'entropy() needs a non-empty vector, got shape {p.shape}.')
    if (p < 0).any():
        raise ValueError(f'Probabilities must be non-negative, got {p.min()}.')
    total = p.sum()
    if abs(total - 1.0) > ROW_SUM_TOLERANCE:
        raise ValueError(f'Probabilities must sum to 1, got {total}.')
    return float(_entropies(p))


def total_uncertainty(mc: McPrediction) -> float:
    return float(_entropies(mc.mean()))


def data_uncertainty(mc: McPrediction) -> float:
    return float(_entropies(mc.probs).mean())


def model_uncertainty(mc: McPrediction) -> float:
    return decompose(mc).model


def decompose(mc: McPrediction) -> UncertaintyEstimate:
    """Total, data and model uncertainty of one record.

    Raw model uncertainty in `[-1e-6, -1e-9)` is clamped to 0 with a warning;
    anything in `[-1e-9, 0)` is rounding and is clamped silently.

    Raises:
        NumericError: If the raw model uncertainty is below -1e-6.
    """
    total = total_uncertainty(mc)
    data = data_uncertainty(mc)
    raw = total - data
    model = raw
    if raw < 0:
        if raw < -MODEL_CLAMP_LIMIT:
            raise NumericError(
                f'Model uncertainty {raw:.3g} is negative beyond rounding.')
        if raw < -MODEL_CLAMP_SILENT:
            warnings.warn(f'Clamping model uncertainty {raw:.3g} to 0.',
                          category=RuntimeWarning,
                          stacklevel=2)
        model = 0.0
    return UncertaintyEstimate(total, data, model, raw)


def thread_count() -> int:
    """Worker threads for MC passes: `ECG_UNC_THREADS`, or the CPU count."""
    value = os.environ.get(THREADS_VARIABLE)
    if value is None or value == '':
        return os.cpu_count() or 1
    try:
        result = int(value)
    except ValueError:
        result = 0
    if result < 1:
        raise ConfigError(
            f'{THREADS_VARIABLE} must be a positive integer, got {value!r}.',
            field=THREADS_VARIABLE)
    return result


def _one_pass(network: Network, batch: numpy.ndarray, seed: int,
              batch_size: int) -> numpy.ndarray:
    rng = numpy.random.default_rng(seed)
    chunks = []
    for part in iter_batches(batch.shape[0], batch_size):
        probs = network.predict_proba(Tensor(batch[part]),
                                      ModelMode.EvalMcDropout, rng)
        chunks.append(probs.values)
    return numpy.concatenate(chunks, axis=0)


def mc_sample(network: Network,
              batch: numpy.ndarray,
              n_passes: int = 50,
              base_seed: int = 0,
              *,
              batch_size: int = 32,
              threads: int | None = None) -> list[McPrediction]:
    """Runs `n_passes` forward passes with dropout active.

    Pass `i` draws its dropout masks from a generator seeded with
    `base_seed + i`, consumed chunk by chunk over the batch. BN uses its
    running statistics. Passes may run on several threads; the result is the
    same as a serial run.

    Args:
        network: A trained network.
        batch: Conditioned records, shape `[B, leads, input_length]`.
        n_passes: Number of passes, at least 1.
        base_seed: Seed of pass 0.
        batch_size: Records per forward call.
        threads: Worker threads. Defaults to `thread_count()`.

    Returns:
        One `McPrediction` per record, in batch order.

    Raises:
        NumericError: If the network produces non-finite output.
    """
    if n_passes < 1:
        raise ValueError(f'n_passes must be at least 1, got {n_passes}.')
    if batch_size < 1:
        raise ValueError(f'batch_size must be at least 1, got {batch_size}.')
    batch = numpy.asarray(batch, dtype=numpy.float64)
    if batch.shape[0] == 0:
        return []
    workers = min(threads or thread_count(), n_passes)
    seeds = [base_seed + i for i in range(n_passes)]
    logger.debug('Running %d MC passes over %d records on %d threads.',
                 n_passes, batch.shape[0], workers)
    if workers == 1:
        passes = [_one_pass(network, batch, s, batch_size) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            passes = list(
                executor.map(
                    lambda s: _one_pass(network, batch, s, batch_size),
                    seeds))
    stacked = numpy.stack(passes, axis=0)  # [N, B, K]
    return [McPrediction(stacked[:, r, :]) for r in range(stacked.shape[1])]


class CaseStudies(NamedTuple):
    """Indices of wrongly predicted records at the extremes of an uncertainty."""
    most_uncertain: tuple[int, ...]
    least_uncertain: tuple[int, ...]


def case_studies(estimates: Sequence[UncertaintyEstimate],
                 true_labels: Sequence[int],
                 pred_labels: Sequence[int],
                 count: int = 30,
                 kind: UncertaintyKind = UncertaintyKind.Data) -> CaseStudies:
    """Picks wrong predictions with the largest and smallest uncertainty.

    Large data uncertainty tends to come from noisy recordings; confident
    mistakes tend to come from disputed labels. Ties are broken by index.
    """
    if count < 0:
        raise ValueError(f'count must be non-negative, got {count}.')
    wrong = [
        i for i, (t, p) in enumerate(zip(true_labels, pred_labels)) if t != p
    ]
    ordered = sorted(wrong, key=lambda i: (estimates[i].of(kind), i))
    most = sorted(wrong, key=lambda i: (-estimates[i].of(kind), i))
    return CaseStudies(tuple(most[:count]), tuple(ordered[:count]))


# Per-record uncertainty table.

UNCERTAINTY_COLUMNS = ('record_id', 'true_label', 'pred_label', 'total_u',
                       'data_u', 'model_u')


@dataclass(frozen=True)
class UncertaintyRow:
    record_id: str
    true_label: int
    pred_label: int
    estimate: UncertaintyEstimate

    @property
    def correct(self) -> bool:
        return self.true_label == self.pred_label


def format_uncertainty_csv(rows: Iterable[UncertaintyRow]) -> str:
    """Floats are written with `repr`, so reading them back is exact."""
    with io.StringIO() as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(UNCERTAINTY_COLUMNS)
        for row in rows:
            e = row.estimate
            writer.writerow([
                row.record_id, row.true_label, row.pred_label,
                repr(e.total),
                repr(e.data),
                repr(e.model)
            ])
        return out.getvalue()


def parse_uncertainty_csv(text: str) -> list[UncertaintyRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != UNCERTAINTY_COLUMNS:
        raise ValueError(
            f'Expected columns {UNCERTAINTY_COLUMNS}, got {reader.fieldnames}.')
    result = []
    for line in reader:
        total = float(line['total_u'])
        data = float(line['data_u'])
        model = float(line['model_u'])
        result.append(
            UncertaintyRow(line['record_id'], int(line['true_label']),
                           int(line['pred_label']),
                           UncertaintyEstimate(total, data, model, model)))
    return result


# Raw probability dump.

PROBS_MAGIC = b'ECGP'
PROBS_VERSION = 1


def encode_mc_probabilities(record_ids: Sequence[str],
                            predictions: Sequence[McPrediction]) -> bytes:
    """ECGP container: magic, u32 version, then one N x K tensor per record."""
    if len(record_ids) != len(predictions):
        raise ValueError('record_ids and predictions differ in length.')
    seen = set()
    for rid in record_ids:
        if rid in seen:
            raise ValueError(f'Duplicate record id {rid!r}.')
        seen.add(rid)
    stream = io.BytesIO()
    writer = BinaryWriter(stream)
    writer.raw(PROBS_MAGIC)
    writer.u32(PROBS_VERSION)
    writer.tensors(
        {rid: mc.probs
         for rid, mc in zip(record_ids, predictions)})
    return stream.getvalue()


def decode_mc_probabilities(data: bytes) -> dict[str, McPrediction]:
    reader = BinaryReader(data)
    reader.magic(PROBS_MAGIC)
    reader.version(PROBS_VERSION)
    tensors = reader.tensors()
    reader.end()
    return {rid: McPrediction(values) for rid, values in tensors.items()}


def max_entropy(num_classes: int) -> float:
    """`ln K`, the largest possible uncertainty over `K` classes."""
    return math.log(num_classes)
