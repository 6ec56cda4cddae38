__docformat__ = 'google'

from ecgreject.data.record import EcgRecord
from ecgreject.typing import CropMode

import numpy

from typing import Sequence


def condition_length(record: EcgRecord | numpy.ndarray,
                     target_len: int = 5000,
                     mode: CropMode = CropMode.EvalCenterCrop,
                     rng: numpy.random.Generator | None = None) -> numpy.ndarray:
    """Brings a recording to exactly `target_len` samples.

    Shorter recordings are zero-padded on the right. Longer ones are cropped,
    at an offset drawn from `rng` in `TrainRandomCrop` mode or at
    `(L - target_len) // 2` in `EvalCenterCrop` mode.

    Returns:
        A new array of shape `[leads, target_len]`.
    """
    if target_len < 1:
        raise ValueError(f'target_len must be at least 1, got {target_len}.')
    leads = record.leads if isinstance(record, EcgRecord) else numpy.asarray(
        record, dtype=numpy.float64)
    length = leads.shape[1]
    if length <= target_len:
        result = numpy.zeros((leads.shape[0], target_len))
        result[:, :length] = leads
        return result
    if mode is CropMode.TrainRandomCrop:
        if rng is None:
            raise ValueError('Random cropping requires a generator.')
        offset = int(rng.integers(0, length - target_len + 1))
    else:
        offset = (length - target_len) // 2
    return numpy.array(leads[:, offset:offset + target_len])


def condition_batch(records: Sequence[EcgRecord],
                    target_len: int,
                    mode: CropMode = CropMode.EvalCenterCrop,
                    rng: numpy.random.Generator | None = None) -> numpy.ndarray:
    """Stacks conditioned records into `[B, leads, target_len]`.

    Random offsets are drawn from `rng` in record order.
    """
    if not records:
        raise ValueError('condition_batch() of no records.')
    return numpy.stack(
        [condition_length(r, target_len, mode, rng) for r in records])
