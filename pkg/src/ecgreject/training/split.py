__docformat__ = 'google'

from ecgreject.training.config import SplitSpec
from ecgreject.typing import derive_rng

import math

import numpy

from typing import NamedTuple, Sequence, TypeVar

T = TypeVar('T')

MIN_RECORDS = 10


class SplitIndices(NamedTuple):
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]


def split_indices(count: int,
                  spec: SplitSpec = SplitSpec(),
                  seed: int = 0) -> SplitIndices:
    """A seeded partition of `range(count)`.

    Validation and test sizes are `floor(count * fraction)`; training takes
    the rest. Validation and test indices are sorted; training indices keep
    the shuffled order.

    Raises:
        ValueError: With fewer than 10 records.
    """
    if count < MIN_RECORDS:
        raise ValueError(
            f'Splitting needs at least {MIN_RECORDS} records, got {count}.')
    order = derive_rng(seed, 'split').permutation(count)
    n_val = math.floor(count * spec.val + 1e-9)
    n_test = math.floor(count * spec.test + 1e-9)
    val = numpy.sort(order[:n_val])
    test = numpy.sort(order[n_val:n_val + n_test])
    train = order[n_val + n_test:]
    return SplitIndices(tuple(int(i) for i in train),
                        tuple(int(i) for i in val),
                        tuple(int(i) for i in test))


def split_dataset(records: Sequence[T],
                  spec: SplitSpec = SplitSpec(),
                  seed: int = 0) -> tuple[list[T], list[T], list[T]]:
    """Partitions `records` into train, validation and test lists."""
    indices = split_indices(len(records), spec, seed)
    return ([records[i] for i in indices.train],
            [records[i] for i in indices.val],
            [records[i] for i in indices.test])
