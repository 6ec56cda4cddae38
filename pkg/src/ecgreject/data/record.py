__docformat__ = 'google'

from dataclasses import dataclass

import numpy

from typing import Iterator, Sequence, overload

SAMPLE_RATE = 500
LEAD_COUNT = 12
LEAD_NAMES = ('I', 'II', 'III', 'aVR', 'aVL', 'aVF', 'V1', 'V2', 'V3', 'V4',
              'V5', 'V6')


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """One labeled multi-lead recording in millivolts.

    `leads` has shape `[leads, L]` and is read-only.
    """
    id: str
    leads: numpy.ndarray
    label: int
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        leads = numpy.array(self.leads, dtype=numpy.float64)
        if leads.ndim != 2 or leads.shape[1] < 1:
            raise ValueError(
                f'Record {self.id}: leads must have shape [leads, L >= 1], got {leads.shape}.'
            )
        if not 0 <= self.label < 256:
            raise ValueError(
                f'Record {self.id}: label {self.label} does not fit in a byte.')
        leads.setflags(write=False)
        object.__setattr__(self, 'leads', leads)

    @property
    def lead_count(self) -> int:
        return self.leads.shape[0]

    @property
    def length(self) -> int:
        return self.leads.shape[1]

    @property
    def duration(self) -> float:
        """Seconds."""
        return self.length / self.sample_rate

    def __eq__(self, other) -> bool:
        if not isinstance(other, EcgRecord):
            return NotImplemented
        return (self.id == other.id and self.label == other.label
                and self.sample_rate == other.sample_rate
                and self.leads.shape == other.leads.shape
                and bool(numpy.array_equal(self.leads, other.leads)))

    def __hash__(self) -> int:
        return hash((self.id, self.label, self.leads.shape))


class Dataset(Sequence[EcgRecord]):
    """An immutable sequence of records with unique ids."""

    def __init__(self, records: Sequence[EcgRecord] = ()):
        self._records = tuple(records)
        ids = set()
        for record in self._records:
            if record.id in ids:
                raise ValueError(f'Duplicate record id {record.id!r}.')
            ids.add(record.id)

    def __len__(self) -> int:
        return len(self._records)

    @overload
    def __getitem__(self, index: int) -> EcgRecord:
        ...

    @overload
    def __getitem__(self, index: slice) -> 'Dataset':
        ...

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Dataset(self._records[index])
        return self._records[index]

    def __iter__(self) -> Iterator[EcgRecord]:
        return iter(self._records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._records == other._records

    def __hash__(self) -> int:
        return hash(self._records)

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        return Dataset([self._records[i] for i in indices])

    def labels(self) -> numpy.ndarray:
        return numpy.array([r.label for r in self._records], dtype=numpy.int64)

    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self._records)

    def class_histogram(self, num_classes: int) -> tuple[int, ...]:
        counts = numpy.bincount(self.labels(), minlength=num_classes)
        return tuple(int(c) for c in counts)

    def __repr__(self) -> str:
        return f'Dataset({len(self)} records)'


@dataclass(frozen=True)
class GroundTruth:
    """What the generator did to one record."""
    id: str
    clean_label: int
    """The class whose morphology the signal shows."""
    label: int
    """The label stored with the record; differs from `clean_label` iff flipped."""
    is_hard: bool
    """Baseline drift and interference bursts were added."""
    is_flipped: bool
    is_mixed: bool
    secondary_label: int | None
    """The second class whose signature was mixed in, if any."""
    noise_energy: float
    """Mean square of all added noise, in mV^2."""
