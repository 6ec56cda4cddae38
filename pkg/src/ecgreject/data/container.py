"""The ECGD dataset container and its CSV companions.

Layout, all little-endian:

* magic `ECGD`
* format version, u32 = 1, or 2 when the sample rate is not 500 Hz
* record count, u64
* version 2 only: sample rate in Hz, u32
* per record: u16 id length, UTF-8 id, u8 label, u16 lead count, u32 length,
  then `leads * length` float32 values, lead-major

Values are stored as float32, so a round trip is exact for recordings whose
values are float32-representable. The generator produces such recordings.
"""

__docformat__ = 'google'

from ecgreject.binary import BinaryReader, BinaryWriter
from ecgreject.data.record import SAMPLE_RATE, Dataset, EcgRecord, GroundTruth
from ecgreject.typing import ContainerError

import csv
import hashlib
import io
import os

from typing import Sequence

MAGIC = b'ECGD'
VERSION = 1
RATE_VERSION = 2
"""Adds a u32 sample rate after the record count."""


def _sample_rate(dataset: Dataset) -> int:
    rates = {record.sample_rate for record in dataset}
    if len(rates) > 1:
        raise ValueError(
            f'Records have different sample rates {sorted(rates)}.\n'
            'Tip: a container holds recordings at a single rate.')
    return rates.pop() if rates else SAMPLE_RATE


def encode_dataset(dataset: Dataset) -> bytes:
    """Writes version 1 at the default rate and version 2 otherwise.

    Raises:
        ValueError: If the records do not share one sample rate.
    """
    sample_rate = _sample_rate(dataset)
    stream = io.BytesIO()
    writer = BinaryWriter(stream)
    writer.raw(MAGIC)
    version = VERSION if sample_rate == SAMPLE_RATE else RATE_VERSION
    writer.u32(version)
    writer.u64(len(dataset))
    if version == RATE_VERSION:
        writer.u32(sample_rate)
    for record in dataset:
        writer.short_string(record.id)
        writer.u8(record.label)
        writer.u16(record.lead_count)
        writer.u32(record.length)
        writer.array(record.leads, '<f4')
    return stream.getvalue()


def decode_dataset(data: bytes) -> Dataset:
    """Parses an ECGD container.

    Raises:
        ContainerError: On bad magic, an unsupported version, truncation,
            trailing bytes or duplicate ids, naming the byte offset.
    """
    reader = BinaryReader(data)
    reader.magic(MAGIC)
    version = reader.version(VERSION, RATE_VERSION)
    count = reader.u64('record count')
    sample_rate = SAMPLE_RATE
    if version == RATE_VERSION:
        start = reader.offset
        sample_rate = reader.u32('sample rate')
        if sample_rate == 0:
            raise ContainerError('sample rate is zero', start)
    records = []
    ids = set()
    for _ in range(count):
        start = reader.offset
        record_id = reader.short_string('record id')
        if record_id in ids:
            raise ContainerError(f'duplicate record id {record_id!r}', start)
        ids.add(record_id)
        label = reader.u8('label')
        lead_count = reader.u16('lead count')
        length = reader.u32('length')
        if lead_count == 0 or length == 0:
            raise ContainerError(f'record {record_id!r} is empty', start)
        leads = reader.array((lead_count, length), '<f4',
                             f'record {record_id!r} values')
        records.append(EcgRecord(record_id, leads, label, sample_rate))
    reader.end()
    return Dataset(records)


def save_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    with open(path, 'wb') as f:
        f.write(encode_dataset(dataset))


def load_dataset(path: str | os.PathLike) -> Dataset:
    with open(path, 'rb') as f:
        return decode_dataset(f.read())


def file_hash(path: str | os.PathLike) -> str:
    """SHA-256 of a file's bytes, as hex."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def listing_path(path: str | os.PathLike) -> str:
    """Where the `id,label,length` listing of a dataset file goes."""
    return os.fspath(path) + '.records.csv'


def truth_path(path: str | os.PathLike) -> str:
    """Where the ground-truth sidecar of a dataset file goes."""
    return os.fspath(path) + '.truth.csv'


def format_listing(dataset: Dataset) -> str:
    with io.StringIO() as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['id', 'label', 'length'])
        for record in dataset:
            writer.writerow([record.id, record.label, record.length])
        return out.getvalue()


TRUTH_COLUMNS = ('id', 'clean_label', 'label', 'is_hard', 'is_flipped',
                 'is_mixed', 'secondary_label', 'noise_energy')


def format_truth(truth: Sequence[GroundTruth]) -> str:
    with io.StringIO() as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(TRUTH_COLUMNS)
        for t in truth:
            writer.writerow([
                t.id, t.clean_label, t.label,
                int(t.is_hard),
                int(t.is_flipped),
                int(t.is_mixed),
                '' if t.secondary_label is None else t.secondary_label,
                repr(t.noise_energy)
            ])
        return out.getvalue()


def parse_truth(text: str) -> list[GroundTruth]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRUTH_COLUMNS:
        raise ValueError(
            f'Expected columns {TRUTH_COLUMNS}, got {reader.fieldnames}.')
    return [
        GroundTruth(row['id'], int(row['clean_label']), int(row['label']),
                    row['is_hard'] == '1', row['is_flipped'] == '1',
                    row['is_mixed'] == '1',
                    int(row['secondary_label'])
                    if row['secondary_label'] else None,
                    float(row['noise_energy'])) for row in reader
    ]


def load_truth(path: str | os.PathLike) -> dict[str, GroundTruth] | None:
    """The sidecar of the dataset at `path` by record id, or `None` if absent."""
    sidecar = truth_path(path)
    if not os.path.exists(sidecar):
        return None
    with open(sidecar, 'r', encoding='utf-8', newline='') as f:
        return {t.id: t for t in parse_truth(f.read())}
