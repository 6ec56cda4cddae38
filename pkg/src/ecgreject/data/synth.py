"""Synthetic 12-lead recordings of nine rhythm and morphology classes.

Each beat is a sum of Gaussian waves (P, Q, R, S, R', ST, T) projected onto
the leads with fixed gain vectors. Classes differ in rhythm and in a
signature feature. Some records are made hard to classify with baseline
drift and interference bursts in some leads, some carry a wrong label, and
some show the signature of a second class.
"""

__docformat__ = 'google'

from ecgreject.data.record import (LEAD_COUNT, SAMPLE_RATE, Dataset,
                                   EcgRecord, GroundTruth)
from ecgreject.metrics import CLASS_NAMES
from ecgreject.typing import ConfigError, derive_rng

from dataclasses import asdict, dataclass, field, fields, replace
import json
import logging
import math
import os

import numpy

from typing import Any, Mapping, NamedTuple

logger = logging.getLogger(__name__)

# Lead order: I, II, III, aVR, aVL, aVF, V1..V6.
P_GAIN = numpy.array(
    [0.6, 1.0, 0.5, -0.8, 0.2, 0.7, 0.5, 0.6, 0.6, 0.6, 0.6, 0.5])
QRS_GAIN = numpy.array(
    [0.7, 1.0, 0.4, -0.8, 0.3, 0.7, -0.6, -0.2, 0.4, 1.0, 1.1, 0.9])
T_GAIN = numpy.array(
    [0.6, 1.0, 0.4, -0.8, 0.2, 0.7, 0.2, 0.8, 0.9, 0.9, 0.8, 0.6])
ST_GAIN = numpy.array(
    [0.5, 1.0, 0.6, -0.6, 0.2, 0.8, 0.4, 0.9, 1.0, 0.9, 0.7, 0.5])
R_PRIME_GAIN = numpy.array(
    [0.05, 0.05, 0.05, 0.0, 0.0, 0.05, 1.0, 0.8, 0.4, 0.1, 0.0, 0.0])
F_WAVE_GAIN = numpy.array(
    [0.3, 0.5, 0.4, -0.4, 0.1, 0.5, 1.0, 0.7, 0.4, 0.3, 0.2, 0.2])
RIGHT_PRECORDIAL = numpy.array([6, 7, 8])


@dataclass(frozen=True)
class ClassMorphology:
    """Waveform descriptors of one class. Defaults describe sinus rhythm."""
    heart_rate: float = 72.0
    """Beats per minute."""
    rr_irregularity: float = 0.03
    """Relative standard deviation of RR intervals."""
    p_amplitude: float = 0.12
    pr_interval: float = 0.16
    """Seconds from P peak to R peak."""
    qrs_width: float = 0.09
    qrs_amplitude: float = 1.0
    precordial_inversion: float = 0.0
    """0 to 1: how far V1-V3 QRS is replaced by a deep negative complex."""
    r_prime: float = 0.0
    """Amplitude of a terminal R' wave in V1-V3."""
    st_shift: float = 0.0
    t_amplitude: float = 0.3
    premature_rate: float = 0.0
    """Probability that a beat arrives early."""
    premature_kind: str = ''
    """`atrial` or `ventricular`."""
    fibrillation: float = 0.0
    """Amplitude of fibrillatory waves replacing P waves."""

    def combine(self, other: 'ClassMorphology') -> 'ClassMorphology':
        """This morphology with every abnormal feature of `other` added."""
        normal = ClassMorphology()
        changes = {
            f.name: getattr(other, f.name)
            for f in fields(self)
            if getattr(other, f.name) != getattr(normal, f.name)
        }
        return replace(self, **changes)


DEFAULT_MORPHOLOGY: tuple[ClassMorphology, ...] = (
    ClassMorphology(),
    ClassMorphology(heart_rate=95.0,
                    rr_irregularity=0.22,
                    p_amplitude=0.0,
                    fibrillation=0.06),
    ClassMorphology(pr_interval=0.32),
    ClassMorphology(qrs_width=0.15, precordial_inversion=1.0),
    ClassMorphology(qrs_width=0.13, r_prime=0.6),
    ClassMorphology(premature_rate=0.5, premature_kind='atrial'),
    ClassMorphology(premature_rate=0.5, premature_kind='ventricular'),
    ClassMorphology(st_shift=-0.25),
    ClassMorphology(st_shift=0.3),
)
"""Morphology of each class, in label order."""


@dataclass(frozen=True)
class SynthConfig:
    records_per_class: int = 10
    duration_range: tuple[float, float] = (6.0, 10.0)
    """Seconds, uniformly distributed."""
    sample_rate: int = SAMPLE_RATE
    hard_fraction: float = 0.3
    """Fraction of records given baseline drift and interference bursts."""
    label_flip_fraction: float = 0.05
    """Fraction of records stored with a wrong label."""
    mixed_fraction: float = 0.0
    """Fraction of records that also show a second class's signature."""
    baseline_drift_amplitude: float = 0.6
    drift_frequency: float = 0.3
    interference_burst_rate: float = 0.4
    """Bursts per second in hard records."""
    burst_amplitude: float = 1.5
    white_noise_sigma: float = 0.02
    seed: int = 0
    morphology: tuple[ClassMorphology, ...] = field(
        default=DEFAULT_MORPHOLOGY)

    def __post_init__(self):
        object.__setattr__(self, 'duration_range',
                           tuple(float(x) for x in self.duration_range))
        object.__setattr__(self, 'morphology', tuple(self.morphology))
        if self.records_per_class < 0:
            raise ConfigError('records_per_class must be non-negative.',
                              field='records_per_class')
        low, high = self.duration_range
        if not 6.0 <= low <= high <= 60.0:
            raise ConfigError(
                f'duration_range must satisfy 6 <= low <= high <= 60 seconds, got {self.duration_range}.',
                field='duration_range')
        if self.sample_rate < 1:
            raise ConfigError('sample_rate must be positive.',
                              field='sample_rate')
        for name in ('hard_fraction', 'label_flip_fraction',
                     'mixed_fraction'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f'{name} must be in [0, 1], got {value}.',
                                  field=name)
        for name in ('baseline_drift_amplitude', 'drift_frequency',
                     'interference_burst_rate', 'burst_amplitude',
                     'white_noise_sigma'):
            if getattr(self, name) < 0:
                raise ConfigError(f'{name} must be non-negative.', field=name)
        if len(self.morphology) != len(CLASS_NAMES):
            raise ConfigError(
                f'morphology needs {len(CLASS_NAMES)} entries, got {len(self.morphology)}.',
                field='morphology')
        for m in self.morphology:
            if m.premature_kind not in ('', 'atrial', 'ventricular'):
                raise ConfigError(
                    f'Unknown premature_kind {m.premature_kind!r}.',
                    field='morphology')
            if m.heart_rate <= 0 or m.qrs_width <= 0:
                raise ConfigError(
                    'heart_rate and qrs_width must be positive.',
                    field='morphology')

    @property
    def num_classes(self) -> int:
        return len(self.morphology)

    @property
    def record_count(self) -> int:
        return self.records_per_class * self.num_classes

    def replace(self, **changes) -> 'SynthConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        result = asdict(self)
        result['duration_range'] = list(self.duration_range)
        result['morphology'] = [asdict(m) for m in self.morphology]
        return result

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'SynthConfig':
        """Builds a config from a JSON-style mapping.

        `morphology` may be a list of one mapping per class, or a mapping
        from class name to the fields that differ from the defaults.
        """
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'Unknown synth config fields {sorted(unknown)}.',
                              field=sorted(unknown)[0])
        kwargs = dict(data)
        if 'duration_range' in kwargs:
            kwargs['duration_range'] = tuple(kwargs['duration_range'])
        if 'morphology' in kwargs:
            kwargs['morphology'] = _parse_morphology(kwargs['morphology'])
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(str(e), field='morphology') from e

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> 'SynthConfig':
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f'{path}: {e}', field='config') from e
        return cls.from_dict(data)


def _parse_morphology(value) -> tuple[ClassMorphology, ...]:
    if isinstance(value, Mapping):
        result = list(DEFAULT_MORPHOLOGY)
        for name, overrides in value.items():
            if name not in CLASS_NAMES:
                raise ConfigError(f'Unknown class {name!r} in morphology.',
                                  field='morphology')
            index = CLASS_NAMES.index(name)
            result[index] = replace(result[index], **overrides)
        return tuple(result)
    return tuple(ClassMorphology(**m) for m in value)


class SyntheticDataset(NamedTuple):
    dataset: Dataset
    truth: tuple[GroundTruth, ...]


class _Wave(NamedTuple):
    center: float
    """Seconds relative to the R peak."""
    width: float
    amplitude: float
    gain: numpy.ndarray


def _beat_waves(m: ClassMorphology, kind: str) -> list[_Wave]:
    """Waves of one beat. `kind` is `sinus`, `atrial` or `ventricular`."""
    if kind == 'ventricular':
        width = 0.16
        return [
            _Wave(0.0, width * 0.22, 1.3 * m.qrs_amplitude, -QRS_GAIN),
            _Wave(0.5 * width + 0.24, 0.06, -0.35, T_GAIN),
        ]
    width = m.qrs_width
    qrs_gain = QRS_GAIN.copy()
    qrs_gain[RIGHT_PRECORDIAL] = (
        (1.0 - m.precordial_inversion) * qrs_gain[RIGHT_PRECORDIAL] -
        m.precordial_inversion)
    qa = m.qrs_amplitude
    qrs_end = 0.5 * width
    t_center = qrs_end + 0.22
    waves = [
        _Wave(-0.3 * width, width * 0.12, -0.12 * qa, qrs_gain),
        _Wave(0.0, width * 0.2, qa, qrs_gain),
        _Wave(0.3 * width, width * 0.12, -0.25 * qa, qrs_gain),
        _Wave(t_center, 0.05, m.t_amplitude, T_GAIN),
    ]
    if kind == 'atrial':
        waves.append(_Wave(-m.pr_interval, 0.025, -0.08, P_GAIN))
    elif m.p_amplitude:
        waves.append(_Wave(-m.pr_interval, 0.025, m.p_amplitude, P_GAIN))
    if m.r_prime:
        waves.append(_Wave(0.45 * width, width * 0.15, m.r_prime,
                           R_PRIME_GAIN))
    if m.st_shift:
        waves.append(
            _Wave(0.5 * (qrs_end + t_center), (t_center - qrs_end) / 2.5,
                  m.st_shift, ST_GAIN))
    return waves


def _beat_schedule(m: ClassMorphology, duration: float,
                   rng: numpy.random.Generator) -> list[tuple[float, str]]:
    """R-peak times and beat kinds."""
    rr = 60.0 / (m.heart_rate * rng.uniform(0.9, 1.1))
    t = rng.uniform(0.0, rr)
    beats = [(t, 'sinus')]
    previous_premature = False
    while t < duration + 0.5:
        if (m.premature_kind and not previous_premature
                and rng.random() < m.premature_rate):
            t += 0.62 * rr
            beats.append((t, m.premature_kind))
            t += 1.38 * rr
            beats.append((t, 'sinus'))
            previous_premature = True
            continue
        step = rr * (1.0 + m.rr_irregularity * rng.standard_normal())
        t += min(max(step, 0.4 * rr), 1.8 * rr)
        beats.append((t, 'sinus'))
        previous_premature = False
    return beats


def _add_wave(signal: numpy.ndarray, sample_rate: int, center: float,
              wave: _Wave, gain: numpy.ndarray) -> None:
    c = center + wave.center
    lo = max(0, int(math.floor((c - 5 * wave.width) * sample_rate)))
    hi = min(signal.shape[1], int(math.ceil((c + 5 * wave.width) * sample_rate)) + 1)
    if hi <= lo:
        return
    times = numpy.arange(lo, hi) / sample_rate
    shape = wave.amplitude * numpy.exp(-0.5 * ((times - c) / wave.width)**2)
    signal[:, lo:hi] += numpy.outer(gain * wave.gain, shape)


def _clean_signal(m: ClassMorphology, length: int, sample_rate: int,
                  rng: numpy.random.Generator) -> numpy.ndarray:
    duration = length / sample_rate
    signal = numpy.zeros((LEAD_COUNT, length))
    lead_gain = rng.uniform(0.85, 1.15) * (
        1.0 + 0.1 * rng.standard_normal(LEAD_COUNT))
    templates = {}
    for center, kind in _beat_schedule(m, duration, rng):
        if kind not in templates:
            templates[kind] = _beat_waves(m, kind)
        for wave in templates[kind]:
            _add_wave(signal, sample_rate, center, wave, lead_gain)
    if m.fibrillation:
        times = numpy.arange(length) / sample_rate
        f_waves = numpy.zeros(length)
        for _ in range(2):
            frequency = rng.uniform(5.0, 7.0)
            phase = rng.uniform(0.0, 2 * math.pi)
            f_waves += numpy.sin(2 * math.pi * frequency * times + phase)
        signal += numpy.outer(F_WAVE_GAIN * lead_gain,
                              0.5 * m.fibrillation * f_waves)
    return signal


def _hard_noise(config: SynthConfig, length: int,
                rng: numpy.random.Generator) -> numpy.ndarray:
    """Baseline drift in some leads plus interference bursts in a few."""
    sample_rate = config.sample_rate
    times = numpy.arange(length) / sample_rate
    noise = numpy.zeros((LEAD_COUNT, length))
    drift_leads = rng.choice(LEAD_COUNT,
                             size=int(rng.integers(3, 9)),
                             replace=False)
    for lead in sorted(drift_leads):
        frequency = config.drift_frequency * rng.uniform(0.5, 1.5)
        amplitude = config.baseline_drift_amplitude * rng.uniform(0.5, 1.5)
        phase = rng.uniform(0.0, 2 * math.pi)
        noise[lead] += amplitude * (
            numpy.sin(2 * math.pi * frequency * times + phase) +
            0.3 * numpy.sin(4 * math.pi * frequency * times + 2 * phase))
    bursts = max(1, int(rng.poisson(config.interference_burst_rate *
                                    length / sample_rate)))
    for _ in range(bursts):
        size = int(rng.uniform(0.1, 0.4) * sample_rate)
        size = min(size, length)
        start = int(rng.integers(0, length - size + 1))
        leads = rng.choice(LEAD_COUNT,
                           size=int(rng.integers(1, 5)),
                           replace=False)
        frequency = rng.uniform(15.0, 40.0)
        amplitude = config.burst_amplitude * rng.uniform(0.5, 1.5)
        local = numpy.arange(size) / sample_rate
        window = numpy.hanning(size)
        for lead in sorted(leads):
            noise[lead, start:start + size] += amplitude * window * (
                numpy.sin(2 * math.pi * frequency * local) +
                0.5 * rng.standard_normal(size))
    return noise


def _chosen(count: int, fraction: float, rng: numpy.random.Generator) -> set:
    return set(rng.permutation(count)[:round(fraction * count)].tolist())


def generate(config: SynthConfig = SynthConfig()) -> SyntheticDataset:
    """Generates a labeled dataset and what was done to each record.

    Records are ordered by clean class, `records_per_class` each. The result
    depends only on `config`.
    """
    count = config.record_count
    k = config.num_classes
    hard = _chosen(count, config.hard_fraction,
                   derive_rng(config.seed, 'hard'))
    flipped = _chosen(count, config.label_flip_fraction,
                      derive_rng(config.seed, 'flip'))
    mixed = _chosen(count, config.mixed_fraction,
                    derive_rng(config.seed, 'mixed'))

    records = []
    truth = []
    for index in range(count):
        rng = derive_rng(config.seed, 'record', index)
        clean_label = index // config.records_per_class
        # Drawn unconditionally so the remaining stream does not depend on
        # which fractions are set.
        secondary_candidates = [c for c in range(1, k) if c != clean_label]
        secondary = secondary_candidates[int(
            rng.integers(len(secondary_candidates)))]
        flip_offset = int(rng.integers(1, k))
        low, high = config.duration_range
        length = int(round(rng.uniform(low, high) * config.sample_rate))

        morphology = config.morphology[clean_label]
        is_mixed = index in mixed
        if is_mixed:
            morphology = morphology.combine(config.morphology[secondary])
        signal = _clean_signal(morphology, length, config.sample_rate, rng)

        noise = config.white_noise_sigma * rng.standard_normal(
            (LEAD_COUNT, length))
        is_hard = index in hard
        if is_hard:
            noise += _hard_noise(config, length, rng)
        leads = (signal + noise).astype(numpy.float32).astype(numpy.float64)

        is_flipped = index in flipped
        label = (clean_label + flip_offset) % k if is_flipped else clean_label
        record_id = f'S{index:05d}'
        records.append(
            EcgRecord(record_id, leads, label, config.sample_rate))
        truth.append(
            GroundTruth(record_id, clean_label, label, is_hard, is_flipped,
                        is_mixed, secondary if is_mixed else None,
                        float(numpy.mean(noise * noise))))

    logger.info('Generated %d records (%d hard, %d flipped, %d mixed).',
                count, len(hard), len(flipped), len(mixed))
    return SyntheticDataset(Dataset(records), tuple(truth))
