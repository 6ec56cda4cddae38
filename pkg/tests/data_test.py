from ecgreject.binary import BinaryWriter
from ecgreject.data import (ClassMorphology, Dataset, EcgRecord, SynthConfig,
                            condition_batch, condition_length, decode_dataset,
                            encode_dataset, file_hash, format_listing,
                            format_truth, generate, listing_path, load_dataset,
                            load_truth, parse_truth, save_dataset, truth_path)
from ecgreject.typing import ConfigError, ContainerError, CropMode

import functools
import hashlib
import io
import json

import numpy
import pytest


@functools.cache
def synthetic():
    return generate(SynthConfig(records_per_class=4, seed=1))


def test_generate_is_deterministic():
    small = synthetic()
    again = generate(SynthConfig(records_per_class=4, seed=1))
    assert again.dataset == small.dataset
    assert again.truth == small.truth
    other = generate(SynthConfig(records_per_class=4, seed=2))
    assert other.dataset != small.dataset


def test_generated_layout():
    small = synthetic()
    dataset = small.dataset
    assert len(dataset) == 36
    assert dataset.ids()[0] == 'S00000'
    for record, truth in zip(dataset, small.truth):
        assert record.lead_count == 12
        assert 3000 <= record.length <= 5000
        assert record.sample_rate == 500
        assert record.label == truth.label
        assert truth.clean_label == int(record.id[1:]) // 4
        assert numpy.array_equal(
            record.leads,
            record.leads.astype(numpy.float32).astype(numpy.float64))


def test_default_config_has_ninety_records():
    config = SynthConfig()
    assert config.record_count == 90
    assert config.num_classes == 9


def test_balanced_without_flips():
    result = generate(
        SynthConfig(records_per_class=3, label_flip_fraction=0.0))
    assert result.dataset.class_histogram(9) == (3, ) * 9
    assert not any(t.is_flipped for t in result.truth)


def test_fractions():
    small = synthetic()
    count = len(small.truth)
    assert sum(t.is_hard for t in small.truth) == round(0.3 * count)
    flipped = [t for t in small.truth if t.is_flipped]
    assert len(flipped) == round(0.05 * count)
    for t in flipped:
        assert t.label != t.clean_label
    for t in small.truth:
        if not t.is_flipped:
            assert t.label == t.clean_label
        assert not t.is_mixed
        assert t.secondary_label is None


def test_hard_records_carry_more_noise():
    small = synthetic()
    hard = [t.noise_energy for t in small.truth if t.is_hard]
    easy = [t.noise_energy for t in small.truth if not t.is_hard]
    assert min(hard) > 5 * max(easy)


def test_mixed_records():
    result = generate(SynthConfig(records_per_class=2, mixed_fraction=1.0))
    for t in result.truth:
        assert t.is_mixed
        assert t.secondary_label not in (None, 0, t.clean_label)


def test_combine_morphology():
    af = ClassMorphology(heart_rate=95.0, fibrillation=0.06)
    combined = ClassMorphology(st_shift=0.3).combine(af)
    assert combined.st_shift == 0.3
    assert combined.fibrillation == 0.06
    assert combined.heart_rate == 95.0


@pytest.mark.parametrize('changes,field', [
    ({
        'records_per_class': -1
    }, 'records_per_class'),
    ({
        'duration_range': (5.0, 8.0)
    }, 'duration_range'),
    ({
        'duration_range': (9.0, 8.0)
    }, 'duration_range'),
    ({
        'hard_fraction': 1.5
    }, 'hard_fraction'),
    ({
        'white_noise_sigma': -0.1
    }, 'white_noise_sigma'),
    ({
        'morphology': (ClassMorphology(), )
    }, 'morphology'),
])
def test_synth_config_errors(changes, field):
    with pytest.raises(ConfigError) as info:
        SynthConfig(**changes)
    assert info.value.field == field


def test_synth_config_dict_round_trip():
    config = SynthConfig(records_per_class=3, duration_range=(7.0, 9.0))
    assert SynthConfig.from_dict(config.to_dict()) == config


def test_synth_config_from_json(tmp_path):
    path = tmp_path / 'synth.json'
    path.write_text(
        json.dumps({
            'records_per_class': 2,
            'morphology': {
                'AF': {
                    'heart_rate': 120.0
                }
            }
        }))
    config = SynthConfig.from_json(path)
    assert config.records_per_class == 2
    assert config.morphology[1].heart_rate == 120.0
    assert config.morphology[1].fibrillation == 0.06
    assert config.morphology[0] == ClassMorphology()


def test_synth_config_json_errors(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"records_per_class": ')
    with pytest.raises(ConfigError) as info:
        SynthConfig.from_json(path)
    assert info.value.field == 'config'
    with pytest.raises(ConfigError):
        SynthConfig.from_dict({'records': 3})
    with pytest.raises(ConfigError):
        SynthConfig.from_dict({'morphology': {'Unknown': {}}})


def test_record_validation():
    with pytest.raises(ValueError):
        EcgRecord('a', numpy.zeros(10), 0)
    with pytest.raises(ValueError):
        EcgRecord('a', numpy.zeros((12, 0)), 0)
    with pytest.raises(ValueError):
        EcgRecord('a', numpy.zeros((12, 10)), 300)
    record = EcgRecord('a', numpy.zeros((12, 1000)), 2)
    assert record.duration == 2.0
    assert not record.leads.flags.writeable


def test_dataset():
    records = [EcgRecord(f'r{i}', numpy.zeros((1, 4)), i % 2) for i in range(5)]
    dataset = Dataset(records)
    assert dataset.labels().tolist() == [0, 1, 0, 1, 0]
    assert dataset.class_histogram(3) == (3, 2, 0)
    assert dataset.subset([4, 0]).ids() == ('r4', 'r0')
    assert isinstance(dataset[1:3], Dataset)
    with pytest.raises(ValueError):
        Dataset(records + [records[0]])


def test_condition_pads_right():
    leads = numpy.arange(6.0).reshape(2, 3)
    result = condition_length(leads, 5)
    assert result.tolist() == [[0, 1, 2, 0, 0], [3, 4, 5, 0, 0]]


def test_condition_center_crop():
    leads = numpy.arange(10.0).reshape(1, 10)
    assert condition_length(leads, 4).tolist() == [[3, 4, 5, 6]]
    assert condition_length(leads, 10).tolist() == [list(range(10))]


def test_condition_random_crop():
    leads = numpy.arange(100.0).reshape(1, 100)
    a = condition_length(leads, 10, CropMode.TrainRandomCrop,
                         numpy.random.default_rng(0))
    b = condition_length(leads, 10, CropMode.TrainRandomCrop,
                         numpy.random.default_rng(0))
    assert numpy.array_equal(a, b)
    assert a.shape == (1, 10)
    assert numpy.array_equal(numpy.diff(a[0]), numpy.ones(9))
    offsets = {
        condition_length(leads, 10, CropMode.TrainRandomCrop,
                         numpy.random.default_rng(s))[0, 0]
        for s in range(20)
    }
    assert len(offsets) > 1
    with pytest.raises(ValueError):
        condition_length(leads, 10, CropMode.TrainRandomCrop)
    with pytest.raises(ValueError):
        condition_length(leads, 0)


def test_condition_batch():
    small = synthetic()
    batch = condition_batch(small.dataset[:3], 5000)
    assert batch.shape == (3, 12, 5000)
    with pytest.raises(ValueError):
        condition_batch([], 5000)


def test_container_round_trip(tmp_path):
    small = synthetic()
    path = tmp_path / 'data.ecgd'
    save_dataset(small.dataset, path)
    assert load_dataset(path) == small.dataset
    assert file_hash(path) == hashlib.sha256(path.read_bytes()).hexdigest()


def test_container_bad_magic():
    small = synthetic()
    data = encode_dataset(small.dataset[:2])
    with pytest.raises(ContainerError) as info:
        decode_dataset(b'ECGM' + data[4:])
    assert info.value.offset == 0


@pytest.mark.parametrize('cut', [2, 7, 15, 40, -3])
def test_container_truncated(cut):
    small = synthetic()
    data = encode_dataset(small.dataset[:2])
    with pytest.raises(ContainerError):
        decode_dataset(data[:cut])


def test_container_trailing_bytes():
    small = synthetic()
    data = encode_dataset(small.dataset[:1])
    with pytest.raises(ContainerError) as info:
        decode_dataset(data + b'xx')
    assert info.value.offset == len(data)


def test_container_keeps_sample_rate():
    slow = generate(SynthConfig(records_per_class=1, sample_rate=250,
                                seed=2)).dataset
    data = encode_dataset(slow)
    assert data[4:8] == (2).to_bytes(4, 'little')
    decoded = decode_dataset(data)
    assert decoded == slow
    assert {record.sample_rate for record in decoded} == {250}
    assert encode_dataset(synthetic().dataset)[4:8] == (1).to_bytes(
        4, 'little')


def test_container_rate_errors():
    a = EcgRecord('a', numpy.zeros((1, 4)), 0, 500)
    b = EcgRecord('b', numpy.zeros((1, 4)), 0, 250)
    with pytest.raises(ValueError):
        encode_dataset(Dataset([a, b]))
    data = encode_dataset(Dataset([b]))
    with pytest.raises(ContainerError) as info:
        decode_dataset(data[:16] + bytes(4) + data[20:])
    assert info.value.offset == 16
    with pytest.raises(ContainerError) as info:
        decode_dataset(data[:4] + (3).to_bytes(4, 'little') + data[8:])
    assert info.value.offset == 4


def raw_container(records):
    stream = io.BytesIO()
    writer = BinaryWriter(stream)
    writer.raw(b'ECGD')
    writer.u32(1)
    writer.u64(len(records))
    for record_id, lead_count, length in records:
        writer.short_string(record_id)
        writer.u8(0)
        writer.u16(lead_count)
        writer.u32(length)
        writer.array(numpy.zeros((lead_count, length)), '<f4')
    return stream.getvalue()


def test_container_duplicate_id():
    data = raw_container([('a', 1, 2), ('a', 1, 2)])
    with pytest.raises(ContainerError) as info:
        decode_dataset(data)
    assert 'duplicate' in str(info.value)
    # Header, then one record of 2 + 1 + 1 + 2 + 4 + 8 bytes.
    assert info.value.offset == 16 + 18


def test_container_empty_record():
    with pytest.raises(ContainerError):
        decode_dataset(raw_container([('a', 0, 5)]))
    with pytest.raises(ContainerError):
        decode_dataset(raw_container([('a', 12, 0)]))


def test_truth_round_trip(tmp_path):
    small = synthetic()
    assert tuple(parse_truth(format_truth(small.truth))) == small.truth
    path = tmp_path / 'd.ecgd'
    assert load_truth(path) is None
    with open(truth_path(path), 'w', encoding='utf-8', newline='') as f:
        f.write(format_truth(small.truth))
    loaded = load_truth(path)
    assert loaded['S00003'] == small.truth[3]


def test_listing():
    small = synthetic()
    text = format_listing(small.dataset[:2])
    lines = text.splitlines()
    assert lines[0] == 'id,label,length'
    assert lines[1].startswith('S00000,')
    assert listing_path('x/d.ecgd') == 'x/d.ecgd.records.csv'
    assert truth_path('x/d.ecgd') == 'x/d.ecgd.truth.csv'
