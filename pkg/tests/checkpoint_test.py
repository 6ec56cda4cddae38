from ecgreject.autodiff import Tensor
from ecgreject.network import (Checkpoint, NetworkConfig, build_network,
                               decode_checkpoint, encode_checkpoint,
                               load_checkpoint, save_checkpoint)
from ecgreject.typing import ContainerError, ModelMode

import numpy
import pytest


def trained_looking_network(seed=0):
    config = NetworkConfig.desk().replace(input_length=256)
    network = build_network(config, 2)
    rng = numpy.random.default_rng(seed)
    state = {
        name: rng.normal(0.0, 0.1, values.shape)
        for name, values in network.state().items()
    }
    for name in state:
        if name.endswith('running_var'):
            state[name] = numpy.abs(state[name]) + 0.1
    network.load_state(state)
    return network


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_round_trip_is_bit_exact(tmp_path, seed):
    network = trained_looking_network(seed)
    metadata = {'split_seed': 7, 'dataset_hash': 'ab' * 32}
    path = tmp_path / 'net.ecgm'
    save_checkpoint(network, path, metadata)
    checkpoint = load_checkpoint(path)
    assert checkpoint.config == network.config
    assert checkpoint.seed == network.seed
    assert checkpoint.metadata == metadata
    state = network.state()
    assert checkpoint.state.keys() == state.keys()
    for name, values in state.items():
        assert numpy.array_equal(checkpoint.state[name], values), name

    restored = checkpoint.restore()
    batch = Tensor(numpy.random.default_rng(3).normal(0, 1, (2, 12, 256)))
    assert numpy.array_equal(
        restored.forward(batch, ModelMode.EvalDeterministic).values,
        network.forward(batch, ModelMode.EvalDeterministic).values)


def test_encoding_is_deterministic():
    network = trained_looking_network()
    a = encode_checkpoint(Checkpoint.of(network, {'b': 1, 'a': 2}))
    b = encode_checkpoint(Checkpoint.of(network, {'a': 2, 'b': 1}))
    assert a == b


def test_bad_magic():
    data = bytearray(encode_checkpoint(Checkpoint.of(trained_looking_network())))
    data[0:4] = b'ECGD'
    with pytest.raises(ContainerError) as info:
        decode_checkpoint(bytes(data))
    assert info.value.offset == 0
    assert 'bad magic' in str(info.value)


def test_bad_version():
    data = bytearray(encode_checkpoint(Checkpoint.of(trained_looking_network())))
    data[4] = 99
    with pytest.raises(ContainerError) as info:
        decode_checkpoint(bytes(data))
    assert info.value.offset == 4


@pytest.mark.parametrize('cut', [3, 10, 100, -1])
def test_truncated(cut):
    data = encode_checkpoint(Checkpoint.of(trained_looking_network()))
    with pytest.raises(ContainerError):
        decode_checkpoint(data[:cut])


def test_trailing_bytes():
    data = encode_checkpoint(Checkpoint.of(trained_looking_network()))
    with pytest.raises(ContainerError) as info:
        decode_checkpoint(data + b'\0')
    assert info.value.offset == len(data)


def test_corrupt_config_blob():
    data = bytearray(encode_checkpoint(Checkpoint.of(trained_looking_network())))
    # The blob starts after magic, version and its u64 length.
    data[16] = ord('#')
    with pytest.raises(ContainerError) as info:
        decode_checkpoint(bytes(data))
    assert info.value.offset == 8


def test_restore_rejects_mismatched_state():
    network = trained_looking_network()
    checkpoint = Checkpoint.of(network)
    other = Checkpoint(network.config.replace(squeeze_excite=False),
                       checkpoint.seed, checkpoint.state)
    with pytest.raises(ValueError):
        other.restore()
