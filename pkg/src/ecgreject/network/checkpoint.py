"""The ECGM checkpoint container.

Layout, all little-endian:

* magic `ECGM`
* format version, u32
* u64 length, then a UTF-8 JSON object `{"network": ..., "seed": ..., "metadata": ...}`
* u64 tensor count, then per tensor: u16 name length, UTF-8 name, u32 rank,
  u64 dims, float64 values

BN running statistics are stored as ordinary tensors named
`<layer>.running_mean` and `<layer>.running_var`.
"""

__docformat__ = 'google'

from ecgreject.binary import BinaryReader, BinaryWriter
from ecgreject.network.config import NetworkConfig
from ecgreject.network.ecgnet import Network, build_network
from ecgreject.typing import ConfigError, ContainerError

from dataclasses import dataclass, field
import io
import json
import os

from typing import Any, Mapping

MAGIC = b'ECGM'
VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    """Everything needed to rebuild a trained network."""
    config: NetworkConfig
    seed: int
    state: Mapping[str, Any]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def of(cls,
           network: Network,
           metadata: Mapping[str, Any] | None = None) -> 'Checkpoint':
        return cls(network.config, network.seed, network.state(),
                   dict(metadata or {}))

    def restore(self) -> Network:
        network = build_network(self.config, self.seed)
        network.load_state(self.state)
        return network


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = json.dumps(
        {
            'network': checkpoint.config.to_dict(),
            'seed': checkpoint.seed,
            'metadata': dict(checkpoint.metadata),
        },
        sort_keys=True).encode('utf-8')
    stream = io.BytesIO()
    writer = BinaryWriter(stream)
    writer.raw(MAGIC)
    writer.u32(VERSION)
    writer.long_bytes(header)
    writer.tensors(checkpoint.state)
    return stream.getvalue()


def decode_checkpoint(data: bytes) -> Checkpoint:
    reader = BinaryReader(data)
    reader.magic(MAGIC)
    reader.version(VERSION)
    header_offset = reader.offset
    blob = reader.long_bytes('config')
    try:
        header = json.loads(blob.decode('utf-8'))
        config = NetworkConfig.from_dict(header['network'])
        seed = int(header['seed'])
        metadata = header.get('metadata', {})
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError,
            ConfigError) as e:
        raise ContainerError(f'bad config blob ({e})', header_offset) from e
    state = reader.tensors()
    reader.end()
    return Checkpoint(config, seed, state, metadata)


def save_checkpoint(network: Network,
                    path: str | os.PathLike,
                    metadata: Mapping[str, Any] | None = None) -> None:
    """Writes `network` and optional JSON-serializable `metadata` to `path`."""
    with open(path, 'wb') as f:
        f.write(encode_checkpoint(Checkpoint.of(network, metadata)))


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    """Reads a checkpoint. Use `restore()` on the result to get a network.

    Raises:
        ContainerError: If the file is malformed.
        OSError: If the file cannot be read.
    """
    with open(path, 'rb') as f:
        return decode_checkpoint(f.read())
