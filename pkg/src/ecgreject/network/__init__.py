"""The residual bottleneck network and its checkpoint format."""

__docformat__ = 'google'

from ecgreject.network.config import NetworkConfig, STAGE_COUNT
from ecgreject.network.ecgnet import Network, build_network, iter_batches
from ecgreject.network.checkpoint import (Checkpoint, save_checkpoint,
                                          load_checkpoint, encode_checkpoint,
                                          decode_checkpoint)

__all__ = [
    'NetworkConfig', 'STAGE_COUNT', 'Network', 'build_network',
    'iter_batches', 'Checkpoint', 'save_checkpoint', 'load_checkpoint',
    'encode_checkpoint', 'decode_checkpoint'
]
