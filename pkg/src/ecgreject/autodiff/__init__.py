"""Reverse-mode automatic differentiation over dense float64 arrays."""

__docformat__ = 'google'

from ecgreject.autodiff.tensor import Tensor, ComputationTape, TapeEntry, active_tape, backward
from ecgreject.autodiff.ops import (
    RunningStats, add, mul, sum_all, sigmoid, swish, dropout, conv1d,
    maxpool1d, global_avg_pool, scale_channels, batchnorm1d, dense, softmax,
    cross_entropy_loss, floor_padding, conv1d_output_length)
from ecgreject.autodiff.gradcheck import finite_diff_check

__all__ = [
    'Tensor', 'ComputationTape', 'TapeEntry', 'active_tape', 'backward',
    'RunningStats', 'add', 'mul', 'sum_all', 'sigmoid', 'swish', 'dropout',
    'conv1d', 'maxpool1d', 'global_avg_pool', 'scale_channels', 'batchnorm1d',
    'dense', 'softmax', 'cross_entropy_loss', 'floor_padding',
    'conv1d_output_length', 'finite_diff_check'
]
