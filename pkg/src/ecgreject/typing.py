__docformat__ = 'google'

import enum
import zlib

import numpy

from typing import Sequence


class NormMode(enum.Enum):
    """Which statistics batch normalization uses."""
    Train = 'train'
    """Normalize by batch statistics and update the running statistics."""
    Eval = 'eval'
    """Normalize by the running statistics."""


class DropoutMode(enum.Enum):
    """Whether dropout zeroes units."""
    Active = 'active'
    Inactive = 'inactive'


class ModelMode(enum.Enum):
    """How a network runs its stochastic and batch-dependent layers.

    * `Train`: batch-statistics BN, dropout active.
    * `EvalDeterministic`: running-statistics BN, dropout inactive.
    * `EvalMcDropout`: running-statistics BN, dropout active.
    """
    Train = 'train'
    EvalDeterministic = 'eval_deterministic'
    EvalMcDropout = 'eval_mc_dropout'

    @property
    def norm_mode(self) -> NormMode:
        if self is ModelMode.Train:
            return NormMode.Train
        return NormMode.Eval

    @property
    def dropout_mode(self) -> DropoutMode:
        if self is ModelMode.EvalDeterministic:
            return DropoutMode.Inactive
        return DropoutMode.Active


class CropMode(enum.Enum):
    """How records longer than the network input are cropped."""
    TrainRandomCrop = 'train_random_crop'
    EvalCenterCrop = 'eval_center_crop'


class Alternative(enum.Enum):
    """Alternative hypothesis of a two-sample test."""
    AGreater = 'a_greater'
    """The mean of the first sample is greater."""
    BGreater = 'b_greater'
    """The mean of the second sample is greater."""
    TwoSided = 'two_sided'

    def opposite(self) -> 'Alternative':
        """The alternative with the roles of the samples swapped."""
        match self:
            case Alternative.AGreater:
                return Alternative.BGreater
            case Alternative.BGreater:
                return Alternative.AGreater
            case _:
                return Alternative.TwoSided


class UncertaintyKind(enum.Enum):
    """Which uncertainty a rejection threshold is compared against."""
    Total = 'total'
    Data = 'data'
    Model = 'model'


class ShapeError(ValueError):
    """Indicates that a tensor had the wrong shape.

    Attributes:
        dimension: Name of the offending dimension.
    """

    def __init__(self, message: str, dimension: str):
        super().__init__(message)
        self.dimension = dimension


class ConfigError(ValueError):
    """Indicates an invalid configuration value.

    Attributes:
        field: Name of the offending field.
        stage: Index of the offending network stage, if any.
    """

    def __init__(self, message: str, field: str, stage: int | None = None):
        super().__init__(message)
        self.field = field
        self.stage = stage


class ContainerError(ValueError):
    """Indicates a malformed binary container.

    Attributes:
        offset: Byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f'{message} at offset {offset}')
        self.offset = offset


class NumericError(ArithmeticError):
    """Indicates a NaN or infinity where finite numbers were required.

    Attributes:
        step: The optimizer step at which this happened, if known.
    """

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f'{message} (step {step})'
        super().__init__(message)
        self.step = step


def derive_rng(seed: int, *stream: int | str) -> numpy.random.Generator:
    """A generator for an independent sub-stream of `seed`.

    Args:
        seed: The root seed.
        *stream: Identifies the sub-stream. Strings are hashed with CRC-32.
    """
    return numpy.random.default_rng(
        numpy.random.SeedSequence([seed, *_stream_ints(stream)]))


def _stream_ints(stream: Sequence[int | str]) -> list[int]:
    result = []
    for part in stream:
        if isinstance(part, str):
            result.append(zlib.crc32(part.encode('utf-8')))
        else:
            if part < 0:
                raise ValueError(f'Stream ids must be non-negative, got {part}.')
            result.append(part)
    return result
