__docformat__ = 'google'

from ecgreject.typing import ConfigError

from dataclasses import asdict, dataclass, replace
from fractions import Fraction
import math

from typing import Any, Mapping

STAGE_COUNT = 7


@dataclass(frozen=True)
class NetworkConfig:
    """Hyperparameters of the residual bottleneck network.

    The defaults reproduce the full-size architecture. Use `desk()` for a
    variant that trains on a laptop CPU.
    """

    blocks_per_stage: tuple[int, ...] = (2, 2, 2, 3, 3, 4, 4)
    stage_channels: tuple[int, ...] = (64, 160, 160, 400, 400, 1024, 1024)
    kernel_size: int = 16
    groups: int = 16
    dropout_p: float = 0.1
    se_reduction: int = 4
    squeeze_excite: bool = True
    """Whether blocks carry a squeeze-and-excitation gate."""
    num_classes: int = 9
    input_leads: int = 12
    input_length: int = 5000
    width_scale: Fraction = Fraction(1)
    """Multiplies `stage_channels`; the products must be integers."""
    bn_momentum: float = 0.1
    bn_epsilon: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, 'blocks_per_stage',
                           tuple(int(x) for x in self.blocks_per_stage))
        object.__setattr__(self, 'stage_channels',
                           tuple(int(x) for x in self.stage_channels))
        object.__setattr__(self, 'width_scale', Fraction(self.width_scale))

        if len(self.blocks_per_stage) != STAGE_COUNT:
            raise ConfigError(
                f'blocks_per_stage must have {STAGE_COUNT} entries, got {len(self.blocks_per_stage)}.',
                field='blocks_per_stage')
        if len(self.stage_channels) != STAGE_COUNT:
            raise ConfigError(
                f'stage_channels must have {STAGE_COUNT} entries, got {len(self.stage_channels)}.',
                field='stage_channels')
        for stage, blocks in enumerate(self.blocks_per_stage):
            if blocks < 1:
                raise ConfigError(f'Stage {stage + 1} must have at least one block.',
                                  field='blocks_per_stage',
                                  stage=stage + 1)
        if self.width_scale <= 0:
            raise ConfigError(
                f'width_scale must be positive, got {self.width_scale}.',
                field='width_scale')
        if self.kernel_size < 2:
            raise ConfigError(
                f'kernel_size must be at least 2 for stride-2 blocks, got {self.kernel_size}.',
                field='kernel_size')
        for name in ('groups', 'se_reduction', 'num_classes', 'input_leads',
                     'input_length'):
            if getattr(self, name) < 1:
                raise ConfigError(f'{name} must be at least 1.', field=name)
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(
                f'dropout_p must be in [0, 1), got {self.dropout_p}.',
                field='dropout_p')

        for stage, channels in enumerate(self.stage_channels):
            scaled = channels * self.width_scale
            if scaled.denominator != 1 or scaled < 1:
                raise ConfigError(
                    f'Stage {stage + 1}: {channels} channels scaled by {self.width_scale} is not a positive integer.',
                    field='width_scale',
                    stage=stage + 1)
            if scaled % self.groups:
                raise ConfigError(
                    f'Stage {stage + 1}: {scaled} channels are not divisible by groups={self.groups}.',
                    field='groups',
                    stage=stage + 1)
            if self.squeeze_excite and scaled % self.se_reduction:
                raise ConfigError(
                    f'Stage {stage + 1}: {scaled} channels are not divisible by se_reduction={self.se_reduction}.',
                    field='se_reduction',
                    stage=stage + 1)

        length = self.input_length
        for stage in range(STAGE_COUNT):
            length //= 2
            if length < 1:
                raise ConfigError(
                    f'input_length {self.input_length} is too short: stage {stage + 1} would have no samples.',
                    field='input_length',
                    stage=stage + 1)

    @classmethod
    def full(cls) -> 'NetworkConfig':
        """The full-size architecture."""
        return cls()

    @classmethod
    def desk(cls) -> 'NetworkConfig':
        """A quarter-width, one-block-per-stage variant on 2000-sample inputs."""
        return cls(blocks_per_stage=(1, ) * STAGE_COUNT,
                   width_scale=Fraction(1, 4),
                   groups=4,
                   input_length=2000)

    def channels(self, stage: int) -> int:
        """Scaled channel count of a 0-based stage."""
        return int(self.stage_channels[stage] * self.width_scale)

    def bottleneck_width(self, stage: int) -> int:
        """Half the stage width, rounded up to a multiple of `groups`."""
        half = math.ceil(self.channels(stage) / 2)
        return -(-half // self.groups) * self.groups

    def stage_lengths(self) -> tuple[int, ...]:
        """Output length of each stage."""
        result = []
        length = self.input_length
        for _ in range(STAGE_COUNT):
            length //= 2
            result.append(length)
        return tuple(result)

    def stage_output_shapes(self) -> tuple[tuple[int, int], ...]:
        """(channels, length) of each stage output, excluding the batch."""
        return tuple((self.channels(stage), length)
                     for stage, length in enumerate(self.stage_lengths()))

    def replace(self, **changes) -> 'NetworkConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        result = asdict(self)
        result['blocks_per_stage'] = list(self.blocks_per_stage)
        result['stage_channels'] = list(self.stage_channels)
        result['width_scale'] = str(self.width_scale)
        return result

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'NetworkConfig':
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'Unknown network config fields {sorted(unknown)}.',
                              field=sorted(unknown)[0])
        kwargs = dict(data)
        if 'width_scale' in kwargs:
            kwargs['width_scale'] = Fraction(kwargs['width_scale'])
        return cls(**kwargs)
