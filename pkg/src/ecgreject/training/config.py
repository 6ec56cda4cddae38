__docformat__ = 'google'

from ecgreject.typing import ConfigError

from dataclasses import asdict, dataclass, fields, replace

from typing import Any, Mapping


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings.

    Defaults suit the desk-scale network; `full()` gives the full-size
    recipe.
    """
    batch_size: int = 32
    lr_init: float = 1e-3
    plateau_factor: float = 0.3
    plateau_patience_steps: int = 300
    """Optimizer steps without a new best validation Macro-F1 before the
    learning rate is reduced."""
    weight_decay: float = 1e-4
    """Decoupled; BN parameters are exempt."""
    max_steps: int = 2000
    eval_every: int = 50
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError('batch_size must be at least 1.',
                              field='batch_size')
        if not 0.0 < self.plateau_factor < 1.0:
            raise ConfigError(
                f'plateau_factor must be in (0, 1), got {self.plateau_factor}.',
                field='plateau_factor')
        if self.lr_init < 0:
            raise ConfigError('lr_init must be non-negative.', field='lr_init')
        if self.weight_decay < 0:
            raise ConfigError('weight_decay must be non-negative.',
                              field='weight_decay')
        for name in ('plateau_patience_steps', 'max_steps', 'eval_every'):
            if getattr(self, name) < 1:
                raise ConfigError(f'{name} must be at least 1.', field=name)
        for name in ('adam_beta1', 'adam_beta2'):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f'{name} must be in [0, 1).', field=name)
        if self.adam_epsilon <= 0:
            raise ConfigError('adam_epsilon must be positive.',
                              field='adam_epsilon')

    @classmethod
    def full(cls, **changes) -> 'TrainConfig':
        """Batch 256 with a 6000-step plateau patience."""
        return cls(batch_size=256,
                   plateau_patience_steps=6000,
                   max_steps=60000,
                   **changes)

    def replace(self, **changes) -> 'TrainConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'TrainConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'Unknown train config fields {sorted(unknown)}.',
                              field=sorted(unknown)[0])
        return cls(**data)


@dataclass(frozen=True)
class SplitSpec:
    """Fractions of records assigned to the train, validation and test sets.

    Validation and test sizes are floored; the remainder goes to training.
    """
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1

    def __post_init__(self):
        for name in ('train', 'val', 'test'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f'Split fraction {name} must be in [0, 1].',
                                  field=name)
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ConfigError('Split fractions must sum to 1.', field='train')
