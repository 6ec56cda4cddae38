__docformat__ = 'google'

from ecgreject.autodiff import RunningStats, Tensor, softmax
from ecgreject.network.config import STAGE_COUNT, NetworkConfig
from ecgreject.network.layers import BottleneckBlock, Conv, Head, Layer
from ecgreject.typing import ModelMode, NumericError, ShapeError

from functools import cached_property
import logging

import numpy

from typing import Callable, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

StageHook = Callable[[int, Tensor], None]
"""Called with the 1-based stage index and that stage's output."""


class Network(Layer):
    """The residual bottleneck network.

    Structure: a stem convolution, seven stages of bottleneck blocks, and a
    head that pools and produces logits. The first block of each stage
    halves the length.

    Use `build_network()` rather than constructing this directly.
    """

    def __init__(self, config: NetworkConfig, seed: int):
        self.name = 'network'
        self._config = config
        self._seed = seed
        first = config.channels(0)
        self.stem = Conv('stem',
                         config.input_leads,
                         first,
                         kernel_size=config.kernel_size,
                         stride=1,
                         groups=1,
                         seed=seed)
        self.stages: list[list[BottleneckBlock]] = []
        in_channels = first
        for stage in range(STAGE_COUNT):
            out_channels = config.channels(stage)
            blocks = []
            for index in range(config.blocks_per_stage[stage]):
                blocks.append(
                    BottleneckBlock(
                        f'stage{stage + 1}.block{index + 1}',
                        in_channels,
                        out_channels,
                        width=config.bottleneck_width(stage),
                        stride=2 if index == 0 else 1,
                        kernel_size=config.kernel_size,
                        groups=config.groups,
                        dropout_p=config.dropout_p,
                        se_reduction=config.se_reduction
                        if config.squeeze_excite else None,
                        momentum=config.bn_momentum,
                        epsilon=config.bn_epsilon,
                        seed=seed))
                in_channels = out_channels
            self.stages.append(blocks)
        self.head = Head('head',
                         in_channels,
                         config.num_classes,
                         dropout_p=config.dropout_p,
                         momentum=config.bn_momentum,
                         epsilon=config.bn_epsilon,
                         seed=seed)

    @property
    def config(self) -> NetworkConfig:
        return self._config

    @property
    def seed(self) -> int:
        """The seed the initial weights were drawn from."""
        return self._seed

    def children(self) -> Sequence[Layer]:
        return [self.stem, *(b for blocks in self.stages for b in blocks),
                self.head]

    @cached_property
    def named_parameters(self) -> Mapping[str, Tensor]:
        result = {}
        for parameter in self.parameters():
            if parameter.name in result:
                raise RuntimeError(f'Duplicate parameter {parameter.name}.')
            result[parameter.name] = parameter
        return result

    @cached_property
    def named_running_stats(self) -> Mapping[str, RunningStats]:
        return {bn.name: bn.running_stats for bn in self.batch_norms()}

    @cached_property
    def no_decay(self) -> frozenset[str]:
        """Names of parameters excluded from weight decay: the BN affines."""
        return frozenset(p.name for bn in self.batch_norms()
                         for p in bn.own_parameters())

    def parameter_count(self) -> int:
        return sum(p.size for p in self.named_parameters.values())

    def conv_layer_count(self) -> int:
        """Every convolution, including the stem and shortcut projections."""
        return sum(1 for _ in self.conv_layers())

    def weighted_layer_count(self) -> int:
        """Block convolutions plus the logit layer.

        Excludes the stem and the projections; 61 for the full-size network.
        """
        return 3 * sum(self._config.blocks_per_stage) + 1

    def zero_grad(self) -> None:
        for parameter in self.named_parameters.values():
            parameter.zero_grad()

    def state(self) -> dict[str, numpy.ndarray]:
        """Copies of every parameter and running statistic, by name."""
        result = {
            name: p.values.copy()
            for name, p in self.named_parameters.items()
        }
        for name, stats in self.named_running_stats.items():
            result[f'{name}.running_mean'] = stats.mean.copy()
            result[f'{name}.running_var'] = stats.var.copy()
        return result

    def load_state(self, state: Mapping[str, numpy.ndarray]) -> None:
        """Replaces parameters and running statistics.

        Raises:
            ValueError: If a name is missing or unknown, or a shape differs.
        """
        shapes = {
            name: parameter.shape
            for name, parameter in self.named_parameters.items()
        }
        for name, stats in self.named_running_stats.items():
            shapes[f'{name}.running_mean'] = stats.mean.shape
            shapes[f'{name}.running_var'] = stats.var.shape
        missing = set(shapes) - set(state)
        unknown = set(state) - set(shapes)
        if missing or unknown:
            raise ValueError(
                f'State does not match the network: missing {sorted(missing)[:3]}, '
                f'unknown {sorted(unknown)[:3]}.\n'
                'Tip: the checkpoint was probably made with another config.')
        # Check every entry before replacing any.
        loaded = {}
        for name, shape in shapes.items():
            values = numpy.array(state[name], dtype=numpy.float64)
            if values.shape != shape:
                raise ValueError(
                    f'{name}: shape {values.shape} does not match {shape}.')
            loaded[name] = values
        for name, parameter in self.named_parameters.items():
            parameter.values = loaded[name]
        for name, stats in self.named_running_stats.items():
            stats.mean = loaded[f'{name}.running_mean']
            stats.var = loaded[f'{name}.running_var']

    def forward(self,
                batch: Tensor,
                mode: ModelMode,
                rng: numpy.random.Generator | None = None,
                *,
                stage_hook: StageHook | None = None) -> Tensor:
        """Computes logits.

        Args:
            batch: Shape `[B, leads, input_length]`.
            mode: How BN and dropout behave.
            rng: Source of dropout masks. Required unless `mode` is
                `EvalDeterministic` or dropout is disabled. Layers draw from
                it in a fixed order.
            stage_hook: Called with each stage's output.

        Returns:
            Logits of shape `[B, num_classes]`.
        """
        self._check_batch(batch)
        x = self.stem(batch)
        for stage, blocks in enumerate(self.stages):
            for block in blocks:
                x = block(x, mode, rng)
            if stage_hook is not None:
                stage_hook(stage + 1, x)
        return self.head(x, mode, rng)

    def predict_proba(self,
                      batch: Tensor,
                      mode: ModelMode,
                      rng: numpy.random.Generator | None = None) -> Tensor:
        """Softmax of `forward()`.

        Raises:
            NumericError: If the network produces non-finite logits.
        """
        logits = self.forward(batch, mode, rng)
        if not logits.is_finite():
            raise NumericError('Network produced non-finite logits.')
        return softmax(logits)

    def _check_batch(self, batch: Tensor) -> None:
        config = self._config
        if batch.ndim != 3:
            raise ShapeError(
                f'Batch must have shape [B, {config.input_leads}, {config.input_length}], got {batch.shape}.',
                dimension='rank')
        if batch.shape[1] != config.input_leads:
            raise ShapeError(
                f'Batch has {batch.shape[1]} leads, the network expects {config.input_leads}.',
                dimension='leads')
        if batch.shape[2] != config.input_length:
            raise ShapeError(
                f'Batch has length {batch.shape[2]}, the network expects {config.input_length}.\n'
                'Tip: use condition_length() to crop or pad records.',
                dimension='length')

    def __repr__(self) -> str:
        return (f'Network(blocks={sum(self._config.blocks_per_stage)}, '
                f'parameters={self.parameter_count()})')


def build_network(config: NetworkConfig, seed: int) -> Network:
    """Builds a freshly initialized network.

    Convolutions and hidden dense layers use He-normal weights, biases and BN
    shifts start at 0, BN scales at 1, and the logit layer at 0. Two builds
    with the same config and seed are bit-identical.
    """
    network = Network(config, seed)
    logger.info('Built network: %d parameters, %d conv layers.',
                network.parameter_count(), network.conv_layer_count())
    return network


def iter_batches(count: int, batch_size: int) -> Iterator[slice]:
    """Consecutive slices covering `range(count)`."""
    for start in range(0, count, batch_size):
        yield slice(start, min(start + batch_size, count))
