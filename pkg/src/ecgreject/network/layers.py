"""Building blocks of the residual network.

Each layer owns named parameter tensors. Parameters are initialized from a
generator derived from the build seed and the parameter name, so the initial
value of a parameter depends only on those two things.
"""

__docformat__ = 'google'

from ecgreject.autodiff import (RunningStats, Tensor, add, batchnorm1d,
                                conv1d, dense, dropout, floor_padding,
                                global_avg_pool, maxpool1d, scale_channels,
                                sigmoid, swish)
from ecgreject.typing import ModelMode, derive_rng

from abc import ABC
import math

import numpy

from typing import Iterator, Sequence


def kaiming_normal(seed: int, name: str, shape: tuple[int, ...],
                   fan_in: int) -> Tensor:
    """He-normal initialization with standard deviation `sqrt(2 / fan_in)`."""
    rng = derive_rng(seed, name)
    values = rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)
    return Tensor(values, requires_grad=True, name=name)


def constant(name: str, shape: tuple[int, ...], value: float) -> Tensor:
    return Tensor(numpy.full(shape, value), requires_grad=True, name=name)


class Layer(ABC):
    """A named part of the network.

    Subclasses list their own parameters in `own_parameters()` and their
    sub-layers in `children()`.
    """

    name: str

    def own_parameters(self) -> Sequence[Tensor]:
        return ()

    def children(self) -> Sequence['Layer']:
        return ()

    def parameters(self) -> Iterator[Tensor]:
        """All parameters of this layer and its sub-layers, in build order."""
        yield from self.own_parameters()
        for child in self.children():
            yield from child.parameters()

    def batch_norms(self) -> Iterator['BatchNorm']:
        if isinstance(self, BatchNorm):
            yield self
        for child in self.children():
            yield from child.batch_norms()

    def conv_layers(self) -> Iterator['Conv']:
        if isinstance(self, Conv):
            yield self
        for child in self.children():
            yield from child.conv_layers()


class Conv(Layer):
    """A 1-D convolution with floor-mode padding.

    The output has `floor(L / stride)` samples.
    """

    def __init__(self, name: str, in_channels: int, out_channels: int, *,
                 kernel_size: int, stride: int, groups: int, seed: int):
        self.name = name
        self.stride = stride
        self.groups = groups
        self.padding = floor_padding(kernel_size, stride)
        fan_in = in_channels // groups * kernel_size
        self.weight = kaiming_normal(
            seed, f'{name}.weight',
            (out_channels, in_channels // groups, kernel_size), fan_in)
        self.bias = constant(f'{name}.bias', (out_channels, ), 0.0)

    def own_parameters(self) -> Sequence[Tensor]:
        return self.weight, self.bias

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x,
                      self.weight,
                      self.bias,
                      stride=self.stride,
                      padding=self.padding,
                      groups=self.groups)


class BatchNorm(Layer):
    """Per-channel batch normalization with running statistics."""

    def __init__(self, name: str, channels: int, *, momentum: float,
                 epsilon: float):
        self.name = name
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = constant(f'{name}.gamma', (channels, ), 1.0)
        self.beta = constant(f'{name}.beta', (channels, ), 0.0)
        self.running_stats = RunningStats.initial(channels)

    def own_parameters(self) -> Sequence[Tensor]:
        return self.gamma, self.beta

    def __call__(self, x: Tensor, mode: ModelMode) -> Tensor:
        return batchnorm1d(x,
                           self.gamma,
                           self.beta,
                           self.running_stats,
                           mode.norm_mode,
                           momentum=self.momentum,
                           epsilon=self.epsilon)


class PreActivation(Layer):
    """BN, then Swish, then dropout."""

    def __init__(self, name: str, channels: int, *, dropout_p: float,
                 momentum: float, epsilon: float):
        self.name = name
        self.dropout_p = dropout_p
        self.bn = BatchNorm(f'{name}.bn',
                            channels,
                            momentum=momentum,
                            epsilon=epsilon)

    def children(self) -> Sequence[Layer]:
        return self.bn,

    def __call__(self, x: Tensor, mode: ModelMode,
                 rng: numpy.random.Generator | None) -> Tensor:
        return dropout(swish(self.bn(x, mode)), self.dropout_p,
                       mode.dropout_mode, rng)


class Dense(Layer):

    def __init__(self,
                 name: str,
                 in_features: int,
                 out_features: int,
                 *,
                 seed: int,
                 zero: bool = False):
        self.name = name
        if zero:
            self.weight = constant(f'{name}.weight',
                                   (out_features, in_features), 0.0)
        else:
            self.weight = kaiming_normal(seed, f'{name}.weight',
                                         (out_features, in_features),
                                         in_features)
        self.bias = constant(f'{name}.bias', (out_features, ), 0.0)

    def own_parameters(self) -> Sequence[Tensor]:
        return self.weight, self.bias

    def __call__(self, x: Tensor) -> Tensor:
        return dense(x, self.weight, self.bias)


class SqueezeExcite(Layer):
    """Channel attention: pool, squeeze, excite, rescale."""

    def __init__(self, name: str, channels: int, *, reduction: int,
                 seed: int):
        self.name = name
        self.squeeze = Dense(f'{name}.squeeze',
                             channels,
                             channels // reduction,
                             seed=seed)
        self.excite = Dense(f'{name}.excite',
                            channels // reduction,
                            channels,
                            seed=seed)

    def children(self) -> Sequence[Layer]:
        return self.squeeze, self.excite

    def __call__(self, x: Tensor) -> Tensor:
        gate = sigmoid(self.excite(swish(self.squeeze(global_avg_pool(x)))))
        return scale_channels(x, gate)


class BottleneckBlock(Layer):
    """Residual unit: 1x1 reduce, grouped wide conv, 1x1 expand, SE.

    Each conv is preceded by BN, Swish and dropout. The shortcut max-pools
    when the block downsamples and projects with a 1x1 conv when the channel
    count changes.
    """

    def __init__(self, name: str, in_channels: int, out_channels: int, *,
                 width: int, stride: int, kernel_size: int, groups: int,
                 dropout_p: float, se_reduction: int | None, momentum: float,
                 epsilon: float, seed: int):
        self.name = name
        self.stride = stride

        def pre(suffix: str, channels: int) -> PreActivation:
            return PreActivation(f'{name}.{suffix}',
                                 channels,
                                 dropout_p=dropout_p,
                                 momentum=momentum,
                                 epsilon=epsilon)

        self.pre1 = pre('pre1', in_channels)
        self.conv1 = Conv(f'{name}.conv1',
                          in_channels,
                          width,
                          kernel_size=1,
                          stride=1,
                          groups=1,
                          seed=seed)
        self.pre2 = pre('pre2', width)
        self.conv_k = Conv(f'{name}.conv_k',
                           width,
                           width,
                           kernel_size=kernel_size,
                           stride=stride,
                           groups=groups,
                           seed=seed)
        self.pre3 = pre('pre3', width)
        self.conv2 = Conv(f'{name}.conv2',
                          width,
                          out_channels,
                          kernel_size=1,
                          stride=1,
                          groups=1,
                          seed=seed)
        self.se: SqueezeExcite | None = None
        if se_reduction is not None:
            self.se = SqueezeExcite(f'{name}.se',
                                    out_channels,
                                    reduction=se_reduction,
                                    seed=seed)
        self.projection: Conv | None = None
        if in_channels != out_channels:
            self.projection = Conv(f'{name}.projection',
                                   in_channels,
                                   out_channels,
                                   kernel_size=1,
                                   stride=1,
                                   groups=1,
                                   seed=seed)

    def children(self) -> Sequence[Layer]:
        result: list[Layer] = [
            self.pre1, self.conv1, self.pre2, self.conv_k, self.pre3,
            self.conv2
        ]
        if self.se is not None:
            result.append(self.se)
        if self.projection is not None:
            result.append(self.projection)
        return result

    def shortcut(self, x: Tensor) -> Tensor:
        if self.stride != 1:
            x = maxpool1d(x, self.stride, self.stride)
        if self.projection is not None:
            x = self.projection(x)
        return x

    def __call__(self, x: Tensor, mode: ModelMode,
                 rng: numpy.random.Generator | None) -> Tensor:
        h = self.conv1(self.pre1(x, mode, rng))
        h = self.conv_k(self.pre2(h, mode, rng))
        h = self.conv2(self.pre3(h, mode, rng))
        if self.se is not None:
            h = self.se(h)
        return add(h, self.shortcut(x))


class Head(Layer):
    """BN, Swish, global average pool, dropout, then the logit layer.

    The logit layer starts at zero so a fresh network predicts the uniform
    distribution.
    """

    def __init__(self, name: str, channels: int, num_classes: int, *,
                 dropout_p: float, momentum: float, epsilon: float,
                 seed: int):
        self.name = name
        self.dropout_p = dropout_p
        self.bn = BatchNorm(f'{name}.bn',
                            channels,
                            momentum=momentum,
                            epsilon=epsilon)
        self.logits = Dense(f'{name}.logits',
                            channels,
                            num_classes,
                            seed=seed,
                            zero=True)

    def children(self) -> Sequence[Layer]:
        return self.bn, self.logits

    def __call__(self, x: Tensor, mode: ModelMode,
                 rng: numpy.random.Generator | None) -> Tensor:
        pooled = global_avg_pool(swish(self.bn(x, mode)))
        return self.logits(
            dropout(pooled, self.dropout_p, mode.dropout_mode, rng))
