"""Differentiable primitives.

Every op takes `Tensor`s, returns a fresh `Tensor`, and records a backward
rule on the active `ComputationTape` when an input requires gradients.
"""

__docformat__ = 'google'

from ecgreject.autodiff.tensor import Tensor, record
from ecgreject.typing import DropoutMode, NormMode, ShapeError

from dataclasses import dataclass

import numpy
from numpy.lib.stride_tricks import sliding_window_view

from typing import Sequence


def _expect_ndim(tensor: Tensor, ndim: int, what: str, layout: str) -> None:
    if tensor.ndim != ndim:
        raise ShapeError(
            f'{what} must have shape {layout}, got {tensor.shape}.',
            dimension='rank')


def floor_padding(kernel_size: int, stride: int) -> tuple[int, int]:
    """Padding that makes a convolution output `floor(L / stride)` samples.

    The total padding is `kernel_size - stride`, with the odd sample on the
    left.
    """
    total = kernel_size - stride
    if total < 0:
        raise ValueError(
            f'kernel_size ({kernel_size}) must be at least stride ({stride}).')
    return (total + 1) // 2, total // 2


def conv1d_output_length(length: int, kernel_size: int, stride: int,
                         padding: tuple[int, int]) -> int:
    return (length + padding[0] + padding[1] - kernel_size) // stride + 1


# Elementwise.


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two tensors of identical shape."""
    if a.shape != b.shape:
        raise ShapeError(f'Cannot add shapes {a.shape} and {b.shape}.',
                         dimension='shape')

    def backward(grad):
        return grad, grad

    return record('add', (a, b), a.values + b.values, backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of two tensors of identical shape."""
    if a.shape != b.shape:
        raise ShapeError(f'Cannot multiply shapes {a.shape} and {b.shape}.',
                         dimension='shape')
    a_values, b_values = a.values, b.values

    def backward(grad):
        return grad * b_values, grad * a_values

    return record('mul', (a, b), a_values * b_values, backward)


def sum_all(x: Tensor) -> Tensor:
    """Sum of all elements as a scalar tensor."""
    shape = x.shape

    def backward(grad):
        return numpy.broadcast_to(grad, shape).copy(),

    return record('sum', (x, ), numpy.array(x.values.sum()), backward)


def _sigmoid(values: numpy.ndarray) -> numpy.ndarray:
    # tanh form does not overflow for large |x|.
    return 0.5 * (1.0 + numpy.tanh(0.5 * values))


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.values)

    def backward(grad):
        return grad * s * (1.0 - s),

    return record('sigmoid', (x, ), s, backward)


def swish(x: Tensor) -> Tensor:
    """Elementwise `x * sigmoid(x)`."""
    values = x.values
    s = _sigmoid(values)

    def backward(grad):
        return grad * (s + values * s * (1.0 - s)),

    return record('swish', (x, ), values * s, backward)


def dropout(x: Tensor, p: float, mode: DropoutMode,
            rng: numpy.random.Generator | None) -> Tensor:
    """Inverted dropout.

    In `Active` mode each element is zeroed with probability `p` and the
    survivors are scaled by `1 / (1 - p)`, so `Inactive` mode is the identity.

    Args:
        x: Input.
        p: Drop probability in `[0, 1)`.
        mode: Whether to drop.
        rng: Source of the mask. Required in `Active` mode with `p > 0`.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f'Dropout probability must be in [0, 1), got {p}.')
    if mode is DropoutMode.Inactive or p == 0.0:
        return x
    if rng is None:
        raise ValueError('Active dropout requires a random generator.')
    mask = (rng.random(x.shape) >= p) / (1.0 - p)

    def backward(grad):
        return grad * mask,

    return record('dropout', (x, ), x.values * mask, backward)


# Convolution and pooling.


def conv1d(input: Tensor,
           weight: Tensor,
           bias: Tensor | None = None,
           *,
           stride: int = 1,
           padding: tuple[int, int] = (0, 0),
           groups: int = 1) -> Tensor:
    """Grouped 1-D cross-correlation.

    Args:
        input: Shape `[B, Cin, L]`.
        weight: Shape `[Cout, Cin / groups, K]`.
        bias: Shape `[Cout]`, or `None`.
        stride: Step between output samples.
        padding: Zeros added on the (left, right) of the last dimension.
        groups: Number of channel groups.

    Returns:
        Shape `[B, Cout, Lout]` with
        `Lout = floor((L + left + right - K) / stride) + 1`.

    Raises:
        ShapeError: On any dimension mismatch, naming the dimension.
    """
    _expect_ndim(input, 3, 'conv1d input', '[B, Cin, L]')
    _expect_ndim(weight, 3, 'conv1d weight', '[Cout, Cin/groups, K]')
    batch, in_channels, length = input.shape
    out_channels, group_in, kernel_size = weight.shape
    if groups < 1 or in_channels % groups:
        raise ShapeError(
            f'Input channels ({in_channels}) must be divisible by groups ({groups}).',
            dimension='Cin')
    if out_channels % groups:
        raise ShapeError(
            f'Output channels ({out_channels}) must be divisible by groups ({groups}).',
            dimension='Cout')
    if group_in != in_channels // groups:
        raise ShapeError(
            f'Weight expects {group_in} input channels per group, '
            f'input provides {in_channels // groups}.',
            dimension='Cin/groups')
    if bias is not None and bias.shape != (out_channels, ):
        raise ShapeError(
            f'Bias shape {bias.shape} does not match {out_channels} output channels.',
            dimension='Cout')
    if stride < 1:
        raise ValueError(f'stride must be at least 1, got {stride}.')
    left, right = padding
    if left < 0 or right < 0:
        raise ValueError(f'padding must be non-negative, got {padding}.')
    out_length = conv1d_output_length(length, kernel_size, stride, padding)
    if out_length < 1:
        raise ShapeError('kernel exceeds padded length', dimension='L')

    group_out = out_channels // groups
    padded = numpy.pad(input.values, ((0, 0), (0, 0), (left, right)))
    # [B, Cin, Lout, K]
    windows = sliding_window_view(padded, kernel_size,
                                  axis=2)[:, :, ::stride, :][:, :, :out_length]
    # [B, G, Lout, Cg * K]
    columns = windows.reshape(batch, groups, group_in, out_length,
                              kernel_size).transpose(0, 1, 3, 2, 4).reshape(
                                  batch, groups, out_length,
                                  group_in * kernel_size)
    # [G, Cg * K, Og]
    kernel = weight.values.reshape(groups, group_out,
                                   group_in * kernel_size).transpose(0, 2, 1)
    out = numpy.matmul(columns, kernel)  # [B, G, Lout, Og]
    out = out.transpose(0, 1, 3, 2).reshape(batch, out_channels, out_length)
    if bias is not None:
        out = out + bias.values[None, :, None]

    padded_length = padded.shape[2]

    def backward(grad):
        # [B, G, Lout, Og]
        grad_groups = grad.reshape(batch, groups, group_out,
                                   out_length).transpose(0, 1, 3, 2)
        grad_weight = numpy.matmul(
            columns.transpose(1, 3, 0, 2).reshape(
                groups, group_in * kernel_size, batch * out_length),
            grad_groups.transpose(1, 0, 2, 3).reshape(
                groups, batch * out_length, group_out))  # [G, Cg * K, Og]
        grad_weight = grad_weight.transpose(0, 2, 1).reshape(weight.shape)

        grad_columns = numpy.matmul(grad_groups, kernel.transpose(0, 2, 1))
        grad_windows = grad_columns.reshape(batch, groups, out_length,
                                            group_in, kernel_size).transpose(
                                                0, 1, 3, 2,
                                                4).reshape(batch, in_channels,
                                                           out_length,
                                                           kernel_size)
        grad_padded = numpy.zeros((batch, in_channels, padded_length))
        span = stride * (out_length - 1) + 1
        for k in range(kernel_size):
            grad_padded[:, :, k:k + span:stride] += grad_windows[:, :, :, k]
        grad_input = grad_padded[:, :, left:left + length]

        grad_bias = grad.sum(axis=(0, 2)) if bias is not None else None
        return grad_input, grad_weight, grad_bias

    inputs = (input, weight) if bias is None else (input, weight, bias)
    return record('conv1d', inputs, out, backward)


def maxpool1d(input: Tensor, window: int, stride: int) -> Tensor:
    """Sliding maximum over the last dimension.

    The gradient is routed to the first maximum of each window.
    """
    _expect_ndim(input, 3, 'maxpool1d input', '[B, C, L]')
    if window < 1 or stride < 1:
        raise ValueError(
            f'window and stride must be at least 1, got {window} and {stride}.'
        )
    batch, channels, length = input.shape
    if window > length:
        raise ShapeError(f'Window ({window}) exceeds length ({length}).',
                         dimension='L')
    out_length = (length - window) // stride + 1
    windows = sliding_window_view(input.values, window,
                                  axis=2)[:, :, ::stride, :][:, :, :out_length]
    argmax = windows.argmax(axis=3)
    out = numpy.take_along_axis(windows, argmax[..., None], axis=3)[..., 0]

    def backward(grad):
        grad_input = numpy.zeros(input.shape)
        span = stride * (out_length - 1) + 1
        for k in range(window):
            grad_input[:, :, k:k + span:stride] += numpy.where(
                argmax == k, grad, 0.0)
        return grad_input,

    return record('maxpool1d', (input, ), out, backward)


def global_avg_pool(input: Tensor) -> Tensor:
    """Mean over the last dimension: `[B, C, L] -> [B, C]`."""
    _expect_ndim(input, 3, 'global_avg_pool input', '[B, C, L]')
    length = input.shape[2]

    def backward(grad):
        return numpy.repeat(grad[:, :, None] / length, length, axis=2),

    return record('global_avg_pool', (input, ), input.values.mean(axis=2),
                  backward)


def scale_channels(input: Tensor, scale: Tensor) -> Tensor:
    """Multiplies each channel of `[B, C, L]` by the matching `[B, C]` entry."""
    _expect_ndim(input, 3, 'scale_channels input', '[B, C, L]')
    if scale.shape != input.shape[:2]:
        raise ShapeError(
            f'Scale shape {scale.shape} does not match {input.shape[:2]}.',
            dimension='C')
    x, s = input.values, scale.values

    def backward(grad):
        return grad * s[:, :, None], (grad * x).sum(axis=2)

    return record('scale_channels', (input, scale), x * s[:, :, None],
                  backward)


# Normalization.


@dataclass
class RunningStats:
    """Per-channel running mean and variance of a batch normalization layer.

    Mutated in place by `batchnorm1d` in `Train` mode.
    """
    mean: numpy.ndarray
    var: numpy.ndarray

    @classmethod
    def initial(cls, channels: int) -> 'RunningStats':
        return cls(numpy.zeros(channels), numpy.ones(channels))


def batchnorm1d(input: Tensor,
                gamma: Tensor,
                beta: Tensor,
                running_stats: RunningStats,
                mode: NormMode,
                *,
                momentum: float = 0.1,
                epsilon: float = 1e-5) -> Tensor:
    """Batch normalization over `(B, L)` for each channel of `[B, C, L]`.

    In `Train` mode the batch statistics normalize the input and update
    `running_stats` as `running = (1 - momentum) * running + momentum * batch`,
    using the unbiased batch variance. In `Eval` mode the running statistics
    normalize the input.
    """
    _expect_ndim(input, 3, 'batchnorm1d input', '[B, C, L]')
    batch, channels, length = input.shape
    if gamma.shape != (channels, ) or beta.shape != (channels, ):
        raise ShapeError(
            f'gamma/beta shapes {gamma.shape}/{beta.shape} do not match {channels} channels.',
            dimension='C')
    if epsilon <= 0:
        raise ValueError(f'epsilon must be positive, got {epsilon}.')
    count = batch * length
    x = input.values

    if mode is NormMode.Train:
        if count < 2:
            raise ValueError(
                f'Training-mode batch normalization needs at least 2 values per channel, got {count}.'
            )
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        running_stats.mean = ((1.0 - momentum) * running_stats.mean +
                              momentum * mean)
        running_stats.var = ((1.0 - momentum) * running_stats.var +
                             momentum * var * count / (count - 1))
    else:
        mean = running_stats.mean
        var = running_stats.var

    inv_std = 1.0 / numpy.sqrt(var + epsilon)
    normalized = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = normalized * gamma.values[None, :, None] + beta.values[None, :, None]
    g = gamma.values

    def backward(grad):
        grad_gamma = (grad * normalized).sum(axis=(0, 2))
        grad_beta = grad.sum(axis=(0, 2))
        scale = (g * inv_std)[None, :, None]
        if mode is NormMode.Train:
            grad_input = scale / count * (count * grad - grad_beta[None, :, None]
                                          - normalized *
                                          grad_gamma[None, :, None])
        else:
            grad_input = scale * grad
        return grad_input, grad_gamma, grad_beta

    return record('batchnorm1d', (input, gamma, beta), out, backward)


# Dense and output layers.


def dense(input: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map `input @ weight.T + bias`: `[B, F] -> [B, O]`."""
    _expect_ndim(input, 2, 'dense input', '[B, F]')
    _expect_ndim(weight, 2, 'dense weight', '[O, F]')
    if input.shape[1] != weight.shape[1]:
        raise ShapeError(
            f'Input has {input.shape[1]} features, weight expects {weight.shape[1]}.',
            dimension='F')
    if bias is not None and bias.shape != (weight.shape[0], ):
        raise ShapeError(
            f'Bias shape {bias.shape} does not match {weight.shape[0]} outputs.',
            dimension='O')
    x, w = input.values, weight.values
    out = x @ w.T
    if bias is not None:
        out = out + bias.values[None, :]

    def backward(grad):
        grad_bias = grad.sum(axis=0) if bias is not None else None
        return grad @ w, grad.T @ x, grad_bias

    inputs = (input, weight) if bias is None else (input, weight, bias)
    return record('dense', inputs, out, backward)


def _softmax_values(logits: numpy.ndarray) -> numpy.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = numpy.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax of `[B, K]` logits, computed with max-subtraction."""
    _expect_ndim(logits, 2, 'softmax input', '[B, K]')
    probs = _softmax_values(logits.values)

    def backward(grad):
        return probs * (grad - (grad * probs).sum(axis=1, keepdims=True)),

    return record('softmax', (logits, ), probs, backward)


def cross_entropy_loss(logits: Tensor, labels: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of `labels` under softmax of `logits`.

    Uses a fused log-sum-exp.

    Raises:
        ValueError: If a label is outside `[0, K)` or the counts disagree.
    """
    _expect_ndim(logits, 2, 'cross_entropy_loss logits', '[B, K]')
    batch, classes = logits.shape
    labels = numpy.asarray(labels, dtype=numpy.int64)
    if labels.shape != (batch, ):
        raise ShapeError(
            f'Got {labels.size} labels for a batch of {batch}.',
            dimension='B')
    if batch and (labels.min() < 0 or labels.max() >= classes):
        raise ValueError(f'Labels must be in [0, {classes}), got {labels}.')
    z = logits.values
    peak = z.max(axis=1, keepdims=True)
    log_sum_exp = peak[:, 0] + numpy.log(numpy.exp(z - peak).sum(axis=1))
    rows = numpy.arange(batch)
    loss = (log_sum_exp - z[rows, labels]).mean()

    def backward(grad):
        grad_logits = _softmax_values(z)
        grad_logits[rows, labels] -= 1.0
        return grad_logits * (grad / batch),

    return record('cross_entropy_loss', (logits, ), numpy.array(loss),
                  backward)


