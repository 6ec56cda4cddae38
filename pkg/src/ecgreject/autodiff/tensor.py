__docformat__ = 'google'

import contextvars
from dataclasses import dataclass

import numpy

from typing import Callable, Sequence

BackwardRule = Callable[[numpy.ndarray], Sequence[numpy.ndarray | None]]
"""Maps the gradient of an output to the gradients of each input.

`None` marks an input that receives no gradient.
"""


class Tensor:
    """A dense array of 64-bit floats with an optional gradient slot.

    Ops never modify their inputs; each op writes a fresh `Tensor`.
    Parameters are the exception: optimizers replace their `values`.
    """

    __slots__ = ('values', 'grad', 'requires_grad', 'name')

    values: numpy.ndarray
    grad: numpy.ndarray | None
    requires_grad: bool
    name: str | None

    def __init__(self,
                 values,
                 *,
                 requires_grad: bool = False,
                 name: str | None = None):
        """
        Args:
            values: Anything `numpy.asarray` accepts. Converted to a
                C-contiguous float64 array.
            requires_grad: Whether backward passes should populate `grad`.
            name: Optional name, used in error messages and checkpoints.
        """
        self.values = numpy.ascontiguousarray(values, dtype=numpy.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        """The value of a single-element tensor as a `float`."""
        if self.values.size != 1:
            raise ValueError(
                f'item() requires a single element, got shape {self.shape}.')
        return float(self.values.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: numpy.ndarray) -> None:
        if grad.shape != self.values.shape:
            raise ValueError(
                f'Gradient shape {grad.shape} does not match tensor shape {self.shape}.'
            )
        if self.grad is None:
            self.grad = numpy.array(grad, dtype=numpy.float64)
        else:
            self.grad = self.grad + grad

    def is_finite(self) -> bool:
        return bool(numpy.isfinite(self.values).all())

    def detach(self) -> 'Tensor':
        """A copy of this tensor that does not require gradients."""
        return Tensor(self.values.copy(), name=self.name)

    # Operators forward to `ecgreject.autodiff.ops`.

    def __add__(self, other: 'Tensor') -> 'Tensor':
        from ecgreject.autodiff.ops import add
        return add(self, other)

    def __mul__(self, other: 'Tensor') -> 'Tensor':
        from ecgreject.autodiff.ops import mul
        return mul(self, other)

    def sum(self) -> 'Tensor':
        from ecgreject.autodiff.ops import sum_all
        return sum_all(self)

    def __repr__(self) -> str:
        name = f', name={self.name!r}' if self.name else ''
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad}{name})'


@dataclass(frozen=True)
class TapeEntry:
    """One recorded op."""
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule


_active_tape: contextvars.ContextVar['ComputationTape | None'] = contextvars.ContextVar(
    'ecgreject_active_tape', default=None)


class ComputationTape:
    """An ordered record of differentiable ops.

    Ops record themselves on the tape that is active in the current context,
    and only when at least one input requires gradients. Outside any tape
    nothing is recorded, which is how inference runs.

    A tape belongs to one logical thread; `contextvars` keeps concurrently
    running tapes apart.

    Usage:

    ```python
    with ComputationTape() as tape:
        loss = cross_entropy_loss(network.forward(batch, mode, rng), labels)
    tape.backward(loss)
    ```
    """

    def __init__(self):
        self._entries: list[TapeEntry] = []
        self._token: contextvars.Token | None = None

    def __enter__(self) -> 'ComputationTape':
        if self._token is not None:
            raise RuntimeError('This tape is already active.')
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc_info) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> Sequence[TapeEntry]:
        return tuple(self._entries)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor,
               backward: BackwardRule) -> None:
        self._entries.append(TapeEntry(op, tuple(inputs), output, backward))

    def contains(self, tensor: Tensor) -> bool:
        return any(entry.output is tensor for entry in self._entries)

    def backward(self, loss: Tensor, *, retain_grads: bool = False) -> None:
        """Populates `grad` of every tensor that requires it and influences `loss`.

        Entries are replayed in reverse recording order. A tensor used several
        times receives the sum of its contributions. Gradients accumulate
        across calls; call `zero_grad()` on parameters between steps.

        Args:
            loss: A single-element tensor recorded on this tape.
            retain_grads: If `True`, intermediate tensors produced on this tape
                also keep their gradients. Otherwise only leaves (tensors not
                produced on this tape, such as parameters and inputs) do.

        Raises:
            ValueError: If `loss` is not a scalar or is not on this tape.
        """
        if loss.size != 1:
            raise ValueError(
                f'backward() requires a scalar loss, got shape {loss.shape}.')
        if not self.contains(loss):
            raise ValueError('The loss was not recorded on this tape.\n'
                             'Tip: compute the loss inside `with tape:`.')

        produced = {id(entry.output) for entry in self._entries}
        # Adjoints of intermediate tensors, keyed by identity.
        adjoints: dict[int, numpy.ndarray] = {
            id(loss): numpy.ones(loss.shape)
        }
        if retain_grads:
            loss.accumulate_grad(numpy.ones(loss.shape))
        for entry in reversed(self._entries):
            grad_out = adjoints.pop(id(entry.output), None)
            if grad_out is None:
                continue
            grad_inputs = entry.backward(grad_out)
            for tensor, grad in zip(entry.inputs, grad_inputs):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in produced:
                    if key in adjoints:
                        adjoints[key] = adjoints[key] + grad
                    else:
                        adjoints[key] = grad
                    if retain_grads:
                        tensor.accumulate_grad(grad)
                else:
                    tensor.accumulate_grad(grad)


def active_tape() -> ComputationTape | None:
    """The tape recording in the current context, if any."""
    return _active_tape.get()


def record(op: str, inputs: Sequence[Tensor], output_values: numpy.ndarray,
           backward: BackwardRule) -> Tensor:
    """Wraps `output_values` in a `Tensor` and records it if needed.

    Ops call this once per invocation. The output requires gradients iff any
    input does and a tape is active.
    """
    output = Tensor(output_values)
    tape = _active_tape.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.record(op, inputs, output, backward)
    return output


def backward(loss: Tensor,
             tape: ComputationTape,
             *,
             retain_grads: bool = False) -> None:
    """Module-level form of `ComputationTape.backward()`."""
    tape.backward(loss, retain_grads=retain_grads)
