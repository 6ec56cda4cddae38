"""Adam with decoupled weight decay, and a reduce-on-plateau schedule."""

__docformat__ = 'google'

from ecgreject.autodiff import Tensor
from ecgreject.training.config import TrainConfig
from ecgreject.typing import ShapeError

from dataclasses import dataclass, field
import math

import numpy

from typing import Iterable, Mapping


@dataclass
class AdamState:
    """First and second moment estimates by parameter name."""
    step: int = 0
    m: dict[str, numpy.ndarray] = field(default_factory=dict)
    v: dict[str, numpy.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor],
              grads: Mapping[str, numpy.ndarray | None] | None,
              state: AdamState,
              config: TrainConfig,
              *,
              lr: float | None = None,
              no_decay: Iterable[str] = ()) -> AdamState:
    """Applies one Adam update in place and returns the advanced state.

    Each parameter is first decayed, `theta -= lr * weight_decay * theta`,
    then moved by the bias-corrected Adam step.

    Args:
        params: Parameters by name. Their `values` are replaced.
        grads: Gradients by name. If `None`, each parameter's `grad` is used.
            A missing gradient counts as zero.
        state: Moments from the previous step.
        config: Betas, epsilon and weight decay.
        lr: Learning rate; defaults to `config.lr_init`.
        no_decay: Names exempt from weight decay.

    Raises:
        ShapeError: If a gradient's shape differs from its parameter's.
    """
    if lr is None:
        lr = config.lr_init
    no_decay = frozenset(no_decay)
    beta1, beta2 = config.adam_beta1, config.adam_beta2
    step = state.step + 1
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    for name, param in params.items():
        grad = param.grad if grads is None else grads.get(name)
        if grad is None:
            grad = numpy.zeros(param.shape)
        elif grad.shape != param.shape:
            raise ShapeError(
                f'{name}: gradient shape {grad.shape} does not match {param.shape}.',
                dimension=name)
        theta = param.values
        if config.weight_decay and name not in no_decay:
            theta = theta - lr * config.weight_decay * theta
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - beta1) * grad if m is None else beta1 * m + (1.0 -
                                                                 beta1) * grad
        v = (1.0 - beta2) * grad * grad if v is None else beta2 * v + (
            1.0 - beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        param.values = theta - lr * m_hat / (numpy.sqrt(v_hat) +
                                             config.adam_epsilon)
    state.step = step
    return state


class PlateauScheduler:
    """Multiplies the learning rate by `factor` when the metric stalls.

    The metric is maximized. A reduction happens once `patience` steps have
    passed since the last improvement or reduction; the wait then starts
    over. The learning rate never increases.
    """

    def __init__(self, lr_init: float, factor: float, patience: int):
        self.lr = lr_init
        self.factor = factor
        self.patience = patience
        self.best = -math.inf
        self.since: int | None = None
        self.reductions = 0

    def update(self, step: int, metric: float) -> float:
        """Records the metric evaluated at `step` and returns the learning rate."""
        if metric > self.best:
            self.best = metric
            self.since = step
        elif self.since is not None and step - self.since >= self.patience:
            self.lr *= self.factor
            self.reductions += 1
            self.since = step
        return self.lr


def reduce_on_plateau(lr_init: float, history: Iterable[tuple[int, float]],
                      *, factor: float, patience: int) -> float:
    """The learning rate after replaying `(step, metric)` evaluations."""
    scheduler = PlateauScheduler(lr_init, factor, patience)
    for step, metric in history:
        scheduler.update(step, metric)
    return scheduler.lr
