"""Finite-difference verification of analytic gradients."""

__docformat__ = 'google'

from ecgreject.autodiff.tensor import ComputationTape, Tensor

import numpy

from typing import Callable


def finite_diff_check(f: Callable[[Tensor], Tensor],
                      x: Tensor,
                      h: float = 1e-5,
                      *,
                      max_coordinates: int | None = None,
                      seed: int = 0) -> float:
    """Compares the analytic gradient of `f` at `x` to central differences.

    `f` must be deterministic: anything random inside it (such as a dropout
    mask) should be drawn from a generator seeded inside `f`.

    Args:
        f: Maps `x` to a single-element tensor.
        x: The point to check at. Its `requires_grad` is set and its values
            are restored afterwards.
        h: Step size.
        max_coordinates: If given, only this many coordinates, chosen with
            `seed`, are checked.
        seed: Seed for choosing coordinates.

    Returns:
        The maximum over checked coordinates of
        `|a - n| / max(1, |a|, |n|)`.
    """
    if h <= 0:
        raise ValueError(f'h must be positive, got {h}.')
    x.requires_grad = True
    x.zero_grad()
    with ComputationTape() as tape:
        out = f(x)
    tape.backward(out)
    analytic = x.grad if x.grad is not None else numpy.zeros(x.shape)
    analytic = analytic.reshape(-1)

    coordinates = numpy.arange(x.size)
    if max_coordinates is not None and max_coordinates < x.size:
        rng = numpy.random.default_rng(seed)
        coordinates = numpy.sort(
            rng.choice(x.size, size=max_coordinates, replace=False))

    flat = x.values.reshape(-1)
    worst = 0.0
    for i in coordinates:
        original = flat[i]
        flat[i] = original + h
        plus = f(x).item()
        flat[i] = original - h
        minus = f(x).item()
        flat[i] = original
        numeric = (plus - minus) / (2.0 * h)
        a = float(analytic[i])
        error = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
        worst = max(worst, error)
    x.zero_grad()
    return worst
