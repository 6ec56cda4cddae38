"""Special functions for the t-distribution."""

__docformat__ = 'google'

from ecgreject.typing import NumericError

import math

MAX_ITERATIONS = 20000
EPSILON = 1e-16
_TINY = 1e-300


# Stirling series is accurate to double precision above this.
_STIRLING_MIN = 20.0


def _stirling_correction(z: float) -> float:
    # lgamma(z) - ((z - 0.5) ln z - z + ln(2 pi) / 2)
    w = 1.0 / (z * z)
    return (1.0 / 12.0 - w *
            (1.0 / 360.0 - w *
             (1.0 / 1260.0 - w * (1.0 / 1680.0 - w / 1188.0)))) / z


def lbeta(a: float, b: float) -> float:
    """Natural log of the beta function.

    When the larger argument is big, `lgamma(big) - lgamma(big + small)` is
    taken from the Stirling series directly, since the two terms would
    otherwise cancel.
    """
    small, big = min(a, b), max(a, b)
    if big < _STIRLING_MIN:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    total = big + small
    difference = (-(big - 0.5) * math.log1p(small / big) -
                  small * math.log(total) + small +
                  _stirling_correction(big) - _stirling_correction(total))
    return math.lgamma(small) + difference


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation; converges fast for x < (a + 1) / (a + b + 2).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPSILON:
            return h
    raise NumericError(
        f'Incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}.'
    )


def regularized_incomplete_beta(x: float,
                                a: float,
                                b: float,
                                *,
                                one_minus_x: float | None = None) -> float:
    """`I_x(a, b)`.

    Args:
        x: In `[0, 1]`.
        a, b: Positive shape parameters.
        one_minus_x: `1 - x`, if the caller can compute it more accurately
            than the subtraction.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f'a and b must be positive, got {a} and {b}.')
    if not 0.0 <= x <= 1.0:
        raise ValueError(f'x must be in [0, 1], got {x}.')
    y = 1.0 - x if one_minus_x is None else one_minus_x
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    # log1p keeps the logs exact when x or y is near 1.
    log_x = math.log1p(-y) if x > 0.5 else math.log(x)
    log_y = math.log1p(-x) if y > 0.5 else math.log(y)
    log_front = a * log_x + b * log_y - lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, y) / b


def t_tail(t: float, dof: float) -> float:
    """Upper tail `P(T > t)` of Student's t-distribution.

    Raises:
        ValueError: If `dof <= 0` or `t` is NaN.
    """
    if not dof > 0:
        raise ValueError(f'Degrees of freedom must be positive, got {dof}.')
    if math.isnan(t):
        raise ValueError('t is NaN.')
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    if math.isinf(t2):
        return 0.0 if t > 0 else 1.0
    denominator = dof + t2
    half_two_sided = 0.5 * regularized_incomplete_beta(
        dof / denominator, 0.5 * dof, 0.5, one_minus_x=t2 / denominator)
    if t > 0:
        return half_two_sided
    return 1.0 - half_two_sided
