from ecgreject.metrics import confusion, macro_f1
from ecgreject.rejection import (Accepted, DEFAULT_GRID, Grid, Rejected,
                                 decide, parse_grid, split_confusion, sweep,
                                 threshold_for_accept_ratio)
from ecgreject.typing import UncertaintyKind
from ecgreject.uncertainty import UncertaintyEstimate

import math
import warnings

import numpy
import pytest


def random_case(seed, count=200):
    rng = numpy.random.default_rng(seed)
    true = rng.integers(0, 9, count)
    pred = numpy.where(rng.random(count) < 0.6, true, rng.integers(0, 9, count))
    u = rng.uniform(0.0, math.log(9), count)
    return true, pred, u


def test_default_grid():
    thresholds = DEFAULT_GRID.thresholds()
    assert len(thresholds) == 23
    assert thresholds[0] == 0.4
    assert thresholds[1] == 0.45
    assert thresholds[-1] == 1.5


@pytest.mark.parametrize('text,count', [('0:1:0.1', 11), ('0.5:0.5:0.1', 1),
                                        ('0:1:0.3', 4), ('0.4:1.5:0.05', 23)])
def test_parse_grid(text, count):
    assert len(parse_grid(text).thresholds()) == count


@pytest.mark.parametrize('text', ['0:1', '0:1:0', '1:0:0.1', 'a:b:c', ''])
def test_parse_grid_errors(text):
    with pytest.raises(ValueError):
        parse_grid(text)


def test_decide():
    estimate = UncertaintyEstimate(0.8, 0.5, 0.3, 0.3)
    assert decide(estimate, 0.8, 4) == Accepted(4, 0.8)
    assert decide(estimate, 0.79, 4) == Rejected(0.8)
    assert decide(estimate, 0.5, 4, UncertaintyKind.Data) == Accepted(4, 0.5)
    assert isinstance(decide(estimate, 0.2, 4, UncertaintyKind.Model),
                      Rejected)
    with pytest.raises(ValueError):
        decide(estimate, -0.1, 4)
    with pytest.raises(ValueError):
        decide(estimate, math.nan, 4)


@pytest.mark.parametrize('seed', range(10))
def test_accept_ratio_is_monotone(seed):
    true, pred, u = random_case(seed)
    points = sweep(true, pred, u, Grid(0.0, 2.3, 0.1))
    ratios = [p.accept_ratio for p in points]
    assert ratios == sorted(ratios)
    for point in points:
        assert point.accepted_count == int((u <= point.threshold).sum())
        assert point.accept_ratio == point.accepted_count / u.size


@pytest.mark.parametrize('seed', range(10))
def test_accepted_sets_are_nested(seed):
    true, pred, u = random_case(seed)
    thresholds = Grid(0.0, 2.2, 0.2).thresholds()
    sets = [set(numpy.flatnonzero(u <= t)) for t in thresholds]
    for smaller, larger in zip(sets, sets[1:]):
        assert smaller <= larger


def test_everything_accepted_above_max_entropy():
    true, pred, u = random_case(3)
    [point] = sweep(true, pred, u, [math.log(9) + 1e-9])
    assert point.accept_ratio == 1.0
    assert point.macro_f1 == macro_f1(true, pred, 9)
    cm = confusion(true, pred, 9)
    accepted = split_confusion(true, pred, u, 2.5).accepted
    assert numpy.array_equal(accepted.counts, cm.counts)


def test_sweep_scores_accepted_records():
    true = [0, 1, 1, 2]
    pred = [0, 1, 2, 2]
    u = [0.1, 0.2, 0.9, 0.3]
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        low, high = sweep(true, pred, u, [0.5, 1.0], num_classes=3)
    assert low.accepted_count == 3
    assert low.macro_f1 == 1.0
    assert low.per_class_precision == (1.0, 1.0, 1.0)
    assert high.accepted_count == 4
    assert high.macro_f1 == pytest.approx((1 + 2 / 3 + 2 / 3) / 3)
    assert high.per_class_precision == (1.0, 1.0, 0.5)


def test_sweep_warns_on_empty_thresholds():
    with pytest.warns(RuntimeWarning):
        points = sweep([0, 1], [0, 1], [0.9, 1.0], [0.1, 0.95, 1.0],
                       num_classes=2)
    assert points[0].macro_f1 is None
    assert points[0].accept_ratio == 0.0
    assert points[0].per_class_precision == (None, None)
    assert points[1].accepted_count == 1
    assert points[1].per_class_precision == (1.0, None)


def test_tightest_default_threshold_can_accept_nothing():
    with pytest.warns(RuntimeWarning):
        points = sweep([0, 1, 2], [0, 1, 1], [0.9, 1.2, 1.4])
    tightest = points[0]
    assert tightest.threshold == pytest.approx(0.4)
    assert tightest.accepted_count == 0
    assert tightest.macro_f1 is None
    assert points[-1].accepted_count == 3
    assert points[-1].macro_f1 is not None


def test_sweep_errors():
    with pytest.raises(ValueError):
        sweep([0, 1], [0], [0.1, 0.2])
    with pytest.raises(ValueError):
        sweep([], [], [])
    with pytest.raises(ValueError):
        sweep([0], [0], [0.1], [])


def test_threshold_for_accept_ratio():
    u = [0.5, 0.1, 0.9, 0.3]
    assert threshold_for_accept_ratio(u, 0.5) == 0.3
    assert threshold_for_accept_ratio(u, 0.51) == 0.5
    assert threshold_for_accept_ratio(u, 1.0) == 0.9
    assert threshold_for_accept_ratio(u, 0.01) == 0.1
    for bad in (0.0, 1.5):
        with pytest.raises(ValueError):
            threshold_for_accept_ratio(u, bad)
    with pytest.raises(ValueError):
        threshold_for_accept_ratio([], 0.5)


@pytest.mark.parametrize('seed', range(5))
def test_accept_ratio_threshold_achieves_ratio(seed):
    _, _, u = random_case(seed, count=97)
    for ratio in (0.1, 0.33, 0.8):
        threshold = threshold_for_accept_ratio(u, ratio)
        assert (u <= threshold).mean() >= ratio
        assert (u < threshold).mean() < ratio


def test_split_confusion_partitions_records():
    true, pred, u = random_case(7)
    parts = split_confusion(true, pred, u, 1.0)
    assert numpy.array_equal(parts.accepted.counts + parts.rejected.counts,
                             confusion(true, pred, 9).counts)
    assert parts.accepted.total == int((u <= 1.0).sum())
