from ecgreject.metrics import (CLASS_NAMES, ConfusionMatrix, accuracy,
                               class_names, confusion, macro_f1, macro_f1_of,
                               per_class_scores, row_normalize)

import itertools
import math

import numpy
import pytest


def brute_f1(true, pred, c):
    tp = sum(1 for t, p in zip(true, pred) if t == c and p == c)
    predicted = sum(1 for p in pred if p == c)
    actual = sum(1 for t in true if t == c)
    if tp == 0:
        return 0.0
    precision = tp / predicted
    recall = tp / actual
    return 2 * precision * recall / (precision + recall)


@pytest.mark.parametrize('n', range(1, 7))
def test_macro_f1_brute_force_two_classes(n):
    for true in itertools.product(range(2), repeat=n):
        for pred in itertools.product(range(2), repeat=n):
            expected = (brute_f1(true, pred, 0) + brute_f1(true, pred, 1)) / 2
            assert macro_f1(true, pred, 2) == pytest.approx(expected,
                                                            abs=1e-12)


def test_known_matrix():
    cm = ConfusionMatrix(numpy.array([[2, 1], [0, 3]]), class_names(2))
    assert macro_f1_of(cm) == pytest.approx(0.828571, abs=1e-6)
    scores = per_class_scores(cm)
    assert scores.f1 == pytest.approx([0.8, 6 / 7])
    assert scores.support.tolist() == [3, 3]
    assert cm.diagonal_mass() == pytest.approx(5 / 6)


def test_confusion_counts():
    cm = confusion([0, 0, 1, 2, 2, 2], [0, 1, 1, 2, 0, 2], 3)
    assert cm.counts.tolist() == [[1, 1, 0], [0, 1, 0], [1, 0, 2]]
    assert cm.total == 6
    assert cm.num_classes == 3
    assert cm.class_names == ('class0', 'class1', 'class2')


def test_nine_class_names():
    assert confusion([0], [0], 9).class_names == CLASS_NAMES
    assert CLASS_NAMES[0] == 'Normal'


def test_row_normalize():
    cm = confusion([0, 0, 0, 2], [0, 1, 1, 2], 3)
    normalized = row_normalize(cm)
    assert normalized.fractions[0] == pytest.approx([1 / 3, 2 / 3, 0])
    assert normalized.fractions[1].tolist() == [0, 0, 0]
    assert normalized.fractions[2].tolist() == [0, 0, 1]
    assert normalized.empty_rows == (False, True, False)


def test_never_predicted_class():
    scores = per_class_scores(confusion([0, 1, 1], [0, 0, 0], 3))
    assert math.isnan(scores.precision[1])
    assert math.isnan(scores.recall[2])
    assert scores.f1.tolist()[1:] == [0.0, 0.0]


def test_empty_matrix():
    cm = confusion([], [], 9)
    assert cm.total == 0
    assert cm.diagonal_mass() == 0.0
    assert macro_f1_of(cm) == 0.0


def test_perfect_prediction():
    labels = list(range(9)) * 3
    assert macro_f1(labels, labels, 9) == 1.0
    assert accuracy(labels, labels) == 1.0


def test_errors():
    with pytest.raises(ValueError):
        confusion([0, 1], [0], 2)
    with pytest.raises(ValueError):
        confusion([0, 2], [0, 1], 2)
    with pytest.raises(ValueError):
        confusion([0, 1], [0, -1], 2)
    with pytest.raises(ValueError):
        confusion([0], [0], 2, names=('a',))
    with pytest.raises(ValueError):
        accuracy([], [])
