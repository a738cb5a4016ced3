import numpy as np
import pytest

from sparseemg.classifiers import ClassifierSpec
from sparseemg.evaluation import (
    ConfusionMatrix,
    FoldPlan,
    evaluate_cv,
    make_stratified_folds,
)
from sparseemg.features import FeatureMatrix
from sparseemg.validation import ValidationError


def test_fold_arithmetic_27_classes_20_trials_k4():
    labels = np.repeat(np.arange(27), 20)
    plan = make_stratified_folds(labels, 4, seed=0)
    for fold in range(4):
        test = plan.test_rows(fold)
        assert len(test) == 135
        per_class = np.bincount(labels[test], minlength=27)
        assert np.all(per_class == 5)
    # train/test partition the rows exactly
    assert len(plan.train_rows(0)) + len(plan.test_rows(0)) == len(labels)
    assert not np.intersect1d(plan.train_rows(0), plan.test_rows(0)).size


def test_folds_are_stratified_with_uneven_remainders():
    labels = np.repeat([0, 1, 2], 10)  # 10 per class, k=4 -> 3/3/2/2 splits
    plan = make_stratified_folds(labels, 4, seed=1)
    for c in range(3):
        rows = np.nonzero(labels == c)[0]
        sizes = sorted(np.bincount(plan.assignments[rows], minlength=4))
        assert sizes == [2, 2, 3, 3]


def test_folds_deterministic_and_seed_sensitive():
    labels = np.repeat(np.arange(4), 12)
    a = make_stratified_folds(labels, 4, seed=7)
    b = make_stratified_folds(labels, 4, seed=7)
    c = make_stratified_folds(labels, 4, seed=8)
    assert np.array_equal(a.assignments, b.assignments)
    assert not np.array_equal(a.assignments, c.assignments)


def test_fold_errors():
    with pytest.raises(ValidationError):
        make_stratified_folds(np.repeat([0, 1], 8), 1, seed=0)
    with pytest.raises(ValidationError) as err:
        make_stratified_folds(np.array([0, 0, 0, 0, 1, 1, 1]), 4, seed=0)
    assert "class 1" in str(err.value)


def test_confusion_matrix_against_sklearn_oracle():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(2)
    classes = np.array([3, 5, 9])
    y_true = rng.choice(classes, size=60)
    y_pred = rng.choice(classes, size=60)
    ours = ConfusionMatrix.from_predictions(classes, y_true, y_pred)
    theirs = sklearn_metrics.confusion_matrix(y_true, y_pred, labels=classes)
    assert np.array_equal(ours.counts, theirs)
    assert ours.accuracy == pytest.approx(np.mean(y_true == y_pred))
    assert ours.total == 60


def test_confusion_matrix_to_dict():
    cm = ConfusionMatrix((0, 1), np.array([[3, 1], [0, 4]]))
    assert cm.to_dict() == {"classes": [0, 1], "counts": [[3, 1], [0, 4]]}
    assert cm.accuracy == pytest.approx(7 / 8)


def separable_features(n_per_class=12, n_classes=3, seed=0):
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for c in range(n_classes):
        base = np.full((n_per_class, 3 * n_classes), 0.1)
        base[:, 3 * c:3 * c + 3] = 2.0
        blocks.append(base + rng.uniform(0, 0.05, size=base.shape))
        labels.append(np.full(n_per_class, c))
    return FeatureMatrix(
        np.vstack(blocks), np.concatenate(labels), tuple(range(n_classes))
    )


def test_evaluate_cv_perfect_on_separable_data():
    fm = separable_features()
    plan = make_stratified_folds(fm.labels, 4, seed=0)
    acc, cm = evaluate_cv(ClassifierSpec("KNN"), fm, plan)
    assert acc == pytest.approx(100.0)
    assert np.trace(cm.counts) == fm.rows
    assert cm.total == fm.rows


def test_evaluate_cv_deterministic():
    fm = separable_features(seed=3)
    plan = make_stratified_folds(fm.labels, 4, seed=5)
    spec = ClassifierSpec("RF", {"trees": 10}, seed=2)
    a = evaluate_cv(spec, fm, plan)
    b = evaluate_cv(spec, fm, plan)
    assert a[0] == b[0]
    assert np.array_equal(a[1].counts, b[1].counts)


def test_evaluate_cv_rejects_mismatched_plan():
    fm = separable_features()
    plan = FoldPlan(np.zeros(5, dtype=int), 4)
    with pytest.raises(ValidationError):
        evaluate_cv(ClassifierSpec("NB"), fm, plan)
