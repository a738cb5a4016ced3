"""Stratified fold planning and cross-validated evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, train, TrainedModel
from .features import FeatureMatrix
from .rng import stream, derive_seed
from .validation import ValidationError


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray  # fold index per row
    k: int

    def __post_init__(self):
        assignments = np.asarray(self.assignments, dtype=int)
        assignments.setflags(write=False)
        object.__setattr__(self, "assignments", assignments)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments == fold)[0]

    def train_rows(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments != fold)[0]


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[int, ...]
    counts: np.ndarray  # rows = true class, columns = predicted class

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        """Fraction correct over all counted rows (0..1)."""
        return float(np.trace(self.counts)) / self.total

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "counts": self.counts.tolist()}

    @classmethod
    def from_predictions(cls, classes, y_true, y_pred) -> "ConfusionMatrix":
        classes = np.asarray(classes)
        counts = np.zeros((len(classes), len(classes)), dtype=int)
        ti = np.searchsorted(classes, y_true)
        pi = np.searchsorted(classes, y_pred)
        np.add.at(counts, (ti, pi), 1)
        return cls(tuple(int(c) for c in classes), counts)


def make_stratified_folds(labels, k: int, seed: int) -> FoldPlan:
    """Per-class seeded shuffle followed by round-robin fold assignment."""
    labels = np.asarray(labels)
    if k < 2:
        raise ValidationError("k", "need at least 2 folds")
    assignments = np.empty(len(labels), dtype=int)
    for c in np.unique(labels):
        rows = np.nonzero(labels == c)[0]
        if len(rows) < k:
            raise ValidationError(
                "labels", f"class {c} has {len(rows)} instances, fewer than k={k}"
            )
        rng = stream(seed, "fold-shuffle", int(c))
        shuffled = rows[rng.permutation(len(rows))]
        assignments[shuffled] = np.arange(len(rows)) % k
    return FoldPlan(assignments, k)


def evaluate_cv(spec: ClassifierSpec, features: FeatureMatrix,
                plan: FoldPlan) -> tuple[float, ConfusionMatrix]:
    """k-fold cross-validation.

    Returns (mean of per-fold accuracies in percent, confusion matrix
    summed over folds). Standardization, when the classifier kind needs it,
    is fit on the training folds only.
    """
    if len(plan.assignments) != features.rows:
        raise ValidationError("plan", "fold plan does not match feature rows")
    classes = np.unique(features.labels)
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    fold_accuracies = []
    for fold in range(plan.k):
        train_rows = plan.train_rows(fold)
        test_rows = plan.test_rows(fold)
        train_fm = FeatureMatrix(
            features.values[train_rows], features.labels[train_rows],
            features.electrode_order,
        )
        model = train(spec, train_fm, seed=derive_seed(spec.seed, "cv-fold", fold))
        y_pred = model.predict(features.values[test_rows])
        y_true = features.labels[test_rows]
        fold_accuracies.append(100.0 * float(np.mean(y_pred == y_true)))
        fold_cm = ConfusionMatrix.from_predictions(classes, y_true, y_pred)
        counts += fold_cm.counts
    confusion = ConfusionMatrix(tuple(int(c) for c in classes), counts)
    return float(np.mean(fold_accuracies)), confusion
