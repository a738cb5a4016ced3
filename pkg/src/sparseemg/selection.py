"""Electrode ranking schemes: RMS importance, mutual information,
permutation importance.

All schemes score electrodes (not individual feature columns); the three
window columns of a channel are aggregated (mean for MI/RMS-I, joint
permutation for PI). Rankings sort descending by score with ties broken by
ascending electrode id.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, train
from .evaluation import make_stratified_folds
from .features import FeatureMatrix
from .rng import stream, derive_seed
from .validation import ValidationError

SCHEMES = ("MI", "PI", "RMSI")

MI_BINS = 16
PI_REPEATS = 5


@dataclass(frozen=True)
class ElectrodeRanking:
    scheme: str
    ordered: tuple[tuple[int, float], ...]  # (electrode id, score), descending
    context: dict | None = None             # classifier spec + seed, PI only

    def electrode_ids(self) -> list[int]:
        return [e for e, _ in self.ordered]

    def top(self, count: int) -> list[int]:
        return [e for e, _ in self.ordered[:count]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rank,electrode_id,score,scheme\n")
        for rank, (e, score) in enumerate(self.ordered, start=1):
            buf.write(f"{rank},{e},{format(score, '.12g')},{self.scheme}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "ordered": [{"electrode_id": e, "score": s} for e, s in self.ordered],
        }


def _make_ranking(scheme: str, scores: dict[int, float], context=None) -> ElectrodeRanking:
    ordered = tuple(sorted(scores.items(), key=lambda item: (-item[1], item[0])))
    return ElectrodeRanking(scheme, ordered, context)


def rank_rms_importance(features: FeatureMatrix) -> ElectrodeRanking:
    """Score = mean feature value of the electrode's three columns.

    Model- and label-independent; proxies muscle activation intensity.
    """
    if features.rows == 0:
        raise ValidationError("features", "empty feature matrix")
    col_means = features.values.mean(axis=0)
    scores = {
        e: float(col_means[3 * i: 3 * i + 3].mean())
        for i, e in enumerate(features.electrode_order)
    }
    return _make_ranking("RMSI", scores)


def column_mutual_information(column: np.ndarray, labels: np.ndarray,
                              bins: int = MI_BINS) -> float:
    """Plug-in discrete MI (nats) between an equal-frequency-binned column
    and the labels. Uses fewer bins when the column has fewer distinct
    values than requested."""
    n = len(column)
    n_distinct = len(np.unique(column))
    b = min(bins, n_distinct)
    if b < 2:
        return 0.0
    quantiles = np.quantile(column, np.arange(1, b) / b)
    edges = np.unique(quantiles)
    binned = np.searchsorted(edges, column, side="right")
    joint = np.zeros((len(edges) + 1, len(np.unique(labels))))
    label_index = np.searchsorted(np.unique(labels), labels)
    np.add.at(joint, (binned, label_index), 1.0)
    joint /= n
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (px @ py)[nz])))


def rank_mutual_information(features: FeatureMatrix, bins: int = MI_BINS) -> ElectrodeRanking:
    """Score = mean MI of the electrode's three columns with the label."""
    if len(np.unique(features.labels)) < 2:
        raise ValidationError("features", "mutual information needs >= 2 classes")
    if features.rows < 16:
        raise ValidationError("features", "mutual information needs >= 16 rows")
    scores = {}
    for i, e in enumerate(features.electrode_order):
        mi = [
            column_mutual_information(features.values[:, 3 * i + w], features.labels, bins)
            for w in range(3)
        ]
        scores[e] = float(np.mean(mi))
    return _make_ranking("MI", scores)


def _stratified_split(labels, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """75/25 stratified split: fold 0 of a seeded 4-fold plan is the 25%."""
    plan = make_stratified_folds(labels, 4, seed)
    return plan.train_rows(0), plan.test_rows(0)


def rank_permutation_importance(features: FeatureMatrix, spec: ClassifierSpec,
                                seed: int, repeats: int = PI_REPEATS) -> ElectrodeRanking:
    """Score = mean held-out accuracy drop when the electrode's three
    columns are jointly permuted (same permutation for all three)."""
    train_rows, test_rows = _stratified_split(features.labels, derive_seed(seed, "pi-split"))
    train_fm = FeatureMatrix(
        features.values[train_rows], features.labels[train_rows],
        features.electrode_order,
    )
    model = train(spec, train_fm, seed=derive_seed(seed, "pi-train"))
    X_test = features.values[test_rows]
    y_test = features.labels[test_rows]
    baseline = 100.0 * float(np.mean(model.predict(X_test) == y_test))

    scores = {}
    for i, e in enumerate(features.electrode_order):
        cols = slice(3 * i, 3 * i + 3)
        drops = []
        for r in range(repeats):
            rng = stream(seed, "pi-perm", e, r)
            perm = rng.permutation(X_test.shape[0])
            X_perm = X_test.copy()
            X_perm[:, cols] = X_test[perm, cols]
            acc = 100.0 * float(np.mean(model.predict(X_perm) == y_test))
            drops.append(baseline - acc)
        scores[e] = float(np.mean(drops))
    context = {"classifier": spec.kind, "hyperparameters": spec.hyperparameters,
               "seed": seed}
    return _make_ranking("PI", scores, context)


def rank_electrodes(scheme: str, features: FeatureMatrix,
                    spec: ClassifierSpec | None = None,
                    seed: int = 0) -> ElectrodeRanking:
    """Dispatch on scheme name (MI, PI or RMSI)."""
    if scheme == "MI":
        return rank_mutual_information(features)
    if scheme == "RMSI":
        return rank_rms_importance(features)
    if scheme == "PI":
        if spec is None:
            raise ValidationError("spec", "PI ranking needs a classifier spec")
        return rank_permutation_importance(features, spec, seed)
    raise ValidationError("scheme", f"unknown selection scheme {scheme!r}")
