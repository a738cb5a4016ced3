"""From-scratch classifiers with a minimal sklearn-style estimator API.

All four estimators implement ``fit(X, y)``, ``predict(X)``,
``get_params()`` / ``set_params()`` and are deterministic under their
``seed`` parameter. Every argmax-style decision breaks ties toward the
lowest class id; ``classes_`` is always sorted ascending so a plain argmax
implements that rule.

Pinned default hyperparameters (the single source of truth, mirrored in
docs/defaults.md):

  RF:  100 trees, max_depth 30, min_samples_split 2,
       features_per_split floor(sqrt(columns)), bootstrap sampling
  KNN: k=5, Euclidean distance
  LR:  multinomial softmax, l2_lambda 1e-4, 500 epochs,
       learning rate 0.1 with 1/t decay
  NB:  Gaussian, variance smoothing 1e-9 * max column variance
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import stream
from .features import Standardizer
from .validation import ValidationError, check_X_y, check_array, check_is_fitted

CLASSIFIER_KINDS = ("RF", "KNN", "LR", "NB")

# Kinds whose decision function is not scale-invariant; cross-validation
# fits a Standardizer on the training folds for these.
STANDARDIZED_KINDS = ("KNN", "LR")

DEFAULT_HYPERPARAMETERS = {
    "RF": {"trees": 100, "max_depth": 30, "min_samples_split": 2, "bootstrap": True},
    "KNN": {"k": 5},
    "LR": {"l2_lambda": 1e-4, "epochs": 500, "learning_rate": 0.1},
    "NB": {"variance_smoothing": 1e-9},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise ValidationError("kind", f"unknown classifier kind {self.kind!r}")
        params = dict(DEFAULT_HYPERPARAMETERS[self.kind])
        for key, value in self.hyperparameters.items():
            if key not in params:
                raise ValidationError(
                    "hyperparameters", f"{key!r} is not a {self.kind} hyperparameter"
                )
            params[key] = value
        object.__setattr__(self, "hyperparameters", params)


class _BaseEstimator:
    """get_params/set_params over __init__ keyword arguments."""

    _param_names: tuple[str, ...] = ()

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names:
                raise ValidationError(name, f"unknown parameter for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def _validate_classes(self, y: np.ndarray) -> np.ndarray:
        classes = np.unique(y)
        if len(classes) < 2:
            raise ValidationError("y", "training data must contain >= 2 classes")
        return classes

    def score(self, X, y) -> float:
        y = np.asarray(y)
        return float(np.mean(self.predict(X) == y))


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    leaf_class_index: int = -1


def _best_split(X, y_idx, n_classes, feature_ids):
    """Best (feature, threshold) by Gini over the candidate features.

    Thresholds are midpoints between consecutive distinct sorted values.
    Returns (gini, feature, threshold) or None when no feature admits a split.
    """
    n = len(y_idx)
    best = None
    for f in feature_ids:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y_idx[order]
        # split after position i possible when value changes
        change = np.nonzero(sorted_col[:-1] < sorted_col[1:])[0]
        if len(change) == 0:
            continue
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sorted_y] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        left = prefix[change]                      # counts of rows <= split
        total = prefix[-1]
        right = total - left
        nl = change + 1.0
        nr = n - nl
        gini_l = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best[0]:
            threshold = 0.5 * (sorted_col[change[i]] + sorted_col[change[i] + 1])
            best = (float(weighted[i]), int(f), float(threshold))
    return best


def _majority_index(y_idx, n_classes) -> int:
    # np.argmax returns the first maximum: lowest class index wins ties
    return int(np.argmax(np.bincount(y_idx, minlength=n_classes)))


class DecisionTreeClassifier(_BaseEstimator):
    """CART-style tree: Gini impurity, random feature subsets per node."""

    _param_names = ("max_depth", "min_samples_split", "max_features", "seed")

    def __init__(self, max_depth=30, min_samples_split=2, max_features=None, seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y, rng=None):
        X, y = check_X_y(X, y)
        self.classes_ = self._validate_classes(y)
        y_idx = np.searchsorted(self.classes_, y)
        if rng is None:
            rng = stream(self.seed, "tree")
        n_features = X.shape[1]
        mtry = self.max_features or max(1, int(math.floor(math.sqrt(n_features))))
        mtry = min(mtry, n_features)
        self.root_ = self._grow(X, y_idx, 0, rng, mtry)
        self.n_features_in_ = n_features
        return self

    def _grow(self, X, y_idx, depth, rng, mtry):
        n_classes = len(self.classes_)
        if (
            depth >= self.max_depth
            or len(y_idx) < self.min_samples_split
            or len(np.unique(y_idx)) == 1
        ):
            return _TreeNode(leaf_class_index=_majority_index(y_idx, n_classes))
        # candidate order is the draw order: equal-gain ties resolve to a
        # random feature instead of always the lowest column index
        feature_ids = rng.choice(X.shape[1], size=mtry, replace=False)
        best = _best_split(X, y_idx, n_classes, feature_ids)
        if best is None:
            return _TreeNode(leaf_class_index=_majority_index(y_idx, n_classes))
        _, feature, threshold = best
        mask = X[:, feature] <= threshold
        node = _TreeNode(feature=feature, threshold=threshold)
        node.left = self._grow(X[mask], y_idx[mask], depth + 1, rng, mtry)
        node.right = self._grow(X[~mask], y_idx[~mask], depth + 1, rng, mtry)
        return node

    def _predict_index(self, X) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=int)
        stack = [(self.root_, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            if node.leaf_class_index >= 0:
                out[idx] = node.leaf_class_index
                continue
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "root_")
        X = check_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError("X", f"{X.shape[1]} columns, trained on {self.n_features_in_}")
        return self.classes_[self._predict_index(X)]


class RandomForestClassifier(_BaseEstimator):
    """Bagged Gini trees; prediction is a majority vote over trees."""

    _param_names = ("trees", "max_depth", "min_samples_split", "bootstrap", "seed")

    def __init__(self, trees=100, max_depth=30, min_samples_split=2,
                 bootstrap=True, seed=0):
        self.trees = trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = self._validate_classes(y)
        self.n_features_in_ = X.shape[1]
        n = X.shape[0]
        self.estimators_ = []
        for i in range(self.trees):
            rng = stream(self.seed, "tree", i)
            if self.bootstrap:
                rows = rng.integers(0, n, size=n)
                Xb, yb = X[rows], y[rows]
                if len(np.unique(yb)) < 2:
                    # degenerate bootstrap: single-class tree is a constant leaf
                    tree = DecisionTreeClassifier(
                        self.max_depth, self.min_samples_split, seed=self.seed
                    )
                    tree.classes_ = self.classes_
                    tree.n_features_in_ = X.shape[1]
                    tree.root_ = _TreeNode(
                        leaf_class_index=int(np.searchsorted(self.classes_, yb[0]))
                    )
                    self.estimators_.append(tree)
                    continue
            else:
                Xb, yb = X, y
            tree = DecisionTreeClassifier(
                self.max_depth, self.min_samples_split, seed=self.seed
            )
            tree.fit(Xb, yb, rng=rng)
            # trees trained on a bootstrap may miss classes; realign indices
            if not np.array_equal(tree.classes_, self.classes_):
                remap = np.searchsorted(self.classes_, tree.classes_)
                _remap_tree(tree.root_, remap)
                tree.classes_ = self.classes_
            self.estimators_.append(tree)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "estimators_")
        X = check_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError("X", f"{X.shape[1]} columns, trained on {self.n_features_in_}")
        votes = np.zeros((X.shape[0], len(self.classes_)), dtype=int)
        for tree in self.estimators_:
            idx = tree._predict_index(X)
            votes[np.arange(X.shape[0]), idx] += 1
        return self.classes_[np.argmax(votes, axis=1)]


def _remap_tree(node: _TreeNode, remap: np.ndarray) -> None:
    if node.leaf_class_index >= 0:
        node.leaf_class_index = int(remap[node.leaf_class_index])
        return
    _remap_tree(node.left, remap)
    _remap_tree(node.right, remap)


class KNeighborsClassifier(_BaseEstimator):
    """k nearest neighbours by Euclidean distance, majority vote.

    Distance ties are resolved by training-row order (stable sort); vote
    ties go to the lowest class id.
    """

    _param_names = ("k",)

    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = self._validate_classes(y)
        self.X_ = X
        self.y_idx_ = np.searchsorted(self.classes_, y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "X_")
        X = check_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError("X", f"{X.shape[1]} columns, trained on {self.n_features_in_}")
        k = min(self.k, self.X_.shape[0])
        d2 = (
            np.sum(X ** 2, axis=1)[:, None]
            - 2.0 * X @ self.X_.T
            + np.sum(self.X_ ** 2, axis=1)[None, :]
        )
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        n_classes = len(self.classes_)
        out = np.empty(X.shape[0], dtype=int)
        for i in range(X.shape[0]):
            out[i] = _majority_index(self.y_idx_[order[i]], n_classes)
        return self.classes_[out]


def softmax_loss_and_grad(W, b, X, y_idx, l2):
    """Mean cross-entropy with L2 penalty on W; returns (loss, dW, db)."""
    n = X.shape[0]
    logits = X @ W + b
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    loss = -np.mean(np.log(probs[np.arange(n), y_idx] + 1e-300))
    loss += 0.5 * l2 * np.sum(W ** 2)
    grad_logits = probs.copy()
    grad_logits[np.arange(n), y_idx] -= 1.0
    grad_logits /= n
    dW = X.T @ grad_logits + l2 * W
    db = grad_logits.sum(axis=0)
    return loss, dW, db


class SoftmaxRegression(_BaseEstimator):
    """Multinomial logistic regression trained by full-batch gradient
    descent with a 1/t learning-rate decay."""

    _param_names = ("l2_lambda", "epochs", "learning_rate", "seed")

    def __init__(self, l2_lambda=1e-4, epochs=500, learning_rate=0.1, seed=0):
        self.l2_lambda = l2_lambda
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = self._validate_classes(y)
        y_idx = np.searchsorted(self.classes_, y)
        rng = stream(self.seed, "lr-init")
        n_classes = len(self.classes_)
        W = rng.normal(0.0, 0.01, size=(X.shape[1], n_classes))
        b = np.zeros(n_classes)
        for t in range(1, self.epochs + 1):
            _, dW, db = softmax_loss_and_grad(W, b, X, y_idx, self.l2_lambda)
            lr = self.learning_rate / t
            W -= lr * dW
            b -= lr * db
        self.W_ = W
        self.b_ = b
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "W_")
        X = check_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError("X", f"{X.shape[1]} columns, trained on {self.n_features_in_}")
        return X @ self.W_ + self.b_

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "W_")
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class GaussianNaiveBayes(_BaseEstimator):
    """Gaussian NB with variance smoothing relative to the largest
    training-column variance."""

    _param_names = ("variance_smoothing",)

    def __init__(self, variance_smoothing=1e-9):
        self.variance_smoothing = variance_smoothing

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = self._validate_classes(y)
        n_classes = len(self.classes_)
        eps = self.variance_smoothing * float(np.max(X.var(axis=0)))
        if eps == 0.0:  # all-constant features: keep likelihoods finite
            eps = self.variance_smoothing
        self.theta_ = np.empty((n_classes, X.shape[1]))
        self.var_ = np.empty((n_classes, X.shape[1]))
        self.log_prior_ = np.empty(n_classes)
        for i, c in enumerate(self.classes_):
            rows = X[y == c]
            self.theta_[i] = rows.mean(axis=0)
            self.var_[i] = rows.var(axis=0) + eps
            self.log_prior_[i] = math.log(rows.shape[0] / X.shape[0])
        self.n_features_in_ = X.shape[1]
        return self

    def _joint_log_likelihood(self, X) -> np.ndarray:
        check_is_fitted(self, "theta_")
        X = check_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError("X", f"{X.shape[1]} columns, trained on {self.n_features_in_}")
        jll = np.empty((X.shape[0], len(self.classes_)))
        for i in range(len(self.classes_)):
            log_det = np.sum(np.log(2.0 * np.pi * self.var_[i]))
            maha = np.sum((X - self.theta_[i]) ** 2 / self.var_[i], axis=1)
            jll[:, i] = self.log_prior_[i] - 0.5 * (log_det + maha)
        return jll

    def predict_proba(self, X) -> np.ndarray:
        jll = self._joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        probs = np.exp(jll)
        return probs / probs.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "theta_")
        return self.classes_[np.argmax(self._joint_log_likelihood(X), axis=1)]


def make_estimator(spec: ClassifierSpec, seed: int | None = None):
    """Instantiate the estimator named by a ClassifierSpec.

    ``seed`` overrides spec.seed so cross-validation folds and sweep points
    can carry derived sub-seeds.
    """
    hp = spec.hyperparameters
    seed = spec.seed if seed is None else seed
    if spec.kind == "RF":
        return RandomForestClassifier(
            trees=hp["trees"], max_depth=hp["max_depth"],
            min_samples_split=hp["min_samples_split"],
            bootstrap=hp["bootstrap"], seed=seed,
        )
    if spec.kind == "KNN":
        return KNeighborsClassifier(k=hp["k"])
    if spec.kind == "LR":
        return SoftmaxRegression(
            l2_lambda=hp["l2_lambda"], epochs=hp["epochs"],
            learning_rate=hp["learning_rate"], seed=seed,
        )
    return GaussianNaiveBayes(variance_smoothing=hp["variance_smoothing"])


class TrainedModel:
    """A fitted classifier bundled with the context it was trained in."""

    def __init__(self, spec: ClassifierSpec, estimator, classes,
                 electrode_order, standardizer: Standardizer | None = None):
        self.spec = spec
        self.estimator = estimator
        self.classes = [int(c) for c in classes]
        self.electrode_order = [int(e) for e in electrode_order]
        self.standardizer = standardizer

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return self.estimator.predict(X)


def train(spec: ClassifierSpec, features, standardize: bool | None = None,
          seed: int | None = None) -> TrainedModel:
    """Fit spec's classifier on a FeatureMatrix.

    ``standardize`` defaults to the per-kind rule (KNN/LR standardized,
    trees and NB raw).
    """
    if standardize is None:
        standardize = spec.kind in STANDARDIZED_KINDS
    X = features.values
    standardizer = None
    if standardize:
        standardizer = Standardizer().fit(X)
        X = standardizer.transform(X)
    estimator = make_estimator(spec, seed=seed)
    estimator.fit(X, features.labels)
    return TrainedModel(spec, estimator, estimator.classes_,
                        features.electrode_order, standardizer)


def predict(model: TrainedModel, features) -> np.ndarray:
    return model.predict(features.values)


# ---------------------------------------------------------------------------
# Persistence: versioned JSON, bit-identical predict after round-trip.

MODEL_FORMAT_VERSION = 1


def _tree_to_dict(node: _TreeNode) -> dict:
    if node.leaf_class_index >= 0:
        return {"leaf": node.leaf_class_index}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_to_dict(node.left),
        "right": _tree_to_dict(node.right),
    }


def _tree_from_dict(data: dict) -> _TreeNode:
    if "leaf" in data:
        return _TreeNode(leaf_class_index=int(data["leaf"]))
    return _TreeNode(
        feature=int(data["feature"]),
        threshold=float(data["threshold"]),
        left=_tree_from_dict(data["left"]),
        right=_tree_from_dict(data["right"]),
    )


def _estimator_state(est) -> dict:
    if isinstance(est, RandomForestClassifier):
        return {"trees": [_tree_to_dict(t.root_) for t in est.estimators_]}
    if isinstance(est, KNeighborsClassifier):
        return {"X": est.X_.tolist(), "y_idx": est.y_idx_.tolist()}
    if isinstance(est, SoftmaxRegression):
        return {"W": est.W_.tolist(), "b": est.b_.tolist()}
    return {
        "theta": est.theta_.tolist(),
        "var": est.var_.tolist(),
        "log_prior": est.log_prior_.tolist(),
    }


def _restore_estimator(spec: ClassifierSpec, state: dict, classes, n_features):
    est = make_estimator(spec)
    est.classes_ = np.asarray(classes)
    est.n_features_in_ = n_features
    if spec.kind == "RF":
        est.estimators_ = []
        for tree_state in state["trees"]:
            tree = DecisionTreeClassifier(est.max_depth, est.min_samples_split)
            tree.classes_ = est.classes_
            tree.n_features_in_ = n_features
            tree.root_ = _tree_from_dict(tree_state)
            est.estimators_.append(tree)
    elif spec.kind == "KNN":
        est.X_ = np.asarray(state["X"], dtype=float)
        est.y_idx_ = np.asarray(state["y_idx"], dtype=int)
    elif spec.kind == "LR":
        est.W_ = np.asarray(state["W"], dtype=float)
        est.b_ = np.asarray(state["b"], dtype=float)
    else:
        est.theta_ = np.asarray(state["theta"], dtype=float)
        est.var_ = np.asarray(state["var"], dtype=float)
        est.log_prior_ = np.asarray(state["log_prior"], dtype=float)
    return est


def model_to_json(model: TrainedModel) -> str:
    payload = {
        "v": MODEL_FORMAT_VERSION,
        "kind": model.spec.kind,
        "hyperparameters": model.spec.hyperparameters,
        "seed": model.spec.seed,
        "classes": model.classes,
        "electrode_order": model.electrode_order,
        "n_features": 3 * len(model.electrode_order),
        "standardizer": (
            None if model.standardizer is None else model.standardizer.to_dict()
        ),
        "state": _estimator_state(model.estimator),
    }
    return json.dumps(payload, sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    payload = json.loads(text)
    if payload.get("v") != MODEL_FORMAT_VERSION:
        raise ValidationError("v", f"unsupported model format version {payload.get('v')!r}")
    spec = ClassifierSpec(payload["kind"], payload["hyperparameters"], payload["seed"])
    est = _restore_estimator(spec, payload["state"], payload["classes"], payload["n_features"])
    standardizer = (
        None if payload["standardizer"] is None
        else Standardizer.from_dict(payload["standardizer"])
    )
    return TrainedModel(spec, est, payload["classes"],
                        payload["electrode_order"], standardizer)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


def load_model(path: str | Path) -> TrainedModel:
    return model_from_json(Path(path).read_text())
