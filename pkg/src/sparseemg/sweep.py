"""The optimization core: electrode-count sweep under fixed CV folds,
Sparsity Score minimization, cross-user transfer and band baselines."""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierSpec
from .dataset import DatasetManifest, ElectrodeSite, TrialRecord, load_trials
from .evaluation import ConfusionMatrix, FoldPlan, evaluate_cv, make_stratified_folds
from .features import FeatureMatrix, build_feature_matrix
from .rng import derive_seed
from .selection import ElectrodeRanking, rank_electrodes
from .validation import ValidationError

DEFAULT_E_MAX = 20
CV_FOLDS = 4


class SweepCancelled(Exception):
    """Raised inside run_sweep when the caller's should_stop fires."""


@dataclass(frozen=True)
class SparsityConfig:
    w1: float = 0.5
    w2: float = 0.5

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or abs(self.w1 + self.w2 - 1.0) > 1e-12:
            raise ValidationError("w1/w2", "weights must be nonnegative and sum to 1")


@dataclass(frozen=True)
class SweepPoint:
    electrode_count: int
    electrodes: tuple[int, ...]
    accuracy: float           # percent
    sparsity_score: float
    confusion: ConfusionMatrix | None = None

    def to_dict(self, include_confusion: bool = False) -> dict:
        d = {
            "E": self.electrode_count,
            "electrodes": list(self.electrodes),
            "accuracy": self.accuracy,
            "sparsity_score": self.sparsity_score,
        }
        if include_confusion and self.confusion is not None:
            d["confusion_matrix"] = self.confusion.to_dict()
        return d


@dataclass(frozen=True)
class SweepResult:
    ranking: ElectrodeRanking
    points: tuple[SweepPoint, ...]
    best_by_accuracy: int     # E with max accuracy (ties -> smaller E)
    best_by_score: int        # E with min sparsity score (ties -> smaller E)
    chosen: SweepPoint
    fold_plan: FoldPlan = field(compare=False, repr=False, default=None)

    def point(self, electrode_count: int) -> SweepPoint:
        for p in self.points:
            if p.electrode_count == electrode_count:
                return p
        raise KeyError(electrode_count)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("E,accuracy,sparsity_score\n")
        for p in self.points:
            buf.write(
                f"{p.electrode_count},{format(p.accuracy, '.12g')},"
                f"{format(p.sparsity_score, '.12g')}\n"
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "ranking": self.ranking.to_dict(),
            "points": [p.to_dict() for p in self.points],
            "best_by_accuracy": self.best_by_accuracy,
            "best_by_score": self.best_by_score,
            "chosen": self.chosen.to_dict(include_confusion=True),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def sparsity_score(electrode_count: int, accuracy: float,
                   cfg: SparsityConfig = SparsityConfig()) -> float:
    """w1 * (100 - accuracy) + w2 * electrode_count; lower is better."""
    if not 0.0 <= accuracy <= 100.0:
        raise ValidationError("accuracy", f"must be in [0, 100], got {accuracy}")
    if electrode_count < 0:
        raise ValidationError("electrode_count", "must be >= 0")
    return cfg.w1 * (100.0 - accuracy) + cfg.w2 * electrode_count


def select_optimal(points: list[SweepPoint], cfg: SparsityConfig = SparsityConfig()) -> SweepPoint:
    """Argmin of the sparsity score; ties go to the smaller electrode count."""
    if not points:
        raise ValidationError("points", "must be non-empty")
    return min(points, key=lambda p: (p.sparsity_score, p.electrode_count))


def _filter_trials(trials: list[TrialRecord], gestures: list[int]) -> list[TrialRecord]:
    wanted = set(gestures)
    kept = [t for t in trials if t.gesture_id in wanted]
    if not kept:
        raise ValidationError("gestures", "no trials match the selected gestures")
    return kept


def run_sweep(trials: list[TrialRecord], candidate_electrodes: list[int],
              gestures: list[int], scheme: str, spec: ClassifierSpec,
              cfg: SparsityConfig = SparsityConfig(),
              e_max: int = DEFAULT_E_MAX, seed: int = 0,
              keep_all_confusions: bool = False, workers: int = 1,
              progress=None, should_stop=None) -> SweepResult:
    """Rank candidates once, then evaluate every ranking prefix of size
    E = 2..min(e_max, |candidates|) under one fixed 4-fold plan.

    ``progress(E, accuracy)`` is called per completed point in ascending E;
    ``should_stop()`` returning True aborts with SweepCancelled. ``workers``
    > 1 parallelizes across E without changing any result.
    """
    if e_max < 2:
        raise ValidationError("e_max", "must be >= 2")
    if len(candidate_electrodes) < 2:
        raise ValidationError("candidate_electrodes", "need at least 2 candidates")
    trials = _filter_trials(trials, gestures)
    features = build_feature_matrix(trials, list(candidate_electrodes))
    ranking = rank_electrodes(scheme, features, spec=spec,
                              seed=derive_seed(seed, "rank"))
    plan = make_stratified_folds(features.labels, CV_FOLDS,
                                 derive_seed(seed, "folds"))
    counts = range(2, min(e_max, len(candidate_electrodes)) + 1)

    def evaluate_point(e: int) -> SweepPoint:
        subset = ranking.top(e)
        sub_spec = ClassifierSpec(spec.kind, spec.hyperparameters,
                                  derive_seed(seed, "eval", e))
        accuracy, confusion = evaluate_cv(sub_spec, features.select_electrodes(subset), plan)
        return SweepPoint(e, tuple(subset), accuracy,
                          sparsity_score(e, accuracy, cfg), confusion)

    points: list[SweepPoint] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(evaluate_point, e) for e in counts]
            # collect in ascending-E order so progress events stay ordered
            for future in futures:
                if should_stop is not None and should_stop():
                    pool.shutdown(wait=False, cancel_futures=True)
                    raise SweepCancelled()
                point = future.result()
                points.append(point)
                if progress is not None:
                    progress(point.electrode_count, point.accuracy)
    else:
        for e in counts:
            if should_stop is not None and should_stop():
                raise SweepCancelled()
            point = evaluate_point(e)
            points.append(point)
            if progress is not None:
                progress(point.electrode_count, point.accuracy)

    chosen = select_optimal(points, cfg)
    best_acc = max(points, key=lambda p: (p.accuracy, -p.electrode_count))
    if not keep_all_confusions:
        keep = {chosen.electrode_count, best_acc.electrode_count}
        points = [
            p if p.electrode_count in keep
            else SweepPoint(p.electrode_count, p.electrodes, p.accuracy,
                            p.sparsity_score, None)
            for p in points
        ]
        chosen = next(p for p in points if p.electrode_count == chosen.electrode_count)
    return SweepResult(
        ranking=ranking,
        points=tuple(points),
        best_by_accuracy=best_acc.electrode_count,
        best_by_score=chosen.electrode_count,
        chosen=chosen,
        fold_plan=plan,
    )


def cross_user_eval(manifest: DatasetManifest, source_user: str, scheme: str,
                    spec: ClassifierSpec, cfg: SparsityConfig = SparsityConfig(),
                    seed: int = 0, e_max: int = DEFAULT_E_MAX,
                    trials_by_user: dict[str, list[TrialRecord]] | None = None,
                    ) -> tuple[SweepResult, dict[str, float], float]:
    """Sweep on the source user, freeze the chosen layout, evaluate it on
    every user's own trials with identically seeded folds.

    Returns (source sweep result, per-user accuracy, mean accuracy over
    non-source users). When ``trials_by_user`` is omitted, trials are loaded
    through the manifest for all sessions.
    """
    if len(manifest.users) < 2:
        raise ValidationError("users", "cross-user evaluation needs >= 2 users")
    if source_user not in manifest.users:
        raise ValidationError("source_user", f"{source_user!r} is not in the manifest")
    if trials_by_user is None:
        sessions = list(range(1, manifest.sessions_per_user + 1))
        trials_by_user = {
            u: load_trials(manifest, u, sessions) for u in manifest.users
        }
    gestures = manifest.gesture_ids()
    result = run_sweep(
        trials_by_user[source_user], manifest.electrode_ids(), gestures,
        scheme, spec, cfg, e_max=e_max, seed=seed,
    )
    chosen_set = list(result.chosen.electrodes)
    e = result.chosen.electrode_count
    per_user: dict[str, float] = {}
    for user in manifest.users:
        fm = build_feature_matrix(
            _filter_trials(trials_by_user[user], gestures), chosen_set
        )
        plan = make_stratified_folds(fm.labels, CV_FOLDS, derive_seed(seed, "folds"))
        sub_spec = ClassifierSpec(spec.kind, spec.hyperparameters,
                                  derive_seed(seed, "eval", e))
        accuracy, _ = evaluate_cv(sub_spec, fm, plan)
        per_user[user] = accuracy
    others = [acc for u, acc in per_user.items() if u != source_user]
    return result, per_user, float(np.mean(others))


def band_layout(electrodes: list[ElectrodeSite], k: int) -> list[int]:
    """Equally spaced electrode ids around the circumferential ring:
    ring positions floor(i * n / k) for i = 0..k-1."""
    ring = sorted(
        (e for e in electrodes if e.ring_index is not None),
        key=lambda e: e.ring_index,
    )
    if not ring:
        raise ValidationError("electrodes", "no ring metadata (ring_index) present")
    n = len(ring)
    if not 1 <= k <= n:
        raise ValidationError("k", f"must be in 1..{n}, got {k}")
    return [ring[(i * n) // k].id for i in range(k)]


def compare_band_vs_sparse(trials: list[TrialRecord],
                           electrodes: list[ElectrodeSite], k: int,
                           scheme: str, spec: ClassifierSpec,
                           seed: int = 0) -> tuple[float, float]:
    """Accuracy of the equally spaced band of size k vs the size-k ranking
    prefix, under identical folds and classifier seeding."""
    band_ids = band_layout(electrodes, k)
    candidate_ids = [e.id for e in electrodes]
    features = build_feature_matrix(trials, candidate_ids)
    ranking = rank_electrodes(scheme, features, spec=spec,
                              seed=derive_seed(seed, "rank"))
    sparse_ids = ranking.top(k)
    plan = make_stratified_folds(features.labels, CV_FOLDS, derive_seed(seed, "folds"))
    sub_spec = ClassifierSpec(spec.kind, spec.hyperparameters,
                              derive_seed(seed, "eval", k))
    band_accuracy, _ = evaluate_cv(sub_spec, features.select_electrodes(band_ids), plan)
    sparse_accuracy, _ = evaluate_cv(sub_spec, features.select_electrodes(sparse_ids), plan)
    return band_accuracy, sparse_accuracy
