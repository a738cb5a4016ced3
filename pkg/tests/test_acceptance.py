"""Acceptance gate: one test per release criterion, each printing a single
pass line and enforcing its runtime budget. These run on top of the unit
suite and exercise the package end to end through its public interfaces."""

import itertools
import json
import time
import xml.etree.ElementTree as ET
from contextlib import contextmanager

import numpy as np
import pytest

from sparseemg.classifiers import (
    CLASSIFIER_KINDS,
    ClassifierSpec,
    GaussianNaiveBayes,
    softmax_loss_and_grad,
)
from sparseemg.dataset import SyntheticSpec, generate_synthetic
from sparseemg.evaluation import evaluate_cv, make_stratified_folds
from sparseemg.features import build_feature_matrix
from sparseemg.rng import derive_seed, stream
from sparseemg.selection import rank_electrodes
from sparseemg.stencil import ArmMeasurements, generate_stencil
from sparseemg.sweep import (
    SparsityConfig,
    compare_band_vs_sparse,
    cross_user_eval,
    run_sweep,
    sparsity_score,
)

SVG = "{http://www.w3.org/2000/svg}"


@contextmanager
def budget(name: str, seconds: float):
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    assert elapsed < seconds, f"{name} exceeded its {seconds}s budget ({elapsed:.1f}s)"
    print(f"PASS {name} ({elapsed:.2f}s < {seconds:.0f}s)")


def synth(channels, informative, sigma=0.05, gestures=4, trials=8, users=1,
          samples=96, seed=0):
    spec = SyntheticSpec(
        channel_count=channels, gesture_count=gestures, users=users,
        trials_per_gesture=trials, samples_per_trial=samples,
        informative_channels=tuple(informative), noise_sigma=sigma, seed=seed,
    )
    return generate_synthetic(spec)


def test_acceptance_sparsity_score():
    with budget("sparsity-score", 1.0):
        assert abs(sparsity_score(9, 84.04, SparsityConfig(0.5, 0.5)) - 12.48) <= 1e-9
        rng = np.random.default_rng(0)
        cfg = SparsityConfig(0.5, 0.5)
        for _ in range(1000):
            e = int(rng.integers(1, 64))
            acc = float(rng.uniform(0, 99))
            base = sparsity_score(e, acc, cfg)
            assert sparsity_score(e + 1, acc, cfg) > base
            assert sparsity_score(e, acc + 1.0, cfg) < base


def test_acceptance_separation():
    informative = (2, 5, 9, 12)
    with budget("separation", 120.0):
        hits = {"MI": 0, "PI": 0, "RMSI": 0}
        for seed in range(20):
            _, trials = synth(16, informative, sigma=0.05, seed=seed)
            features = build_feature_matrix(trials, list(range(16)))
            for scheme in hits:
                ranking = rank_electrodes(
                    scheme, features, spec=ClassifierSpec("RF"), seed=seed,
                )
                if set(ranking.top(4)) == set(informative):
                    hits[scheme] += 1
        for scheme, count in hits.items():
            assert count >= 19, f"{scheme} separated only {count}/20 seeds"


def test_acceptance_sweep_matches_brute_force():
    informative = (1, 4, 7)
    with budget("sweep-vs-brute-force", 300.0):
        manifest, trials = synth(10, informative, sigma=0.0)
        spec = ClassifierSpec("NB")
        seed = 0
        result = run_sweep(
            trials, manifest.electrode_ids(), manifest.gesture_ids(),
            "MI", spec, e_max=5, seed=seed,
        )
        e = result.chosen.electrode_count
        assert e <= 5
        # exhaustive search over every same-size subset under the identical
        # fold plan and per-size classifier seeding the sweep used
        features = build_feature_matrix(trials, manifest.electrode_ids())
        plan = make_stratified_folds(features.labels, 4, derive_seed(seed, "folds"))
        sub_spec = ClassifierSpec(spec.kind, spec.hyperparameters,
                                  derive_seed(seed, "eval", e))
        best = -1.0
        for subset in itertools.combinations(manifest.electrode_ids(), e):
            acc, _ = evaluate_cv(sub_spec, features.select_electrodes(list(subset)), plan)
            best = max(best, acc)
        assert result.chosen.accuracy >= best - 2.0, (
            f"chosen {result.chosen.accuracy:.2f}% vs exhaustive best {best:.2f}%"
        )


def test_acceptance_fold_arithmetic():
    with budget("fold-arithmetic", 1.0):
        labels = np.repeat(np.arange(27), 20)
        plan = make_stratified_folds(labels, 4, seed=0)
        for fold in range(4):
            rows = plan.test_rows(fold)
            assert len(rows) == 135
            assert np.all(np.bincount(labels[rows], minlength=27) == 5)


def test_acceptance_chance_level_on_shuffled_labels():
    with budget("chance-level", 180.0):
        _, trials = synth(10, (1, 4, 7))
        features = build_feature_matrix(trials, list(range(10)))
        k = 4  # gesture classes
        for kind in CLASSIFIER_KINDS:
            accuracies = []
            for seed in range(20):
                rng = stream(seed, "label-shuffle")
                shuffled = features.labels[rng.permutation(features.rows)]
                fm = features.select_electrodes(list(features.electrode_order))
                fm = type(fm)(fm.values, shuffled, fm.electrode_order)
                plan = make_stratified_folds(shuffled, 4, seed=seed)
                spec = ClassifierSpec(
                    kind, {"trees": 25} if kind == "RF" else {}, seed=seed,
                )
                acc, _ = evaluate_cv(spec, fm, plan)
                accuracies.append(acc)
            mean = float(np.mean(accuracies))
            assert abs(mean - 100.0 / k) <= 10.0, (
                f"{kind}: mean shuffled-label accuracy {mean:.1f}%"
            )


def test_acceptance_determinism_serial_vs_parallel():
    with budget("determinism", 120.0):
        manifest, trials = synth(10, (1, 4, 7))
        outputs = []
        for workers in (1, 4, 1):
            result = run_sweep(
                trials, manifest.electrode_ids(), manifest.gesture_ids(),
                "MI", ClassifierSpec("RF", {"trees": 25}), e_max=6, seed=7,
                workers=workers,
            )
            outputs.append((result.to_csv().encode(), result.to_json().encode()))
        assert outputs[0] == outputs[1] == outputs[2]


def test_acceptance_band_vs_sparse():
    with budget("band-vs-sparse", 120.0):
        manifest, trials = synth(10, (1, 4, 7))
        band_acc, sparse_acc = compare_band_vs_sparse(
            trials, list(manifest.electrodes), 4, "MI",
            ClassifierSpec("RF", {"trees": 25}), seed=0,
        )
        assert sparse_acc - band_acc >= 5.0, (
            f"sparse {sparse_acc:.2f}% vs band {band_acc:.2f}%"
        )


def test_acceptance_cross_user_transfer():
    with budget("cross-user", 120.0):
        manifest, trials = synth(10, (1, 4, 7), users=2)
        by_user = {u: [t for t in trials if t.user == u] for u in manifest.users}
        _, per_user, mean_others = cross_user_eval(
            manifest, "user1", "MI", ClassifierSpec("RF", {"trees": 25}),
            seed=0, e_max=6, trials_by_user=by_user,
        )
        gap = per_user["user1"] - mean_others
        assert abs(gap) <= 6.0, f"transfer gap {gap:+.2f} points"


def test_acceptance_numerics_lr_gradient_and_nb_posteriors():
    with budget("numerics", 5.0):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 6))
        y_idx = rng.integers(0, 4, size=30)
        W = rng.normal(scale=0.1, size=(6, 4))
        b = rng.normal(scale=0.1, size=4)
        _, dW, db = softmax_loss_and_grad(W, b, X, y_idx, 1e-3)
        eps = 1e-6
        for target, grad in ((W, dW), (b, db)):
            it = np.nditer(target, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = target[idx]
                target[idx] = orig + eps
                lp, _, _ = softmax_loss_and_grad(W, b, X, y_idx, 1e-3)
                target[idx] = orig - eps
                lm, _, _ = softmax_loss_and_grad(W, b, X, y_idx, 1e-3)
                target[idx] = orig
                numeric = (lp - lm) / (2 * eps)
                denom = max(abs(numeric), abs(grad[idx]), 1e-8)
                assert abs(numeric - grad[idx]) / denom <= 1e-4

        Xc = rng.normal(size=(80, 5)) + rng.integers(0, 3, size=80)[:, None]
        yc = rng.integers(0, 3, size=80)
        probs = GaussianNaiveBayes().fit(Xc, yc).predict_proba(Xc)
        assert np.all(np.abs(probs.sum(axis=1) - 1.0) <= 1e-9)


def test_acceptance_stencil_geometry():
    with budget("stencil", 1.0):
        manifest, _ = synth(16, (2, 5, 9, 12), trials=4, samples=12)
        arm = ArmMeasurements(250.0, ((0.0, 200.0), (250.0, 200.0)))
        layout = [0, 4, 8, 12]
        svg = generate_stencil(layout, manifest, arm)
        root = ET.fromstring(svg)  # parses as XML
        holes = [c for c in root.iter(f"{SVG}circle") if c.get("class") == "hole"]
        assert len(holes) == len(layout)
        for hole in holes:
            assert float(hole.get("r")) == pytest.approx(
                manifest.electrode_diameter_mm / 2.0, abs=1e-9)
        ys = sorted(float(c.get("cy")) for c in holes)
        for a, b in zip(ys, ys[1:]):
            assert abs((b - a) - 200.0 / len(layout)) <= 1e-6


def test_acceptance_service_round_trip(disk_dataset, tmp_path):
    fastapi = pytest.importorskip("fastapi")
    from fastapi.testclient import TestClient

    from sparseemg.dataset import load_manifest, load_trials
    from sparseemg.service import ServiceConfig, create_app

    with budget("service-round-trip", 120.0):
        config = ServiceConfig(data_dir=disk_dataset, workers=2,
                               model_dir=tmp_path / "models")
        app = create_app(config)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_json({
                    "type": "sweep", "v": 1, "dataset": "synthetic",
                    "user": "user1", "gestures": [0, 1, 2, 3],
                    "candidate_electrodes": [], "max_electrodes": 6,
                    "scheme": "MI", "classifier": "NB", "seed": 5,
                })
                events = []
                while True:
                    event = ws.receive_json()
                    events.append(event)
                    if event["type"] != "progress":
                        break
        counts = [e["electrode_count"] for e in events if e["type"] == "progress"]
        assert counts == sorted(counts) and len(counts) == len(set(counts))
        terminal = events[-1]
        assert terminal["type"] == "result"

        manifest = load_manifest(disk_dataset / "synthetic" / "manifest.json")
        trials = load_trials(manifest, "user1", [1])
        offline = run_sweep(
            trials, manifest.electrode_ids(), [0, 1, 2, 3], "MI",
            ClassifierSpec("NB"), e_max=6, seed=5,
        )
        assert terminal["result"]["chosen"] == offline.to_dict()["chosen"]
