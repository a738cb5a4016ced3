"""Batch command-line interface.

Every subcommand is a thin composition of engine operations: it resolves
flags, calls the corresponding module functions, writes CSV/JSON/SVG outputs
under ``<out>/<subcommand>/<name>/`` together with a ``run.json`` capturing
the resolved configuration, and prints a one-line summary. All randomized
subcommands accept ``--seed`` and are bit-reproducible.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from .classifiers import CLASSIFIER_KINDS, ClassifierSpec
from .dataset import (
    DatasetManifest,
    SyntheticSpec,
    generate_synthetic,
    load_manifest,
    load_trials,
    write_dataset,
)
from .features import build_feature_matrix
from .selection import SCHEMES, rank_electrodes
from .stencil import ArmMeasurements, generate_stencil
from .sweep import (
    DEFAULT_E_MAX,
    SparsityConfig,
    band_layout,
    compare_band_vs_sparse,
    cross_user_eval,
    run_sweep,
)
from .validation import ValidationError


def _fail(err: Exception) -> "click.ClickException":
    if isinstance(err, ValidationError):
        return click.ClickException(f"{err.field}: {err}")
    return click.ClickException(str(err))


def _outdir(out: str, subcommand: str, name: str | None) -> Path:
    if not name:
        name = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = Path(out) / subcommand / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_run_json(outdir: Path, subcommand: str, config: dict) -> None:
    payload = {"subcommand": subcommand, "config": config}
    (outdir / "run.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_dataset(data: str) -> DatasetManifest:
    path = Path(data)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        return load_manifest(path)
    except (OSError, ValidationError, json.JSONDecodeError) as err:
        raise _fail(err)


def _load_user_trials(manifest: DatasetManifest, user: str):
    if user not in manifest.users:
        raise click.ClickException(
            f"user: unknown user {user!r}; dataset has {', '.join(manifest.users)}")
    sessions = list(range(1, manifest.sessions_per_user + 1))
    try:
        return load_trials(manifest, user, sessions)
    except (OSError, ValidationError) as err:
        raise _fail(err)


def _int_csv(value: str | None) -> list[int]:
    if not value:
        return []
    try:
        return [int(part) for part in value.split(",") if part.strip() != ""]
    except ValueError:
        raise click.ClickException(f"expected a comma-separated integer list, got {value!r}")


@click.group()
def main():
    """SparseEMG: sparse electrode-layout optimization for EMG gestures."""


@main.command()
@click.option("--channels", type=int, default=16, show_default=True)
@click.option("--gestures", type=int, default=4, show_default=True)
@click.option("--informative", default="2,5,9,12", show_default=True,
              help="Comma-separated informative channel ids.")
@click.option("--users", type=int, default=1, show_default=True)
@click.option("--trials", type=int, default=8, show_default=True,
              help="Trials per gesture per user.")
@click.option("--samples", type=int, default=96, show_default=True,
              help="Samples per trial.")
@click.option("--sigma", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None, help="Output folder name (default: derived from flags).")
def synth(channels, gestures, informative, users, trials, samples, sigma, seed, out, name):
    """Generate a synthetic ring-layout dataset on disk."""
    config = {
        "channels": channels, "gestures": gestures, "informative": _int_csv(informative),
        "users": users, "trials": trials, "samples": samples, "sigma": sigma, "seed": seed,
    }
    if name is None:
        name = f"{channels}ch-{gestures}g-seed{seed}"
    outdir = _outdir(out, "synth", name)
    try:
        spec = SyntheticSpec(
            channel_count=channels, gesture_count=gestures, users=users,
            trials_per_gesture=trials, samples_per_trial=samples,
            informative_channels=tuple(config["informative"]),
            noise_sigma=sigma, seed=seed,
        )
        manifest, records = generate_synthetic(spec)
        write_dataset(manifest, records, outdir)
    except ValidationError as err:
        raise _fail(err)
    _write_run_json(outdir, "synth", config)
    click.echo(f"synth: wrote {len(records)} trials ({channels} ch, "
               f"{gestures} gestures, {users} users) to {outdir}")


@main.command()
@click.option("--data", required=True, help="Dataset directory (contains manifest.json).")
@click.option("--user", required=True)
@click.option("--scheme", type=click.Choice(SCHEMES), default="PI", show_default=True)
@click.option("--classifier", type=click.Choice(CLASSIFIER_KINDS), default="RF",
              show_default=True, help="Classifier used by PI.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None)
def rank(data, user, scheme, classifier, seed, out, name):
    """Rank all electrodes of a dataset by informativeness."""
    manifest = _load_dataset(data)
    records = _load_user_trials(manifest, user)
    outdir = _outdir(out, "rank", name)
    try:
        features = build_feature_matrix(records, manifest.electrode_ids())
        ranking = rank_electrodes(scheme, features, spec=ClassifierSpec(classifier),
                                  seed=seed)
    except ValidationError as err:
        raise _fail(err)
    (outdir / "ranking.csv").write_text(ranking.to_csv())
    _write_run_json(outdir, "rank", {
        "data": data, "user": user, "scheme": scheme,
        "classifier": classifier, "seed": seed,
    })
    top = ", ".join(str(e) for e in ranking.top(4))
    click.echo(f"rank: {scheme} over {manifest.channel_count} electrodes; top 4: {top} "
               f"-> {outdir / 'ranking.csv'}")


def _sweep_options(fn):
    for option in reversed([
        click.option("--data", required=True),
        click.option("--user", required=True),
        click.option("--gestures", default=None,
                      help="Comma-separated gesture ids (default: all)."),
        click.option("--candidates", default=None,
                      help="Comma-separated candidate electrode ids (default: all)."),
        click.option("--scheme", type=click.Choice(SCHEMES), default="PI", show_default=True),
        click.option("--classifier", type=click.Choice(CLASSIFIER_KINDS), default="RF",
                      show_default=True),
        click.option("--max", "e_max", type=int, default=DEFAULT_E_MAX, show_default=True),
        click.option("--w1", type=float, default=0.5, show_default=True),
        click.option("--w2", type=float, default=0.5, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--workers", type=int, default=1, show_default=True),
        click.option("--out", default="out", show_default=True),
        click.option("--name", default=None),
    ]):
        fn = option(fn)
    return fn


@main.command()
@_sweep_options
def sweep(data, user, gestures, candidates, scheme, classifier, e_max, w1, w2,
          seed, workers, out, name):
    """Sweep electrode counts and pick the Sparsity-Score optimum."""
    manifest = _load_dataset(data)
    records = _load_user_trials(manifest, user)
    gesture_ids = _int_csv(gestures) or manifest.gesture_ids()
    candidate_ids = _int_csv(candidates) or manifest.electrode_ids()
    outdir = _outdir(out, "sweep", name)
    try:
        result = run_sweep(
            records, candidate_ids, gesture_ids, scheme, ClassifierSpec(classifier),
            SparsityConfig(w1, w2), e_max=e_max, seed=seed, workers=workers,
        )
    except ValidationError as err:
        raise _fail(err)
    (outdir / "curve.csv").write_text(result.to_csv())
    (outdir / "result.json").write_text(result.to_json() + "\n")
    _write_run_json(outdir, "sweep", {
        "data": data, "user": user, "gestures": gesture_ids,
        "candidates": candidate_ids, "scheme": scheme, "classifier": classifier,
        "max": e_max, "w1": w1, "w2": w2, "seed": seed, "workers": workers,
    })
    chosen = result.chosen
    click.echo(
        f"sweep: {scheme}+{classifier} chose E={chosen.electrode_count} "
        f"(accuracy {chosen.accuracy:.2f}%, score {chosen.sparsity_score:.2f}) "
        f"-> {outdir / 'result.json'}"
    )


@main.command()
@click.option("--data", required=True)
@click.option("--source-user", required=True)
@click.option("--scheme", type=click.Choice(SCHEMES), default="PI", show_default=True)
@click.option("--classifier", type=click.Choice(CLASSIFIER_KINDS), default="RF",
              show_default=True)
@click.option("--max", "e_max", type=int, default=DEFAULT_E_MAX, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None)
def crossuser(data, source_user, scheme, classifier, e_max, seed, out, name):
    """Optimize a layout on one user, evaluate it on every user."""
    manifest = _load_dataset(data)
    outdir = _outdir(out, "crossuser", name)
    try:
        result, per_user, mean_other = cross_user_eval(
            manifest, source_user, scheme, ClassifierSpec(classifier),
            SparsityConfig(), seed=seed, e_max=e_max,
        )
    except (OSError, ValidationError) as err:
        raise _fail(err)
    gap = per_user[source_user] - mean_other
    payload = {
        "v": 1, "source_user": source_user,
        "chosen": result.chosen.to_dict(),
        "per_user_accuracy": per_user,
        "mean_other_accuracy": mean_other,
        "transfer_gap": gap,
    }
    (outdir / "crossuser.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
    lines = ["user,accuracy\n"] + [f"{u},{format(a, '.12g')}\n" for u, a in per_user.items()]
    (outdir / "crossuser.csv").write_text("".join(lines))
    _write_run_json(outdir, "crossuser", {
        "data": data, "source_user": source_user, "scheme": scheme,
        "classifier": classifier, "max": e_max, "seed": seed,
    })
    click.echo(f"crossuser: E={result.chosen.electrode_count} layout; source "
               f"{per_user[source_user]:.2f}%, others mean {mean_other:.2f}% "
               f"(gap {gap:+.2f}) -> {outdir / 'crossuser.json'}")


@main.command()
@click.option("--data", required=True)
@click.option("--user", required=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--scheme", type=click.Choice(SCHEMES), default="PI", show_default=True)
@click.option("--classifier", type=click.Choice(CLASSIFIER_KINDS), default="RF",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None)
def bandcompare(data, user, k, scheme, classifier, seed, out, name):
    """Compare an equally spaced band of size k against the ranking prefix."""
    manifest = _load_dataset(data)
    records = _load_user_trials(manifest, user)
    outdir = _outdir(out, "bandcompare", name)
    try:
        band_acc, sparse_acc = compare_band_vs_sparse(
            records, list(manifest.electrodes), k, scheme,
            ClassifierSpec(classifier), seed=seed,
        )
        band_ids = band_layout(list(manifest.electrodes), k)
    except ValidationError as err:
        raise _fail(err)
    payload = {
        "v": 1, "k": k, "band_electrodes": band_ids,
        "band_accuracy": band_acc, "sparse_accuracy": sparse_acc,
        "advantage": sparse_acc - band_acc,
    }
    (outdir / "bandcompare.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
    _write_run_json(outdir, "bandcompare", {
        "data": data, "user": user, "k": k, "scheme": scheme,
        "classifier": classifier, "seed": seed,
    })
    click.echo(f"bandcompare: k={k} band {band_acc:.2f}% vs sparse {sparse_acc:.2f}% "
               f"(advantage {sparse_acc - band_acc:+.2f}) -> {outdir / 'bandcompare.json'}")


@main.command()
@click.option("--data", required=True)
@click.option("--layout", required=True, help="Comma-separated electrode ids.")
@click.option("--length", type=float, required=True, help="Forearm length in mm.")
@click.option("--circumference", required=True,
              help="Comma-separated distance:circumference pairs in mm, e.g. 0:170,250:150.")
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None)
def stencil(data, layout, length, circumference, out, name):
    """Render a printable placement stencil for a chosen layout."""
    manifest = _load_dataset(data)
    outdir = _outdir(out, "stencil", name)
    try:
        samples = []
        for pair in circumference.split(","):
            distance, value = pair.split(":")
            samples.append((float(distance), float(value)))
    except ValueError:
        raise click.ClickException(
            f"circumference: expected distance:circumference pairs, got {circumference!r}")
    try:
        measurements = ArmMeasurements(length, tuple(samples))
        svg = generate_stencil(_int_csv(layout), manifest, measurements)
    except ValidationError as err:
        raise _fail(err)
    (outdir / "stencil.svg").write_text(svg)
    _write_run_json(outdir, "stencil", {
        "data": data, "layout": _int_csv(layout), "length": length,
        "circumference": circumference,
    })
    click.echo(f"stencil: {len(_int_csv(layout))} holes -> {outdir / 'stencil.svg'}")


@main.command()
@click.option("--port", type=int, default=None, help="Override SPARSEEMG_PORT.")
@click.option("--data-dir", default=None, help="Override SPARSEEMG_DATA_DIR.")
@click.option("--workers", type=int, default=None, help="Override SPARSEEMG_WORKERS.")
@click.option("--ttl-hours", type=float, default=None,
              help="Override SPARSEEMG_MODEL_TTL_HOURS.")
def serve(port, data_dir, workers, ttl_hours):
    """Run the design service (WebSocket + HTTP)."""
    import uvicorn

    from .service import ServiceConfig, create_app

    base = ServiceConfig.from_env()
    config = ServiceConfig(
        port=port if port is not None else base.port,
        data_dir=Path(data_dir) if data_dir is not None else base.data_dir,
        workers=workers if workers is not None else base.workers,
        model_ttl_hours=ttl_hours if ttl_hours is not None else base.model_ttl_hours,
    )
    click.echo(f"serve: listening on 127.0.0.1:{config.port} "
               f"(data_dir={config.data_dir}, workers={config.workers})")
    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port)


@main.command()
@click.option("--data", required=True)
@click.option("--user", required=True)
@click.option("--max", "e_max", type=int, default=DEFAULT_E_MAX, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", default="out", show_default=True)
@click.option("--name", default=None)
def bench(data, user, e_max, seed, workers, out, name):
    """Run every scheme x classifier combination and tabulate the results."""
    manifest = _load_dataset(data)
    records = _load_user_trials(manifest, user)
    outdir = _outdir(out, "bench", name)
    rows = []
    curves = ["scheme,classifier,E,accuracy,sparsity_score\n"]
    try:
        for scheme in SCHEMES:
            for classifier in CLASSIFIER_KINDS:
                result = run_sweep(
                    records, manifest.electrode_ids(), manifest.gesture_ids(),
                    scheme, ClassifierSpec(classifier), SparsityConfig(),
                    e_max=e_max, seed=seed, workers=workers,
                )
                chosen = result.chosen
                rows.append({
                    "scheme": scheme, "classifier": classifier,
                    "chosen_E": chosen.electrode_count,
                    "chosen_accuracy": chosen.accuracy,
                    "chosen_score": chosen.sparsity_score,
                    "best_accuracy": result.point(result.best_by_accuracy).accuracy,
                })
                for p in result.points:
                    curves.append(f"{scheme},{classifier},{p.electrode_count},"
                                  f"{format(p.accuracy, '.12g')},"
                                  f"{format(p.sparsity_score, '.12g')}\n")
    except ValidationError as err:
        raise _fail(err)
    header = "scheme,classifier,chosen_E,chosen_accuracy,chosen_score,best_accuracy\n"
    table = header + "".join(
        f"{r['scheme']},{r['classifier']},{r['chosen_E']},"
        f"{format(r['chosen_accuracy'], '.12g')},{format(r['chosen_score'], '.12g')},"
        f"{format(r['best_accuracy'], '.12g')}\n"
        for r in rows
    )
    (outdir / "bench.csv").write_text(table)
    (outdir / "curves.csv").write_text("".join(curves))
    _write_run_json(outdir, "bench", {
        "data": data, "user": user, "max": e_max, "seed": seed, "workers": workers,
    })
    best = min(rows, key=lambda r: (r["chosen_score"], r["chosen_E"]))
    click.echo(f"bench: {len(rows)} combinations; best score "
               f"{best['chosen_score']:.2f} from {best['scheme']}+{best['classifier']} "
               f"-> {outdir / 'bench.csv'}")


if __name__ == "__main__":
    sys.exit(main())
