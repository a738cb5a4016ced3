#!/usr/bin/env python3
"""Optional reproduction run on a converted high-density EMG corpus.

Not part of CI: it needs an externally downloaded dataset converted to the
layout in docs/dataset-format.md. Given such a dataset, it runs a PI+RF
sweep for one user and reports the Sparsity-Score-optimal electrode count
and its cross-validated accuracy. On the public CSL high-density corpus the
expected outcome is a score-optimal E in the 8-12 range with accuracy in the
high-70s to high-80s percent.

Usage:
    python3 scripts/reproduce_hdemg.py --data /path/to/csl-hdemg --user subject1
"""

import argparse

from sparseemg.classifiers import ClassifierSpec
from sparseemg.dataset import load_manifest, load_trials
from sparseemg.sweep import run_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True,
                        help="Converted dataset directory (contains manifest.json)")
    parser.add_argument("--user", required=True)
    parser.add_argument("--max", type=int, default=20, dest="e_max")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    manifest = load_manifest(f"{args.data}/manifest.json")
    sessions = list(range(1, manifest.sessions_per_user + 1))
    trials = load_trials(manifest, args.user, sessions)
    print(f"{manifest.name}: {len(trials)} trials, "
          f"{manifest.channel_count} channels, "
          f"{len(manifest.gestures)} gestures")

    result = run_sweep(
        trials, manifest.electrode_ids(), manifest.gesture_ids(),
        scheme="PI", spec=ClassifierSpec("RF"),
        e_max=args.e_max, seed=args.seed, workers=args.workers,
        progress=lambda e, acc: print(f"  E={e:3d}  accuracy={acc:6.2f}%"),
    )
    chosen = result.chosen
    print(f"\nchosen: E={chosen.electrode_count}  "
          f"accuracy={chosen.accuracy:.2f}%  "
          f"sparsity score={chosen.sparsity_score:.2f}")
    print(f"layout: {sorted(chosen.electrodes)}")


if __name__ == "__main__":
    main()
