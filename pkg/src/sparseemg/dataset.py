"""EMG gesture dataset loading, validation and synthesis.

A dataset is a ``manifest.json`` file describing channels, electrode
geometry, gestures and users, plus one plain CSV file per gesture trial
(T rows x channel_count columns, no header). Trial paths are resolved from
the manifest's ``trial_path_template`` with the placeholders ``{user}``,
``{session}``, ``{gesture}`` and ``{trial}``. See docs/dataset-format.md
for the converter contract used to import public datasets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .rng import stream
from .validation import ValidationError

GESTURE_GROUPS = ("single_finger", "multi_finger", "wrist", "rest")


@dataclass(frozen=True)
class GestureDef:
    id: int
    name: str
    group: str = "single_finger"


@dataclass(frozen=True)
class ElectrodeSite:
    id: int
    x_mm: float
    y_mm: float
    ring_index: int | None = None
    muscle_label: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    channel_count: int
    sampling_rate_hz: float
    gestures: tuple[GestureDef, ...]
    electrodes: tuple[ElectrodeSite, ...]
    electrode_diameter_mm: float
    inter_electrode_spacing_mm: float
    users: tuple[str, ...]
    sessions_per_user: int
    trial_path_template: str
    # Directory trial paths are resolved against; set by load_manifest,
    # not part of the serialized schema and excluded from equality.
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    def gesture_ids(self) -> list[int]:
        return [g.id for g in self.gestures]

    def electrode_ids(self) -> list[int]:
        return [e.id for e in self.electrodes]


@dataclass(frozen=True)
class TrialRecord:
    user: str
    session: int
    gesture_id: int
    trial_index: int
    samples: np.ndarray  # T x channel_count, read-only

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class SyntheticSpec:
    channel_count: int
    gesture_count: int
    users: int
    trials_per_gesture: int
    samples_per_trial: int
    informative_channels: tuple[int, ...]
    noise_sigma: float = 0.05
    seed: int = 0


def _validate_manifest(m: DatasetManifest) -> DatasetManifest:
    if m.channel_count <= 0:
        raise ValidationError("channel_count", "must be a positive integer")
    if not (m.sampling_rate_hz > 0 and math.isfinite(m.sampling_rate_hz)):
        raise ValidationError("sampling_rate_hz", "must be positive")
    if m.electrode_diameter_mm <= 0:
        raise ValidationError("electrode_diameter_mm", "must be positive")
    if m.inter_electrode_spacing_mm <= 0:
        raise ValidationError("inter_electrode_spacing_mm", "must be positive")
    if m.sessions_per_user <= 0:
        raise ValidationError("sessions_per_user", "must be positive")
    if len(m.electrodes) != m.channel_count:
        raise ValidationError(
            "electrodes",
            f"{len(m.electrodes)} electrode sites for channel_count {m.channel_count}",
        )
    gesture_ids = [g.id for g in m.gestures]
    if len(set(gesture_ids)) != len(gesture_ids):
        raise ValidationError("gestures", "gesture ids must be unique")
    for g in m.gestures:
        if not g.name:
            raise ValidationError("gestures", f"gesture {g.id} has an empty name")
        if g.group not in GESTURE_GROUPS:
            raise ValidationError(
                "gestures", f"gesture {g.id} has unknown group {g.group!r}"
            )
    ids = sorted(e.id for e in m.electrodes)
    if ids != list(range(m.channel_count)):
        raise ValidationError(
            "electrodes", "electrode ids must be unique and contiguous from 0"
        )
    ring = [e.ring_index for e in m.electrodes if e.ring_index is not None]
    if len(set(ring)) != len(ring):
        raise ValidationError("electrodes", "ring_index values must be unique")
    for e in m.electrodes:
        if not (math.isfinite(e.x_mm) and math.isfinite(e.y_mm)):
            raise ValidationError("electrodes", f"electrode {e.id} has non-finite coordinates")
    return m


_MANIFEST_FIELDS = (
    "name", "channel_count", "sampling_rate_hz", "gestures", "electrodes",
    "electrode_diameter_mm", "inter_electrode_spacing_mm", "users",
    "sessions_per_user", "trial_path_template",
)


def manifest_from_dict(data: dict, base_dir: Path | None = None) -> DatasetManifest:
    missing = [k for k in _MANIFEST_FIELDS if k not in data]
    if missing:
        raise ValidationError(missing[0], "missing required manifest field")
    try:
        gestures = tuple(
            GestureDef(id=int(g["id"]), name=str(g["name"]),
                       group=str(g.get("group", "single_finger")))
            for g in data["gestures"]
        )
        electrodes = tuple(
            ElectrodeSite(
                id=int(e["id"]), x_mm=float(e["x_mm"]), y_mm=float(e["y_mm"]),
                ring_index=None if e.get("ring_index") is None else int(e["ring_index"]),
                muscle_label=e.get("muscle_label"),
            )
            for e in data["electrodes"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("gestures/electrodes", f"malformed entry: {exc}") from exc
    manifest = DatasetManifest(
        name=str(data["name"]),
        channel_count=int(data["channel_count"]),
        sampling_rate_hz=float(data["sampling_rate_hz"]),
        gestures=gestures,
        electrodes=electrodes,
        electrode_diameter_mm=float(data["electrode_diameter_mm"]),
        inter_electrode_spacing_mm=float(data["inter_electrode_spacing_mm"]),
        users=tuple(str(u) for u in data["users"]),
        sessions_per_user=int(data["sessions_per_user"]),
        trial_path_template=str(data["trial_path_template"]),
        base_dir=base_dir,
    )
    return _validate_manifest(manifest)


def manifest_to_dict(m: DatasetManifest) -> dict:
    d = asdict(m)
    d.pop("base_dir")
    return d


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a manifest.json file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError("path", f"manifest file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError("path", f"manifest does not parse as JSON: {exc}")
    return manifest_from_dict(data, base_dir=path.parent)


def save_manifest(m: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(m), indent=2) + "\n")


def _resolve_trial_path(m: DatasetManifest, user: str, session: int,
                        gesture: int, trial: int) -> Path:
    rel = m.trial_path_template.format(
        user=user, session=session, gesture=gesture, trial=trial
    )
    base = m.base_dir if m.base_dir is not None else Path(".")
    return base / rel


def _read_trial_csv(path: Path, channel_count: int) -> np.ndarray:
    samples = np.loadtxt(path, delimiter=",", ndmin=2)
    if samples.shape[1] != channel_count:
        raise ValidationError(
            "samples",
            f"{path}: {samples.shape[1]} columns, expected {channel_count}",
        )
    if samples.shape[0] < 3:
        raise ValidationError("samples", f"{path}: fewer than 3 rows")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("samples", f"{path}: contains non-finite values")
    return samples


def load_trials(m: DatasetManifest, user: str, sessions: list[int]) -> list[TrialRecord]:
    """Load all trials for one user across the given sessions.

    Trials are discovered by counting up the ``{trial}`` placeholder from 0
    until the file is absent. Result is sorted by (session, gesture_id,
    trial_index).
    """
    if user not in m.users:
        raise ValidationError("user", f"{user!r} is not listed in the manifest")
    records: list[TrialRecord] = []
    for session in sorted(sessions):
        for gesture in sorted(g.id for g in m.gestures):
            trial = 0
            while True:
                path = _resolve_trial_path(m, user, session, gesture, trial)
                if not path.exists():
                    break
                samples = _read_trial_csv(path, m.channel_count)
                records.append(TrialRecord(user, session, gesture, trial, samples))
                trial += 1
    return records


def _validate_synthetic_spec(spec: SyntheticSpec) -> None:
    for name in ("channel_count", "gesture_count", "users",
                 "trials_per_gesture", "samples_per_trial"):
        if getattr(spec, name) <= 0:
            raise ValidationError(name, "must be a positive integer")
    if spec.trials_per_gesture < 4:
        raise ValidationError("trials_per_gesture", "must be >= 4 (one per fold)")
    if spec.noise_sigma < 0:
        raise ValidationError("noise_sigma", "must be nonnegative")
    bad = [c for c in spec.informative_channels
           if not 0 <= c < spec.channel_count]
    if bad:
        raise ValidationError("informative_channels", f"out of range ids: {bad}")


def synthetic_amplitude(spec: SyntheticSpec, channel: int, gesture: int) -> float:
    """Noiseless signal level of an informative channel for one gesture.

    Every gesture gets a distinct level. The j-th informative channel
    responds strongly to its primary gesture (j mod gesture_count) and
    weakly, with closely spaced levels, to the rest. The strong response is
    deliberately non-redundant across channels so model-dependent rankings
    (permutation importance) see every informative channel as necessary,
    while the weak levels keep each channel's gesture->level map injective.
    """
    informative = sorted(spec.informative_channels)
    j = informative.index(channel)
    level = 0.1 + 0.002 * gesture
    if gesture == j % spec.gesture_count:
        level += 1.5
    return level


def generate_synthetic(spec: SyntheticSpec) -> tuple[DatasetManifest, list[TrialRecord]]:
    """Generate a deterministic ring-layout dataset for desk-scale testing.

    Informative channels carry a gesture-dependent constant amplitude plus
    Gaussian noise of ``noise_sigma``; all other channels carry pure noise.
    Bit-reproducible for a given spec (Philox streams keyed by the seed).
    """
    _validate_synthetic_spec(spec)
    spacing = 15.0
    electrodes = tuple(
        ElectrodeSite(id=i, x_mm=100.0, y_mm=i * spacing, ring_index=i)
        for i in range(spec.channel_count)
    )
    gestures = tuple(
        GestureDef(id=g, name=f"gesture_{g}") for g in range(spec.gesture_count)
    )
    users = tuple(f"user{u + 1}" for u in range(spec.users))
    manifest = _validate_manifest(DatasetManifest(
        name="synthetic",
        channel_count=spec.channel_count,
        sampling_rate_hz=1000.0,
        gestures=gestures,
        electrodes=electrodes,
        electrode_diameter_mm=10.0,
        inter_electrode_spacing_mm=spacing,
        users=users,
        sessions_per_user=1,
        trial_path_template="trials/{user}/s{session}/g{gesture}_t{trial}.csv",
    ))

    informative = set(spec.informative_channels)
    trials: list[TrialRecord] = []
    for u, user in enumerate(users):
        for gesture in range(spec.gesture_count):
            for t in range(spec.trials_per_gesture):
                rng = stream(spec.seed, "trial", u, gesture, t)
                samples = np.zeros((spec.samples_per_trial, spec.channel_count))
                if spec.noise_sigma > 0:
                    samples += rng.normal(
                        0.0, spec.noise_sigma, size=samples.shape
                    )
                for ch in informative:
                    samples[:, ch] += synthetic_amplitude(spec, ch, gesture)
                trials.append(TrialRecord(user, 1, gesture, t, samples))
    return manifest, trials


def write_dataset(manifest: DatasetManifest, trials: list[TrialRecord],
                  out_dir: str | Path) -> Path:
    """Materialize a manifest plus trial CSVs under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, out_dir / "manifest.json")
    for trial in trials:
        rel = manifest.trial_path_template.format(
            user=trial.user, session=trial.session,
            gesture=trial.gesture_id, trial=trial.trial_index,
        )
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, trial.samples, delimiter=",", fmt="%.9g")
    return out_dir
