import dataclasses
import json

import numpy as np
import pytest

from sparseemg.dataset import (
    DatasetManifest,
    ElectrodeSite,
    GestureDef,
    SyntheticSpec,
    generate_synthetic,
    load_manifest,
    load_trials,
    manifest_from_dict,
    manifest_to_dict,
    save_manifest,
    synthetic_amplitude,
    write_dataset,
)
from sparseemg.validation import ValidationError


def make_manifest(**overrides):
    base = dict(
        name="demo",
        channel_count=3,
        sampling_rate_hz=1000.0,
        gestures=(GestureDef(0, "fist"), GestureDef(1, "open")),
        electrodes=(
            ElectrodeSite(0, 0.0, 0.0),
            ElectrodeSite(1, 0.0, 10.0),
            ElectrodeSite(2, 0.0, 20.0),
        ),
        electrode_diameter_mm=10.0,
        inter_electrode_spacing_mm=10.0,
        users=("u1",),
        sessions_per_user=1,
        trial_path_template="trials/{user}/s{session}/g{gesture}_t{trial}.csv",
    )
    base.update(overrides)
    return DatasetManifest(**base)


def test_manifest_dict_round_trip():
    manifest = make_manifest()
    again = manifest_from_dict(manifest_to_dict(manifest))
    assert again == manifest


@pytest.mark.parametrize("overrides, field", [
    (dict(channel_count=0), "channel_count"),
    (dict(sampling_rate_hz=0.0), "sampling_rate_hz"),
    (dict(electrode_diameter_mm=-1.0), "electrode_diameter_mm"),
    (dict(gestures=(GestureDef(0, "a"), GestureDef(0, "b"))), "gestures"),
    (dict(gestures=(GestureDef(0, ""),)), "gestures"),
    (dict(electrodes=(ElectrodeSite(0, 0, 0), ElectrodeSite(0, 0, 1),
                      ElectrodeSite(2, 0, 2))), "electrodes"),
    (dict(electrodes=(ElectrodeSite(0, 0, 0), ElectrodeSite(1, 0, 1))), "electrodes"),
    (dict(sessions_per_user=0), "sessions_per_user"),
])
def test_manifest_validation_names_offending_field(overrides, field):
    raw = manifest_to_dict(make_manifest())
    for key, value in overrides.items():
        if key in ("gestures", "electrodes"):
            raw[key] = [dataclasses.asdict(item) for item in value]
        else:
            raw[key] = value
    with pytest.raises(ValidationError) as exc:
        manifest_from_dict(raw)
    assert exc.value.field == field


def test_manifest_from_dict_missing_field_named():
    raw = manifest_to_dict(make_manifest())
    raw.pop("users")
    with pytest.raises(ValidationError) as exc:
        manifest_from_dict(raw)
    assert exc.value.field == "users"


def test_load_manifest_bad_json_and_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_manifest(tmp_path / "nope.json")
    bad = tmp_path / "manifest.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load_manifest(bad)


def synth_spec(**overrides):
    base = dict(channel_count=6, gesture_count=3, users=2, trials_per_gesture=4,
                samples_per_trial=48, informative_channels=(1, 3),
                noise_sigma=0.05, seed=0)
    base.update(overrides)
    return SyntheticSpec(**base)


def test_generate_synthetic_shape_and_determinism():
    manifest, trials = generate_synthetic(synth_spec())
    assert manifest.channel_count == 6
    assert len(manifest.users) == 2
    assert len(trials) == 2 * 3 * 4
    assert all(t.samples.shape == (48, 6) for t in trials)
    manifest2, trials2 = generate_synthetic(synth_spec())
    assert manifest2 == manifest
    for a, b in zip(trials, trials2):
        assert np.array_equal(a.samples, b.samples)
    _, trials3 = generate_synthetic(synth_spec(seed=1))
    assert not np.array_equal(trials[0].samples, trials3[0].samples)


def test_generate_synthetic_informative_channels_carry_signal():
    manifest, trials = generate_synthetic(synth_spec())
    trial = trials[0]
    informative_mean = np.abs(trial.samples[:, [1, 3]]).mean()
    noise_mean = np.abs(trial.samples[:, [0, 2, 4, 5]]).mean()
    assert informative_mean > noise_mean


def test_synthetic_amplitude_injective_per_channel():
    spec = synth_spec(gesture_count=4, informative_channels=(1, 3, 4))
    for channel in (1, 3, 4):
        levels = [synthetic_amplitude(spec, channel, g) for g in range(4)]
        assert len(set(levels)) == 4


def test_synthetic_spec_validation():
    with pytest.raises(ValidationError) as exc:
        generate_synthetic(synth_spec(informative_channels=(1, 99)))
    assert exc.value.field == "informative_channels"
    with pytest.raises(ValidationError):
        generate_synthetic(synth_spec(trials_per_gesture=2))
    with pytest.raises(ValidationError):
        generate_synthetic(synth_spec(noise_sigma=-0.1))


def test_write_dataset_then_load_trials_round_trip(tmp_path):
    manifest, trials = generate_synthetic(synth_spec())
    out = write_dataset(manifest, trials, tmp_path / "ds")
    loaded_manifest = load_manifest(out / "manifest.json")
    assert loaded_manifest == manifest
    loaded = load_trials(loaded_manifest, "user1", [1])
    original = [t for t in trials if t.user == "user1"]
    assert len(loaded) == len(original)
    for a, b in zip(loaded, original):
        assert (a.user, a.session, a.gesture_id, a.trial_index) == \
            (b.user, b.session, b.gesture_id, b.trial_index)
        assert np.allclose(a.samples, b.samples, atol=1e-8)


def test_load_trials_sorted_and_unknown_user(tmp_path):
    manifest, trials = generate_synthetic(synth_spec())
    out = write_dataset(manifest, trials, tmp_path / "ds")
    loaded_manifest = load_manifest(out / "manifest.json")
    loaded = load_trials(loaded_manifest, "user2", [1])
    keys = [(t.session, t.gesture_id, t.trial_index) for t in loaded]
    assert keys == sorted(keys)
    with pytest.raises(ValidationError):
        load_trials(loaded_manifest, "ghost", [1])


def test_trial_samples_are_read_only():
    manifest, trials = generate_synthetic(synth_spec())
    with pytest.raises(ValueError):
        trials[0].samples[0, 0] = 1.0


def test_save_manifest_is_valid_json(tmp_path):
    manifest = make_manifest()
    save_manifest(manifest, tmp_path / "m.json")
    data = json.loads((tmp_path / "m.json").read_text())
    assert data["name"] == "demo"
    assert "base_dir" not in data
