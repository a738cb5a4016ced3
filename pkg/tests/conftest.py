import pytest

from sparseemg.dataset import SyntheticSpec, generate_synthetic, write_dataset
from sparseemg.features import build_feature_matrix


@pytest.fixture(scope="session")
def small_synth():
    """10-channel, 3-informative synthetic: (manifest, trials)."""
    spec = SyntheticSpec(
        channel_count=10, gesture_count=4, users=1, trials_per_gesture=8,
        samples_per_trial=96, informative_channels=(1, 4, 7),
        noise_sigma=0.05, seed=0,
    )
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def small_features(small_synth):
    manifest, trials = small_synth
    return build_feature_matrix(trials, manifest.electrode_ids())


@pytest.fixture(scope="session")
def disk_dataset(tmp_path_factory, small_synth):
    """The small synthetic materialized on disk; returns its directory."""
    manifest, trials = small_synth
    root = tmp_path_factory.mktemp("data")
    write_dataset(manifest, trials, root / "synthetic")
    return root
