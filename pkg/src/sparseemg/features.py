"""Windowed-RMS feature extraction.

Each trial is truncated to the largest multiple of 3 samples, split into
three equal non-overlapping windows, and the RMS of every selected channel
is computed per window. Columns are channel-major: the channel at position
c of ``electrode_order`` occupies columns 3c..3c+2.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .dataset import TrialRecord
from .validation import ValidationError, check_is_fitted

WINDOWS_PER_TRIAL = 3


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray          # rows x (3 * n_electrodes)
    labels: np.ndarray          # gesture id per row
    electrode_order: tuple[int, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if values.ndim != 2:
            raise ValidationError("values", "must be a 2-d matrix")
        if values.shape[1] != WINDOWS_PER_TRIAL * len(self.electrode_order):
            raise ValidationError(
                "values",
                f"{values.shape[1]} columns for {len(self.electrode_order)} electrodes",
            )
        if len(labels) != values.shape[0]:
            raise ValidationError("labels", "length must equal row count")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("values", "RMS features must be finite and >= 0")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "electrode_order", tuple(int(e) for e in self.electrode_order))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    def columns_for(self, electrode_id: int) -> slice:
        c = self.electrode_order.index(electrode_id)
        return slice(3 * c, 3 * c + 3)

    def select_electrodes(self, electrodes: list[int]) -> "FeatureMatrix":
        """Project onto a subset (or reordering) of electrodes."""
        cols = np.concatenate([
            np.arange(3 * self.electrode_order.index(e), 3 * self.electrode_order.index(e) + 3)
            for e in electrodes
        ])
        return FeatureMatrix(self.values[:, cols], self.labels, tuple(electrodes))

    def to_csv(self) -> str:
        """Debug export: header `label,e<ID>_w<0|1|2>...`."""
        header = ["label"]
        for e in self.electrode_order:
            header.extend(f"e{e}_w{w}" for w in range(WINDOWS_PER_TRIAL))
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for label, row in zip(self.labels, self.values):
            buf.write(str(int(label)) + "," + ",".join(format(v, ".12g") for v in row) + "\n")
        return buf.getvalue()


def rms_window(samples) -> float:
    """Root mean square of a non-empty window."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValidationError("samples", "window is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("samples", "window contains non-finite values")
    return float(np.sqrt(np.mean(np.square(arr))))


def extract_trial_features(trial: TrialRecord, electrodes: list[int]) -> np.ndarray:
    """Per-channel RMS over three equal windows, concatenated channel-major."""
    if not electrodes:
        raise ValidationError("electrodes", "must select at least one electrode")
    samples = trial.samples
    t = samples.shape[0]
    if t < WINDOWS_PER_TRIAL:
        raise ValidationError("samples", f"trial has {t} samples, need >= 3")
    for e in electrodes:
        if not 0 <= e < samples.shape[1]:
            raise ValidationError("electrodes", f"unknown electrode id {e}")
    window = t // WINDOWS_PER_TRIAL
    trimmed = samples[: window * WINDOWS_PER_TRIAL, electrodes]
    # (windows, window_len, channels) -> RMS over window_len
    stacked = trimmed.reshape(WINDOWS_PER_TRIAL, window, len(electrodes))
    rms = np.sqrt(np.mean(np.square(stacked), axis=1))  # windows x channels
    return rms.T.reshape(-1)


def build_feature_matrix(trials: list[TrialRecord], electrodes: list[int]) -> FeatureMatrix:
    if not trials:
        raise ValidationError("trials", "must be non-empty")
    channel_counts = {t.samples.shape[1] for t in trials}
    if len(channel_counts) != 1:
        raise ValidationError("trials", f"mixed channel counts: {sorted(channel_counts)}")
    values = np.vstack([extract_trial_features(t, electrodes) for t in trials])
    labels = np.array([t.gesture_id for t in trials], dtype=int)
    return FeatureMatrix(values, labels, tuple(electrodes))


class Standardizer:
    """Per-column zero-mean unit-variance scaler (fit on training rows only).

    Zero-variance columns keep scale 1 so they are merely centered.
    """

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise ValidationError("X", "cannot fit on an empty matrix")
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        check_is_fitted(self, "mean_")
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValidationError(
                "X", f"{X.shape[1]} columns, standardizer fitted on {self.mean_.shape[0]}"
            )
        return (X - self.mean_) / self.scale_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)

    def to_dict(self) -> dict:
        return {"mean": self.mean_.tolist(), "scale": self.scale_.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        s = cls()
        s.mean_ = np.asarray(data["mean"], dtype=float)
        s.scale_ = np.asarray(data["scale"], dtype=float)
        return s
