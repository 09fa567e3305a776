"""Classifier inputs built from cleaned frames.

The model input is one row vector per frame: the n subcarrier amplitudes
followed by the n (optionally calibrated) phases, 128 values for the
default n = 64. Amplitudes-first is a fixed convention here; classifiers
are order-agnostic but test vectors depend on it.

Also computes the auxiliary single-frame amplitude statistics (kurtosis,
peak, impulse factor, clearance factor, time-domain energy). These are
reported for inspection only and never enter the feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .csi import CLASS_ORDER, ClassLabel, CsiFrame, frame_amplitudes, frame_phases
from .preprocess import PreprocessConfig, sanitize_phase


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """2n feature values (n amplitudes then n phases) plus the class label."""

    values: np.ndarray
    label: ClassLabel

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2 or v.size % 2 != 0:
            raise ValueError("feature vector must be 1-D with even length")
        if np.any(v[: v.size // 2] < 0):
            raise ValueError("amplitude block (first half) must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return int(self.values.size)


@dataclass
class Dataset:
    """Ordered labeled feature matrix with constant row width.

    ``X`` is (n_samples, width) float64; ``labels`` holds one ClassLabel
    per row in the same order.
    """

    X: np.ndarray
    labels: list[ClassLabel] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("dataset matrix must be 2-D")
        if self.X.shape[0] != len(self.labels):
            raise ValueError("row count does not match label count")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return int(self.X.shape[1])

    def class_counts(self) -> dict[ClassLabel, int]:
        counts: dict[ClassLabel, int] = {}
        for lab in self.labels:
            counts[lab] = counts.get(lab, 0) + 1
        return counts

    def classes(self) -> tuple[ClassLabel, ...]:
        """Classes present, in canonical order."""
        present = set(self.labels)
        return tuple(c for c in CLASS_ORDER if c in present)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(self.X[idx], [self.labels[int(i)] for i in idx])

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "Dataset":
        if len(vectors) == 0:
            raise ValueError("dataset needs at least one feature vector")
        width = vectors[0].width
        for i, v in enumerate(vectors):
            if v.width != width:
                raise ValueError(f"row {i} has width {v.width}, expected {width}")
        X = np.stack([v.values for v in vectors])
        return cls(X, [v.label for v in vectors])


def build_feature_vector(
    frame: CsiFrame, cfg: PreprocessConfig, label: ClassLabel
) -> FeatureVector:
    """Concatenate amplitudes with (sanitized) phases for one frame."""
    amps = frame_amplitudes(frame)
    phases = frame_phases(frame)
    if cfg.sanitize_phase:
        phases = sanitize_phase(phases)
    return FeatureVector(np.concatenate([amps, phases]), label)


def frames_to_dataset(
    frames: Sequence[CsiFrame],
    labels: Sequence[ClassLabel],
    cfg: Optional[PreprocessConfig] = None,
) -> Dataset:
    if len(frames) != len(labels):
        raise ValueError("one label per frame required")
    cfg = cfg if cfg is not None else PreprocessConfig()
    return Dataset.from_vectors(
        [build_feature_vector(f, cfg, lab) for f, lab in zip(frames, labels)]
    )


@dataclass(frozen=True)
class CsiStats:
    """Auxiliary amplitude statistics for one frame.

    Degenerate inputs yield ``None`` instead of a value: ``kurtosis`` when
    the variance is zero, ``impulse_factor``/``clearance_factor`` when
    their mean terms are zero (all-zero amplitudes).
    """

    kurtosis: Optional[float]
    peak_value: float
    impulse_factor: Optional[float]
    clearance_factor: Optional[float]
    time_domain_energy: float


def csi_stats(amplitudes: np.ndarray) -> CsiStats:
    """Five summary statistics of an amplitude vector (length >= 2).

    kurtosis  = E[(x-m)^4] / sigma^4   (Pearson; normal data -> 3)
    peak      = max |x_i|
    impulse   = peak / mean(|x|)
    clearance = peak / mean(sqrt(|x|))^2
    energy    = sum x_i^2
    """
    x = np.asarray(amplitudes, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("csi_stats needs a 1-D vector of length >= 2")
    m = x.mean()
    var = x.var()  # population
    peak = float(np.max(np.abs(x)))
    energy = float(np.sum(x * x))

    if var == 0.0:
        kurt = None
    else:
        kurt = float(np.mean((x - m) ** 4) / var**2)

    mean_abs = float(np.mean(np.abs(x)))
    impulse = peak / mean_abs if mean_abs > 0 else None

    root_mean = float(np.mean(np.sqrt(np.abs(x))))
    clearance = peak / root_mean**2 if root_mean > 0 else None

    return CsiStats(
        kurtosis=kurt,
        peak_value=peak,
        impulse_factor=impulse,
        clearance_factor=clearance,
        time_domain_energy=energy,
    )
