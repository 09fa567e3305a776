"""Frame cleaning ahead of feature extraction.

Three independent steps, each optional through :class:`PreprocessConfig`:

* keep only frames from the targeted access point (other transmitters in
  the vicinity are interference),
* reject time-domain outlier frames with a Hampel filter over the
  per-frame mean amplitude (transmit-power glitches, interference bursts),
* calibrate phases per frame: unwrap across the subcarrier index, then
  remove the least-squares line, which cancels the timing-offset slope
  and the common phase offset.

Also hosts the z-score helpers used by the evaluation harness; statistics
are always fit on a training split only and applied elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .csi import CsiFrame, frame_amplitudes, normalize_mac

HAMPEL_MAD_SCALE = 1.4826  # MAD-to-sigma factor for Gaussian data


@dataclass
class PreprocessConfig:
    target_mac: Optional[str] = None
    hampel_window: int = 11
    hampel_k: float = 3.0
    sanitize_phase: bool = True
    drop_zero_subcarrier_frames: bool = False

    def __post_init__(self):
        if self.hampel_window < 3 or self.hampel_window % 2 == 0:
            raise ValueError("hampel_window must be an odd integer >= 3")
        if self.hampel_k <= 0:
            raise ValueError("hampel_k must be positive")
        if self.target_mac is not None:
            self.target_mac = normalize_mac(self.target_mac)


def filter_by_mac(frames: Sequence[CsiFrame], target_mac: str) -> list[CsiFrame]:
    """Frames whose source MAC equals ``target_mac``, order preserved."""
    target = normalize_mac(target_mac)
    return [f for f in frames if f.source_mac == target]


def hampel_flags(series: np.ndarray, window: int, k: float) -> np.ndarray:
    """Boolean outlier flags for a 1-D series.

    Centered window of ``window`` points, truncated at the boundaries.
    A point is flagged when it deviates from the window median by more
    than ``k * 1.4826 * MAD``. Equal values deviate by zero, so a
    constant series never flags anything even though its MAD is zero.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    half = window // 2
    flags = np.zeros(n, dtype=bool)
    for t in range(n):
        lo = max(0, t - half)
        hi = min(n, t + half + 1)
        win = x[lo:hi]
        med = np.median(win)
        mad = np.median(np.abs(win - med))
        flags[t] = abs(x[t] - med) > k * HAMPEL_MAD_SCALE * mad
    return flags


def reject_outlier_frames(
    frames: Sequence[CsiFrame], cfg: PreprocessConfig
) -> tuple[list[CsiFrame], list[int]]:
    """Partition frames into (kept, rejected indices) via the Hampel rule.

    The filtered series is the mean amplitude of each frame; order is
    preserved on both sides of the partition.
    """
    if len(frames) == 0:
        raise ValueError("reject_outlier_frames needs at least one frame")
    summary = np.array([float(np.mean(frame_amplitudes(f))) for f in frames])
    flags = hampel_flags(summary, cfg.hampel_window, cfg.hampel_k)
    kept = [f for f, bad in zip(frames, flags) if not bad]
    rejected = [i for i, bad in enumerate(flags) if bad]
    return kept, rejected


def unwrap_phases(raw_phases: np.ndarray) -> np.ndarray:
    """Unwrap a phase sequence over the subcarrier index.

    Whenever a successive difference exceeds pi in magnitude, the
    correcting multiple of 2*pi is added to the remainder of the
    sequence.
    """
    return np.unwrap(np.asarray(raw_phases, dtype=float))


def sanitize_phase(raw_phases: np.ndarray) -> np.ndarray:
    """Unwrap, then subtract the least-squares line over subcarrier index.

    Removes the linear timing-offset slope and the common phase offset;
    the output has mean 0 and best-fit slope 0 (each to ~1e-9), and the
    operation is idempotent at that tolerance.
    """
    p = unwrap_phases(raw_phases)
    n = p.size
    if n == 1:
        return np.zeros(1)
    idx = np.arange(n, dtype=float)
    slope, intercept = np.polyfit(idx, p, 1)
    return p - (slope * idx + intercept)


def zscore_fit(train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population standard deviation of a train split.

    Zero-variance features get std 1 so that applying the parameters maps
    them to exactly 0 instead of NaN.
    """
    X = np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("zscore_fit needs a non-empty 2-D matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population convention (divide by N)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def zscore_apply(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=float) - mean) / std
