"""Core CSI domain types and the per-subcarrier amplitude/phase math.

A received Wi-Fi packet yields one channel estimate per OFDM subcarrier
(64 by default). Everything downstream works on the polar decomposition
of those complex estimates, so this module fixes the conventions once:
amplitudes are Euclidean magnitudes, phases live in (-pi, pi], and the
degenerate (0, 0) sample gets phase 0.0 plus a queryable flag instead of
an error (real captures contain null subcarriers).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

import numpy as np

DEFAULT_SUBCARRIERS = 64

_MAC_RE = re.compile(r"^[0-9A-F]{2}(?::[0-9A-F]{2}){5}$")


class ClassLabel(enum.Enum):
    """Water condition recorded with a measurement."""

    CLEAN = "Clean"
    TOXIC_100PPM = "Toxic100ppm"
    TOXIC_1000PPM = "Toxic1000ppm"

    @property
    def is_toxic(self) -> bool:
        return self is not ClassLabel.CLEAN

    @classmethod
    def from_string(cls, text: str) -> "ClassLabel":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown class label {text!r}")


# Canonical ordering used for class lists, reports and stratification.
CLASS_ORDER = (ClassLabel.CLEAN, ClassLabel.TOXIC_100PPM, ClassLabel.TOXIC_1000PPM)


def normalize_mac(mac: str) -> str:
    """Uppercase a colon-separated MAC and validate its shape."""
    canon = mac.strip().upper()
    if not _MAC_RE.match(canon):
        raise ValueError(f"malformed MAC address {mac!r}")
    return canon


@dataclass(frozen=True)
class ComplexSample:
    """One subcarrier's channel estimate (real, imaginary) in ADC units."""

    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"non-finite sample ({self.re}, {self.im})")

    @property
    def is_zero(self) -> bool:
        """True for the degenerate (0, 0) sample whose phase is a convention."""
        return self.re == 0.0 and self.im == 0.0


def amplitude(s: ComplexSample) -> float:
    """Magnitude sqrt(re^2 + im^2) of one sample; always >= 0."""
    return math.hypot(s.re, s.im)


def phase(s: ComplexSample) -> float:
    """Two-argument arctangent of (im, re), mapped into (-pi, pi].

    The zero sample returns 0.0; callers that care can check
    ``s.is_zero`` (kept as a flag, not an error, so vector lengths stay
    fixed when captures contain null subcarriers).
    """
    if s.is_zero:
        return 0.0
    p = math.atan2(s.im, s.re)
    # atan2(-0.0, x<0) lands on -pi; the branch cut convention is (-pi, pi].
    if p == -math.pi:
        return math.pi
    return p


@dataclass(frozen=True, eq=False)
class CsiFrame:
    """One received packet: capture metadata plus n complex subcarriers.

    ``subcarriers`` is stored as a read-only complex128 vector. All
    construction inputs are promoted to 64-bit floats immediately, even
    when the capture carried 8-bit ADC integers.
    """

    timestamp_ms: int
    source_mac: str
    rssi_dbm: int
    channel: int
    subcarriers: np.ndarray

    def __post_init__(self):
        iq = np.asarray(self.subcarriers, dtype=np.complex128)
        if iq.ndim != 1 or iq.size < 1:
            raise ValueError("subcarriers must be a non-empty 1-D vector")
        if not (np.isfinite(iq.real).all() and np.isfinite(iq.imag).all()):
            raise ValueError("subcarriers must be finite")
        iq = iq.copy()
        iq.flags.writeable = False
        object.__setattr__(self, "subcarriers", iq)
        object.__setattr__(self, "source_mac", normalize_mac(self.source_mac))

    @property
    def n(self) -> int:
        return int(self.subcarriers.size)

    def sample(self, i: int) -> ComplexSample:
        z = self.subcarriers[i]
        return ComplexSample(float(z.real), float(z.imag))

    @property
    def has_zero_subcarrier(self) -> bool:
        return bool(np.any(self.subcarriers == 0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsiFrame):
            return NotImplemented
        return (
            self.timestamp_ms == other.timestamp_ms
            and self.source_mac == other.source_mac
            and self.rssi_dbm == other.rssi_dbm
            and self.channel == other.channel
            and np.array_equal(self.subcarriers, other.subcarriers)
        )

    def __hash__(self) -> int:
        return hash(
            (
                self.timestamp_ms,
                self.source_mac,
                self.rssi_dbm,
                self.channel,
                self.subcarriers.tobytes(),
            )
        )


def frame_amplitudes(frame: CsiFrame) -> np.ndarray:
    """Per-subcarrier magnitudes, order preserved."""
    return np.abs(frame.subcarriers)


def frame_phases(frame: CsiFrame) -> np.ndarray:
    """Per-subcarrier phases in (-pi, pi]; zero samples map to 0.0."""
    p = np.angle(frame.subcarriers)
    p[p == -np.pi] = np.pi
    return p
