"""Probe geometry, transmit pulse model and analytic-signal conversion.

Units follow the conventions used across the package: lateral/axial lengths in
millimetres, frequencies in MHz, speeds in m/s and times in seconds. Numerical
kernels convert to SI internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import hilbert

#: Background speed of sound used throughout (m/s).
DEFAULT_SOS = 1540.0

# envelope truncation level relative to peak
_PULSE_TRUNCATION = 1e-3


@dataclass(frozen=True)
class ProbeGeometry:
    """Linear array description.

    Parameters
    ----------
    n_elements : int
        Number of array elements.
    pitch : float
        Element spacing in mm.
    center_frequency : float
        Probe center frequency in MHz.
    sampling_frequency : float
        RF sampling frequency in MHz.
    """

    n_elements: int = 192
    pitch: float = 0.23
    center_frequency: float = 5.3
    sampling_frequency: float = 21.2

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ValueError(f"n_elements must be an integer >= 2, got {self.n_elements}")
        if not self.pitch > 0:
            raise ValueError(f"pitch must be positive, got {self.pitch}")
        if not self.center_frequency > 0:
            raise ValueError("center_frequency must be positive")
        if self.sampling_frequency < 2 * self.center_frequency:
            raise ValueError(
                f"sampling_frequency {self.sampling_frequency} MHz is below twice the "
                f"center frequency {self.center_frequency} MHz"
            )

    @property
    def positions(self) -> np.ndarray:
        return element_positions(self)

    @property
    def wavelength(self) -> float:
        """Wavelength (mm) at the center frequency in the default medium."""
        return DEFAULT_SOS / (self.center_frequency * 1e6) * 1e3

    @property
    def aperture(self) -> float:
        return (self.n_elements - 1) * self.pitch


@dataclass(frozen=True)
class TransmitPulse:
    """Gaussian-modulated cosine.

    ``fractional_bandwidth`` is the full -6 dB bandwidth divided by the
    center frequency.
    """

    center_frequency: float = 5.3
    fractional_bandwidth: float = 0.6
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.center_frequency > 0:
            raise ValueError("center_frequency must be positive")
        if not 0 < self.fractional_bandwidth <= 1:
            raise ValueError("fractional_bandwidth must lie in (0, 1]")

    @property
    def sigma(self) -> float:
        """Standard deviation (s) of the Gaussian envelope."""
        half_bw = 0.5 * self.fractional_bandwidth * self.center_frequency * 1e6
        return np.sqrt(2 * np.log(2)) / (2 * np.pi * half_bw)

    @property
    def half_duration(self) -> float:
        """Time (s) after which the envelope falls below 1e-3 of its peak."""
        return self.sigma * np.sqrt(-2 * np.log(_PULSE_TRUNCATION))

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-0.5 * (t / self.sigma) ** 2)


@dataclass(frozen=True)
class Medium:
    background_sos: float = DEFAULT_SOS

    def __post_init__(self):
        if not self.background_sos > 0:
            raise ValueError("background_sos must be positive")


@dataclass(frozen=True)
class RFFrame:
    """Raw channel data for one transmit.

    ``samples`` is indexed ``[element, time]``; sample ``k`` is taken at
    ``time_origin + k / sampling_frequency``. ``predelay`` records any time
    advance (s) applied after acquisition.
    """

    samples: np.ndarray
    sampling_frequency: float
    time_origin: float = 0.0
    angle: float = 0.0
    predelay: float = 0.0

    def __post_init__(self):
        if np.ndim(self.samples) != 2:
            raise ValueError("RF samples must be a 2D [element, time] array")
        if self.time_origin < 0:
            raise ValueError("time_origin must be non-negative")

    @property
    def n_elements(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.time_origin + np.arange(self.n_samples) / (self.sampling_frequency * 1e6)


@dataclass(frozen=True)
class AnalyticFrame(RFFrame):
    """Complex one-sided counterpart of an :class:`RFFrame`."""


@dataclass
class RFDataSet:
    """A transmit sequence: one :class:`RFFrame` per tilt angle, in acquisition order."""

    frames: list
    probe: ProbeGeometry
    sos: float = DEFAULT_SOS
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for fr in self.frames:
            if fr.n_elements != self.probe.n_elements:
                raise ValueError(
                    f"frame has {fr.n_elements} elements, probe has {self.probe.n_elements}"
                )

    @property
    def angles(self) -> np.ndarray:
        return np.array([fr.angle for fr in self.frames], dtype=float)

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i):
        return self.frames[i]


def element_positions(probe: ProbeGeometry) -> np.ndarray:
    """Lateral element centers (mm), symmetric about x = 0."""
    k = np.arange(probe.n_elements, dtype=float)
    return (k - (probe.n_elements - 1) / 2) * probe.pitch


def pulse_waveform(pulse: TransmitPulse, t):
    """Evaluate the transmit pulse at time(s) ``t`` (s), peak at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    return pulse.envelope(t) * np.cos(2 * np.pi * pulse.center_frequency * 1e6 * t)


def analytic_signal(frame: RFFrame) -> AnalyticFrame:
    """Per-element analytic signal with the carrier retained.

    Uses the full-length one-sided spectral filter so the real part equals the
    input exactly up to FFT round-off.
    """
    samples = np.asarray(frame.samples, dtype=float)
    if samples.shape[1] < 2:
        raise ValueError("analytic_signal needs at least 2 time samples")
    if not np.any(samples):
        z = np.zeros(samples.shape, dtype=complex)
    else:
        z = hilbert(samples, axis=1)
    return AnalyticFrame(
        samples=z,
        sampling_frequency=frame.sampling_frequency,
        time_origin=frame.time_origin,
        angle=frame.angle,
        predelay=frame.predelay,
    )


def with_samples(frame: RFFrame, samples, **changes) -> RFFrame:
    return replace(frame, samples=samples, **changes)
