"""Single-scattering RF synthesis for tilted plane-wave transmits.

Each scatterer is insonified by a plane wave travelling at angle ``theta`` from
the z axis and re-radiates a spherical wave to every element. Inclusions add
straight-ray travel-time excess on both legs. Nothing about the speckle
trajectories is imposed; the memory effect emerges from the geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from numba import prange

from .acoustics import ProbeGeometry, RFDataSet, RFFrame, TransmitPulse, element_positions
from .phantom import Phantom, _excess_delay


class TruncationError(ValueError):
    """Configured record duration cannot hold every echo."""


@dataclass(frozen=True)
class SimulationConfig:
    """Acquisition settings.

    ``duration`` of None sizes the record automatically. ``noise_rms`` is
    relative to the RMS of the noiseless frame.
    """

    duration: float | None = None
    include_spreading: bool = True
    include_directivity: bool = True
    noise_rms: float = 0.0
    seed: int = 0
    time_origin: float = 0.0

    def __post_init__(self):
        if self.duration is not None and not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be non-negative")
        if self.time_origin < 0:
            raise ValueError("time_origin must be non-negative")


@numba.njit(parallel=True, cache=True)
def _accumulate(sx, sz, sr, tx, ex, incl, c0, fs, t0, f0, sigma, half,
                spreading, directivity, out, clipped):
    n_el, n_t = out.shape
    omega = 2.0 * math.pi * f0
    inv2s2 = 0.5 / (sigma * sigma)
    du = 1.0 / fs
    rr = math.exp(-2.0 * du * du * inv2s2)
    rot_r = math.cos(omega * du)
    rot_i = math.sin(omega * du)
    for e in prange(n_el):
        xe = ex[e]
        for s in range(sx.size):
            dx = sx[s] - xe
            dz = sz[s]
            r = math.sqrt(dx * dx + dz * dz)
            tau = tx[s] + r * 1e-3 / c0
            if incl.shape[1] > 0:
                tau += _excess_delay(incl, sx[s], sz[s], xe, 0.0)
            w = sr[s]
            if spreading:
                w /= math.sqrt(r)
            if directivity:
                w *= dz / r
            k0 = math.ceil((tau - half - t0) * fs)
            k1 = math.floor((tau + half - t0) * fs)
            if k0 < 0 or k1 >= n_t:
                clipped[e] += 1
                if k0 < 0:
                    k0 = 0
                if k1 >= n_t:
                    k1 = n_t - 1
            if k1 < k0:
                continue
            # envelope and carrier advanced by recurrence from the exact first offset
            u = t0 + k0 / fs - tau
            env = w * math.exp(-u * u * inv2s2)
            ratio = math.exp(-(2.0 * u * du + du * du) * inv2s2)
            cr = math.cos(omega * u)
            ci = math.sin(omega * u)
            for k in range(k0, k1 + 1):
                out[e, k] += env * cr
                env *= ratio
                ratio *= rr
                cr, ci = cr * rot_r - ci * rot_i, cr * rot_i + ci * rot_r


def transmit_delays(phantom: Phantom, theta: float) -> np.ndarray:
    """Plane-wave arrival time (s) at every scatterer, including inclusion excess
    along the straight transmit ray entering at the array plane."""
    sc = phantom.scatterers
    c0 = phantom.c0
    tau = (sc.z * np.cos(theta) + sc.x * np.sin(theta)) * 1e-3 / c0
    if phantom.inclusions:
        incl = phantom.inclusion_arrays()
        x_entry = sc.x - sc.z * np.tan(theta)
        tau = tau + _excess_many(incl, x_entry, sc.x, sc.z)
    return tau


@numba.njit(cache=True)
def _excess_many(incl, x_entry, sx, sz):
    out = np.empty(sx.size)
    for s in range(sx.size):
        out[s] = _excess_delay(incl, x_entry[s], 0.0, sx[s], sz[s])
    return out


def required_duration(phantom: Phantom, probe: ProbeGeometry, pulse: TransmitPulse,
                      theta: float, time_origin: float = 0.0) -> float:
    """Record length (s) covering the latest echo plus the pulse tail."""
    sc = phantom.scatterers
    if len(sc) == 0:
        return time_origin + pulse.half_duration
    ex = element_positions(probe)
    tx = transmit_delays(phantom, theta)
    r_far = np.maximum(np.hypot(sc.x - ex[0], sc.z), np.hypot(sc.x - ex[-1], sc.z))
    slow = max([0.0] + [(1 / d.sos - 1 / phantom.c0) * 2e-3 * d.radius for d in phantom.inclusions])
    latest = np.max(tx + r_far * 1e-3 / phantom.c0) + slow * len(phantom.inclusions)
    return float(latest + pulse.half_duration)


def simulate_rf(phantom: Phantom, probe: ProbeGeometry, pulse: TransmitPulse, theta: float,
                config: SimulationConfig | None = None, *, frame_index: int = 0) -> RFFrame:
    """Synthesize one plane-wave RF frame.

    Raises
    ------
    ValueError
        If ``|theta| >= pi/4``.
    TruncationError
        If ``config.duration`` is shorter than the latest echo.
    """
    config = config or SimulationConfig()
    if not abs(theta) < np.pi / 4:
        raise ValueError(f"tilt angle {theta} rad outside (-pi/4, pi/4)")
    fs = probe.sampling_frequency * 1e6
    need = required_duration(phantom, probe, pulse, theta, config.time_origin)
    duration = config.duration
    if duration is None:
        duration = need
    elif duration < need:
        raise TruncationError(
            f"record duration {duration * 1e6:.3f} us is shorter than the required "
            f"{need * 1e6:.3f} us"
        )
    n_t = int(math.ceil((duration - config.time_origin) * fs)) + 1
    out = np.zeros((probe.n_elements, n_t))
    sc = phantom.scatterers
    clipped = np.zeros(probe.n_elements, dtype=np.int64)
    if len(sc):
        _accumulate(
            sc.x, sc.z, sc.reflectivity * pulse.amplitude, transmit_delays(phantom, theta),
            element_positions(probe), phantom.inclusion_arrays(), float(phantom.c0), fs,
            float(config.time_origin), pulse.center_frequency * 1e6, pulse.sigma,
            pulse.half_duration, config.include_spreading, config.include_directivity,
            out, clipped,
        )
    if clipped.sum():
        warnings.warn(f"{int(clipped.sum())} echoes partially outside the record were clipped")
    if config.noise_rms > 0:
        rng = np.random.default_rng([config.seed, frame_index])
        level = np.sqrt(np.mean(out**2)) * config.noise_rms
        out += rng.standard_normal(out.shape) * level
    return RFFrame(out, probe.sampling_frequency, config.time_origin, float(theta))


def simulate_sequence(phantom: Phantom, probe: ProbeGeometry, pulse: TransmitPulse, angles,
                      config: SimulationConfig | None = None) -> RFDataSet:
    """One frame per angle over a frozen phantom; all frames share one record length."""
    angles = [float(a) for a in angles]
    if not angles:
        raise ValueError("at least one transmit angle is required")
    config = config or SimulationConfig()
    if config.duration is None:
        need = max(required_duration(phantom, probe, pulse, a, config.time_origin) for a in angles)
        config = SimulationConfig(
            need, config.include_spreading, config.include_directivity,
            config.noise_rms, config.seed, config.time_origin,
        )
    frames = [simulate_rf(phantom, probe, pulse, a, config, frame_index=i) for i, a in enumerate(angles)]
    return RFDataSet(
        frames, probe, phantom.c0,
        meta={"center_frequency": pulse.center_frequency, "seed": config.seed,
              "phantom_seed": phantom.seed},
    )


def tilt_angles(n: int = 13, max_angle: float = 0.15) -> np.ndarray:
    """``n`` tilt angles evenly spaced over ``[-max_angle, max_angle]``."""
    return np.linspace(-max_angle, max_angle, n)
