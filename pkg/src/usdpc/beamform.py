"""Delay-and-sum beamforming of plane-wave transmits onto a Cartesian grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import prange

from .acoustics import AnalyticFrame, ProbeGeometry, RFDataSet, RFFrame, analytic_signal, element_positions


@dataclass(frozen=True)
class BeamformGrid:
    x_min: float
    x_max: float
    z_min: float
    z_max: float
    pixel_pitch: float = 0.0727

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if not self.z_max > self.z_min > 0:
            raise ValueError("grid requires z_max > z_min > 0")
        if not self.pixel_pitch > 0:
            raise ValueError("pixel_pitch must be positive")

    @property
    def x(self) -> np.ndarray:
        n = int(math.floor((self.x_max - self.x_min) / self.pixel_pitch + 1e-9)) + 1
        return self.x_min + self.pixel_pitch * np.arange(n)

    @property
    def z(self) -> np.ndarray:
        n = int(math.floor((self.z_max - self.z_min) / self.pixel_pitch + 1e-9)) + 1
        return self.z_min + self.pixel_pitch * np.arange(n)

    @property
    def shape(self):
        return self.x.size, self.z.size

    def index_of(self, x: float, z: float):
        """Nearest pixel index ``(ix, iz)``."""
        ix = int(np.clip(round((x - self.x_min) / self.pixel_pitch), 0, self.shape[0] - 1))
        iz = int(np.clip(round((z - self.z_min) / self.pixel_pitch), 0, self.shape[1] - 1))
        return ix, iz


@dataclass
class ComplexImage:
    """Beamformed field indexed ``[x, z]``."""

    values: np.ndarray
    grid: BeamformGrid
    angle: float = 0.0
    predelay: float = 0.0
    out_of_range: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"image shape {self.values.shape} does not match grid {self.grid.shape}")


def accepted_half_aperture(z, na):
    """Receive half-aperture (mm) at depth ``z`` for numerical aperture ``na``."""
    return np.asarray(z) * np.tan(np.arcsin(na))


@numba.njit(parallel=True, cache=True)
def _das(demod, t0, fs, omega, ex, gx, gz, sin_t, cos_t, c0, tan_na, out, oor):
    n_el, n_t = demod.shape
    for ix in prange(gx.size):
        x = gx[ix]
        for iz in range(gz.size):
            z = gz[iz]
            half = z * tan_na
            t_tx = (z * cos_t + x * sin_t) * 1e-3 / c0
            acc = 0.0 + 0.0j
            wsum = 0.0
            for e in range(n_el):
                u = ex[e] - x
                if abs(u) > half:
                    continue
                w = math.cos(0.5 * math.pi * u / half) ** 2 if half > 0 else 1.0
                tau = t_tx + math.sqrt(z * z + u * u) * 1e-3 / c0
                f = (tau - t0) * fs
                wsum += w
                if f < 0.0 or f > n_t - 1:
                    oor[ix] += 1
                    continue
                k = min(int(math.floor(f)), n_t - 2)
                a = f - k
                val = (1.0 - a) * demod[e, k] + a * demod[e, k + 1]
                ph = omega * tau
                acc += w * val * complex(math.cos(ph), math.sin(ph))
            if wsum > 0:
                out[ix, iz] = acc / wsum


def das_beamform(frame: AnalyticFrame, probe: ProbeGeometry, grid: BeamformGrid,
                 c: float = 1540.0, na: float = 0.6, *, center_frequency=None) -> ComplexImage:
    """Delay-and-sum one plane-wave frame.

    Sub-sample delays use linear interpolation of the analytic signal after
    removing the carrier at ``center_frequency`` (MHz, default the probe's);
    the carrier is restored at the exact delay, so pure tones are
    interpolated without phase error. Elements within ``z * tan(asin(na))``
    of the pixel are weighted by a Hann window normalised per pixel.
    Delays falling outside the record contribute zero and are counted in
    ``out_of_range``.
    """
    if not 0 < na <= 1:
        raise ValueError(f"na must lie in (0, 1], got {na}")
    if not np.iscomplexobj(frame.samples):
        frame = analytic_signal(frame)
    f0 = (center_frequency or probe.center_frequency) * 1e6
    fs = frame.sampling_frequency * 1e6
    omega = 2 * np.pi * f0
    demod = np.ascontiguousarray(frame.samples * np.exp(-1j * omega * frame.times)[None, :])
    gx, gz = grid.x, grid.z
    out = np.zeros((gx.size, gz.size), dtype=complex)
    oor = np.zeros(gx.size, dtype=np.int64)
    # na = 1 means the full array; tan(pi/2) is replaced by a large finite number
    tan_na = np.tan(np.arcsin(na)) if na < 1 else 1e12
    _das(demod, float(frame.time_origin), fs, omega, element_positions(probe), gx, gz,
         math.sin(frame.angle), math.cos(frame.angle), float(c), float(tan_na), out, oor)
    return ComplexImage(out, grid, frame.angle, frame.predelay, int(oor.sum()))


def compound_coherent(images) -> ComplexImage:
    """Pixel-wise complex sum of images sharing one grid."""
    images = list(images)
    if not images:
        raise ValueError("nothing to compound")
    grid = images[0].grid
    total = np.zeros(grid.shape, dtype=complex)
    for im in images:
        if im.grid != grid:
            raise ValueError("cannot compound images on different grids")
        total += im.values
    return ComplexImage(total, grid, 0.0, images[0].predelay,
                        sum(im.out_of_range for im in images),
                        meta={"n_images": len(images)})


def beamform_dataset(dataset: RFDataSet, grid: BeamformGrid, c=None, na: float = 0.6):
    c = dataset.sos if c is None else c
    return [das_beamform(analytic_signal(fr), dataset.probe, grid, c, na) for fr in dataset.frames]


def bmode(dataset: RFDataSet, probe: ProbeGeometry | None = None, grid: BeamformGrid | None = None,
          c=None, na: float = 0.6, *, floor_db: float = -200.0) -> np.ndarray:
    """Log-compressed (dB, 0 dB peak) envelope of the coherently compounded image."""
    if dataset is None or len(dataset) == 0:
        raise ValueError("bmode needs at least one frame")
    if grid is None:
        raise ValueError("a beamforming grid is required")
    probe = probe or dataset.probe
    c = dataset.sos if c is None else c
    images = [das_beamform(analytic_signal(fr), probe, grid, c, na) for fr in dataset.frames]
    env = np.abs(compound_coherent(images).values)
    peak = env.max()
    if peak == 0:
        return np.full(env.shape, floor_db)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(env / peak)
    return np.maximum(db, floor_db)


def lateral_fwhm(profile: np.ndarray, pitch: float) -> float:
    """Full width at half maximum (mm) of a 1D magnitude profile, with linear
    interpolation of the half-level crossings around the peak."""
    p = np.asarray(profile, dtype=float)
    i = int(np.argmax(p))
    half = p[i] / 2
    left = i
    while left > 0 and p[left] > half:
        left -= 1
    right = i
    while right < p.size - 1 and p[right] > half:
        right += 1
    if p[left] > half or p[right] > half:
        raise ValueError("profile does not fall to half maximum on both sides")
    xl = left + (half - p[left]) / (p[left + 1] - p[left])
    xr = right - (half - p[right]) / (p[right - 1] - p[right])
    return (xr - xl) * pitch
