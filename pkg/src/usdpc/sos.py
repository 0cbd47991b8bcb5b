"""Quantitative speed-of-sound analysis of DPC images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dpc import DPCImage


@dataclass(frozen=True)
class PhaseProfile:
    x: np.ndarray  # mm
    phase: np.ndarray  # rad
    band: tuple  # (z_center, half_width) in mm
    detrended: bool = False


@dataclass(frozen=True)
class LinearityFit:
    points: tuple
    slope: float
    intercept: float
    r_squared: float

    def predict(self, x):
        return self.slope * np.asarray(x) + self.intercept


def integrate_transverse(image: DPCImage, z_center: float, half_width: float = 1.0,
                         *, detrend: bool = False) -> PhaseProfile:
    """Integrate the lateral phase gradient across a horizontal band.

    The band ``z_center +/- half_width`` is averaged axially (valid pixels
    only), then accumulated along x with step ``pixel_pitch / shear``, where
    the shear is the pair-averaged value stored on the image. The profile is
    zero at the left edge; ``detrend`` also pins the right edge to zero.
    """
    if not image.shears:
        raise ValueError("DPC image carries no shear metadata")
    dx_eff = image.shear_effective
    if dx_eff == 0:
        raise ValueError("effective shear is zero")
    grid = image.grid
    z = grid.z
    if z_center - half_width < grid.z_min - 1e-9 or z_center + half_width > grid.z_max + 1e-9:
        raise ValueError(f"band {z_center}+/-{half_width} mm is outside the grid depth range")
    rows = np.abs(z - z_center) <= half_width + 1e-9
    vals = image.values[:, rows]
    w = image.valid[:, rows].astype(float)
    n = w.sum(axis=1)
    grad = np.where(n > 0, (vals * w).sum(axis=1) / np.maximum(n, 1), 0.0)
    steps = grad * grid.pixel_pitch / dx_eff
    phase = np.concatenate([[0.0], np.cumsum(steps[:-1])])
    x = grid.x
    if detrend:
        phase = phase - phase[-1] * (x - x[0]) / (x[-1] - x[0])
    return PhaseProfile(x, phase, (z_center, half_width), detrend)


def excursion(profile: PhaseProfile) -> float:
    """Signed value of the largest-magnitude point of the profile."""
    p = np.asarray(profile.phase if isinstance(profile, PhaseProfile) else profile, dtype=float)
    if p.size == 0:
        raise ValueError("empty profile")
    return float(p[np.argmax(np.abs(p))])


def linearity_fit(points) -> LinearityFit:
    """Least-squares line through ``(delta_sos, excursion)`` points."""
    pts = tuple((float(a), float(b)) for a, b in points)
    if len(pts) < 3:
        raise ValueError("linearity_fit needs at least 3 points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise ValueError("all abscissae are equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return LinearityFit(pts, float(slope), float(intercept), min(r2, 1.0))


def excursion_model(delta_sos: float, chord: float, f0: float = 5.3, c0: float = 1540.0) -> float:
    """One-way straight-ray phase (rad) across ``chord`` mm of an inclusion.

    ``2 pi f0 chord (1/c0 - 1/c_inc)`` with ``c_inc = c0 + delta_sos``; positive
    for faster inclusions, matching the sign produced by the DPC pipeline.
    """
    c_inc = c0 + delta_sos
    return 2 * np.pi * f0 * 1e6 * chord * 1e-3 * (1 / c0 - 1 / c_inc)


def phase_to_delta_sos(phase: float, chord: float, f0: float = 5.3, c0: float = 1540.0) -> float:
    """Invert :func:`excursion_model` for ``c_inc - c0`` (m/s)."""
    if not chord > 0:
        raise ValueError("chord must be positive")
    inv = 1 / c0 - phase / (2 * np.pi * f0 * 1e6 * chord * 1e-3)
    if not inv > 0:
        raise ValueError(f"phase {phase} rad implies a non-physical inclusion speed of sound")
    return 1 / inv - c0


def neighborhood_ncc(a: DPCImage, b: DPCImage, center, radius: float) -> float:
    """Normalized cross-correlation of two DPC maps over a disk around ``center`` (mm)."""
    if a.grid != b.grid:
        raise ValueError("images must share one grid")
    X, Z = np.meshgrid(a.grid.x, a.grid.z, indexing="ij")
    mask = (np.hypot(X - center[0], Z - center[1]) <= radius) & a.valid & b.valid
    u = a.values[mask] - a.values[mask].mean()
    v = b.values[mask] - b.values[mask].mean()
    den = np.sqrt((u @ u) * (v @ v))
    return float(u @ v / den) if den > 0 else 0.0
