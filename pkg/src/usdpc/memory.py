"""Speckle-trajectory check of the memory effect on raw RF frames.

Tilting the transmit plane wave by ``theta`` moves a speckle grain received
at ``(x0, t0)`` to

    x_theta = x0 + (c t0 / 2) tan(theta)
    t_theta = (t0 / 2)(cos(theta) + sec(theta)) + (x0 / c) sin(theta)

The trackers here measure that displacement with windowed normalized
cross-correlation and compare it with the prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .acoustics import RFDataSet, RFFrame


@dataclass(frozen=True)
class SpeckleWindow:
    x0: float  # mm, on the array
    t0: float  # s, from transmit trigger
    width: float = 3.0  # mm
    duration: float = 3e-6  # s

    def __post_init__(self):
        if not (self.width > 0 and self.duration > 0):
            raise ValueError("window extents must be positive")


@dataclass(frozen=True)
class CorrelationTrack:
    window: SpeckleWindow
    theta: float
    dx: float  # measured lateral shift, mm
    dt: float  # measured temporal shift, s
    dx_pred: float
    dt_pred: float
    rho: float
    skipped: bool = False
    reason: str = ""

    @property
    def error_x(self) -> float:
        return self.dx - self.dx_pred

    @property
    def error_t(self) -> float:
        return self.dt - self.dt_pred


@dataclass(frozen=True)
class WindowGridSpec:
    """Window tiling: ``width`` x ``duration`` windows with fractional
    ``overlap`` over the central ``coverage`` fraction of the frame."""

    width: float = 3.0
    duration: float = 3e-6
    overlap: float = 0.5
    coverage: float = 0.8
    margin_samples: int = 10
    margin_elements: int = 10
    rho_min: float = 0.5
    tol_x: float = 0.15  # mm
    tol_t_samples: float = 3.0


def predict_shift(x0: float, t0: float, theta: float, c: float = 1540.0):
    """Predicted speckle position ``(x_theta [mm], t_theta [s])`` after a tilt."""
    if not abs(theta) < np.pi / 2:
        raise ValueError("|theta| must be below pi/2")
    x_t = x0 + (c * t0 / 2) * np.tan(theta) * 1e3
    # grouped so that theta = 0 returns t0 bit-exactly
    t_t = t0 * ((np.cos(theta) + 1 / np.cos(theta)) / 2) + (x0 * 1e-3 / c) * np.sin(theta)
    return x_t, t_t


@numba.njit(cache=True)
def _ncc_surface(ref, tilt, e0, e1, k0, k1, lag_e0, lag_k0, n_le, n_lk):
    """NCC of ref[e0:e1, k0:k1] against tilt shifted by each lag."""
    out = np.full((n_le, n_lk), -2.0)
    ne = e1 - e0
    nk = k1 - k0
    n = ne * nk
    ma = 0.0
    for i in range(e0, e1):
        for j in range(k0, k1):
            ma += ref[i, j]
    ma /= n
    va = 0.0
    for i in range(e0, e1):
        for j in range(k0, k1):
            va += (ref[i, j] - ma) ** 2
    for a in range(n_le):
        de = lag_e0 + a
        for b in range(n_lk):
            dk = lag_k0 + b
            mb = 0.0
            for i in range(e0, e1):
                for j in range(k0, k1):
                    mb += tilt[i + de, j + dk]
            mb /= n
            vb = 0.0
            cab = 0.0
            for i in range(e0, e1):
                for j in range(k0, k1):
                    q = tilt[i + de, j + dk] - mb
                    vb += q * q
                    cab += (ref[i, j] - ma) * q
            if va > 0 and vb > 0:
                out[a, b] = cab / math.sqrt(va * vb)
            else:
                out[a, b] = 0.0
    return out


def _parabolic(cm, c0, cp):
    denom = cm - 2 * c0 + cp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (cm - cp) / denom, -0.5, 0.5))


def normalized_xcorr(a, b) -> float:
    """Zero-mean normalized correlation of two equally shaped arrays."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a @ a) * (b @ b))
    return float(a @ b / den) if den > 0 else 0.0


def track_speckle(frame_ref: RFFrame, frame_tilt: RFFrame, windows, pitch: float, c: float = 1540.0,
                  *, margin_samples: int = 10, margin_elements: int = 10, theta=None):
    """Locate each reference window in the tilted frame.

    The search spans ``+/- margin`` lags around the predicted displacement;
    the discrete NCC peak is refined by a separable parabolic fit. Windows
    whose patch or search region leaves the frame are returned with
    ``skipped=True``.
    """
    if frame_ref.samples.shape[0] != frame_tilt.samples.shape[0]:
        raise ValueError("frames must come from the same probe")
    if frame_ref.sampling_frequency != frame_tilt.sampling_frequency:
        raise ValueError("frames must share a sampling frequency")
    theta = frame_tilt.angle - frame_ref.angle if theta is None else theta
    fs = frame_ref.sampling_frequency * 1e6
    ref = np.ascontiguousarray(frame_ref.samples, dtype=float)
    tilt = np.ascontiguousarray(frame_tilt.samples, dtype=float)
    n_el = ref.shape[0]
    xe = (np.arange(n_el) - (n_el - 1) / 2) * pitch
    tracks = []
    for w in windows:
        x_t, t_t = predict_shift(w.x0, w.t0, theta, c)
        dx_pred, dt_pred = x_t - w.x0, t_t - w.t0
        sel = np.nonzero(np.abs(xe - w.x0) <= w.width / 2 + 1e-9)[0]
        kc = (w.t0 - frame_ref.time_origin) * fs
        k0 = int(math.ceil(kc - w.duration * fs / 2))
        k1 = int(math.floor(kc + w.duration * fs / 2)) + 1
        # the tilted frame may start at a different time origin
        k_offset = (frame_ref.time_origin - frame_tilt.time_origin) * fs
        le_c = int(round(dx_pred / pitch))
        lk_c = int(round(dt_pred * fs + k_offset))
        lag_e0, lag_k0 = le_c - margin_elements, lk_c - margin_samples
        n_le, n_lk = 2 * margin_elements + 1, 2 * margin_samples + 1
        skip = ""
        if sel.size < 2 or k1 - k0 < 2:
            skip = "window too small"
        elif sel[0] < 0 or sel[-1] >= n_el or k0 < 0 or k1 > ref.shape[1]:
            skip = "window outside frame"
        elif (sel[0] + lag_e0 < 0 or sel[-1] + 1 + lag_e0 + n_le - 1 > n_el
              or k0 + lag_k0 < 0 or k1 + lag_k0 + n_lk - 1 > tilt.shape[1]):
            skip = "search region outside frame"
        if skip:
            tracks.append(CorrelationTrack(w, theta, np.nan, np.nan, dx_pred, dt_pred, np.nan, True, skip))
            continue
        surf = _ncc_surface(ref, tilt, int(sel[0]), int(sel[-1]) + 1, k0, k1, lag_e0, lag_k0, n_le, n_lk)
        a, b = np.unravel_index(int(np.argmax(surf)), surf.shape)
        rho = float(surf[a, b])
        fa = fb = 0.0
        # a perfect match cannot be improved on; refinement would only add bias
        if rho < 1.0 - 1e-12:
            if 0 < a < n_le - 1:
                fa = _parabolic(surf[a - 1, b], surf[a, b], surf[a + 1, b])
            if 0 < b < n_lk - 1:
                fb = _parabolic(surf[a, b - 1], surf[a, b], surf[a, b + 1])
        dx = (lag_e0 + a + fa) * pitch
        dt = (lag_k0 + b + fb - k_offset) / fs
        tracks.append(CorrelationTrack(w, theta, dx, dt, dx_pred, dt_pred, rho))
    return tracks


def window_grid(frame: RFFrame, pitch: float, spec: WindowGridSpec = WindowGridSpec()):
    """Tile windows over the central ``spec.coverage`` of the frame in x and t."""
    n_el, n_t = frame.samples.shape
    half_ap = (n_el - 1) * pitch / 2 * spec.coverage
    t_start, t_end = frame.times[0], frame.times[-1]
    t_mid, t_half = (t_start + t_end) / 2, (t_end - t_start) / 2 * spec.coverage
    step_x = spec.width * (1 - spec.overlap)
    step_t = spec.duration * (1 - spec.overlap)
    xs = _centers(-half_ap, half_ap, spec.width, step_x)
    ts = _centers(t_mid - t_half, t_mid + t_half, spec.duration, step_t)
    return [SpeckleWindow(float(x), float(t), spec.width, spec.duration) for t in ts for x in xs]


def _centers(lo, hi, size, step):
    span = hi - lo - size
    if span < 0:
        return np.array([(lo + hi) / 2])
    n = int(math.floor(span / step + 1e-9)) + 1
    used = (n - 1) * step
    return lo + size / 2 + (span - used) / 2 + step * np.arange(n)


def summarize_tracks(tracks, fs: float, spec: WindowGridSpec = WindowGridSpec()) -> dict:
    """Aggregate statistics for one tilt angle (``fs`` in MHz)."""
    used = [t for t in tracks if not t.skipped]
    good = [t for t in used if t.rho >= spec.rho_min]
    tol_t = spec.tol_t_samples / (fs * 1e6)
    ok = [t for t in good if abs(t.error_x) <= spec.tol_x and abs(t.error_t) <= tol_t]
    ex = np.array([t.error_x for t in good])
    et = np.array([t.error_t for t in good])
    theta = tracks[0].theta if tracks else np.nan
    return {
        "angle": float(theta),
        "n_windows": len(tracks),
        "n_skipped": len(tracks) - len(used),
        "n_correlated": len(good),
        "mean_rho": float(np.mean([t.rho for t in used])) if used else float("nan"),
        "rms_dx_mm": float(np.sqrt(np.mean(ex**2))) if good else float("nan"),
        "rms_dt_s": float(np.sqrt(np.mean(et**2))) if good else float("nan"),
        "pass_fraction": len(ok) / len(good) if good else 0.0,
    }


def validate_memory_effect(dataset: RFDataSet, spec: WindowGridSpec = WindowGridSpec(), c=None) -> dict:
    """Track speckle from the zero-tilt frame into every other frame.

    Returns ``{"angles": [per-angle summary, ...], "spec": {...}}``.
    """
    c = dataset.sos if c is None else c
    zero = [i for i, a in enumerate(dataset.angles) if abs(a) < 1e-12]
    if not zero:
        raise ValueError("dataset has no zero-tilt reference frame")
    i_ref = zero[0]
    ref = dataset.frames[i_ref]
    pitch = dataset.probe.pitch
    windows = window_grid(ref, pitch, spec)
    rows = []
    others = [i for i in range(len(dataset)) if i != i_ref]
    if not others:
        others = [i_ref]
    for i in others:
        fr = dataset.frames[i]
        tracks = track_speckle(ref, fr, windows, pitch, c,
                               margin_samples=spec.margin_samples,
                               margin_elements=spec.margin_elements)
        rows.append(summarize_tracks(tracks, ref.sampling_frequency, spec))
    return {"angles": rows, "spec": spec.__dict__.copy(), "reference_index": i_ref}
