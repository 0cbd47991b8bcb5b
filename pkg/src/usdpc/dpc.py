"""Differential phase contrast from pairs of tilted plane-wave transmits.

Pipeline per pre-delay ``T`` (in sampling periods):

1. advance every raw RF frame by ``T * cos(theta_n)``;
2. analytic conversion and standard delay-and-sum beamforming;
3. register each pair ``(n, n + m)`` by shifting the two images laterally by
   half the shear in opposite directions;
4. phase of ``B_a * conj(B_b)``;
5. average over pairs (angular compounding) and over ``T`` (delay compounding).

Registration direction
----------------------
With the transmit-delay convention ``(z cos(theta) + x sin(theta)) / c`` the
speckle in image ``n`` sits at ``x_s + (c T / 2) tan(theta_n)``. The registered
images are therefore ``B_a(x + dx / 2)`` and ``B_b(x - dx / 2)`` with
``dx = (c T / 2)(tan(theta_a) - tan(theta_b))``, which overlays the two speckle
copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft, rfftfreq
from scipy.ndimage import gaussian_filter1d

from .acoustics import ProbeGeometry, RFDataSet, RFFrame, analytic_signal
from .beamform import BeamformGrid, ComplexImage, das_beamform

COMPOUNDING_MODES = ("mean", "product")


@dataclass(frozen=True)
class DpcParams:
    """Settings for :func:`dpc_pipeline`.

    ``compounding_mode`` is ``"mean"`` (arithmetic mean of the per-pair phase
    maps) or ``"product"`` (phase of the summed pair products).
    """

    grid: BeamformGrid
    T_list: tuple = (800,)
    m: int = 1
    na: float = 0.6
    gaussian_sigma: float = 0.0
    compounding_mode: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "T_list", tuple(float(t) for t in self.T_list))
        if not self.T_list:
            raise ValueError("T_list must not be empty")
        if any(t <= 0 for t in self.T_list):
            raise ValueError("every pre-delay T must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be an integer >= 1")
        if not 0 < self.na <= 1:
            raise ValueError("na must lie in (0, 1]")
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be non-negative")
        if self.compounding_mode not in COMPOUNDING_MODES:
            raise ValueError(f"compounding_mode must be one of {COMPOUNDING_MODES}")


@dataclass
class DPCImage:
    """Phase-difference map (rad) indexed ``[x, z]``.

    ``pairs``, ``T_values`` and ``shears`` list one entry per contributing
    pair image, in compounding order.
    """

    values: np.ndarray
    grid: BeamformGrid
    valid: np.ndarray | None = None
    pairs: list = field(default_factory=list)
    T_values: list = field(default_factory=list)
    shears: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.values.shape, dtype=bool)

    @property
    def shear_effective(self) -> float:
        """Mean signed shear (mm) over contributing pairs."""
        if not self.shears:
            raise ValueError("image carries no shear metadata")
        return float(np.mean(self.shears))

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


def predelay_frame(frame: RFFrame, T: float, theta=None, c=None) -> RFFrame:
    """Advance a raw frame by ``T * cos(theta)`` sampling periods.

    ``theta`` defaults to the frame's tilt angle. The fractional shift is a
    linear phase ramp on the zero-padded spectrum, exact for band-limited
    data; samples advanced past the end of the record are zero.
    """
    if T < 0:
        raise ValueError("pre-delay T must be non-negative")
    theta = frame.angle if theta is None else theta
    fs = frame.sampling_frequency * 1e6
    shift = T * np.cos(theta)
    n = frame.n_samples
    if shift >= n:
        raise ValueError(
            f"pre-delay of {shift:.1f} samples exceeds the record length of {n} samples"
        )
    if shift == 0:
        return frame
    n_fft = next_fast_len(n + int(np.ceil(shift)) + 1)
    spec = rfft(frame.samples, n_fft, axis=1)
    spec *= np.exp(2j * np.pi * rfftfreq(n_fft) * shift)[None, :]
    out = irfft(spec, n_fft, axis=1)[:, :n]
    return replace(frame, samples=out, predelay=frame.predelay + shift / fs)


def shear_offset(T: float, theta_a: float, theta_b: float, c: float = 1540.0, fs: float = 21.2) -> float:
    """Lateral shear (mm) between the speckle copies of two tilts.

    ``T`` is in sampling periods and ``fs`` in MHz.
    """
    return (c * T / (fs * 1e6) / 2) * (np.tan(theta_a) - np.tan(theta_b)) * 1e3


def _shift_lateral(values, grid: BeamformGrid, offset: float):
    """Sample ``values`` at ``x + offset`` by linear interpolation along x."""
    nx = values.shape[0]
    pos = np.arange(nx) + offset / grid.pixel_pitch
    valid = (pos >= -1e-9) & (pos <= nx - 1 + 1e-9)
    pos = np.clip(pos, 0, nx - 1)
    k = np.minimum(np.floor(pos).astype(int), nx - 2)
    a = (pos - k)[:, None]
    out = (1 - a) * values[k] + a * values[k + 1]
    out[~valid] = 0
    return out, np.broadcast_to(valid[:, None], values.shape).copy()


def register_pair(B_a: ComplexImage, B_b: ComplexImage, dx: float):
    """Overlay the sheared speckle copies: returns ``(B_a(x + dx/2), B_b(x - dx/2))``.

    Pixels that would sample outside the grid are flagged in ``meta["valid"]``.
    """
    if B_a.grid != B_b.grid:
        raise ValueError("register_pair needs images on one grid")
    grid = B_a.grid
    width = grid.x_max - grid.x_min
    if abs(dx) > width:
        raise ValueError(f"shear {dx} mm exceeds the grid width {width} mm")
    va, ma = _shift_lateral(B_a.values, grid, dx / 2)
    vb, mb = _shift_lateral(B_b.values, grid, -dx / 2)
    ra = replace(B_a, values=va, meta={**B_a.meta, "valid": ma, "shift": dx / 2})
    rb = replace(B_b, values=vb, meta={**B_b.meta, "valid": mb, "shift": -dx / 2})
    return ra, rb


def _valid(image: ComplexImage):
    v = image.meta.get("valid")
    return np.ones(image.values.shape, dtype=bool) if v is None else v


def _wrap(phase):
    # principal value in (-pi, pi]
    phase = np.asarray(phase, dtype=float)
    return np.where(phase <= -np.pi, phase + 2 * np.pi, phase)


def dpc_pair(Bh_a: ComplexImage, Bh_b: ComplexImage) -> DPCImage:
    """Per-pixel ``arg(B_a * conj(B_b))``; pixels with no data in either image are invalid."""
    if Bh_a.grid != Bh_b.grid:
        raise ValueError("dpc_pair needs images on one grid")
    a, b = Bh_a.values, Bh_b.values
    # explicit parts keep arg(a b*) = -arg(b a*) bit-exact
    re = a.real * b.real + a.imag * b.imag
    im = a.imag * b.real - a.real * b.imag
    prod = re + 1j * im
    valid = _valid(Bh_a) & _valid(Bh_b) & (prod != 0)
    values = np.where(valid, _wrap(np.arctan2(im, re)), 0.0)
    return DPCImage(values, Bh_a.grid, valid, meta={"product": prod})


def gaussian_smooth(image, sigma: float, pixel_pitch=None, valid=None):
    """Separable Gaussian smoothing with a renormalised truncated kernel.

    Accepts a :class:`DPCImage` (``sigma`` in mm) or a bare 2D array
    (``sigma`` in mm when ``pixel_pitch`` is given, else in pixels). Invalid
    pixels carry no weight.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if isinstance(image, DPCImage):
        if sigma == 0:
            return image
        vals = gaussian_smooth(image.values, sigma, image.grid.pixel_pitch, image.valid)
        return replace(image, values=vals, meta={**image.meta, "gaussian_sigma": sigma})
    arr = np.asarray(image, dtype=float)
    if sigma == 0:
        return arr.copy()
    s = sigma / pixel_pitch if pixel_pitch else sigma
    w = np.ones(arr.shape) if valid is None else valid.astype(float)
    num = arr * w
    den = w
    for axis in range(arr.ndim):
        num = gaussian_filter1d(num, s, axis=axis, mode="constant", cval=0.0, truncate=4.0)
        den = gaussian_filter1d(den, s, axis=axis, mode="constant", cval=0.0, truncate=4.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)
    return out


def beamform_predelayed(dataset: RFDataSet, T: float, grid: BeamformGrid, c=None, na=0.6,
                        probe: ProbeGeometry | None = None):
    """Steps 2-3 for every frame: pre-delay, analytic conversion, beamforming."""
    probe = probe or dataset.probe
    c = dataset.sos if c is None else c
    return [
        das_beamform(analytic_signal(predelay_frame(fr, T)), probe, grid, c, na)
        for fr in dataset.frames
    ]


def pair_images(dataset: RFDataSet, params: DpcParams, c=None, probe=None):
    """Yield one registered-pair :class:`DPCImage` per ``(T, n)`` in compounding order."""
    probe = probe or dataset.probe
    c = dataset.sos if c is None else c
    n_ang = len(dataset)
    if n_ang < params.m + 1:
        raise ValueError(f"need at least m + 1 = {params.m + 1} angles, got {n_ang}")
    fs = dataset.frames[0].sampling_frequency
    for T in params.T_list:
        images = beamform_predelayed(dataset, T, params.grid, c, params.na, probe)
        for n in range(n_ang - params.m):
            a, b = images[n], images[n + params.m]
            dx = shear_offset(T, a.angle, b.angle, c, fs)
            ra, rb = register_pair(a, b, dx)
            img = dpc_pair(ra, rb)
            img.pairs = [(n, n + params.m)]
            img.T_values = [T]
            img.shears = [dx]
            yield img


def compound(images, mode: str = "mean") -> DPCImage:
    """Combine pair images; each pixel averages only the pairs valid there."""
    images = list(images)
    if not images:
        raise ValueError("empty pair set")
    if mode not in COMPOUNDING_MODES:
        raise ValueError(f"compounding_mode must be one of {COMPOUNDING_MODES}")
    grid = images[0].grid
    count = np.zeros(grid.shape)
    acc = np.zeros(grid.shape, dtype=float if mode == "mean" else complex)
    for im in images:
        if mode == "mean":
            acc += np.where(im.valid, im.values, 0.0)
        else:
            acc += np.where(im.valid, im.meta.get("product", np.exp(1j * im.values)), 0)
        count += im.valid
    valid = count > 0
    if mode == "mean":
        values = np.where(valid, acc / np.maximum(count, 1), 0.0)
    else:
        values = np.where(valid, _wrap(np.angle(acc)), 0.0)
    out = DPCImage(values, grid, valid, meta={"compounding_mode": mode, "count": count})
    for im in images:
        out.pairs += im.pairs
        out.T_values += im.T_values
        out.shears += im.shears
    return out


def dpc_pipeline(dataset: RFDataSet, probe: ProbeGeometry | None = None, c=None,
                 params: DpcParams | None = None, *, keep_pairs: bool = False) -> DPCImage:
    """Full DPC reconstruction with angular and delay compounding.

    With ``keep_pairs`` the individual pair images are stored in
    ``meta["pair_images"]`` (unsmoothed).
    """
    if params is None:
        raise ValueError("DpcParams are required")
    pairs = list(pair_images(dataset, params, c, probe))
    if params.compounding_mode == "mean" and not keep_pairs:
        for im in pairs:
            im.meta.pop("product", None)
    out = compound(pairs, params.compounding_mode)
    if keep_pairs:
        out.meta["pair_images"] = pairs
    out = gaussian_smooth(out, params.gaussian_sigma)
    out.meta.update({"m": params.m, "na": params.na, "T_list": list(params.T_list)})
    return out
