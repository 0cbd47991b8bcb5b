"""RF container, image export and run configuration.

RF container layout (little-endian)::

    magic        8 bytes   b"USDPCRF1"
    version      u16
    n_transmits  u32
    n_elements   u32
    n_samples    u32
    fs           f64  Hz
    f0           f64  Hz
    pitch        f64  m
    c0           f64  m/s
    time_origin  f64  s
    angles       f64[n_transmits]  rad, acquisition order
    payload      f32[n_transmits][n_elements][n_samples]
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .acoustics import ProbeGeometry, RFDataSet, RFFrame, TransmitPulse

MAGIC = b"USDPCRF1"
VERSION = 1
_HEAD = struct.Struct("<8sHIII5d")


class ContainerError(ValueError):
    """Base class for RF container problems."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


class DimensionMismatchError(ContainerError):
    pass


def write_rf(dataset: RFDataSet, path) -> None:
    frames = dataset.frames
    if not frames:
        raise ValueError("cannot write an empty dataset")
    f0 = frames[0]
    for fr in frames:
        if fr.samples.shape != f0.samples.shape:
            raise DimensionMismatchError("all frames must share one [element, sample] shape")
        if fr.time_origin != f0.time_origin or fr.sampling_frequency != f0.sampling_frequency:
            raise DimensionMismatchError("all frames must share time origin and sampling frequency")
        if fr.predelay != 0:
            raise ValueError("the container stores raw frames only (predelay must be 0)")
    n_el, n_t = f0.samples.shape
    probe = dataset.probe
    head = _HEAD.pack(
        MAGIC, VERSION, len(frames), n_el, n_t,
        f0.sampling_frequency * 1e6, probe.center_frequency * 1e6, probe.pitch * 1e-3,
        float(dataset.sos), float(f0.time_origin),
    )
    angles = np.asarray(dataset.angles, dtype="<f8").tobytes()
    payload = np.stack([fr.samples for fr in frames]).astype("<f4", copy=False).tobytes()
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(angles)
        fh.write(payload)


def read_rf(path) -> RFDataSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        if raw[:8] != MAGIC[: len(raw[:8])]:
            raise BadMagicError(f"{path}: not an RF container (bad magic)")
        raise TruncatedPayloadError(f"{path}: header truncated")
    magic, version, n_tx, n_el, n_t, fs, f0, pitch, c0, t0 = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not an RF container (bad magic {magic!r})")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported container version {version}")
    off = _HEAD.size
    need_angles = 8 * n_tx
    need_payload = 4 * n_tx * n_el * n_t
    if len(raw) < off + need_angles + need_payload:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(raw) - off - need_angles} bytes, header implies {need_payload}"
        )
    if len(raw) > off + need_angles + need_payload:
        raise DimensionMismatchError(
            f"{path}: {len(raw) - off - need_angles - need_payload} trailing bytes beyond header dimensions"
        )
    angles = np.frombuffer(raw, "<f8", n_tx, off)
    data = np.frombuffer(raw, "<f4", n_tx * n_el * n_t, off + need_angles).reshape(n_tx, n_el, n_t)
    try:
        probe = ProbeGeometry(int(n_el), pitch * 1e3, f0 / 1e6, fs / 1e6)
    except ValueError as exc:
        raise DimensionMismatchError(f"{path}: inconsistent header ({exc})") from exc
    frames = [RFFrame(data[i].copy(), fs / 1e6, t0, float(angles[i])) for i in range(n_tx)]
    return RFDataSet(frames, probe, c0)


def as_float32(dataset: RFDataSet) -> RFDataSet:
    """Copy of ``dataset`` quantised to the container's payload precision."""
    frames = [RFFrame(fr.samples.astype(np.float32), fr.sampling_frequency, fr.time_origin,
                      fr.angle, fr.predelay) for fr in dataset.frames]
    return RFDataSet(frames, dataset.probe, dataset.sos, dict(dataset.meta))


# image export ---------------------------------------------------------------

def _as_map(image, x=None, z=None):
    grid = getattr(image, "grid", None)
    values = getattr(image, "values", image)
    values = np.asarray(values)
    if np.iscomplexobj(values):
        values = np.abs(values)
    values = values.astype(float)
    if values.ndim != 2:
        raise ValueError("image must be 2D")
    if grid is not None:
        x = grid.x if x is None else x
        z = grid.z if z is None else z
    x = np.arange(values.shape[0], dtype=float) if x is None else np.asarray(x, dtype=float)
    z = np.arange(values.shape[1], dtype=float) if z is None else np.asarray(z, dtype=float)
    return values, x, z


def export_image(image, path, format: Literal["pgm16", "csv"] = "pgm16", *, x=None, z=None) -> None:
    """Write an ``[x, z]`` map as 16-bit PGM (with a ``.scale.txt`` sidecar) or CSV.

    PGM rows run along depth. Complex input is exported as magnitude.
    """
    values, x, z = _as_map(image, x, z)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        ix, iz = bad[0]
        raise ValueError(f"non-finite value {values[ix, iz]} at index (x={ix}, z={iz})")
    path = Path(path)
    if format == "pgm16":
        lo, hi = float(values.min()), float(values.max())
        if hi > lo:
            scaled = np.rint((values - lo) / (hi - lo) * 65535)
        else:
            scaled = np.zeros(values.shape)
        pix = scaled.T.astype(">u2")
        nz, nx = pix.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{nx} {nz}\n65535\n".encode("ascii"))
            fh.write(pix.tobytes())
        sidecar = path.with_name(path.name + ".scale.txt")
        sidecar.write_text(
            f"min {lo!r}\nmax {hi!r}\nrule value = min + pixel / 65535 * (max - min)\n"
            f"x_mm {x[0]!r} {x[-1]!r} {x.size}\nz_mm {z[0]!r} {z[-1]!r} {z.size}\n"
        )
    elif format == "csv":
        lines = ["z_mm\\x_mm," + ",".join(repr(float(v)) for v in x)]
        for j, zz in enumerate(z):
            lines.append(repr(float(zz)) + "," + ",".join(repr(float(v)) for v in values[:, j]))
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown export format {format!r}")


def read_csv_image(path):
    """Inverse of the CSV export: returns ``(values[x, z], x, z)``."""
    rows = Path(path).read_text().strip().splitlines()
    x = np.array([float(v) for v in rows[0].split(",")[1:]])
    body = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    return body[:, 1:].T.copy(), x, body[:, 0].copy()


def read_pgm16(path):
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, nz = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], ">u2", nx * nz).reshape(nz, nx).T.copy()


# run configuration ------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InclusionSpec(_Strict):
    x: float
    z: float
    radius: float = Field(gt=0)
    sos: float = Field(gt=0)


class PhantomSpec(_Strict):
    preset: Literal["sphere049", "cylinders049A", "homogeneous", "custom"] = "sphere049"
    inclusion_type: Literal["I", "II", "III", "IV"] = "IV"
    region: tuple[float, float, float, float] | None = None
    density: float | None = Field(default=None, gt=0)
    inclusion_top: float = 15.0
    background_sos: float = Field(default=1540.0, gt=0)
    inclusions: list[InclusionSpec] = []


class ProbeSpec(_Strict):
    n_elements: int = Field(default=192, ge=2)
    pitch: float = Field(default=0.23, gt=0)
    center_frequency: float = Field(default=5.3, gt=0)
    sampling_frequency: float = Field(default=21.2, gt=0)


class PulseSpec(_Strict):
    fractional_bandwidth: float = Field(default=0.6, gt=0, le=1)
    amplitude: float = 1.0


class SimulationSpec(_Strict):
    duration: float | None = None
    include_spreading: bool = True
    include_directivity: bool = True
    noise_rms: float = Field(default=0.0, ge=0)


class GridSpec(_Strict):
    x_min: float
    x_max: float
    z_min: float
    z_max: float
    pixel_pitch: float = Field(default=0.0727, gt=0)


class DpcSpec(_Strict):
    T: list[float] = [800.0]
    m: int = Field(default=1, ge=1)
    na: float = Field(default=0.6, gt=0, le=1)
    sigma: float = Field(default=0.0, ge=0)
    mode: Literal["mean", "product"] = "mean"
    grid: GridSpec | None = None


class SoscalSpec(_Strict):
    types: list[Literal["I", "II", "III", "IV"]] = ["I", "II", "III", "IV"]
    band_half_width: float = Field(default=1.0, gt=0)
    detrend: bool = True
    z_center: float | None = None


class OutputSpec(_Strict):
    rf: str | None = None
    image: str | None = None
    table: str | None = None


class RunConfig(_Strict):
    seed: int = 0
    phantom: PhantomSpec = PhantomSpec()
    probe: ProbeSpec = ProbeSpec()
    pulse: PulseSpec = PulseSpec()
    angles: list[float] | None = None
    simulation: SimulationSpec = SimulationSpec()
    dpc: DpcSpec = DpcSpec()
    soscal: SoscalSpec = SoscalSpec()
    output: OutputSpec = OutputSpec()

    @field_validator("angles")
    @classmethod
    def _angles(cls, v):
        if v is not None:
            if not v:
                raise ValueError("angles must not be empty")
            if any(abs(a) >= np.pi / 4 for a in v):
                raise ValueError("every angle must satisfy |theta| < pi/4")
        return v

    def probe_geometry(self) -> ProbeGeometry:
        return ProbeGeometry(**self.probe.model_dump())

    def transmit_pulse(self) -> TransmitPulse:
        return TransmitPulse(self.probe.center_frequency, **self.pulse.model_dump())

    def angle_list(self):
        if self.angles is None:
            return list(np.linspace(-0.15, 0.15, 13))
        return list(self.angles)


class ConfigError(ValueError):
    pass


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration; unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
