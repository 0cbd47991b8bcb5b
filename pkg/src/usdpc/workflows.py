"""Config-driven orchestration shared by the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import phantom as ph
from .acoustics import Medium, RFDataSet
from .beamform import BeamformGrid
from .dpc import DPCImage, DpcParams, dpc_pipeline
from .forward import SimulationConfig, simulate_sequence
from .io import GridSpec, RunConfig
from .sos import LinearityFit, PhaseProfile, excursion, integrate_transverse, linearity_fit


def build_phantom(cfg: RunConfig, *, inclusion_type=None, seed=None) -> ph.Phantom:
    spec = cfg.phantom
    seed = cfg.seed if seed is None else seed
    kind = inclusion_type or spec.inclusion_type
    region = ph.Region(*spec.region) if spec.region else None
    common = dict(seed=seed, density=spec.density, region=region, c0=spec.background_sos)
    if spec.preset == "sphere049":
        return ph.sphere049(kind, inclusion_top=spec.inclusion_top, **common)
    if spec.preset == "cylinders049A":
        return ph.cylinders049a(kind, **common)
    if spec.preset == "homogeneous":
        return ph.homogeneous(**common)
    if region is None:
        raise ValueError("a custom phantom needs an explicit region")
    disks = [ph.DiskInclusion(i.x, i.z, i.radius, i.sos) for i in spec.inclusions]
    density = spec.density or ph.min_density(cfg.probe.center_frequency, spec.background_sos)
    scat = ph.generate_scatterers(region, density, seed)
    return ph.Phantom(Medium(spec.background_sos), region, scat, tuple(disks), seed)


def simulation_config(cfg: RunConfig, seed=None) -> SimulationConfig:
    s = cfg.simulation
    return SimulationConfig(s.duration, s.include_spreading, s.include_directivity, s.noise_rms,
                            cfg.seed if seed is None else seed)


def simulate_from_config(cfg: RunConfig, *, inclusion_type=None, seed=None) -> RFDataSet:
    phantom = build_phantom(cfg, inclusion_type=inclusion_type, seed=seed)
    return simulate_sequence(phantom, cfg.probe_geometry(), cfg.transmit_pulse(), cfg.angle_list(),
                             simulation_config(cfg, seed))


def grid_from_spec(spec: GridSpec | None) -> BeamformGrid | None:
    if spec is None:
        return None
    return BeamformGrid(spec.x_min, spec.x_max, spec.z_min, spec.z_max, spec.pixel_pitch)


def default_grid(dataset: RFDataSet, T_max: float = 0.0, pixel_pitch: float = 0.0727,
                 z_min: float = 5.0, z_cap: float = 40.0) -> BeamformGrid:
    """Grid spanning the central aperture, as deep as the record allows after a
    pre-delay of ``T_max`` samples."""
    fr = dataset.frames[0]
    fs = fr.sampling_frequency * 1e6
    t_end = fr.time_origin + (fr.n_samples - 1) / fs
    half_ap = dataset.probe.aperture / 2
    usable = t_end - T_max / fs
    # the far edge element adds path beyond the round trip
    z_max = min(z_cap, 0.5 * dataset.sos * usable * 1e3 * 0.8)
    if z_max <= z_min:
        raise ValueError("record too short for the requested pre-delay")
    x = round(0.8 * half_ap, 3)
    return BeamformGrid(-x, x, z_min, z_max, pixel_pitch)


def dpc_params(cfg: RunConfig, grid: BeamformGrid) -> DpcParams:
    d = cfg.dpc
    return DpcParams(grid, tuple(d.T), d.m, d.na, d.sigma, d.mode)


def inclusion_grid(phantom: ph.Phantom, pixel_pitch: float = 0.0727, margin: float = 4.0) -> BeamformGrid:
    disk = phantom.inclusions[0]
    r = disk.radius + margin
    return BeamformGrid(disk.x - r, disk.x + r, max(disk.z - r, 1.0), disk.z + r, pixel_pitch)


@dataclass
class SoscalResult:
    rows: list
    fit: LinearityFit
    profiles: dict
    images: dict


def soscal_sweep(cfg: RunConfig, *, seed=None) -> SoscalResult:
    """Simulate each inclusion type, reconstruct DPC, integrate across the
    inclusion equator and fit excursion against delta-SoS."""
    seed = cfg.seed if seed is None else seed
    rows, profiles, images = [], {}, {}
    for kind in cfg.soscal.types:
        phantom = build_phantom(cfg, inclusion_type=kind, seed=seed)
        if not phantom.inclusions:
            raise ValueError("soscal needs a phantom with an inclusion")
        grid = grid_from_spec(cfg.dpc.grid) or inclusion_grid(phantom)
        dataset = simulate_sequence(phantom, cfg.probe_geometry(), cfg.transmit_pulse(),
                                    cfg.angle_list(), simulation_config(cfg, seed))
        image = dpc_pipeline(dataset, params=dpc_params(cfg, grid))
        disk = phantom.inclusions[0]
        z_c = cfg.soscal.z_center if cfg.soscal.z_center is not None else disk.z
        prof = integrate_transverse(image, z_c, cfg.soscal.band_half_width, detrend=cfg.soscal.detrend)
        exc = excursion(prof)
        rows.append({
            "type": kind,
            "sos": disk.sos,
            "delta_sos": disk.sos - phantom.c0,
            "excursion_rad": exc,
            "n_pairs": image.n_pairs,
        })
        profiles[kind] = prof
        images[kind] = image
    fit = linearity_fit([(r["delta_sos"], r["excursion_rad"]) for r in rows])
    return SoscalResult(rows, fit, profiles, images)
