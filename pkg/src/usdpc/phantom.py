"""Virtual scattering phantoms with disk-shaped speed-of-sound inclusions.

Geometry is 2D in the imaging plane: spherical and cylindrical inclusions are
represented by disks. All positions are in mm, depth ``z`` positive below the
array face.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .acoustics import DEFAULT_SOS, Medium

#: Nominal inclusion speeds of sound (m/s) for the four calibrated inclusion types.
INCLUSION_TYPES = {"I": 1530.0, "II": 1533.0, "III": 1552.0, "IV": 1572.0}

#: Minimum scatterer density for fully developed speckle, per squared wavelength.
MIN_SCATTERERS_PER_WAVELENGTH2 = 5.0

CYLINDER_DIAMETERS = (2.5, 4.1, 6.5, 10.4)


@dataclass(frozen=True)
class Region:
    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.z_max > self.z_min):
            raise ValueError(f"region must have positive area, got {self}")
        if self.z_min < 0:
            raise ValueError("region must lie below the array plane (z_min >= 0)")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.z_max - self.z_min)

    def contains_disk(self, disk: "DiskInclusion") -> bool:
        return (
            disk.x - disk.radius >= self.x_min
            and disk.x + disk.radius <= self.x_max
            and disk.z - disk.radius >= self.z_min
            and disk.z + disk.radius <= self.z_max
        )


@dataclass(frozen=True)
class Scatterer:
    x: float
    z: float
    reflectivity: float = 1.0


@dataclass(frozen=True)
class Scatterers:
    """Columnar scatterer storage; iterating yields :class:`Scatterer`."""

    x: np.ndarray
    z: np.ndarray
    reflectivity: np.ndarray

    def __post_init__(self):
        x, z, r = (np.asarray(a, dtype=float).ravel() for a in (self.x, self.z, self.reflectivity))
        if not (x.shape == z.shape == r.shape):
            raise ValueError("scatterer arrays must share one length")
        if np.any(z <= 0):
            raise ValueError("scatterers must lie below the array plane (z > 0)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "reflectivity", r)

    @classmethod
    def from_list(cls, items) -> "Scatterers":
        items = list(items)
        return cls(
            np.array([s.x for s in items], dtype=float),
            np.array([s.z for s in items], dtype=float),
            np.array([s.reflectivity for s in items], dtype=float),
        )

    @classmethod
    def empty(cls) -> "Scatterers":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    def __len__(self):
        return self.x.size

    def __iter__(self):
        for x, z, r in zip(self.x, self.z, self.reflectivity):
            yield Scatterer(float(x), float(z), float(r))

    def __add__(self, other: "Scatterers") -> "Scatterers":
        return Scatterers(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.reflectivity, other.reflectivity]),
        )

    def scaled(self, factor: float) -> "Scatterers":
        return Scatterers(self.x, self.z, self.reflectivity * factor)

    def translated(self, dx: float = 0.0, dz: float = 0.0) -> "Scatterers":
        return Scatterers(self.x + dx, self.z + dz, self.reflectivity)


@dataclass(frozen=True)
class DiskInclusion:
    x: float
    z: float
    radius: float
    sos: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("inclusion radius must be positive")
        if not self.sos > 0:
            raise ValueError("inclusion sos must be positive")

    def overlaps(self, other: "DiskInclusion") -> bool:
        return np.hypot(self.x - other.x, self.z - other.z) < self.radius + other.radius


@dataclass(frozen=True)
class Phantom:
    medium: Medium
    region: Region
    scatterers: Scatterers = field(default_factory=Scatterers.empty)
    inclusions: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        for disk in self.inclusions:
            if not self.region.contains_disk(disk):
                raise ValueError(f"inclusion {disk} is not fully inside {self.region}")
        for i, a in enumerate(self.inclusions):
            for b in self.inclusions[i + 1:]:
                if a.overlaps(b):
                    raise ValueError(f"inclusions overlap: {a} and {b}")

    @property
    def c0(self) -> float:
        return self.medium.background_sos

    @property
    def scatterer_density(self) -> float:
        """Scatterers per mm^2 over the region."""
        return len(self.scatterers) / self.region.area

    def with_inclusions(self, inclusions) -> "Phantom":
        return replace(self, inclusions=tuple(inclusions))

    def with_scatterers(self, scatterers: Scatterers) -> "Phantom":
        return replace(self, scatterers=scatterers)

    def inclusion_arrays(self):
        """(x, z, radius, excess slowness in s/mm) arrays for the numba kernels."""
        n = len(self.inclusions)
        out = np.zeros((4, n))
        for i, d in enumerate(self.inclusions):
            out[:, i] = d.x, d.z, d.radius, (1.0 / d.sos - 1.0 / self.c0) * 1e-3
        return out


def min_density(center_frequency: float = 5.3, c: float = DEFAULT_SOS) -> float:
    """Density (per mm^2) giving 5 scatterers per squared wavelength."""
    wavelength = c / (center_frequency * 1e6) * 1e3
    return MIN_SCATTERERS_PER_WAVELENGTH2 / wavelength**2


def generate_scatterers(region: Region, density: float, seed=None) -> Scatterers:
    """Uniformly placed scatterers with zero-mean unit-variance Gaussian reflectivity.

    The count is ``round(density * area)``.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    if not region.area > 0:
        raise ValueError("region must have positive area")
    rng = np.random.default_rng(seed)
    n = int(round(density * region.area))
    x = rng.uniform(region.x_min, region.x_max, n)
    # keep strictly below the array face
    z = rng.uniform(region.z_min, region.z_max, n)
    z = np.where(z <= 0, np.nextafter(0.0, 1.0), z)
    r = rng.standard_normal(n)
    return Scatterers(x, z, r)


@numba.njit(cache=True)
def _chord(cx, cz, radius, x0, z0, x1, z1):
    dx = x1 - x0
    dz = z1 - z0
    a = dx * dx + dz * dz
    if a == 0.0:
        return 0.0
    fx = x0 - cx
    fz = z0 - cz
    b = dx * fx + dz * fz
    cc = fx * fx + fz * fz - radius * radius
    disc = b * b - a * cc
    if disc <= 0.0:
        return 0.0
    sq = np.sqrt(disc)
    t1 = (-b - sq) / a
    t2 = (-b + sq) / a
    if t1 < 0.0:
        t1 = 0.0
    if t2 > 1.0:
        t2 = 1.0
    if t2 <= t1:
        return 0.0
    return (t2 - t1) * np.sqrt(a)


@numba.njit(cache=True)
def _excess_delay(incl, x0, z0, x1, z1):
    total = 0.0
    for i in range(incl.shape[1]):
        length = _chord(incl[0, i], incl[1, i], incl[2, i], x0, z0, x1, z1)
        if length > 0.0:
            total += length * incl[3, i]
    return total


def chord_length(disk: DiskInclusion, p0, p1) -> float:
    """Length (mm) of the part of segment ``p0 -> p1`` lying inside ``disk``."""
    (x0, z0), (x1, z1) = p0, p1
    if x0 == x1 and z0 == z1:
        raise ValueError("segment endpoints must differ")
    return float(_chord(disk.x, disk.z, disk.radius, float(x0), float(z0), float(x1), float(z1)))


def ray_excess_delay(phantom: Phantom, p0, p1) -> float:
    """Straight-ray travel-time excess (s) relative to the background medium.

    Negative when the ray crosses faster-than-background inclusions.
    """
    (x0, z0), (x1, z1) = p0, p1
    if x0 == x1 and z0 == z1:
        raise ValueError("segment endpoints must differ")
    total = 0.0
    for disk in phantom.inclusions:
        length = chord_length(disk, p0, p1)
        total += length * 1e-3 * (1.0 / disk.sos - 1.0 / phantom.c0)
    return total


def sphere049(
    inclusion_type: str = "IV",
    *,
    seed=0,
    density=None,
    region: Region | None = None,
    inclusion_top: float = 15.0,
    diameter: float = 10.0,
    c0: float = DEFAULT_SOS,
) -> Phantom:
    """Single 10 mm disk whose top edge lies ``inclusion_top`` mm below the surface."""
    region = region or Region(-15.0, 15.0, 1.0, 75.0)
    radius = diameter / 2
    disk = DiskInclusion(0.0, inclusion_top + radius, radius, INCLUSION_TYPES[inclusion_type])
    return _random_phantom(region, [disk], seed, density, c0)


def cylinders049a(
    inclusion_type: str = "IV",
    *,
    seed=0,
    density=None,
    region: Region | None = None,
    depths=(30.0, 60.0),
    gap: float = 4.0,
    c0: float = DEFAULT_SOS,
) -> Phantom:
    """Two rows of disks: diameters increase left to right at the shallow depth
    and decrease at the deep one."""
    diam = np.array(CYLINDER_DIAMETERS)
    width = diam.sum() + gap * (len(diam) - 1)
    left_edges = -width / 2 + np.concatenate([[0.0], np.cumsum(diam[:-1] + gap)])
    centers = left_edges + diam / 2
    sos = INCLUSION_TYPES[inclusion_type]
    disks = [DiskInclusion(float(x), depths[0], d / 2, sos) for x, d in zip(centers, diam)]
    # reversed order at the deep row, same lateral footprint
    left = -width / 2
    for d in diam[::-1]:
        disks.append(DiskInclusion(float(left + d / 2), depths[1], d / 2, sos))
        left += d + gap
    region = region or Region(-width / 2 - 6.0, width / 2 + 6.0, 1.0, depths[1] + 12.0)
    return _random_phantom(region, disks, seed, density, c0)


def homogeneous(*, seed=0, density=None, region: Region | None = None, c0: float = DEFAULT_SOS) -> Phantom:
    region = region or Region(-15.0, 15.0, 1.0, 75.0)
    return _random_phantom(region, [], seed, density, c0)


def _random_phantom(region, inclusions, seed, density, c0) -> Phantom:
    floor = min_density(c=c0)
    if density is None:
        density = floor
    elif density < floor * (1 - 1e-9):
        raise ValueError(
            f"density {density:.2f}/mm^2 is below the fully developed speckle floor {floor:.2f}/mm^2"
        )
    scat = generate_scatterers(region, density, seed)
    return Phantom(Medium(c0), region, scat, tuple(inclusions), seed)


PRESETS = {"sphere049": sphere049, "cylinders049A": cylinders049a, "homogeneous": homogeneous}


def preset(name: str, **kwargs) -> Phantom:
    """Build a named preset. ``name`` may carry a type suffix, e.g. ``sphere049-I``."""
    base, _, kind = name.partition("-")
    if base not in PRESETS:
        raise KeyError(f"unknown phantom preset {name!r}; choose from {sorted(PRESETS)}")
    if kind:
        if kind not in INCLUSION_TYPES:
            raise KeyError(f"unknown inclusion type {kind!r}")
        kwargs["inclusion_type"] = kind
    return PRESETS[base](**kwargs)


def build_standard_phantoms(**kwargs) -> dict:
    """All named presets: four sphere049 types, four cylinders049A types and a
    homogeneous reference. Keyword arguments are forwarded to every builder."""
    out = {}
    for kind in INCLUSION_TYPES:
        out[f"sphere049-{kind}"] = sphere049(kind, **kwargs)
    for kind in INCLUSION_TYPES:
        out[f"cylinders049A-{kind}"] = cylinders049a(kind, **kwargs)
    out["homogeneous"] = homogeneous(**kwargs)
    return out
